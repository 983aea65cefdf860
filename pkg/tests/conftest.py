from __future__ import annotations

import pytest

from privacyharness.certs import forge_deployment
from privacyharness.gates import GateStore
from privacyharness.realms import default_config
from privacyharness.server import CorpusServer, TokenInfo
from privacyharness.telemetry import EventStore, TelemetryCollector


class HarnessFixture:
    """A forged-and-running corpus bound to ephemeral loopback ports."""

    def __init__(self, tmp_dir):
        self.data_dir = tmp_dir
        self.config = default_config(http_port=0, https_port=0)
        self.certs_dir = tmp_dir / "certs"
        self.manifest = forge_deployment(self.config, self.certs_dir)
        self.store = EventStore(tmp_dir)
        self.tokens: dict[str, TokenInfo] = {}
        self.groups: dict[str, TokenInfo] = {}
        self.collector = TelemetryCollector(
            self.store,
            token_resolver=lambda token: (
                info.run_id if (info := self.tokens.get(token)) else None
            ),
            operator_assisted=lambda m: True,
        )
        self.gates = GateStore(tmp_dir)
        self.server = CorpusServer(
            self.config,
            data_dir=tmp_dir,
            collector=self.collector,
            gates=self.gates,
            token_resolver=self.tokens.get,
            group_resolver=self.groups.get,
            certs_dir=self.certs_dir,
        )
        self.server.start()
        self.cfg = self.server.advertised_config()

    def add_run(self, run_id: str, token: str, group: str = "", channel: str = "control") -> TokenInfo:
        info = TokenInfo(run_id=run_id, token=token, group_id=group or run_id, channel=channel)
        self.tokens[token] = info
        self.groups[info.group_id] = info
        return info

    def stop(self):
        self.server.stop()

    @property
    def ca_path(self) -> str:
        return str(self.certs_dir / "ca.pem")

    def url(self, slot: str, path: str, token: str) -> str:
        return f"{self.cfg.origin(slot)}/r/{token}/{path}"


@pytest.fixture(scope="module")
def harness(tmp_path_factory):
    fixture = HarnessFixture(tmp_path_factory.mktemp("harness"))
    yield fixture
    fixture.stop()
