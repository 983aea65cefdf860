"""Certificate profiles checked against openssl as the independent verifier.

Frozen oracle expectations (from a pre-build openssl 3.x run):
  valid      -> exit 0, "OK"
  expired    -> exit != 0, reason "certificate has expired"   (X509 error 10)
  selfsigned -> exit != 0, reason "self-signed certificate"   (X509 error 18)
  revoked    -> exit != 0 with -crl_check, "certificate revoked" (X509 error 23)
  revoked    -> exit 0 without CRL checking (soft-fail, mirrors real browsers)
"""

from __future__ import annotations

import datetime
import shutil
import subprocess

import pytest

from privacyharness.certs import CertForge, ClockSkewError, forge_deployment
from privacyharness.realms import TlsProfile, default_config

pytestmark = pytest.mark.skipif(
    shutil.which("openssl") is None, reason="openssl CLI required as the independent verifier"
)


def openssl_verify(work, leaf_name, *, crl_check=False):
    args = ["openssl", "verify", "-CAfile", "ca.pem"]
    if crl_check:
        args += ["-CRLfile", "harness.crl", "-crl_check"]
    args.append(leaf_name)
    proc = subprocess.run(args, capture_output=True, text=True, cwd=work)
    return proc.returncode, proc.stdout + proc.stderr


@pytest.fixture(scope="module")
def forged(tmp_path_factory):
    out = tmp_path_factory.mktemp("certs")
    cfg = default_config()
    manifest = forge_deployment(cfg, out)
    return out, cfg, manifest


def test_valid_chain_accepted(forged):
    out, cfg, _ = forged
    rc, output = openssl_verify(out, f"{cfg.host('base')}.pem")
    assert rc == 0, output
    assert "OK" in output


def test_expired_rejected_for_expiry(forged):
    out, cfg, _ = forged
    rc, output = openssl_verify(out, f"{cfg.host('expired')}.pem")
    assert rc != 0
    assert "certificate has expired" in output


def test_selfsigned_rejected_as_unknown_issuer(forged):
    out, cfg, _ = forged
    rc, output = openssl_verify(out, f"{cfg.host('selfsigned')}.pem")
    assert rc != 0
    assert "self-signed certificate" in output


def test_revoked_rejected_only_under_crl_checking(forged):
    out, cfg, _ = forged
    leaf = f"{cfg.host('revoked')}.pem"
    rc_soft, output_soft = openssl_verify(out, leaf)
    assert rc_soft == 0, f"revocation must soft-fail without CRL checking: {output_soft}"
    rc, output = openssl_verify(out, leaf, crl_check=True)
    assert rc != 0
    assert "certificate revoked" in output


def test_valid_chain_survives_crl_checking(forged):
    out, cfg, _ = forged
    rc, output = openssl_verify(out, f"{cfg.host('base')}.pem", crl_check=True)
    assert rc == 0, output


def test_revoked_serial_listed_in_crl(forged):
    out, _, manifest = forged
    revoked = next(
        entry for entry in manifest["realms"].values() if entry["profile"] == "revoked"
    )
    text = subprocess.run(
        ["openssl", "crl", "-in", "harness.crl", "-noout", "-text"],
        capture_output=True, text=True, cwd=out, check=True,
    ).stdout
    assert format(revoked["serial"], "X") in text.upper().replace(":", "")


def test_selfsigned_chain_length_one(forged):
    out, cfg, _ = forged
    pem = (out / f"{cfg.host('selfsigned')}.pem").read_bytes()
    assert pem.count(b"BEGIN CERTIFICATE") == 1


def test_ca_signed_chain_length_two(forged):
    out, cfg, _ = forged
    pem = (out / f"{cfg.host('base')}.pem").read_bytes()
    assert pem.count(b"BEGIN CERTIFICATE") == 2


def test_deterministic_serials_fresh_keys(tmp_path):
    cfg = default_config()
    m1 = forge_deployment(cfg, tmp_path / "a")
    m2 = forge_deployment(cfg, tmp_path / "b")
    for host in m1["realms"]:
        assert m1["realms"][host]["serial"] == m2["realms"][host]["serial"]
    key1 = (tmp_path / "a" / f"{cfg.host('base')}.key").read_bytes()
    key2 = (tmp_path / "b" / f"{cfg.host('base')}.key").read_bytes()
    assert key1 != key2


def test_seed_changes_serials(tmp_path):
    m1 = forge_deployment(default_config(), tmp_path / "a")
    m2 = forge_deployment(default_config(cert_seed="other"), tmp_path / "b")
    host = next(iter(m1["realms"]))
    assert m1["realms"][host]["serial"] != m2["realms"][host]["serial"]


def test_clock_skew_rejected():
    forge = CertForge("seed")
    now = datetime.datetime.now(datetime.timezone.utc)
    with pytest.raises(ClockSkewError):
        forge.forge(TlsProfile.VALID, "x.test", not_before=now, not_after=now - datetime.timedelta(days=1))
    with pytest.raises(ClockSkewError):
        forge.forge(
            TlsProfile.EXPIRED, "x.test",
            not_before=now - datetime.timedelta(days=1),
            not_after=now + datetime.timedelta(days=1),
        )


def test_revoked_requires_crl_url():
    with pytest.raises(ValueError, match="crl_url"):
        CertForge("seed").forge(TlsProfile.REVOKED, "x.test")
