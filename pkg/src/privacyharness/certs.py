"""Certificate material for the TLS misconfiguration realms.

One harness-local root CA signs the valid, expired, and revoked leaves; the
self-signed leaf issues itself. Revocation is published as a CRL the corpus
serves over plain HTTP, referenced from the leaf's CRL distribution point.
Subjects and serials are derived from the deployment seed so regeneration
keeps fixture references stable; private keys are always fresh.
"""

from __future__ import annotations

import datetime
import hashlib
from dataclasses import dataclass
from pathlib import Path

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.x509.oid import ExtendedKeyUsageOID, NameOID

from .realms import DeploymentConfig, TlsProfile

CRL_PATH = "/pki/harness.crl"
CA_CERT_BASENAME = "ca.pem"
CRL_BASENAME = "harness.crl"

_DAY = datetime.timedelta(days=1)


class ClockSkewError(ValueError):
    """Requested validity window is inconsistent with itself or the profile."""


@dataclass(frozen=True)
class ForgedLeaf:
    hostname: str
    profile: TlsProfile
    serial: int
    chain_pem: bytes
    key_pem: bytes
    crl_pem: bytes | None = None


def _name(common_name: str, org: str = "Privacy Harness") -> x509.Name:
    return x509.Name(
        [
            x509.NameAttribute(NameOID.ORGANIZATION_NAME, org),
            x509.NameAttribute(NameOID.COMMON_NAME, common_name),
        ]
    )


def _key_pem(key) -> bytes:
    return key.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )


def _cert_pem(cert: x509.Certificate) -> bytes:
    return cert.public_bytes(serialization.Encoding.PEM)


class CertForge:
    """Generates the CA, per-realm leaves, and the revocation list."""

    def __init__(self, seed: str, now: datetime.datetime | None = None):
        self.seed = seed
        self.now = now or datetime.datetime.now(datetime.timezone.utc)
        self._ca_key = ec.generate_private_key(ec.SECP256R1())
        self._ca_cert = self._build_ca()

    def _serial(self, *parts: str) -> int:
        digest = hashlib.sha256("|".join((self.seed,) + parts).encode()).digest()
        return int.from_bytes(digest[:8], "big") | 1

    def _build_ca(self) -> x509.Certificate:
        return (
            x509.CertificateBuilder()
            .subject_name(_name(f"Harness Root CA ({self.seed})"))
            .issuer_name(_name(f"Harness Root CA ({self.seed})"))
            .public_key(self._ca_key.public_key())
            .serial_number(self._serial("ca"))
            .not_valid_before(self.now - _DAY)
            .not_valid_after(self.now + 730 * _DAY)
            .add_extension(x509.BasicConstraints(ca=True, path_length=None), critical=True)
            .add_extension(
                x509.KeyUsage(
                    digital_signature=True,
                    content_commitment=False,
                    key_encipherment=False,
                    data_encipherment=False,
                    key_agreement=False,
                    key_cert_sign=True,
                    crl_sign=True,
                    encipher_only=False,
                    decipher_only=False,
                ),
                critical=True,
            )
            .sign(self._ca_key, hashes.SHA256())
        )

    @property
    def ca_cert_pem(self) -> bytes:
        return _cert_pem(self._ca_cert)

    def forge(
        self,
        profile: TlsProfile,
        hostname: str,
        *,
        crl_url: str | None = None,
        not_before: datetime.datetime | None = None,
        not_after: datetime.datetime | None = None,
    ) -> ForgedLeaf:
        """Produce serviceable key material for one realm hostname."""
        if profile is TlsProfile.PLAIN_HTTP:
            raise ValueError("plain-HTTP realms carry no certificate")

        if not_before is None or not_after is None:
            not_before, not_after = self._default_window(profile)
        if not_before >= not_after:
            raise ClockSkewError(
                f"not_before {not_before.isoformat()} is not before not_after {not_after.isoformat()}"
            )
        if profile is TlsProfile.EXPIRED and not_after >= self.now:
            raise ClockSkewError("expired profile requires not_after strictly in the past")

        key = ec.generate_private_key(ec.SECP256R1())
        serial = self._serial(hostname, profile.value)
        self_issued = profile is TlsProfile.SELF_SIGNED
        issuer = _name(hostname) if self_issued else self._ca_cert.subject

        builder = (
            x509.CertificateBuilder()
            .subject_name(_name(hostname))
            .issuer_name(issuer)
            .public_key(key.public_key())
            .serial_number(serial)
            .not_valid_before(not_before)
            .not_valid_after(not_after)
            .add_extension(x509.SubjectAlternativeName([x509.DNSName(hostname)]), critical=False)
            .add_extension(x509.BasicConstraints(ca=False, path_length=None), critical=True)
            .add_extension(
                x509.ExtendedKeyUsage([ExtendedKeyUsageOID.SERVER_AUTH]), critical=False
            )
        )
        if profile is TlsProfile.REVOKED:
            if not crl_url:
                raise ValueError("revoked profile requires a crl_url")
            builder = builder.add_extension(
                x509.CRLDistributionPoints(
                    [
                        x509.DistributionPoint(
                            full_name=[x509.UniformResourceIdentifier(crl_url)],
                            relative_name=None,
                            reasons=None,
                            crl_issuer=None,
                        )
                    ]
                ),
                critical=False,
            )

        cert = builder.sign(key if self_issued else self._ca_key, hashes.SHA256())
        chain = _cert_pem(cert) if self_issued else _cert_pem(cert) + self.ca_cert_pem
        crl_pem = self.build_crl([serial]) if profile is TlsProfile.REVOKED else None
        return ForgedLeaf(
            hostname=hostname,
            profile=profile,
            serial=serial,
            chain_pem=chain,
            key_pem=_key_pem(key),
            crl_pem=crl_pem,
        )

    def _default_window(self, profile: TlsProfile):
        if profile is TlsProfile.EXPIRED:
            return self.now - 30 * _DAY, self.now - _DAY
        return self.now - _DAY, self.now + 90 * _DAY

    def build_crl(self, revoked_serials: list[int]) -> bytes:
        builder = (
            x509.CertificateRevocationListBuilder()
            .issuer_name(self._ca_cert.subject)
            .last_update(self.now - datetime.timedelta(hours=1))
            .next_update(self.now + 30 * _DAY)
        )
        for serial in revoked_serials:
            builder = builder.add_revoked_certificate(
                x509.RevokedCertificateBuilder()
                .serial_number(serial)
                .revocation_date(self.now - datetime.timedelta(hours=1))
                .build()
            )
        return builder.sign(self._ca_key, hashes.SHA256()).public_bytes(serialization.Encoding.PEM)


def crl_url_for(config: DeploymentConfig) -> str:
    return config.origin("plain", scheme="http") + CRL_PATH


def forge_deployment(config: DeploymentConfig, out_dir: str | Path) -> dict:
    """Regenerate all certificate material for a deployment into ``out_dir``.

    Every TLS-serving realm gets a leaf for its profile. The plain-HTTP realm
    additionally gets a valid leaf so scheme upgrades of its insecure
    subresource URLs still complete a handshake and land in the request log.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    forge = CertForge(config.cert_seed)
    crl_url = crl_url_for(config)

    manifest: dict = {"seed": config.cert_seed, "crl_url": crl_url, "realms": {}}
    revoked_serials: list[int] = []
    for realm in config.realms:
        profile = realm.tls_profile
        if profile is TlsProfile.PLAIN_HTTP:
            profile = TlsProfile.VALID
        leaf = forge.forge(profile, realm.hostname, crl_url=crl_url)
        cert_path = out / f"{realm.hostname}.pem"
        key_path = out / f"{realm.hostname}.key"
        cert_path.write_bytes(leaf.chain_pem)
        key_path.write_bytes(leaf.key_pem)
        if realm.tls_profile is TlsProfile.REVOKED:
            revoked_serials.append(leaf.serial)
        manifest["realms"][realm.hostname] = {
            "slot": realm.slot,
            "profile": realm.tls_profile.value,
            "served_profile": profile.value,
            "serial": leaf.serial,
            "cert": cert_path.name,
            "key": key_path.name,
        }

    (out / CA_CERT_BASENAME).write_bytes(forge.ca_cert_pem)
    (out / CRL_BASENAME).write_bytes(forge.build_crl(revoked_serials))
    return manifest
