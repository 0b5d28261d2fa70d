"""Field-level authenticated encryption for PHI at rest.

AES-256-GCM with a random 96-bit nonce per field. The field path travels as
associated data, so an envelope lifted from one field cannot be replayed
into another. The master key comes from the SIERRA_MASTER_KEY environment
variable (64 hex chars); no key file ever lands on disk.
"""

from __future__ import annotations

import base64
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .core import SierraError

MASTER_KEY_ENV = "SIERRA_MASTER_KEY"
NONCE_SIZE = 12
KEY_SIZE = 32
ALG = "aes-256-gcm"


class MissingMasterKey(SierraError):
    pass


class BadMasterKey(SierraError):
    pass


class AuthFailure(SierraError):
    """Ciphertext failed authentication: tampered bytes or wrong key."""


class WrongAad(SierraError):
    """Envelope presented for a different field path than it was sealed for."""


@dataclass(frozen=True)
class EncryptedField:
    alg: str
    nonce: bytes
    ct: bytes  # ciphertext || 16-byte GCM tag
    aad: str  # field path the envelope is bound to

    def to_json(self) -> dict:
        return {
            "alg": self.alg,
            "nonce": base64.b64encode(self.nonce).decode("ascii"),
            "ct": base64.b64encode(self.ct).decode("ascii"),
            "aad": self.aad,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EncryptedField":
        return cls(
            alg=doc["alg"],
            nonce=base64.b64decode(doc["nonce"]),
            ct=base64.b64decode(doc["ct"]),
            aad=doc["aad"],
        )


def _check_key(master_key: bytes) -> None:
    if master_key is None:
        raise MissingMasterKey("no master key configured")
    if not isinstance(master_key, bytes) or len(master_key) != KEY_SIZE:
        raise BadMasterKey(f"master key must be {KEY_SIZE} bytes")


def encrypt_field(path: str, plaintext: str, master_key: bytes) -> EncryptedField:
    _check_key(master_key)
    nonce = os.urandom(NONCE_SIZE)
    ct = AESGCM(master_key).encrypt(nonce, plaintext.encode("utf-8"), path.encode("utf-8"))
    return EncryptedField(alg=ALG, nonce=nonce, ct=ct, aad=path)


def decrypt_field(ef: EncryptedField, master_key: bytes, expected_path: str | None = None) -> str:
    _check_key(master_key)
    if ef.alg != ALG:
        raise AuthFailure(f"unsupported algorithm tag: {ef.alg!r}")
    if expected_path is not None and ef.aad != expected_path:
        raise WrongAad(f"envelope bound to {ef.aad!r}, expected {expected_path!r}")
    try:
        pt = AESGCM(master_key).decrypt(ef.nonce, ef.ct, ef.aad.encode("utf-8"))
    except InvalidTag as exc:
        raise AuthFailure("ciphertext failed authentication") from exc
    return pt.decode("utf-8")


def load_master_key(env: str = MASTER_KEY_ENV) -> bytes:
    """Read the 64-hex-char master key from the environment."""
    raw = os.environ.get(env)
    if raw is None or raw == "":
        raise MissingMasterKey(f"{env} is not set")
    try:
        key = bytes.fromhex(raw.strip())
    except ValueError:
        raise BadMasterKey(f"{env} must be 64 hex characters") from None
    if len(key) != KEY_SIZE:
        raise BadMasterKey(f"{env} must be 64 hex characters")
    return key
