"""Schnorr keys, signatures and the challenge hash.

Signing follows ``R = kG``, ``e = H(R || P || m)``, ``s = k + e*x mod q`` and
verification checks ``sG == R + eP``.

On the toy group points enter the challenge as-is. On secp256k1 the BIP-340
convention applies: the challenge hashes x-only keys, the signer negates its
secret if P has odd y and its nonce if R has odd y, and verification uses
the even-y lift of P. Signatures there are interoperable with BIP-340.
"""

from __future__ import annotations

from dataclasses import dataclass

from .group import DecodeError, Group, Point, tagged_hash


@dataclass(frozen=True)
class KeyPair:
    secret: int
    public: Point


@dataclass(frozen=True)
class Signature:
    nonce_point: Point
    scalar: int

    def to_bytes(self, group: Group) -> bytes:
        return group.encode_point(self.nonce_point) + group.encode_scalar(self.scalar)

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "Signature":
        n = group.point_byte_len
        if len(data) != n + group.scalar_byte_len:
            raise DecodeError("bad signature length")
        return cls(group.decode_point(data[:n]), group.decode_scalar(data[n:]))


def keypair_from_secret(group: Group, secret: int) -> KeyPair:
    secret %= group.q
    if secret == 0:
        raise ValueError("secret key must be nonzero")
    return KeyPair(secret, group.base_mul(secret))


def keygen(group: Group, seed: bytes | None = None) -> KeyPair:
    return keypair_from_secret(group, group.random_scalar(seed))


def challenge(group: Group, R: Point, P: Point, m: bytes) -> int:
    return group.hash_to_scalar("Challenge", [group.key_bytes(R), group.key_bytes(P), bytes(m)])


def signing_secret(group: Group, kp: KeyPair) -> int:
    """Secret matching the key the verifier uses (the even-y lift on x-only groups)."""
    if group.has_even_y(kp.public):
        return kp.secret
    return group.q - kp.secret


def expected_point(group: Group, R: Point, P: Point, m: bytes) -> Point:
    """Right-hand side ``R + eP`` of the verification equation."""
    e = challenge(group, R, P, m)
    return group.point_add(R, group.point_mul(e, group.lift_even(P)))


def derive_nonce(group: Group, secret: int, m: bytes, nonce_seed: bytes) -> int:
    """Deterministic nonzero nonce from ``(secret, m, nonce_seed)``."""
    base = group.encode_scalar(secret) + len(m).to_bytes(4, "big") + bytes(m) + bytes(nonce_seed)
    counter = 0
    while True:
        digest = tagged_hash("PTLC/nonce", base + counter.to_bytes(4, "big"))
        k = int.from_bytes(digest, "big") % group.q
        if k:
            return k
        counter += 1


def sign_with_nonce(group: Group, kp: KeyPair, m: bytes, k: int) -> Signature:
    k %= group.q
    if k == 0:
        raise ValueError("nonce must be nonzero")
    R = group.base_mul(k)
    if not group.has_even_y(R):
        k = group.q - k
        R = group.base_mul(k)
    e = challenge(group, R, kp.public, m)
    return Signature(R, (k + e * signing_secret(group, kp)) % group.q)


def sign(group: Group, kp: KeyPair, m: bytes, nonce_seed: bytes = b"") -> Signature:
    return sign_with_nonce(group, kp, m, derive_nonce(group, kp.secret, m, nonce_seed))


def verify(group: Group, sig: Signature, P: Point, m: bytes) -> bool:
    """Check ``sG == R + eP``.

    Malformed points or out-of-range scalars raise :class:`DecodeError`
    rather than returning ``False``.
    """
    R = group.validate_point(sig.nonce_point)
    P = group.validate_point(P)
    if not isinstance(sig.scalar, int) or not 0 <= sig.scalar < group.q:
        raise DecodeError("signature scalar out of range")
    if not group.has_even_y(R):
        return False
    return group.base_mul(sig.scalar) == expected_point(group, R, P, m)
