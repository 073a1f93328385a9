"""Adaptor pre-signatures over Schnorr.

The adaptor component is the secret itself (``delta = s_a``), so a
pre-signature is ``s* = s_B - s_a`` and completing it with ``s_a`` recovers
the ordinary signature ``s_B``. Anyone holding both ``s*`` and the completed
signature can subtract to learn the secret.
"""

from __future__ import annotations

from dataclasses import dataclass

from .group import DecodeError, Group, Point
from .schnorr import KeyPair, Signature, derive_nonce, expected_point, sign_with_nonce


class ExtractionError(ValueError):
    """Final signature and pre-signature do not share a nonce point."""


@dataclass(frozen=True)
class PreSignature:
    nonce_point: Point
    partial: int
    adaptor_point: Point
    commitment: bytes

    def to_bytes(self, group: Group) -> bytes:
        return (
            group.encode_point(self.nonce_point)
            + group.encode_scalar(self.partial)
            + group.encode_point(self.adaptor_point)
            + self.commitment
        )

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "PreSignature":
        p, s = group.point_byte_len, group.scalar_byte_len
        if len(data) != 2 * p + s + group.commitment_byte_len:
            raise DecodeError("bad pre-signature length")
        return cls(
            group.decode_point(data[:p]),
            group.decode_scalar(data[p : p + s]),
            group.decode_point(data[p + s : 2 * p + s]),
            bytes(data[2 * p + s :]),
        )


def adaptor_component(s_a: int) -> int:
    # f(s_a) = s_a; swap this out for a nontrivial f if one is ever needed
    return s_a


def commit_secret(group: Group, s_a: int) -> bytes:
    if s_a % group.q == 0:
        raise ValueError("adaptor secret must be nonzero")
    return group.commit(s_a % group.q)


def presign(
    group: Group,
    kp: KeyPair,
    m: bytes,
    s_a: int,
    nonce_seed: bytes = b"",
    *,
    nonce: int | None = None,
) -> PreSignature:
    commitment = commit_secret(group, s_a)
    k = nonce if nonce is not None else derive_nonce(group, kp.secret, m, nonce_seed)
    full = sign_with_nonce(group, kp, m, k)
    delta = adaptor_component(s_a)
    return PreSignature(
        nonce_point=full.nonce_point,
        partial=group.scalar_sub(full.scalar, delta),
        adaptor_point=group.base_mul(delta),
        commitment=commitment,
    )


def verify_presignature(group: Group, ps: PreSignature, P: Point, m: bytes) -> bool:
    """Check ``s*G == R + eP - Delta``; malformed inputs raise DecodeError."""
    R = group.validate_point(ps.nonce_point)
    P = group.validate_point(P)
    delta_point = group.validate_point(ps.adaptor_point)
    if not 0 <= ps.partial < group.q:
        raise DecodeError("partial scalar out of range")
    if not group.has_even_y(R):
        return False
    rhs = group.point_sub(expected_point(group, R, P, m), delta_point)
    return group.base_mul(ps.partial) == rhs


def complete(group: Group, ps: PreSignature, delta: int) -> Signature:
    return Signature(ps.nonce_point, group.scalar_add(ps.partial, delta % group.q))


def extract_secret(group: Group, final: Signature, ps: PreSignature) -> int:
    if final.nonce_point != ps.nonce_point:
        raise ExtractionError("signature and pre-signature use different nonce points")
    return group.scalar_sub(final.scalar, ps.partial)


def check_commitment(group: Group, s: int, C: bytes, delta_point: Point) -> bool:
    s %= group.q
    if s == 0:
        return False
    return group.commit(s) == C and group.base_mul(s) == delta_point
