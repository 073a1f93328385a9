"""Independent reference implementations used to freeze expected values.

Nothing here imports the package: the toy oracle is plain modular arithmetic
and the secp256k1 oracle is a slow affine-coordinate implementation.
"""

from __future__ import annotations

import hashlib

# -- toy group: Z_23 under addition, generator 1 -----------------------------

Q = 23
TOY_TAGS = {"Challenge": 1, "TapTweak": 2, "Commitment": 4}


def toy_hash(tag: str, *values: int) -> int:
    return (TOY_TAGS[tag] + sum(values)) % Q


def toy_sign(x: int, k: int, m: int) -> tuple[int, int]:
    R = k % Q
    e = toy_hash("Challenge", R, x % Q, m)
    return R, (k + e * x) % Q


def toy_verify(R: int, s: int, P: int, m: int) -> bool:
    e = toy_hash("Challenge", R, P, m)
    return s % Q == (R + e * P) % Q


def toy_presign(x: int, k: int, m: int, s_a: int) -> tuple[int, int, int, int]:
    R, s_b = toy_sign(x, k, m)
    return R, (s_b - s_a) % Q, s_a % Q, (4 + s_a) % Q


# -- secp256k1 reference ------------------------------------------------------

P_FIELD = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
G = (
    0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
    0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
)


def ec_add(A, B):
    if A is None:
        return B
    if B is None:
        return A
    if A[0] == B[0] and (A[1] + B[1]) % P_FIELD == 0:
        return None
    if A == B:
        lam = 3 * A[0] * A[0] * pow(2 * A[1], P_FIELD - 2, P_FIELD) % P_FIELD
    else:
        lam = (B[1] - A[1]) * pow(B[0] - A[0], P_FIELD - 2, P_FIELD) % P_FIELD
    x = (lam * lam - A[0] - B[0]) % P_FIELD
    return x, (lam * (A[0] - x) - A[1]) % P_FIELD


def ec_mul(k: int, A=G):
    R = None
    for i in range(256):
        if (k >> i) & 1:
            R = ec_add(R, A)
        A = ec_add(A, A)
    return R


def compress(A) -> bytes:
    if A is None:
        return bytes(33)
    return bytes([2 + (A[1] & 1)]) + A[0].to_bytes(32, "big")


def decompress(b: bytes):
    if b == bytes(33):
        return None
    x = int.from_bytes(b[1:], "big")
    y = pow((pow(x, 3, P_FIELD) + 7) % P_FIELD, (P_FIELD + 1) // 4, P_FIELD)
    if y & 1 != b[0] - 2:
        y = P_FIELD - y
    return x, y


def bip340_tagged(tag: str, data: bytes) -> bytes:
    th = hashlib.sha256(tag.encode()).digest()
    return hashlib.sha256(th + th + data).digest()


def xonly(A) -> bytes:
    return A[0].to_bytes(32, "big")


def ref_challenge(R, P, m: bytes) -> int:
    return int.from_bytes(bip340_tagged("BIP0340/challenge", xonly(R) + xonly(P) + m), "big") % N


def ref_sign(x: int, k: int, m: bytes) -> tuple[bytes, int]:
    """BIP-340 signing with an explicit nonce; R returned compressed (always 02)."""
    P = ec_mul(x)
    d = x if P[1] % 2 == 0 else N - x
    R = ec_mul(k)
    if R[1] % 2:
        k = N - k
        R = ec_mul(k)
    return compress(R), (k + ref_challenge(R, P, m) * d) % N


def ref_verify(R: bytes, s: int, P: bytes, m: bytes) -> bool:
    if R[0] != 2:
        return False
    Rp, Pp = decompress(R), decompress(b"\x02" + P[1:])
    e = ref_challenge(Rp, Pp, m)
    return ec_mul(s) == ec_add(Rp, ec_mul(e, Pp))


def bip340_nonce(x: int, aux: bytes, m: bytes) -> int:
    """BIP-340 default nonce derivation (before the parity adjustment)."""
    P = ec_mul(x)
    d = x if P[1] % 2 == 0 else N - x
    t = bytes(a ^ b for a, b in zip(d.to_bytes(32, "big"), bip340_tagged("BIP0340/aux", aux)))
    return int.from_bytes(bip340_tagged("BIP0340/nonce", t + xonly(P) + m), "big") % N
