"""Prime-order groups used by the swap protocol.

Two profiles are provided:

* ``toy``: the additive group Z_23 with generator 1. Every value fits in one
  byte and every discrete log is trivial, so protocol vectors can be checked
  by hand. Its "hashes" are additive and invertible, i.e. cryptographically
  void; it exists for oracle testing only.
* ``secp256k1``: the Bitcoin curve, backed by libsecp256k1 through
  ``coincurve``.

Scalars are plain ``int`` values in ``[0, q)``. Points are profile-native:
``int`` in ``[0, 23)`` for the toy group, 33-byte compressed SEC encodings for
secp256k1 (the identity is 33 zero bytes). None of this is constant time.
"""

from __future__ import annotations

import hashlib
import secrets
from abc import ABC, abstractmethod
from typing import Sequence, Union

from coincurve import PublicKey

Point = Union[int, bytes]


class DecodeError(ValueError):
    """An encoded scalar or point is malformed for the active profile."""


def tagged_hash(tag: str, data: bytes) -> bytes:
    tag_digest = hashlib.sha256(tag.encode()).digest()
    return hashlib.sha256(tag_digest + tag_digest + data).digest()


class Group(ABC):
    name: str
    q: int
    generator: Point
    identity: Point
    scalar_byte_len: int
    point_byte_len: int
    commitment_byte_len: int

    # -- group law -------------------------------------------------------
    @abstractmethod
    def point_mul(self, k: int, P: Point) -> Point: ...

    @abstractmethod
    def point_add(self, A: Point, B: Point) -> Point: ...

    @abstractmethod
    def point_neg(self, A: Point) -> Point: ...

    def point_sub(self, A: Point, B: Point) -> Point:
        return self.point_add(A, self.point_neg(B))

    def base_mul(self, k: int) -> Point:
        return self.point_mul(k, self.generator)

    # -- scalars ---------------------------------------------------------
    def scalar_add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def scalar_sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def scalar_mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def scalar_arith(self, a: int, b: int, kind: str) -> int:
        ops = {"add": self.scalar_add, "sub": self.scalar_sub, "mul": self.scalar_mul}
        try:
            return ops[kind](a, b)
        except KeyError:
            raise ValueError(f"unknown scalar operation {kind!r}") from None

    def random_scalar(self, rng_seed: bytes | None = None) -> int:
        """Nonzero scalar; deterministic in ``rng_seed`` when one is given."""
        if rng_seed is None:
            return secrets.randbelow(self.q - 1) + 1
        if not rng_seed:
            raise ValueError("deterministic mode needs a nonempty seed")
        counter = 0
        while True:
            digest = tagged_hash("PTLC/random", rng_seed + counter.to_bytes(4, "big"))
            value = int.from_bytes(digest, "big") % self.q
            if value:
                return value
            counter += 1

    # -- encodings -------------------------------------------------------
    def encode_scalar(self, s: int) -> bytes:
        if not 0 <= s < self.q:
            raise ValueError("scalar out of range")
        return s.to_bytes(self.scalar_byte_len, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_byte_len:
            raise DecodeError(f"scalar must be {self.scalar_byte_len} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= self.q:
            raise DecodeError("scalar not reduced mod q")
        return value

    @abstractmethod
    def encode_point(self, P: Point) -> bytes: ...

    @abstractmethod
    def decode_point(self, data: bytes) -> Point: ...

    def validate_point(self, P: Point) -> Point:
        return self.decode_point(self.encode_point(P))

    # -- key-only encoding used in hashes ----------------------------------
    # Groups with ``xonly = True`` hash points by x coordinate alone and treat
    # a point and its negation as the same key (the even-y one).
    xonly = False

    def key_bytes(self, P: Point) -> bytes:
        return self.encode_point(P)

    def has_even_y(self, P: Point) -> bool:
        return True

    def lift_even(self, P: Point) -> Point:
        return P

    # -- hashing ---------------------------------------------------------
    @abstractmethod
    def hash_to_scalar(self, tag: str, chunks: Sequence[bytes]) -> int:
        """Domain-separated hash of ``chunks`` reduced mod q."""

    @abstractmethod
    def commit(self, secret: int) -> bytes:
        """Hash commitment ``H(secret)``."""

    def __repr__(self) -> str:
        return f"<Group {self.name}>"


class ToyGroup(Group):
    """Z_23 under addition. Tag constants make the hash a plain modular sum."""

    name = "toy"
    q = 23
    generator = 1
    identity = 0
    scalar_byte_len = 1
    point_byte_len = 1
    commitment_byte_len = 1

    TAG_CONSTANTS = {
        "Challenge": 1,
        "TapTweak": 2,
        "Commitment": 4,
    }

    def _check(self, P: Point) -> int:
        if not isinstance(P, int) or isinstance(P, bool) or not 0 <= P < self.q:
            raise DecodeError(f"invalid toy point {P!r}")
        return P

    def point_mul(self, k: int, P: Point) -> Point:
        return (k * self._check(P)) % self.q

    def point_add(self, A: Point, B: Point) -> Point:
        return (self._check(A) + self._check(B)) % self.q

    def point_neg(self, A: Point) -> Point:
        return (-self._check(A)) % self.q

    def encode_point(self, P: Point) -> bytes:
        return bytes([self._check(P)])

    def decode_point(self, data: bytes) -> Point:
        if len(data) != 1:
            raise DecodeError(f"toy point must be 1 byte, got {len(data)}")
        return self._check(data[0])

    def hash_to_scalar(self, tag: str, chunks: Sequence[bytes]) -> int:
        try:
            acc = self.TAG_CONSTANTS[tag]
        except KeyError:
            raise ValueError(f"toy profile has no constant for tag {tag!r}") from None
        for chunk in chunks:
            acc += int.from_bytes(chunk, "big")
        return acc % self.q

    def commit(self, secret: int) -> bytes:
        return bytes([self.hash_to_scalar("Commitment", [self.encode_scalar(secret)])])


class Secp256k1Group(Group):
    name = "secp256k1"
    q = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
    generator = bytes.fromhex(
        "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
    )
    identity = bytes(33)
    scalar_byte_len = 32
    point_byte_len = 33
    commitment_byte_len = 32

    # production tag names; "Challenge" follows the BIP-340 tag
    TAG_NAMES = {
        "Challenge": "BIP0340/challenge",
        "TapTweak": "TapTweak",
    }

    def _key(self, P: Point) -> PublicKey | None:
        if not isinstance(P, bytes) or len(P) != 33:
            raise DecodeError("secp256k1 point must be 33 bytes")
        if P == self.identity:
            return None
        try:
            return PublicKey(P)
        except ValueError as exc:
            raise DecodeError(str(exc)) from None

    def point_mul(self, k: int, P: Point) -> Point:
        key = self._key(P)
        k %= self.q
        if key is None or k == 0:
            return self.identity
        return key.multiply(k.to_bytes(32, "big")).format()

    def base_mul(self, k: int) -> Point:
        k %= self.q
        if k == 0:
            return self.identity
        return PublicKey.from_valid_secret(k.to_bytes(32, "big")).format()

    def point_add(self, A: Point, B: Point) -> Point:
        ka, kb = self._key(A), self._key(B)
        if ka is None:
            return B
        if kb is None:
            return A
        try:
            return PublicKey.combine_keys([ka, kb]).format()
        except ValueError:
            # A == -B
            return self.identity

    def point_neg(self, A: Point) -> Point:
        if self._key(A) is None:
            return A
        return bytes([A[0] ^ 1]) + A[1:]

    def encode_point(self, P: Point) -> bytes:
        self._key(P)
        return P

    def decode_point(self, data: bytes) -> Point:
        data = bytes(data)
        self._key(data)
        return data

    xonly = True

    def key_bytes(self, P: Point) -> bytes:
        return self.encode_point(P)[1:]

    def has_even_y(self, P: Point) -> bool:
        return self.encode_point(P)[0] == 2

    def lift_even(self, P: Point) -> Point:
        if self._key(P) is None:
            return P
        return b"\x02" + P[1:]

    def hash_to_scalar(self, tag: str, chunks: Sequence[bytes]) -> int:
        name = self.TAG_NAMES.get(tag, tag)
        return int.from_bytes(tagged_hash(name, b"".join(chunks)), "big") % self.q

    def commit(self, secret: int) -> bytes:
        # plain SHA-256 of the scalar encoding
        return hashlib.sha256(self.encode_scalar(secret)).digest()


TOY = ToyGroup()
SECP256K1 = Secp256k1Group()

PROFILES: dict[str, Group] = {TOY.name: TOY, SECP256K1.name: SECP256K1}


def get_group(name: str) -> Group:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown group profile {name!r}; choose from {sorted(PROFILES)}") from None
