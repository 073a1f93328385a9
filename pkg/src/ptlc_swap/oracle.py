"""Simulated oracle that gates the unlocking value on the contract-chain lock.

The maker escrows the adaptor secret with the oracle up front. Once the swap
instance on the contract chain is locked (and, if collateral is required,
armed) with enough confirmations, the oracle releases the secret together
with a Schnorr signature over an :class:`UnlockMessage`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

from .adaptor import commit_secret
from .group import DecodeError, Group, Point
from .schnorr import KeyPair, Signature, sign, sign_with_nonce, verify

logger = logging.getLogger(__name__)


class OracleError(Exception):
    pass


class EscrowRejected(OracleError):
    pass


class UnknownSwap(OracleError, KeyError):
    pass


@dataclass(frozen=True)
class UnlockMessage:
    swap_id: bytes
    commitment: bytes
    lock_height: int
    contract_id: bytes

    def to_bytes(self) -> bytes:
        return (
            b"PTLC-UNLOCK"
            + len(self.swap_id).to_bytes(2, "big")
            + self.swap_id
            + len(self.commitment).to_bytes(2, "big")
            + self.commitment
            + self.lock_height.to_bytes(8, "big")
            + len(self.contract_id).to_bytes(2, "big")
            + self.contract_id
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "UnlockMessage":
        if not data.startswith(b"PTLC-UNLOCK"):
            raise DecodeError("not an unlock message")
        pos = len(b"PTLC-UNLOCK")

        def take(n: int) -> bytes:
            nonlocal pos
            if pos + n > len(data):
                raise DecodeError("truncated unlock message")
            chunk = data[pos : pos + n]
            pos += n
            return chunk

        swap_id = take(int.from_bytes(take(2), "big"))
        commitment = take(int.from_bytes(take(2), "big"))
        lock_height = int.from_bytes(take(8), "big")
        contract_id = take(int.from_bytes(take(2), "big"))
        if pos != len(data):
            raise DecodeError("trailing bytes in unlock message")
        return cls(swap_id, commitment, lock_height, contract_id)


@dataclass(frozen=True)
class UnlockRelease:
    unlock_value: int
    oracle_sig: Signature
    message: UnlockMessage


def verify_release(group: Group, rel: UnlockRelease, O: Point, expected_C: bytes) -> bool:
    try:
        if not verify(group, rel.oracle_sig, O, rel.message.to_bytes()):
            return False
        return commit_secret(group, rel.unlock_value) == expected_C
    except (DecodeError, ValueError):
        return False


class ContractView(Protocol):
    """What the oracle needs to see of the contract chain."""

    height: int

    def instance(self, swap_id: bytes): ...


@dataclass
class Oracle:
    group: Group
    keypair: KeyPair
    confirmations: int = 1
    _escrow: dict[bytes, tuple[int, bytes]] = field(default_factory=dict, repr=False)
    _released: dict[bytes, UnlockRelease] = field(default_factory=dict, repr=False)

    @property
    def public(self) -> Point:
        return self.keypair.public

    def escrow_secret(self, swap_id: bytes, s_a: int, C: bytes) -> bool:
        if swap_id in self._escrow:
            raise EscrowRejected(f"swap {swap_id.hex()} already escrowed")
        try:
            matches = commit_secret(self.group, s_a) == C
        except ValueError:
            matches = False
        if not matches:
            raise EscrowRejected("secret does not match commitment")
        self._escrow[swap_id] = (s_a % self.group.q, C)
        return True

    def is_escrowed(self, swap_id: bytes) -> bool:
        return swap_id in self._escrow

    def sign_message(self, msg: UnlockMessage, *, nonce: int | None = None) -> Signature:
        data = msg.to_bytes()
        if nonce is not None:
            return sign_with_nonce(self.group, self.keypair, data, nonce)
        return sign(self.group, self.keypair, data, b"oracle-release")

    def observe_and_release(self, chain: ContractView, swap_id: bytes) -> UnlockRelease | None:
        """Release the escrowed secret once the lock condition holds, else None."""
        if swap_id not in self._escrow:
            raise UnknownSwap(swap_id.hex())
        inst = chain.instance(swap_id)
        if inst is None or inst.state.name == "REFUNDED":
            return None
        if swap_id in self._released:
            return self._released[swap_id]
        if not inst.is_armed():
            return None
        depth = chain.height - inst.armed_height + 1
        if depth < self.confirmations:
            return None
        s_a, C = self._escrow[swap_id]
        msg = UnlockMessage(swap_id, C, inst.armed_height, inst.contract_id)
        release = UnlockRelease(s_a, self.sign_message(msg), msg)
        self._released[swap_id] = release
        logger.debug("oracle released %s at height %d", swap_id.hex()[:16], chain.height)
        return release
