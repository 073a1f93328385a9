from dataclasses import replace

import pytest

from ptlc_swap.chainsim import InstanceState
from ptlc_swap.group import SECP256K1, TOY, DecodeError
from ptlc_swap.oracle import (
    EscrowRejected,
    Oracle,
    UnknownSwap,
    UnlockMessage,
    UnlockRelease,
    verify_release,
)
from ptlc_swap.schnorr import Signature, keygen, keypair_from_secret, sign

SID = b"\x11" * 32


class FakeInstance:
    def __init__(self, state="LOCKED", armed=True, armed_height=5):
        self.state = InstanceState[state]
        self._armed = armed
        self.armed_height = armed_height
        self.contract_id = b"\x22" * 20

    def is_armed(self):
        return self._armed and self.state is InstanceState.LOCKED


class FakeChain:
    def __init__(self, inst, height=5):
        self.inst, self.height = inst, height

    def instance(self, swap_id):
        return self.inst


def toy_oracle(**kw) -> Oracle:
    return Oracle(TOY, keypair_from_secret(TOY, 9), **kw)


def lock_height_for_digest(d: int) -> int:
    # toy challenge over (R=2, O=9, msg) is 1 + 2 + 9 + int(msg); pick lock_height so int(msg) = d mod 23
    for h in range(23):
        if int.from_bytes(UnlockMessage(SID, b"\x08", h, b"\x22" * 20).to_bytes(), "big") % 23 == d:
            return h
    raise AssertionError("no lock height found")


def test_escrow_examples():
    o = toy_oracle()
    assert o.escrow_secret(SID, 4, b"\x08")
    with pytest.raises(EscrowRejected):
        toy_oracle().escrow_secret(SID, 5, b"\x08")
    with pytest.raises(EscrowRejected):
        o.escrow_secret(SID, 4, b"\x08")


def test_toy_release_signature():
    h = lock_height_for_digest(10)
    o = toy_oracle()
    o.escrow_secret(SID, 4, b"\x08")
    msg = UnlockMessage(SID, b"\x08", h, b"\x22" * 20)
    sig = o.sign_message(msg, nonce=2)
    assert (sig.nonce_point, sig.scalar) == (2, 16)
    rel = UnlockRelease(4, sig, msg)
    assert verify_release(TOY, rel, 9, b"\x08")
    assert not verify_release(TOY, replace(rel, unlock_value=5), 9, b"\x08")
    resigned = sign(TOY, keypair_from_secret(TOY, 3), msg.to_bytes())
    assert not verify_release(TOY, replace(rel, oracle_sig=resigned), 9, b"\x08")


def test_release_when_locked(group):
    o = Oracle(group, keygen(group, b"o"))
    C = group.commit(4)
    o.escrow_secret(SID, 4, C)
    rel = o.observe_and_release(FakeChain(FakeInstance()), SID)
    assert rel is not None and rel.unlock_value == 4
    assert rel.message.commitment == C and rel.message.lock_height == 5
    assert verify_release(group, rel, o.public, C)


def test_not_ready_cases():
    o = toy_oracle()
    o.escrow_secret(SID, 4, b"\x08")
    assert o.observe_and_release(FakeChain(FakeInstance("DEPLOYED", armed=False)), SID) is None
    assert o.observe_and_release(FakeChain(None), SID) is None
    assert o.observe_and_release(FakeChain(FakeInstance("REFUNDED")), SID) is None
    with pytest.raises(UnknownSwap):
        o.observe_and_release(FakeChain(FakeInstance()), b"\x00" * 32)


def test_refunded_is_permanent():
    o = toy_oracle()
    o.escrow_secret(SID, 4, b"\x08")
    inst = FakeInstance()
    assert o.observe_and_release(FakeChain(inst), SID) is not None
    inst.state = InstanceState.REFUNDED
    assert o.observe_and_release(FakeChain(inst), SID) is None


def test_confirmation_depth():
    o = toy_oracle(confirmations=2)
    o.escrow_secret(SID, 4, b"\x08")
    inst = FakeInstance(armed_height=5)
    assert o.observe_and_release(FakeChain(inst, height=5), SID) is None
    assert o.observe_and_release(FakeChain(inst, height=6), SID) is not None


def test_release_deterministic():
    a, b = Oracle(SECP256K1, keygen(SECP256K1, b"o")), Oracle(SECP256K1, keygen(SECP256K1, b"o"))
    for o in (a, b):
        o.escrow_secret(SID, 4, SECP256K1.commit(4))
    ra = a.observe_and_release(FakeChain(FakeInstance()), SID)
    rb = b.observe_and_release(FakeChain(FakeInstance()), SID)
    assert ra == rb and ra.oracle_sig.to_bytes(SECP256K1) == rb.oracle_sig.to_bytes(SECP256K1)


def test_unlock_message_round_trip_and_errors():
    msg = UnlockMessage(SID, b"\x08", 7, b"\x22" * 20)
    assert UnlockMessage.from_bytes(msg.to_bytes()) == msg
    for bad in (b"junk", msg.to_bytes()[:-1], msg.to_bytes() + b"\x00"):
        with pytest.raises(DecodeError):
            UnlockMessage.from_bytes(bad)


def test_verify_release_handles_bad_values():
    rel = UnlockRelease(0, Signature(2, 16), UnlockMessage(SID, b"\x08", 0, b""))
    assert not verify_release(TOY, rel, 9, b"\x08")
