"""Deterministic two-chain simulator driven by one virtual clock.

``BtcChain`` is a UTXO ledger whose swap outputs are spent either through
:func:`verify_taproot_spend` or, at/after the refund height, by a refund
signature. ``EthChain`` is an account ledger with a factory that deploys
per-swap instances. Blocks are produced strictly periodically (600 s and
15 s) and a transaction becomes final when it is included in a block.

Everything that happens is recorded as a :class:`TraceEvent`; the trace is
the simulator's only output and is byte-stable for a given scenario and seed.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable

from .adaptor import PreSignature, commit_secret
from .fees import check_fee_fraction, compute_fee
from .group import Group, Point
from .schnorr import Signature, verify
from .taproot import (
    SwapMetadata,
    TaprootSpend,
    address_of,
    spend_message,
    taproot_spend_checks,
)

logger = logging.getLogger(__name__)

BTC_BLOCK_INTERVAL = 600
ETH_BLOCK_INTERVAL = 15
GAS_SINK = b"\x00" * 19 + b"\x01"


class TxRejected(ValueError):
    pass


# ---------------------------------------------------------------------------
# trace


def _jsonable(value: Any) -> Any:
    if isinstance(value, (bytes, bytearray)):
        return bytes(value).hex()
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, Enum):
        return value.name
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


@dataclass(frozen=True)
class TraceEvent:
    time: int
    chain: str
    kind: str
    swap_id: bytes | None
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "chain": self.chain,
            "kind": self.kind,
            "swap_id": self.swap_id.hex() if self.swap_id else None,
            "payload": _jsonable(self.payload),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEvent":
        sid = d.get("swap_id")
        return cls(d["time"], d["chain"], d["kind"], bytes.fromhex(sid) if sid else None,
                   d.get("payload") or {})


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def to_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        return cls([TraceEvent.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()])

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def read(cls, path) -> "Trace":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())

    def of_kind(self, kind: str, chain: str | None = None) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == kind and (chain is None or e.chain == chain)]

    @property
    def end(self) -> TraceEvent | None:
        ends = self.of_kind("scenario_end")
        return ends[-1] if ends else None


# ---------------------------------------------------------------------------
# clock


class VirtualClock:
    """Event queue ordered by ``(time, sequence)``; time never goes backwards."""

    def __init__(self) -> None:
        self.now = 0
        self._queue: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = itertools.count()

    def schedule(self, at: int, callback: Callable[[], None]) -> None:
        if at < self.now:
            raise ValueError(f"cannot schedule at {at}, clock is at {self.now}")
        heapq.heappush(self._queue, (at, next(self._seq), callback))

    def schedule_in(self, delay: int, callback: Callable[[], None]) -> None:
        self.schedule(self.now + delay, callback)

    def run_until(self, t: int) -> None:
        if t < self.now:
            raise ValueError("time never decreases")
        while self._queue and self._queue[0][0] <= t:
            at, _, callback = heapq.heappop(self._queue)
            self.now = at
            callback()
        self.now = t

    def pending(self) -> int:
        return len(self._queue)


# ---------------------------------------------------------------------------
# bitcoin-like chain


@dataclass(frozen=True)
class TaprootOutput:
    swap_id: bytes
    value: int
    tweaked_key: Point
    refund_key: Point
    refund_height: int
    presignature: PreSignature
    commitment: bytes
    oracle_key: Point


@dataclass(frozen=True)
class BtcSpendTx:
    swap_id: bytes
    recipient: bytes
    spend: TaprootSpend


@dataclass(frozen=True)
class BtcRefundTx:
    swap_id: bytes
    signature: Signature


def refund_message(swap_id: bytes) -> bytes:
    return hashlib.sha256(b"PTLC/refund" + swap_id).digest()


@dataclass
class _PendingTx:
    kind: str
    args: dict
    actor: str


class _Chain:
    name: str
    block_interval: int

    def __init__(self, sim: "Simulation") -> None:
        self.sim = sim
        self.height = 0
        self.mempool: list[_PendingTx] = []

    @property
    def now(self) -> int:
        return self.sim.clock.now

    def emit(self, kind: str, swap_id: bytes | None, **payload) -> TraceEvent:
        return self.sim.emit(self.name, kind, swap_id, **payload)

    def submit(self, kind: str, *, actor: str, priority: bool = False, **args) -> TraceEvent:
        """Broadcast a transaction; it executes when the next block is mined."""
        tx = _PendingTx(kind, args, actor)
        if priority:
            self.mempool.insert(0, tx)
        else:
            self.mempool.append(tx)
        return self.emit("tx_broadcast", args_swap_id(args),
                         tx=kind, actor=actor, priority=priority, **self._describe(kind, args))

    def _describe(self, kind: str, args: dict) -> dict:
        return {}

    def mine_block(self) -> None:
        self.height += 1
        pending, self.mempool = self.mempool, []
        self.emit("block", None, height=self.height, txs=len(pending))
        for tx in pending:
            try:
                getattr(self, tx.kind)(**tx.args)
            except TxRejected as exc:
                self.emit("tx_rejected", args_swap_id(tx.args), tx=tx.kind, actor=tx.actor,
                          reason=str(exc))


def _swap_id_of(args: dict) -> bytes | None:
    for value in args.values():
        sid = getattr(value, "swap_id", None)
        if isinstance(sid, bytes):
            return sid
    return None


def args_swap_id(args: dict) -> bytes | None:
    return args.get("swap_id") or _swap_id_of(args)


class BtcChain(_Chain):
    name = "btc"
    block_interval = BTC_BLOCK_INTERVAL

    def __init__(self, sim: "Simulation", group: Group) -> None:
        super().__init__(sim)
        self.group = group
        self.balances: dict[bytes, int] = {}
        self.utxos: dict[bytes, TaprootOutput] = {}
        self.closed: dict[bytes, str] = {}

    def credit(self, address: bytes, amount: int) -> None:
        self.balances[address] = self.balances.get(address, 0) + amount

    def total_value(self) -> int:
        return sum(self.balances.values()) + sum(u.value for u in self.utxos.values())

    def _describe(self, kind: str, args: dict) -> dict:
        if kind == "btc_spend":
            tx: BtcSpendTx = args["tx"]
            g = self.group
            return {
                "recipient": tx.recipient,
                "R": g.encode_point(tx.spend.final_sig.nonce_point),
                "s": g.encode_scalar(tx.spend.final_sig.scalar),
            }
        return {}

    def btc_lock(self, output: TaprootOutput, funder: bytes) -> TraceEvent:
        if output.swap_id in self.utxos or output.swap_id in self.closed:
            raise TxRejected("output already exists")
        if output.value <= 0:
            raise TxRejected("output value must be positive")
        if self.balances.get(funder, 0) < output.value:
            raise TxRejected("insufficient funds")
        self.balances[funder] -= output.value
        self.utxos[output.swap_id] = output
        g = self.group
        return self.emit(
            "btc_lock", output.swap_id,
            funder=funder, value=output.value, height=self.height,
            tweaked_key=g.encode_point(output.tweaked_key),
            refund_height=output.refund_height,
            presignature=output.presignature.to_bytes(g),
        )

    def btc_spend(self, tx: BtcSpendTx) -> TraceEvent:
        out = self.utxos.get(tx.swap_id)
        if out is None:
            raise TxRejected("output missing or already spent")
        m = spend_message(tx.swap_id, out.value, tx.recipient)
        try:
            checks = taproot_spend_checks(
                self.group, tx.spend, out.presignature, out.tweaked_key, m,
                out.commitment, out.oracle_key, swap_id=tx.swap_id,
            )
        except ValueError as exc:
            raise TxRejected(f"invalid spend: {exc}") from None
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise TxRejected("failed checks: " + ",".join(failed))
        del self.utxos[tx.swap_id]
        self.closed[tx.swap_id] = "spent"
        self.credit(tx.recipient, out.value)
        g = self.group
        return self.emit(
            "btc_spend", tx.swap_id,
            recipient=tx.recipient, value=out.value, height=self.height,
            R=g.encode_point(tx.spend.final_sig.nonce_point),
            s=g.encode_scalar(tx.spend.final_sig.scalar),
            unlock_value=g.encode_scalar(tx.spend.unlock_value),
            oracle_R=g.encode_point(tx.spend.oracle_sig.nonce_point),
            oracle_s=g.encode_scalar(tx.spend.oracle_sig.scalar),
        )

    def btc_refund(self, tx: BtcRefundTx) -> TraceEvent:
        out = self.utxos.get(tx.swap_id)
        if out is None:
            raise TxRejected("output missing or already spent")
        if self.height < out.refund_height:
            raise TxRejected(f"timelock: height {self.height} < {out.refund_height}")
        try:
            ok = verify(self.group, tx.signature, out.refund_key, refund_message(tx.swap_id))
        except ValueError:
            ok = False
        if not ok:
            raise TxRejected("bad refund signature")
        del self.utxos[tx.swap_id]
        self.closed[tx.swap_id] = "refunded"
        refund_to = address_of(self.group, out.refund_key)
        self.credit(refund_to, out.value)
        return self.emit("btc_refund", tx.swap_id, recipient=refund_to, value=out.value,
                         height=self.height)


# ---------------------------------------------------------------------------
# contract chain


class InstanceState(Enum):
    DEPLOYED = "DEPLOYED"
    LOCKED = "LOCKED"
    RELEASED = "RELEASED"
    REFUNDED = "REFUNDED"


_TRANSITIONS = {
    InstanceState.DEPLOYED: {InstanceState.LOCKED},
    InstanceState.LOCKED: {InstanceState.RELEASED, InstanceState.REFUNDED},
    InstanceState.RELEASED: set(),
    InstanceState.REFUNDED: set(),
}


@dataclass(frozen=True)
class InstanceTerms:
    """Parameters fixed at deployment. Frozen, so the beneficiary can never change."""

    swap_id: bytes
    contract_id: bytes
    beneficiary: bytes
    facilitator: bytes | None
    commitment: bytes
    amount: int
    collateral: int
    fee_fraction: Fraction | None
    timeout: int


@dataclass
class SwapInstance:
    terms: InstanceTerms
    deploy_height: int
    deploy_time: int
    state: InstanceState = InstanceState.DEPLOYED
    locker: bytes | None = None
    locked_amount: int = 0
    lock_height: int | None = None
    collateral_poster: bytes | None = None
    collateral_posted: int = 0
    collateral_height: int | None = None

    @property
    def contract_id(self) -> bytes:
        return self.terms.contract_id

    @property
    def beneficiary(self) -> bytes:
        return self.terms.beneficiary

    @property
    def commitment(self) -> bytes:
        return self.terms.commitment

    @property
    def escrow(self) -> int:
        if self.state in (InstanceState.RELEASED, InstanceState.REFUNDED):
            return 0
        return self.locked_amount + self.collateral_posted

    def is_armed(self) -> bool:
        if self.state is not InstanceState.LOCKED:
            return False
        return self.collateral_posted >= self.terms.collateral

    @property
    def armed_height(self) -> int | None:
        if self.lock_height is None:
            return None
        return max(self.lock_height, self.collateral_height or self.lock_height)

    def transition(self, new: InstanceState) -> None:
        if new not in _TRANSITIONS[self.state]:
            raise TxRejected(f"instance is {self.state.name}, cannot become {new.name}")
        self.state = new


def contract_address(swap_id: bytes) -> bytes:
    return hashlib.sha256(b"PTLC/contract" + swap_id).digest()[-20:]


class EthChain(_Chain):
    name = "eth"
    block_interval = ETH_BLOCK_INTERVAL

    def __init__(self, sim: "Simulation", group: Group) -> None:
        super().__init__(sim)
        self.group = group
        self.balances: dict[bytes, int] = {}
        self.instances: dict[bytes, SwapInstance] = {}

    def credit(self, account: bytes, amount: int) -> None:
        self.balances[account] = self.balances.get(account, 0) + amount

    def _debit(self, account: bytes, amount: int) -> None:
        if self.balances.get(account, 0) < amount:
            raise TxRejected("insufficient balance")
        self.balances[account] -= amount

    def total_value(self) -> int:
        return sum(self.balances.values()) + sum(i.escrow for i in self.instances.values())

    def instance(self, swap_id: bytes) -> SwapInstance | None:
        return self.instances.get(swap_id)

    def _get(self, swap_id: bytes) -> SwapInstance:
        inst = self.instances.get(swap_id)
        if inst is None:
            raise TxRejected("unknown swap instance")
        return inst

    def factory_deploy(
        self,
        params: SwapMetadata,
        beneficiary: bytes,
        facilitator: bytes | None = None,
        fee_fraction=None,
        collateral: int = 0,
        *,
        deployer: bytes | None = None,
        deploy_cost: int = 0,
    ) -> bytes:
        swap_id = params.swap_id
        if swap_id in self.instances:
            raise TxRejected("duplicate swap_id")
        if params.asset_amount_eth <= 0:
            raise TxRejected("amount must be positive")
        if collateral < 0:
            raise TxRejected("collateral must be non-negative")
        alpha = None
        if fee_fraction is not None:
            try:
                alpha = check_fee_fraction(fee_fraction)
            except ValueError as exc:
                raise TxRejected(str(exc)) from None
            if facilitator is None:
                raise TxRejected("fee fraction given without a facilitator")
        if deploy_cost:
            if deployer is None:
                raise TxRejected("deployment cost needs a deployer")
            self._debit(deployer, deploy_cost)
            self.credit(GAS_SINK, deploy_cost)
        terms = InstanceTerms(
            swap_id=swap_id,
            contract_id=contract_address(swap_id),
            beneficiary=beneficiary,
            facilitator=facilitator,
            commitment=params.commitment,
            amount=params.asset_amount_eth,
            collateral=collateral,
            fee_fraction=alpha,
            timeout=params.timeout_eth,
        )
        self.instances[swap_id] = SwapInstance(terms, self.height, self.now)
        self.emit(
            "eth_deploy", swap_id,
            contract=terms.contract_id, beneficiary=beneficiary, facilitator=facilitator,
            commitment=params.commitment, amount=terms.amount, collateral=collateral,
            timeout=terms.timeout, deployer=deployer, deploy_cost=deploy_cost, height=self.height,
        )
        return swap_id

    def eth_lock(self, swap_id: bytes, from_account: bytes, amount: int, collateral: int = 0) -> TraceEvent:
        inst = self._get(swap_id)
        if inst.state is not InstanceState.DEPLOYED:
            raise TxRejected(f"cannot lock: instance is {inst.state.name}")
        if amount != inst.terms.amount:
            raise TxRejected(f"lock amount {amount} != agreed {inst.terms.amount}")
        self._debit(from_account, amount + collateral)
        inst.transition(InstanceState.LOCKED)
        inst.locker = from_account
        inst.locked_amount = amount
        inst.lock_height = self.height
        if collateral:
            inst.collateral_poster = from_account
            inst.collateral_posted = collateral
            inst.collateral_height = self.height
        return self.emit("eth_lock", swap_id, account=from_account, amount=amount,
                         collateral=collateral, escrow=inst.escrow, height=self.height)

    def eth_post_collateral(self, swap_id: bytes, from_account: bytes) -> TraceEvent:
        inst = self._get(swap_id)
        if inst.state is not InstanceState.LOCKED:
            raise TxRejected(f"cannot post collateral: instance is {inst.state.name}")
        if inst.collateral_posted:
            raise TxRejected("collateral already posted")
        self._debit(from_account, inst.terms.collateral)
        inst.collateral_poster = from_account
        inst.collateral_posted = inst.terms.collateral
        inst.collateral_height = self.height
        return self.emit("eth_collateral", swap_id, account=from_account,
                         collateral=inst.terms.collateral, escrow=inst.escrow, height=self.height)

    def eth_claim_with_secret(self, swap_id: bytes, s: int, caller: bytes) -> TraceEvent:
        inst = self._get(swap_id)
        if inst.state is not InstanceState.LOCKED:
            raise TxRejected(f"cannot claim: instance is {inst.state.name}")
        try:
            opens = commit_secret(self.group, s) == inst.terms.commitment
        except ValueError:
            opens = False
        if not opens:
            raise TxRejected("secret does not open the commitment")
        terms = inst.terms
        if terms.fee_fraction is not None:
            fee, net = compute_fee(inst.locked_amount, terms.fee_fraction)
        else:
            fee, net = 0, inst.locked_amount
        collateral, poster = inst.collateral_posted, inst.collateral_poster
        inst.transition(InstanceState.RELEASED)
        # payout goes to the deployed beneficiary whoever the caller is
        self.credit(terms.beneficiary, net)
        if fee:
            self.credit(terms.facilitator, fee)
        if collateral:
            self.credit(poster, collateral)
        return self.emit(
            "eth_claim", swap_id,
            caller=caller, beneficiary=terms.beneficiary, net=net, fee=fee,
            fee_fraction=terms.fee_fraction, facilitator=terms.facilitator,
            collateral_returned=collateral, secret=self.group.encode_scalar(s % self.group.q),
            height=self.height,
        )

    def eth_refund_after_timeout(self, swap_id: bytes, caller: bytes | None = None) -> TraceEvent:
        inst = self._get(swap_id)
        if inst.state is not InstanceState.LOCKED:
            raise TxRejected(f"cannot refund: instance is {inst.state.name}")
        deadline = inst.deploy_time + inst.terms.timeout
        if self.now < deadline:
            raise TxRejected(f"too early: {self.now} < {deadline}")
        amount, collateral = inst.locked_amount, inst.collateral_posted
        poster = inst.collateral_poster
        inst.transition(InstanceState.REFUNDED)
        self.credit(inst.locker, amount)
        forfeited = bool(collateral) and poster != inst.locker
        if collateral:
            # counterparty collateral compensates the locker
            self.credit(inst.locker, collateral)
        return self.emit(
            "eth_refund", swap_id,
            caller=caller, locker=inst.locker, amount=amount, collateral=collateral,
            collateral_forfeited=forfeited, collateral_poster=poster, height=self.height,
        )


# ---------------------------------------------------------------------------
# simulation


class Simulation:
    """Both chains, the clock, the trace and an in-process message bus."""

    def __init__(self, group: Group) -> None:
        self.group = group
        self.clock = VirtualClock()
        self.trace = Trace()
        self.btc = BtcChain(self, group)
        self.eth = EthChain(self, group)
        self._observers: list[Callable[[TraceEvent], None]] = []
        self._schedule_block(self.btc)
        self._schedule_block(self.eth)

    def _schedule_block(self, chain: _Chain) -> None:
        def produce():
            chain.mine_block()
            self._schedule_block(chain)

        self.clock.schedule(self.clock.now + chain.block_interval, produce)

    @property
    def now(self) -> int:
        return self.clock.now

    def subscribe(self, observer: Callable[[TraceEvent], None]) -> None:
        self._observers.append(observer)

    def emit(self, chain: str, kind: str, swap_id: bytes | None, **payload) -> TraceEvent:
        event = TraceEvent(self.clock.now, chain, kind, swap_id, payload)
        self.trace.events.append(event)
        for observer in self._observers:
            # observers react after the current step, at the same virtual time
            self.clock.schedule(self.clock.now, lambda o=observer: o(event))
        return event

    def send(self, deliver: Callable[[], None], latency: int = 0) -> None:
        self.clock.schedule_in(latency, deliver)

    def advance_time(self, dt: int) -> list[TraceEvent]:
        if dt < 0:
            raise ValueError("dt must be non-negative")
        start = len(self.trace.events)
        self.clock.run_until(self.clock.now + dt)
        return self.trace.events[start:]

    def totals(self) -> dict[str, int]:
        return {"btc": self.btc.total_value(), "eth": self.eth.total_value()}

