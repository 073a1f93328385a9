"""Actors and scenarios for the buyer-first BTC/ETH swap.

Canonical flow (ETH goes to the maker, BTC to the taker):

1. The taker asks the maker for a quote (off-chain).
2. The maker picks the adaptor secret, escrows it with the oracle, pre-signs
   the BTC spend to the taker under its tweaked key and sends a proposal
   signed with its ETH identity key.
3. The taker verifies the proposal, deploys a swap instance through the
   factory and locks ETH.
4. The maker posts collateral and funds the Taproot output.
5. The oracle sees the armed instance, releases the secret plus its
   signature to the taker.
6. The taker completes the pre-signature and spends the BTC output.
7. The maker extracts the secret from the published spend and claims ETH.

Failure variants (ghosting, adversary, facilitated deployment) reuse the
same actors with different behaviour switches.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any

from .adaptor import (
    PreSignature,
    check_commitment,
    commit_secret,
    complete,
    extract_secret,
    presign,
    verify_presignature,
)
from .chainsim import (
    BTC_BLOCK_INTERVAL,
    ETH_BLOCK_INTERVAL,
    BtcRefundTx,
    BtcSpendTx,
    InstanceState,
    Simulation,
    TaprootOutput,
    Trace,
    TraceEvent,
    refund_message,
)
from .fees import check_fee_fraction, compute_fee
from .group import DecodeError, Group, Point, get_group
from .oracle import Oracle, UnlockRelease, verify_release
from .schnorr import KeyPair, Signature, keygen, sign, verify
from .taproot import (
    SwapMetadata,
    TaprootSpend,
    address_of,
    spend_message,
    tweak_keypair,
    tweak_public,
    derive_tweak,
)

__all__ = [
    "compute_fee",
    "SwapProposal",
    "build_and_sign_proposal",
    "verify_proposal",
    "ScenarioScript",
    "ScenarioOverrides",
    "run_scenario",
    "simulate",
    "maker_critical_path",
    "taker_end_to_end",
    "count_diversions",
    "ReputationRecord",
    "update_reputation",
]

logger = logging.getLogger(__name__)

DEFAULT_FEE_FRACTION = Fraction(1, 100)

SCENARIOS = ("happy", "maker_ghost", "taker_ghost", "eve_replay", "facilitated")


class ProtocolError(Exception):
    pass


class PhaseError(ProtocolError):
    pass


# ---------------------------------------------------------------------------
# actor state


class Role(Enum):
    TAKER = "TAKER"
    MAKER = "MAKER"
    ORACLE = "ORACLE"
    FACILITATOR = "FACILITATOR"
    ADVERSARY = "ADVERSARY"


class TakerPhase(Enum):
    IDLE = "IDLE"
    REQUESTED = "REQUESTED"
    VERIFIED = "VERIFIED"
    LOCKING = "LOCKING"
    LOCKED = "LOCKED"
    REDEEMING = "REDEEMING"
    DONE = "DONE"
    REFUNDING = "REFUNDING"
    REFUNDED = "REFUNDED"
    REJECTED = "REJECTED"
    ABANDONED = "ABANDONED"


class MakerPhase(Enum):
    IDLE = "IDLE"
    PROPOSED = "PROPOSED"
    COMMITTED = "COMMITTED"
    CLAIMING = "CLAIMING"
    DONE = "DONE"
    GHOSTED = "GHOSTED"
    ABANDONED = "ABANDONED"


class OraclePhase(Enum):
    WATCHING = "WATCHING"
    RELEASED = "RELEASED"


class FacilitatorPhase(Enum):
    IDLE = "IDLE"
    MATCHING = "MATCHING"
    DEPLOYING = "DEPLOYING"
    DONE = "DONE"


class AdversaryPhase(Enum):
    WATCHING = "WATCHING"
    ATTACKED = "ATTACKED"
    DONE = "DONE"


_ALLOWED: dict[type, dict[Enum, set[Enum]]] = {
    TakerPhase: {
        TakerPhase.IDLE: {TakerPhase.REQUESTED},
        TakerPhase.REQUESTED: {TakerPhase.VERIFIED, TakerPhase.REJECTED},
        TakerPhase.VERIFIED: {TakerPhase.LOCKING, TakerPhase.ABANDONED},
        TakerPhase.LOCKING: {TakerPhase.LOCKED, TakerPhase.ABANDONED},
        TakerPhase.LOCKED: {TakerPhase.REDEEMING, TakerPhase.REFUNDING},
        TakerPhase.REDEEMING: {TakerPhase.DONE},
        TakerPhase.REFUNDING: {TakerPhase.REFUNDED},
    },
    MakerPhase: {
        MakerPhase.IDLE: {MakerPhase.PROPOSED},
        MakerPhase.PROPOSED: {MakerPhase.COMMITTED, MakerPhase.GHOSTED, MakerPhase.ABANDONED},
        MakerPhase.COMMITTED: {MakerPhase.CLAIMING, MakerPhase.DONE, MakerPhase.GHOSTED},
        MakerPhase.CLAIMING: {MakerPhase.DONE},
    },
    OraclePhase: {OraclePhase.WATCHING: {OraclePhase.RELEASED}},
    FacilitatorPhase: {
        FacilitatorPhase.IDLE: {FacilitatorPhase.MATCHING},
        FacilitatorPhase.MATCHING: {FacilitatorPhase.DEPLOYING},
        FacilitatorPhase.DEPLOYING: {FacilitatorPhase.DONE},
    },
    AdversaryPhase: {
        AdversaryPhase.WATCHING: {AdversaryPhase.ATTACKED},
        AdversaryPhase.ATTACKED: {AdversaryPhase.DONE},
    },
}

TERMINAL_PHASES = {
    TakerPhase.DONE, TakerPhase.REFUNDED, TakerPhase.REJECTED, TakerPhase.ABANDONED,
    MakerPhase.DONE, MakerPhase.GHOSTED, MakerPhase.ABANDONED,
}


@dataclass
class ActorState:
    role: Role
    name: str
    phase: Enum
    keys: dict[str, KeyPair] = field(default_factory=dict)
    pending: list[bytes] = field(default_factory=list)
    secrets: dict[bytes, int] = field(default_factory=dict, repr=False)

    def can_move(self, new: Enum) -> bool:
        return new in _ALLOWED[type(self.phase)].get(self.phase, set())

    def move(self, new: Enum) -> Enum:
        if not self.can_move(new):
            raise PhaseError(f"{self.name}: {self.phase.name} -> {new.name} not allowed")
        old, self.phase = self.phase, new
        return old


# ---------------------------------------------------------------------------
# proposal


@dataclass(frozen=True)
class SwapProposal:
    metadata: SwapMetadata
    presignature: PreSignature
    maker_btc_key: Point
    maker_eth_account: bytes
    oracle_key: Point
    maker_identity_sig: Signature

    def body(self, group: Group) -> bytes:
        return proposal_body(group, self.metadata, self.presignature, self.maker_btc_key,
                             self.maker_eth_account, self.oracle_key)


def proposal_body(group: Group, metadata: SwapMetadata, ps: PreSignature, maker_btc_key: Point,
                  maker_eth_account: bytes, oracle_key: Point) -> bytes:
    return (
        b"PTLC-PROPOSAL"
        + metadata.to_bytes()
        + ps.to_bytes(group)
        + group.encode_point(maker_btc_key)
        + len(maker_eth_account).to_bytes(2, "big")
        + maker_eth_account
        + group.encode_point(oracle_key)
    )


def build_and_sign_proposal(
    group: Group,
    maker: ActorState,
    metadata: SwapMetadata,
    oracle: Oracle,
    *,
    eth_account: bytes | None = None,
    nonce: int | None = None,
) -> SwapProposal:
    """Pre-sign the BTC spend to the taker and wrap it in a signed proposal.

    ``maker.keys`` must hold ``"btc"`` (output base key) and ``"eth"``
    (identity key), and ``maker.secrets`` the adaptor secret for the swap.
    """
    swap_id = metadata.swap_id
    if swap_id not in maker.secrets:
        raise ProtocolError("maker holds no adaptor secret for this swap")
    if not oracle.is_escrowed(swap_id):
        raise ProtocolError("secret not escrowed with the oracle; refusing to propose")
    s_a = maker.secrets[swap_id]
    if commit_secret(group, s_a) != metadata.commitment:
        raise ProtocolError("metadata commitment does not match the maker's secret")
    btc_kp, eth_kp = maker.keys["btc"], maker.keys["eth"]
    tweaked = tweak_keypair(group, btc_kp, metadata)
    m = spend_message(swap_id, metadata.asset_amount_btc, metadata.btc_recipient)
    ps = presign(group, tweaked.keypair, m, s_a, swap_id, nonce=nonce)
    account = eth_account if eth_account is not None else address_of(group, eth_kp.public)
    body = proposal_body(group, metadata, ps, btc_kp.public, account, oracle.public)
    sig = sign(group, eth_kp, body, b"identity")
    return SwapProposal(metadata, ps, btc_kp.public, account, oracle.public, sig)


def verify_proposal(group: Group, p: SwapProposal, known_maker_key: Point, btc_height: int = 0) -> bool:
    try:
        if not verify(group, p.maker_identity_sig, known_maker_key, p.body(group)):
            return False
        md = p.metadata
        if md.asset_amount_btc <= 0 or md.asset_amount_eth <= 0:
            return False
        if md.timeout_btc <= btc_height:
            return False
        # ETH refund must come strictly after the BTC claim window closes
        if md.timeout_eth <= (md.timeout_btc - btc_height) * BTC_BLOCK_INTERVAL:
            return False
        if p.presignature.commitment != md.commitment:
            return False
        P_tweak = tweak_public(group, p.maker_btc_key, derive_tweak(group, p.maker_btc_key, md))
        m = spend_message(md.swap_id, md.asset_amount_btc, md.btc_recipient)
        return verify_presignature(group, p.presignature, P_tweak, m)
    except (DecodeError, ValueError):
        return False


# ---------------------------------------------------------------------------
# scenario configuration


@dataclass(frozen=True)
class ScenarioOverrides:
    eth_timeout: int = 14_400
    btc_refund_blocks: int = 12
    fee_fraction: Any = None
    collateral_rate: Any = Fraction(1, 10)
    oracle_confirmations: int = 1
    latency: int = 0
    amount_btc: int = 50_000_000
    amount_eth: int = 1_000_000
    deploy_cost: int = 1_000
    eth_beneficiary: str = "maker"

    def __post_init__(self):
        if self.fee_fraction is not None:
            object.__setattr__(self, "fee_fraction", check_fee_fraction(self.fee_fraction))
        rate = Fraction(str(self.collateral_rate)) if not isinstance(self.collateral_rate, Fraction) \
            else self.collateral_rate
        if not 0 <= rate < 1:
            raise ValueError("collateral_rate must lie in [0, 1)")
        object.__setattr__(self, "collateral_rate", rate)
        if self.oracle_confirmations < 1:
            raise ValueError("oracle_confirmations must be at least 1")
        if self.eth_timeout <= 0 or self.btc_refund_blocks <= 0:
            raise ValueError("timeouts must be positive")
        if self.latency < 0:
            raise ValueError("latency must be non-negative")
        if self.amount_btc <= 0 or self.amount_eth <= 0:
            raise ValueError("amounts must be positive")
        if self.eth_beneficiary not in ("maker", "taker"):
            raise ValueError("eth_beneficiary must be 'maker' or 'taker'")

    @property
    def collateral(self) -> int:
        r = self.collateral_rate
        return (r.numerator * self.amount_eth) // r.denominator


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    profile: str = "secp256k1"
    seed: int = 1
    overrides: ScenarioOverrides = field(default_factory=ScenarioOverrides)

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; choose from {', '.join(SCENARIOS)}")
        get_group(self.profile)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioScript":
        data = dict(data)
        known = set(ScenarioOverrides.__dataclass_fields__)
        raw = data.pop("overrides", {}) or {}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown overrides: {sorted(unknown)}")
        extra = set(data) - {"name", "scenario", "profile", "seed"}
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        name = data.get("name", data.get("scenario"))
        if name is None:
            raise ValueError("config needs a scenario name")
        return cls(
            name=name,
            profile=data.get("profile", "secp256k1"),
            seed=int(data.get("seed", 1)),
            overrides=ScenarioOverrides(**raw),
        )


# ---------------------------------------------------------------------------
# messages


@dataclass(frozen=True)
class SwapRequest:
    btc_recipient: bytes
    eth_account: bytes
    amount_btc: int
    amount_eth: int


# ---------------------------------------------------------------------------
# actors


class _Actor:
    role: Role

    def __init__(self, engine: "_Engine", name: str, phase: Enum, keys: dict[str, KeyPair]):
        self.engine = engine
        self.state = ActorState(self.role, name, phase, keys)

    @property
    def name(self) -> str:
        return self.state.name

    @property
    def group(self) -> Group:
        return self.engine.group

    @property
    def sim(self) -> Simulation:
        return self.engine.sim

    def move(self, new: Enum) -> None:
        old = self.state.move(new)
        self.sim.emit("offchain", "phase", self.engine.swap_id, actor=self.name,
                      **{"from": old.name, "to": new.name})

    def on_event(self, event: TraceEvent) -> None:
        pass


class TakerActor(_Actor):
    role = Role.TAKER

    def __init__(self, engine, keys, *, ghost: bool = False, via_facilitator: bool = False):
        super().__init__(engine, "taker", TakerPhase.IDLE, keys)
        self.ghost = ghost
        self.via_facilitator = via_facilitator
        self.btc_address = address_of(self.group, keys["btc"].public, b"taker")
        self.eth_account = address_of(self.group, keys["eth"].public, b"taker")
        self.proposal: SwapProposal | None = None
        self.release: UnlockRelease | None = None
        self.utxo_ready = False

    def start(self) -> None:
        o = self.engine.overrides
        req = SwapRequest(self.btc_address, self.eth_account, o.amount_btc, o.amount_eth)
        self.move(TakerPhase.REQUESTED)
        target = self.engine.facilitator if self.via_facilitator else self.engine.maker
        self.sim.emit("offchain", "swap_request", None, actor=self.name, to=target.name,
                      btc_recipient=req.btc_recipient, amount_btc=req.amount_btc,
                      amount_eth=req.amount_eth)
        self.engine.deliver(lambda: target.on_request(req, reply_to=self))

    def on_proposal(self, p: SwapProposal) -> None:
        g = self.group
        ok = verify_proposal(g, p, self.engine.known_maker_key, self.sim.btc.height)
        ok = ok and p.metadata.btc_recipient == self.btc_address
        ok = ok and p.oracle_key == self.engine.oracle.public
        self.sim.emit("offchain", "proposal_verified", p.metadata.swap_id, actor=self.name, ok=ok)
        if not ok:
            self.move(TakerPhase.REJECTED)
            return
        self.proposal = p
        self.move(TakerPhase.VERIFIED)
        if self.via_facilitator:
            self.engine.deliver(lambda: self.engine.facilitator.on_accept(p))
            return
        o = self.engine.overrides
        self.sim.eth.submit(
            "factory_deploy", actor=self.name,
            params=p.metadata, beneficiary=self.engine.beneficiary_for(p),
            collateral=o.collateral, deployer=self.eth_account, deploy_cost=o.deploy_cost,
        )
        if self.ghost:
            self.move(TakerPhase.ABANDONED)
            return
        self._lock()

    def _lock(self) -> None:
        self.sim.eth.submit("eth_lock", actor=self.name, swap_id=self.proposal.metadata.swap_id,
                            from_account=self.eth_account,
                            amount=self.proposal.metadata.asset_amount_eth)
        self.move(TakerPhase.LOCKING)

    def on_release(self, rel: UnlockRelease) -> None:
        md = self.proposal.metadata
        if not verify_release(self.group, rel, self.engine.oracle.public, md.commitment):
            logger.warning("taker got an invalid oracle release")
            return
        self.release = rel
        self._try_redeem()

    def _try_redeem(self) -> None:
        if self.release is None or not self.utxo_ready or self.state.phase is not TakerPhase.LOCKED:
            return
        g, p, rel = self.group, self.proposal, self.release
        md = p.metadata
        final = complete(g, p.presignature, rel.unlock_value)
        spend = TaprootSpend(final, rel.unlock_value, rel.oracle_sig, rel.message.to_bytes())
        self.sim.btc.submit("btc_spend", actor=self.name,
                            tx=BtcSpendTx(md.swap_id, self.btc_address, spend))
        self.move(TakerPhase.REDEEMING)

    def on_event(self, event: TraceEvent) -> None:
        if self.proposal is None or event.swap_id != self.proposal.metadata.swap_id:
            return
        phase = self.state.phase
        if event.kind == "eth_deploy" and self.via_facilitator and phase is TakerPhase.VERIFIED:
            inst = self.sim.eth.instance(event.swap_id)
            md = self.proposal.metadata
            if (inst.beneficiary == self.engine.beneficiary_for(self.proposal)
                    and inst.commitment == md.commitment and inst.terms.amount == md.asset_amount_eth):
                self._lock()
            else:
                self.move(TakerPhase.ABANDONED)
        elif event.kind == "eth_deploy" and phase in (TakerPhase.LOCKING, TakerPhase.VERIFIED):
            inst = self.sim.eth.instance(event.swap_id)
            self.sim.clock.schedule(inst.deploy_time + inst.terms.timeout, self._on_deadline)
        elif event.kind == "eth_lock" and phase is TakerPhase.LOCKING:
            if self.via_facilitator:
                inst = self.sim.eth.instance(event.swap_id)
                self.sim.clock.schedule(inst.deploy_time + inst.terms.timeout, self._on_deadline)
            self.move(TakerPhase.LOCKED)
            self._try_redeem()
        elif event.kind == "btc_lock":
            self.utxo_ready = True
            self._try_redeem()
        elif event.kind == "btc_spend" and event.payload.get("recipient") == self.btc_address:
            if phase is TakerPhase.REDEEMING:
                self.move(TakerPhase.DONE)
        elif event.kind == "eth_refund" and phase is TakerPhase.REFUNDING:
            self.move(TakerPhase.REFUNDED)

    def _on_deadline(self) -> None:
        inst = self.sim.eth.instance(self.proposal.metadata.swap_id)
        if self.state.phase is TakerPhase.LOCKED and inst.state is InstanceState.LOCKED:
            self.sim.eth.submit("eth_refund_after_timeout", actor=self.name,
                                swap_id=inst.terms.swap_id, caller=self.eth_account)
            self.move(TakerPhase.REFUNDING)


class MakerActor(_Actor):
    role = Role.MAKER

    def __init__(self, engine, keys, *, ghost: bool = False):
        super().__init__(engine, "maker", MakerPhase.IDLE, keys)
        self.ghost = ghost
        self.eth_account = address_of(self.group, keys["eth"].public, b"maker")
        self.btc_address = address_of(self.group, keys["btc"].public)
        self.proposal: SwapProposal | None = None
        self.extracted: int | None = None

    def on_request(self, req: SwapRequest, reply_to) -> None:
        g, sim, o = self.group, self.sim, self.engine.overrides
        seed = self.engine.seed_bytes
        s_a = g.random_scalar(seed + b"/maker/adaptor-secret")
        C = commit_secret(g, s_a)
        md = SwapMetadata.create(
            asset_amount_btc=req.amount_btc,
            asset_amount_eth=req.amount_eth,
            timeout_btc=sim.btc.height + o.btc_refund_blocks,
            timeout_eth=o.eth_timeout,
            commitment=C,
            btc_recipient=req.btc_recipient,
            salt=seed + b"/swap-salt",
        )
        swap_id = md.swap_id
        self.engine.swap_id = swap_id
        self.state.secrets[swap_id] = s_a
        self.state.pending.append(swap_id)
        self.engine.oracle_actor.escrow(swap_id, s_a, C)
        p = build_and_sign_proposal(g, self.state, md, self.engine.oracle, eth_account=self.eth_account)
        self.proposal = p
        sim.emit("offchain", "proposal", swap_id, actor=self.name,
                 metadata=md.to_bytes(), presignature=p.presignature.to_bytes(g),
                 maker_btc_key=g.encode_point(p.maker_btc_key), maker_eth_account=p.maker_eth_account,
                 identity_R=g.encode_point(p.maker_identity_sig.nonce_point),
                 identity_s=g.encode_scalar(p.maker_identity_sig.scalar))
        self.move(MakerPhase.PROPOSED)
        self.engine.deliver(lambda: reply_to.on_proposal(p))

    def on_event(self, event: TraceEvent) -> None:
        if self.proposal is None or event.swap_id != self.proposal.metadata.swap_id:
            return
        phase = self.state.phase
        if event.kind == "eth_deploy" and phase is MakerPhase.PROPOSED:
            inst = self.sim.eth.instance(event.swap_id)
            self.sim.clock.schedule(inst.deploy_time + inst.terms.timeout, self._on_eth_deadline)
        elif event.kind == "eth_lock" and phase is MakerPhase.PROPOSED:
            self._commit()
        elif event.kind == "btc_spend" and phase is MakerPhase.COMMITTED:
            self._extract_and_claim(event)
        elif event.kind == "eth_claim" and phase in (MakerPhase.COMMITTED, MakerPhase.CLAIMING):
            if event.payload["beneficiary"] == self.engine.beneficiary_for(self.proposal):
                self.move(MakerPhase.DONE)

    def _commit(self) -> None:
        """First post-lock action: collateral on ETH, then fund the Taproot output."""
        g, md, p = self.group, self.proposal.metadata, self.proposal
        inst = self.sim.eth.instance(md.swap_id)
        if inst.terms.collateral:
            self.sim.eth.submit("eth_post_collateral", actor=self.name, swap_id=md.swap_id,
                                from_account=self.eth_account)
        if self.ghost:
            self.move(MakerPhase.GHOSTED)
            return
        tweaked = tweak_keypair(g, self.state.keys["btc"], md)
        out = TaprootOutput(
            swap_id=md.swap_id,
            value=md.asset_amount_btc,
            tweaked_key=tweaked.tweaked_public,
            refund_key=self.state.keys["btc"].public,
            refund_height=md.timeout_btc,
            presignature=p.presignature,
            commitment=md.commitment,
            oracle_key=p.oracle_key,
        )
        self.sim.btc.submit("btc_lock", actor=self.name, output=out, funder=self.btc_address)
        self.sim.clock.schedule(self.sim.now + BTC_BLOCK_INTERVAL, self._watch_refund)
        self.move(MakerPhase.COMMITTED)

    def _extract_and_claim(self, event: TraceEvent) -> None:
        g, p = self.group, self.proposal
        final = Signature(g.decode_point(_as_bytes(event.payload["R"])),
                          g.decode_scalar(_as_bytes(event.payload["s"])))
        s_a = extract_secret(g, final, p.presignature)
        ok = check_commitment(g, s_a, p.metadata.commitment, p.presignature.adaptor_point)
        self.extracted = s_a
        self.sim.emit("offchain", "secret_extracted", p.metadata.swap_id, actor=self.name,
                      secret=g.encode_scalar(s_a), matches_commitment=ok,
                      matches_escrow=s_a == self.state.secrets[p.metadata.swap_id])
        inst = self.sim.eth.instance(p.metadata.swap_id)
        if inst.state is InstanceState.RELEASED:
            if inst.beneficiary == self.engine.beneficiary_for(p):
                self.move(MakerPhase.DONE)
            return
        self.sim.eth.submit("eth_claim_with_secret", actor=self.name, swap_id=p.metadata.swap_id,
                            s=s_a, caller=self.eth_account)
        self.move(MakerPhase.CLAIMING)

    def _on_eth_deadline(self) -> None:
        inst = self.sim.eth.instance(self.proposal.metadata.swap_id)
        if self.state.phase is MakerPhase.PROPOSED and inst.state is InstanceState.DEPLOYED:
            self.move(MakerPhase.ABANDONED)

    def _watch_refund(self) -> None:
        # reclaim the output if the taker never redeems it
        md = self.proposal.metadata
        if md.swap_id not in self.sim.btc.utxos:
            return
        if self.sim.btc.height + 1 >= md.timeout_btc:
            sig = sign(self.group, self.state.keys["btc"], refund_message(md.swap_id), b"refund")
            self.sim.btc.submit("btc_refund", actor=self.name, tx=BtcRefundTx(md.swap_id, sig))
            return
        self.sim.clock.schedule(self.sim.now + BTC_BLOCK_INTERVAL, self._watch_refund)


def _as_bytes(value) -> bytes:
    return value if isinstance(value, bytes) else bytes.fromhex(value)


class OracleActor(_Actor):
    role = Role.ORACLE

    def __init__(self, engine, oracle: Oracle):
        super().__init__(engine, "oracle", OraclePhase.WATCHING, {"oracle": oracle.keypair})
        self.oracle = oracle
        self.notify = None

    def escrow(self, swap_id: bytes, s_a: int, C: bytes) -> None:
        self.oracle.escrow_secret(swap_id, s_a, C)
        self.state.pending.append(swap_id)
        self.sim.emit("offchain", "escrow", swap_id, actor=self.name, commitment=C, accepted=True)

    def on_event(self, event: TraceEvent) -> None:
        if event.chain != "eth" or event.kind != "block":
            return
        for swap_id in list(self.state.pending):
            rel = self.oracle.observe_and_release(self.sim.eth, swap_id)
            if rel is None:
                continue
            self.state.pending.remove(swap_id)
            g = self.group
            self.sim.emit(
                "offchain", "oracle_release", swap_id, actor=self.name,
                unlock_value=g.encode_scalar(rel.unlock_value),
                oracle_R=g.encode_point(rel.oracle_sig.nonce_point),
                oracle_s=g.encode_scalar(rel.oracle_sig.scalar),
                message=rel.message.to_bytes(), eth_height=self.sim.eth.height,
            )
            if self.state.phase is OraclePhase.WATCHING:
                self.move(OraclePhase.RELEASED)
            taker = self.engine.taker
            self.engine.deliver(lambda r=rel: taker.on_release(r))


class FacilitatorActor(_Actor):
    role = Role.FACILITATOR

    def __init__(self, engine, keys):
        super().__init__(engine, "facilitator", FacilitatorPhase.IDLE, keys)
        self.eth_account = address_of(self.group, keys["eth"].public, b"facilitator")
        self.taker = None

    def on_request(self, req: SwapRequest, reply_to) -> None:
        self.taker = reply_to
        self.move(FacilitatorPhase.MATCHING)
        self.sim.emit("offchain", "match", None, actor=self.name, maker=self.engine.maker.name,
                      taker=reply_to.name)
        maker = self.engine.maker
        self.engine.deliver(lambda: maker.on_request(req, reply_to=self))

    def on_proposal(self, p: SwapProposal) -> None:
        # relay the maker's proposal to the buyer unchanged
        taker = self.taker
        self.engine.deliver(lambda: taker.on_proposal(p))

    def on_accept(self, p: SwapProposal) -> None:
        o = self.engine.overrides
        self.sim.eth.submit(
            "factory_deploy", actor=self.name,
            params=p.metadata, beneficiary=self.engine.beneficiary_for(p),
            facilitator=self.eth_account, fee_fraction=self.engine.fee_fraction,
            collateral=o.collateral, deployer=self.eth_account, deploy_cost=o.deploy_cost,
        )
        self.move(FacilitatorPhase.DEPLOYING)

    def on_event(self, event: TraceEvent) -> None:
        if event.kind == "eth_deploy" and self.state.phase is FacilitatorPhase.DEPLOYING:
            self.move(FacilitatorPhase.DONE)


class AdversaryActor(_Actor):
    """Eve: sees every block and broadcast, holds no private keys of others."""

    role = Role.ADVERSARY

    def __init__(self, engine, keys):
        super().__init__(engine, "eve", AdversaryPhase.WATCHING, keys)
        self.btc_address = address_of(self.group, keys["btc"].public, b"eve")
        self.eth_account = address_of(self.group, keys["eth"].public, b"eve")
        self.presignature: PreSignature | None = None
        self.victim_tx: BtcSpendTx | None = None
        self.attempts: list[str] = []

    def _attempt(self, strategy: str, chain, kind: str, **args) -> None:
        self.attempts.append(strategy)
        self.sim.emit("offchain", "adversary_attempt", self.engine.swap_id, actor=self.name,
                      strategy=strategy)
        chain.submit(kind, actor=self.name, priority=True, **args)

    def on_event(self, event: TraceEvent) -> None:
        g = self.group
        if event.kind == "btc_lock":
            self.presignature = PreSignature.from_bytes(g, _as_bytes(event.payload["presignature"]))
        elif (event.kind == "tx_broadcast" and event.chain == "btc"
              and event.payload.get("tx") == "btc_spend" and event.payload.get("actor") == "taker"
              and self.state.phase is AdversaryPhase.WATCHING and self.presignature is not None):
            victim = next(t.args["tx"] for t in self.sim.btc.mempool
                          if t.kind == "btc_spend" and t.actor == "taker")
            self.victim_tx = victim
            self._front_run(victim)
        elif (event.kind == "btc_spend" and self.victim_tx is not None
              and self.state.phase is AdversaryPhase.ATTACKED):
            self._attempt("replay_confirmed_spend", self.sim.btc, "btc_spend", tx=self.victim_tx)
            self.move(AdversaryPhase.DONE)

    def _front_run(self, victim: BtcSpendTx) -> None:
        g, sid = self.group, victim.swap_id
        spend = victim.spend
        s_a = extract_secret(g, spend.final_sig, self.presignature)
        self.sim.emit("offchain", "secret_extracted", sid, actor=self.name,
                      secret=g.encode_scalar(s_a))
        eve_rng = self.engine.seed_bytes + b"/eve"
        # 1. keep the completed signature, pay Eve instead
        self._attempt("redirect_completed_signature", self.sim.btc, "btc_spend",
                      tx=BtcSpendTx(sid, self.btc_address, spend))
        # 2. re-randomize the scalar
        r = g.random_scalar(eve_rng + b"/rerandomize")
        sig2 = Signature(spend.final_sig.nonce_point, g.scalar_add(spend.final_sig.scalar, r))
        self._attempt("rerandomized_scalar", self.sim.btc, "btc_spend",
                      tx=BtcSpendTx(sid, self.btc_address, replace(spend, final_sig=sig2)))
        # 3. sign the redirected spend with Eve's own key, reusing the leaked secret
        m_eve = spend_message(sid, self.sim.btc.utxos[sid].value, self.btc_address)
        own = sign(g, self.state.keys["btc"], m_eve, eve_rng)
        self._attempt("own_key_signature", self.sim.btc, "btc_spend",
                      tx=BtcSpendTx(sid, self.btc_address, replace(spend, final_sig=own)))
        # 4. forge the oracle attestation
        forged = sign(g, self.state.keys["btc"], spend.oracle_msg, eve_rng + b"/oracle")
        self._attempt("forged_oracle_signature", self.sim.btc, "btc_spend",
                      tx=BtcSpendTx(sid, self.btc_address, replace(spend, oracle_sig=forged)))
        # 5. use the secret on the contract chain
        self._attempt("eth_claim_with_leaked_secret", self.sim.eth, "eth_claim_with_secret",
                      swap_id=sid, s=s_a, caller=self.eth_account)
        # 6. try to unwind the contract early
        self._attempt("eth_early_refund", self.sim.eth, "eth_refund_after_timeout",
                      swap_id=sid, caller=self.eth_account)
        # 7. refund the output with a signature from the wrong key
        bad = sign(g, self.state.keys["btc"], refund_message(sid), eve_rng + b"/refund")
        self._attempt("forged_btc_refund", self.sim.btc, "btc_refund", tx=BtcRefundTx(sid, bad))
        self.move(AdversaryPhase.ATTACKED)


# ---------------------------------------------------------------------------
# engine


@dataclass
class ScenarioResult:
    script: ScenarioScript
    trace: Trace
    sim: Simulation
    outcome: dict
    accounts: dict[str, dict[str, bytes]]
    adversary_attempts: list[str] = field(default_factory=list)


class _Engine:
    def __init__(self, script: ScenarioScript):
        self.script = script
        self.overrides = script.overrides
        self.group = get_group(script.profile)
        self.seed_bytes = f"ptlc-swap/{script.seed}".encode()
        self.fee_fraction = self.overrides.fee_fraction
        if script.name == "facilitated" and self.fee_fraction is None:
            self.fee_fraction = DEFAULT_FEE_FRACTION
        self.sim = Simulation(self.group)
        self.swap_id: bytes | None = None
        g = self.group

        def key(label: str) -> KeyPair:
            return keygen(g, self.seed_bytes + b"/" + label.encode())

        name = script.name
        self.oracle = Oracle(g, key("oracle"), confirmations=self.overrides.oracle_confirmations)
        self.oracle_actor = OracleActor(self, self.oracle)
        self.maker = MakerActor(self, {"btc": key("maker/btc"), "eth": key("maker/eth")},
                                ghost=name == "maker_ghost")
        self.known_maker_key = self.maker.state.keys["eth"].public
        self.facilitator = (
            FacilitatorActor(self, {"eth": key("facilitator/eth")}) if name == "facilitated" else None
        )
        self.taker = TakerActor(self, {"btc": key("taker/btc"), "eth": key("taker/eth")},
                                ghost=name == "taker_ghost", via_facilitator=name == "facilitated")
        self.adversary = (
            AdversaryActor(self, {"btc": key("eve/btc"), "eth": key("eve/eth")})
            if name == "eve_replay" else None
        )
        self.actors = [a for a in (self.oracle_actor, self.maker, self.facilitator, self.taker,
                                   self.adversary) if a is not None]
        for actor in self.actors:
            self.sim.subscribe(actor.on_event)
        self._genesis()

    def _genesis(self) -> None:
        o, sim = self.overrides, self.sim
        sim.btc.credit(self.maker.btc_address, 2 * o.amount_btc)
        sim.eth.credit(self.taker.eth_account, 2 * o.amount_eth + o.deploy_cost)
        sim.eth.credit(self.maker.eth_account, o.collateral + o.amount_eth)
        if self.facilitator is not None:
            sim.eth.credit(self.facilitator.eth_account, 10 * o.deploy_cost)
        if self.adversary is not None:
            sim.btc.credit(self.adversary.btc_address, 0)
            sim.eth.credit(self.adversary.eth_account, 0)

    def beneficiary_for(self, p: SwapProposal) -> bytes:
        if self.overrides.eth_beneficiary == "taker":
            return self.taker.eth_account
        return p.maker_eth_account

    def deliver(self, fn) -> None:
        self.sim.send(fn, self.overrides.latency)

    def horizon(self) -> int:
        o = self.overrides
        return max(o.eth_timeout, o.btc_refund_blocks * BTC_BLOCK_INTERVAL) + \
            BTC_BLOCK_INTERVAL + ETH_BLOCK_INTERVAL

    def _settled(self) -> bool:
        if self.taker.state.phase not in TERMINAL_PHASES or self.maker.state.phase not in TERMINAL_PHASES:
            return False
        if self.sim.btc.mempool or self.sim.eth.mempool:
            return False
        if self.adversary is not None and self.adversary.state.phase is AdversaryPhase.ATTACKED:
            return False
        return True

    def run(self) -> ScenarioResult:
        sim = self.sim
        start_totals = sim.totals()
        sim.emit("offchain", "scenario_start", None, scenario=self.script.name,
                 profile=self.group.name, seed=self.script.seed,
                 maker=self.maker.eth_account, taker=self.taker.eth_account,
                 oracle_key=self.group.encode_point(self.oracle.public))
        sim.clock.schedule(0, self.taker.start)
        horizon = self.horizon()
        while True:
            sim.advance_time(ETH_BLOCK_INTERVAL)
            if self._settled() or sim.now >= horizon:
                break
        outcome = classify_outcome(self)
        end_totals = sim.totals()
        outcome["conserved"] = start_totals == end_totals
        outcome["totals"] = end_totals
        sim.emit("offchain", "scenario_end", self.swap_id, **outcome)
        accounts = {
            "maker": {"eth": self.maker.eth_account, "btc": self.maker.btc_address},
            "taker": {"eth": self.taker.eth_account, "btc": self.taker.btc_address},
        }
        if self.facilitator is not None:
            accounts["facilitator"] = {"eth": self.facilitator.eth_account}
        if self.adversary is not None:
            accounts["eve"] = {"eth": self.adversary.eth_account, "btc": self.adversary.btc_address}
        return ScenarioResult(self.script, sim.trace, sim, outcome, accounts,
                              list(self.adversary.attempts) if self.adversary else [])


def classify_outcome(engine: _Engine) -> dict:
    sim, sid = engine.sim, engine.swap_id
    btc_status = "unfunded"
    if sid is not None:
        if sid in sim.btc.utxos:
            btc_status = "locked"
        elif sid in sim.btc.closed:
            btc_status = sim.btc.closed[sid]
    btc_to_taker = False
    for e in sim.trace.of_kind("btc_spend", "btc"):
        if e.swap_id == sid:
            btc_to_taker = e.payload["recipient"] == engine.taker.btc_address
    inst = sim.eth.instance(sid) if sid is not None else None
    eth_status = inst.state.name if inst is not None else "NONE"
    if btc_status == "spent" and btc_to_taker and eth_status == "RELEASED":
        outcome, ghost = "swapped", None
    elif btc_status in ("unfunded", "refunded") and eth_status in ("REFUNDED", "DEPLOYED", "NONE"):
        outcome = "aborted"
        ghost = engine.maker.eth_account if eth_status == "REFUNDED" else engine.taker.eth_account
    else:
        outcome, ghost = "mixed", None
    return {
        "outcome": outcome,
        "atomic": outcome != "mixed",
        "btc": btc_status,
        "eth": eth_status,
        "ghost": ghost,
        "maker": engine.maker.eth_account,
        "taker": engine.taker.eth_account,
    }


def simulate(script: ScenarioScript) -> ScenarioResult:
    return _Engine(script).run()


def run_scenario(script: ScenarioScript) -> Trace:
    return simulate(script).trace


# ---------------------------------------------------------------------------
# trace analysis


def _first(trace: Trace, pred) -> TraceEvent | None:
    return next((e for e in trace if pred(e)), None)


def maker_critical_path(trace: Trace) -> int:
    """Virtual seconds from the maker's first post-lock action to the oracle release."""
    lock = _first(trace, lambda e: e.chain == "eth" and e.kind == "eth_lock")
    release = _first(trace, lambda e: e.kind == "oracle_release")
    if lock is None or release is None:
        raise ValueError("trace has no completed lock/release pair")
    action = _first(trace, lambda e: e.kind == "tx_broadcast" and e.payload.get("actor") == "maker"
                    and e.time >= lock.time)
    if action is None:
        raise ValueError("maker never acted after the lock")
    return release.time - action.time


def taker_end_to_end(trace: Trace) -> int:
    """Virtual seconds from the taker's request until its BTC spend confirms."""
    start = _first(trace, lambda e: e.kind == "swap_request")
    start_evt = _first(trace, lambda e: e.kind == "scenario_start")
    taker = start_evt.payload["taker"] if start_evt else None
    done = _first(trace, lambda e: e.kind == "phase" and e.payload.get("actor") == "taker"
                  and e.payload.get("to") == "DONE")
    if start is None or done is None or taker is None:
        raise ValueError("trace has no completed taker redemption")
    return done.time - start.time


def count_diversions(result: ScenarioResult) -> int:
    """Accepted transactions that moved value anywhere but the agreed recipients."""
    taker_btc = result.accounts["taker"]["btc"]
    diversions = 0
    for e in result.trace.of_kind("btc_spend", "btc"):
        if _as_bytes(e.payload["recipient"]) != taker_btc:
            diversions += 1
    deployed = {e.swap_id: _as_bytes(e.payload["beneficiary"]) for e in result.trace.of_kind("eth_deploy")}
    for e in result.trace.of_kind("eth_claim", "eth"):
        if _as_bytes(e.payload["beneficiary"]) != deployed.get(e.swap_id):
            diversions += 1
    eve = result.accounts.get("eve")
    if eve is not None:
        if result.sim.btc.balances.get(eve["btc"], 0) > 0:
            diversions += 1
        if result.sim.eth.balances.get(eve["eth"], 0) > 0:
            diversions += 1
    return diversions


# ---------------------------------------------------------------------------
# reputation


@dataclass(frozen=True)
class ReputationRecord:
    completed: dict[str, int] = field(default_factory=dict)
    ghosted: dict[str, int] = field(default_factory=dict)
    seen: frozenset[str] = frozenset()

    def score(self, account: str) -> tuple[int, int]:
        return self.completed.get(account, 0), self.ghosted.get(account, 0)


def update_reputation(record: ReputationRecord, trace: Trace) -> ReputationRecord:
    end = trace.end
    if end is None:
        raise ValueError("trace is not terminal")
    digest = trace.digest()
    if digest in record.seen:
        return record
    completed, ghosted = dict(record.completed), dict(record.ghosted)
    p = end.payload

    def key(v) -> str:
        return v.hex() if isinstance(v, bytes) else v

    if p["outcome"] == "swapped":
        for party in (key(p["maker"]), key(p["taker"])):
            completed[party] = completed.get(party, 0) + 1
    elif p["outcome"] == "aborted" and p.get("ghost"):
        g = key(p["ghost"])
        ghosted[g] = ghosted.get(g, 0) + 1
    return ReputationRecord(completed, ghosted, record.seen | {digest})
