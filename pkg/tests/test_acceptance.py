"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import contextlib
import hashlib
import io
import random
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from ptlc_swap.adaptor import complete, extract_secret, presign, verify_presignature  # noqa: E402
from ptlc_swap.cli import main as cli_main  # noqa: E402
from ptlc_swap.fees import compute_fee  # noqa: E402
from ptlc_swap.group import SECP256K1, TOY  # noqa: E402
from ptlc_swap.oracle import Oracle, UnlockMessage  # noqa: E402
from ptlc_swap.protocol import (  # noqa: E402
    SCENARIOS,
    ScenarioScript,
    count_diversions,
    maker_critical_path,
    simulate,
    taker_end_to_end,
)
from ptlc_swap.schnorr import Signature, keygen, keypair_from_secret, sign, sign_with_nonce, verify  # noqa: E402
from ptlc_swap.taproot import (  # noqa: E402
    NonceMismatch,
    SwapMetadata,
    TaprootSpend,
    spend_message,
    tweak_keypair,
    verify_taproot_spend,
)

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    assert ok, detail


def format_results() -> list[str]:
    return [f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}" for n, (ok, detail) in sorted(RESULTS.items())]


def _mutations(g, sig, P, m):
    G = g.generator
    yield "R", Signature(g.point_add(sig.nonce_point, G), sig.scalar), P, m
    yield "s", Signature(sig.nonce_point, (sig.scalar + 1) % g.q), P, m
    yield "P", sig, g.point_add(P, G), m
    yield "m", sig, P, bytes([m[0] ^ 1]) + m[1:]


def _sweep(g, cases):
    honest = honest_ok = 0
    tried = {"R": 0, "s": 0, "P": 0, "m": 0}
    accepted = dict.fromkeys(tried, 0)
    for kp, k, m in cases:
        sig = sign_with_nonce(g, kp, m, k)
        honest += 1
        honest_ok += verify(g, sig, kp.public, m)
        for field, s2, P2, m2 in _mutations(g, sig, kp.public, m):
            tried[field] += 1
            accepted[field] += verify(g, s2, P2, m2)
    return honest, honest_ok, tried, accepted


def test_criterion_1_schnorr_correctness():
    start = time.perf_counter()
    toy_cases = ((keypair_from_secret(TOY, x), k, bytes([m]))
                 for x in range(1, 23) for k in range(1, 23) for m in range(23))
    t_h, t_ok, t_tried, t_acc = _sweep(TOY, toy_cases)
    rng = random.Random(1)
    prod_cases = [(keygen(SECP256K1, rng.randbytes(16)), rng.randrange(1, SECP256K1.q), rng.randbytes(32))
                  for _ in range(1000)]
    p_h, p_ok, p_tried, p_acc = _sweep(SECP256K1, prod_cases)
    elapsed = time.perf_counter() - start
    ok = (t_ok == t_h and p_ok == p_h and not any(t_acc.values()) and not any(p_acc.values())
          and elapsed < 5)
    detail = (f"toy honest {t_ok}/{t_h}, toy mutations accepted {t_acc} of {t_tried}; "
              f"secp256k1 honest {p_ok}/{p_h}, mutations accepted {p_acc}; {elapsed:.2f}s")
    record(1, ok, detail)


def test_criterion_2_adaptor_algebra():
    m = b"\x03"
    cases = bad = 0
    for x in range(1, 23):
        kp = keypair_from_secret(TOY, x)
        for k in range(1, 23):
            for s_a in range(1, 23):
                cases += 1
                ps = presign(TOY, kp, m, s_a, nonce=k)
                final = complete(TOY, ps, s_a)
                good = (verify_presignature(TOY, ps, kp.public, m) and verify(TOY, final, kp.public, m)
                        and extract_secret(TOY, final, ps) == s_a)
                wrong_ok = any(verify(TOY, complete(TOY, ps, d), kp.public, m)
                               for d in range(23) if d != s_a)
                bad += (not good) or wrong_ok
    record(2, bad == 0, f"{cases} (x, k, s_a) triples, each with 22 wrong deltas; {bad} failures")


def _composite():
    g = SECP256K1
    s_a = 424242
    md = SwapMetadata.create(asset_amount_btc=50_000, asset_amount_eth=10**6, timeout_btc=12,
                             timeout_eth=14_400, commitment=g.commit(s_a), btc_recipient=b"\x07" * 20,
                             salt=b"acceptance")
    maker = tweak_keypair(g, keygen(g, b"maker"), md)
    m = spend_message(md.swap_id, md.asset_amount_btc, md.btc_recipient)
    ps = presign(g, maker.keypair, m, s_a)
    oracle = Oracle(g, keygen(g, b"oracle"))
    msg = UnlockMessage(md.swap_id, md.commitment, 7, b"\x01" * 20)
    spend = TaprootSpend(complete(g, ps, s_a), s_a, oracle.sign_message(msg), msg.to_bytes())
    return g, s_a, md, maker, m, ps, oracle, msg, spend


def test_criterion_3_taproot_triple_check():
    g, s_a, md, maker, m, ps, oracle, msg, spend = _composite()
    C, O, Pt = md.commitment, oracle.public, maker.tweaked_public

    def run(sp=spend, P=Pt, C_=C, O_=O):
        try:
            return verify_taproot_spend(g, sp, ps, P, m, C_, O_, md.swap_id)
        except NonceMismatch:
            return False

    other_md = replace(md, asset_amount_btc=md.asset_amount_btc + 1)
    wrong_C_msg = UnlockMessage(md.swap_id, g.commit(s_a + 1), 7, b"\x01" * 20)
    negatives = {
        "delta+1 with valid signature": replace(spend, unlock_value=s_a + 1),
        "delta-1 with valid signature": replace(spend, unlock_value=s_a - 1),
        "signature completed with wrong delta": replace(spend, final_sig=complete(g, ps, s_a + 5),
                                                        unlock_value=s_a + 5),
        "C of another secret": ("C", g.commit(s_a + 1)),
        "random C": ("C", hashlib.sha256(b"random").digest()),
        "oracle message embeds wrong C": replace(spend, oracle_msg=wrong_C_msg.to_bytes(),
                                                 oracle_sig=oracle.sign_message(wrong_C_msg)),
        "sigma_O by the maker": replace(spend, oracle_sig=sign(g, maker.keypair, msg.to_bytes())),
        "sigma_O by a third key": replace(spend, oracle_sig=sign(g, keygen(g, b"eve"), msg.to_bytes())),
        "sigma_O checked against another key": ("O", keygen(g, b"fake-oracle").public),
        "untweaked base key": ("P", maker.base.public),
        "key tweaked with other metadata": ("P", tweak_keypair(g, maker.base, other_md).tweaked_public),
        "another maker's tweaked key": ("P", tweak_keypair(g, keygen(g, b"other"), md).tweaked_public),
    }
    accepted = []
    for name, case in negatives.items():
        if isinstance(case, tuple):
            kind, value = case
            result = run(C_=value) if kind == "C" else run(O_=value) if kind == "O" else run(P=value)
        else:
            result = run(sp=case)
        if result:
            accepted.append(name)
    ok = run() and not accepted and len(negatives) == 12
    record(3, ok, f"valid spend accepted={run()}; {len(negatives) - len(accepted)}/{len(negatives)} "
                  f"negative cases rejected{'; accepted: ' + ', '.join(accepted) if accepted else ''}")


def test_criterion_4_tweak_binding():
    g = SECP256K1
    rng = random.Random(4)
    changes = {
        "asset_amount_btc": lambda v: v + 1,
        "asset_amount_eth": lambda v: v + 1,
        "timeout_btc": lambda v: v + 1,
        "timeout_eth": lambda v: v + 1,
        "commitment": lambda v: bytes([v[0] ^ 1]) + v[1:],
        "btc_recipient": lambda v: bytes([v[0] ^ 1]) + v[1:],
        "swap_id": lambda v: bytes([v[0] ^ 1]) + v[1:],
    }
    total = failures = 0
    for _ in range(200):
        md = SwapMetadata(rng.randrange(1, 2**63), rng.randrange(1, 2**255), rng.randrange(1, 2**31),
                          rng.randrange(1, 2**63), rng.randbytes(32), rng.randbytes(20), rng.randbytes(32))
        kp = keygen(g, rng.randbytes(16))
        old = tweak_keypair(g, kp, md)
        msg = rng.randbytes(32)
        sig = sign(g, old.keypair, msg)
        for name, change in changes.items():
            total += 1
            new_md = replace(md, **{name: change(getattr(md, name))})
            new = tweak_keypair(g, kp, new_md)
            if new.tweak == old.tweak or verify(g, sig, new.tweaked_public, msg):
                failures += 1
    record(4, failures == 0, f"200 metadata x 7 fields = {total} single-field changes; {failures} failed to rebind")


def test_criterion_5_atomicity():
    rows, bad = [], []
    for name in SCENARIOS:
        for profile in ("secp256k1", "toy"):
            if name == "eve_replay" and profile == "toy":
                continue
            o = simulate(ScenarioScript(name, profile, seed=1)).outcome
            rows.append(f"{name}/{profile}={o['outcome']}")
            if not (o["atomic"] and o["conserved"]):
                bad.append(f"{name}/{profile}")
    record(5, not bad, "; ".join(rows) + (f"; violations: {bad}" if bad else "; all conserved"))


def test_criterion_6_maker_critical_path():
    trace = simulate(ScenarioScript("happy", "secp256k1", 1)).trace
    cp, e2e = maker_critical_path(trace), taker_end_to_end(trace)
    record(6, cp == 15 and e2e >= 600, f"maker critical path {cp}s (target 15); taker end-to-end {e2e}s (>= 600)")


def test_criterion_7_fee_arithmetic():
    rng = random.Random(7)
    bad = 0
    for _ in range(10_000):
        A = rng.randrange(0, 10**24)
        d = rng.randrange(2, 10**6)
        alpha = Fraction(rng.randrange(1, d), d)
        fee, net = compute_fee(A, alpha)
        bad += fee + net != A
    example = compute_fee(1000, 0.01)
    record(7, bad == 0 and example == (10, 990), f"10000 random cases, {bad} mismatches; (1000, 0.01) -> {example}")


def test_criterion_8_secret_leakage():
    diversions, attempts, outcomes = 0, 0, set()
    for seed in range(1, 6):
        r = simulate(ScenarioScript("eve_replay", "secp256k1", seed))
        diversions += count_diversions(r)
        attempts += len(r.adversary_attempts)
        outcomes.add(r.outcome["outcome"])
    ok = diversions == 0 and outcomes == {"swapped"}
    record(8, ok, f"5 seeds, {attempts} adversary attempts, {diversions} successful diversions")


def test_criterion_9_determinism(tmp_path=None):
    import tempfile

    base = Path(tmp_path or tempfile.mkdtemp())
    mismatched = []
    for name in SCENARIOS:
        a, b = base / f"{name}-a.jsonl", base / f"{name}-b.jsonl"
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            for path in (a, b):
                cli_main(["run", "--scenario", name, "--seed", "11", "--out", str(path)])
            same = cli_main(["trace-diff", str(a), str(b)]) == 0
        if a.read_bytes() != b.read_bytes() or not same:
            mismatched.append(name)
    record(9, not mismatched, f"{len(SCENARIOS)} scenarios run twice; byte-identical and trace-diff 0"
                              if not mismatched else f"nondeterministic: {mismatched}")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
    print("\n".join(format_results()))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
