"""Run every scenario on both profiles and print outcome, timing and fund totals.

    python3 scripts/run_all_scenarios.py [--seeds 5] [--out-dir traces/]
"""

import argparse
from pathlib import Path

from ptlc_swap.protocol import (
    SCENARIOS,
    ScenarioScript,
    count_diversions,
    maker_critical_path,
    simulate,
    taker_end_to_end,
)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--out-dir", type=Path)
    args = ap.parse_args()
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    header = f"{'scenario':<12} {'profile':<10} {'seed':>4} {'outcome':<8} {'btc':<9} {'eth':<9} " \
             f"{'end(s)':>7} {'crit(s)':>7} {'e2e(s)':>7} {'div':>3} conserved"
    print(header)
    for name in SCENARIOS:
        for profile in ("toy", "secp256k1"):
            if name == "eve_replay" and profile == "toy":
                continue
            for seed in range(1, args.seeds + 1):
                r = simulate(ScenarioScript(name, profile, seed))
                o = r.outcome
                try:
                    crit, e2e = maker_critical_path(r.trace), taker_end_to_end(r.trace)
                except ValueError:
                    crit = e2e = "-"
                print(f"{name:<12} {profile:<10} {seed:>4} {o['outcome']:<8} {o['btc']:<9} {o['eth']:<9} "
                      f"{r.sim.now:>7} {crit:>7} {e2e:>7} {count_diversions(r):>3} {o['conserved']}")
                if args.out_dir:
                    r.trace.write(args.out_dir / f"{name}-{profile}-{seed}.jsonl")


if __name__ == "__main__":
    main()
