"""Maker critical path and taker end-to-end time against oracle confirmations and latency.

    python3 scripts/critical_path_sweep.py
"""

from ptlc_swap.protocol import ScenarioOverrides, ScenarioScript, maker_critical_path, simulate, taker_end_to_end


def main() -> None:
    print(f"{'confirmations':>13} {'latency(s)':>10} {'crit(s)':>8} {'e2e(s)':>7}")
    for confirmations in (1, 2, 3, 6):
        for latency in (0, 5, 60):
            o = ScenarioOverrides(oracle_confirmations=confirmations, latency=latency)
            trace = simulate(ScenarioScript("happy", "secp256k1", 1, o)).trace
            print(f"{confirmations:>13} {latency:>10} {maker_critical_path(trace):>8} {taker_end_to_end(trace):>7}")


if __name__ == "__main__":
    main()
