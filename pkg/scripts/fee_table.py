"""Facilitator fee split for a few fee fractions, from the facilitated scenario.

    python3 scripts/fee_table.py
"""

from fractions import Fraction

from ptlc_swap.protocol import ScenarioOverrides, ScenarioScript, simulate


def main() -> None:
    print(f"{'alpha':>8} {'amount':>10} {'fee':>8} {'net':>10}")
    for alpha in (Fraction(1, 1000), Fraction(1, 100), Fraction(1, 40), Fraction(1, 3)):
        r = simulate(ScenarioScript("facilitated", "secp256k1", 1, ScenarioOverrides(fee_fraction=alpha)))
        claim = r.trace.of_kind("eth_claim")[0].payload
        print(f"{str(alpha):>8} {claim['net'] + claim['fee']:>10} {claim['fee']:>8} {claim['net']:>10}")


if __name__ == "__main__":
    main()
