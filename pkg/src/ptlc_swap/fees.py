from __future__ import annotations

from fractions import Fraction
from numbers import Rational


def as_fraction(alpha) -> Fraction:
    """Exact fee fraction from a Fraction, int, decimal string or float literal."""
    if isinstance(alpha, Rational):
        return Fraction(alpha)
    if isinstance(alpha, float):
        # go through repr so 0.01 means 1/100, not its binary expansion
        return Fraction(repr(alpha))
    return Fraction(str(alpha))


def check_fee_fraction(alpha) -> Fraction:
    alpha = as_fraction(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"fee fraction must lie in (0, 1), got {alpha}")
    return alpha


def compute_fee(amount: int, alpha) -> tuple[int, int]:
    """Split ``amount`` into ``(fee, net)`` with ``fee = floor(alpha * amount)``."""
    alpha = check_fee_fraction(alpha)
    if amount < 0:
        raise ValueError("amount must be non-negative")
    fee = (alpha.numerator * amount) // alpha.denominator
    return fee, amount - fee
