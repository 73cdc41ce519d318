"""Working-precision plumbing shared by every numerical routine."""

import os
from dataclasses import dataclass

from mpmath import mp, mpf

# Extra decimal digits carried internally so that results are good to the
# requested number of digits after cancellation in sums and quadrature.
GUARD_DIGITS = 15

DEFAULT_DIGITS = int(os.environ.get("THETALIFT_DIGITS", "60"))


@dataclass(frozen=True)
class Precision:
    """Target precision in significant decimal digits (>= 15)."""

    digits: int = DEFAULT_DIGITS

    def __post_init__(self):
        if self.digits < 15:
            raise ValueError("precision must be at least 15 digits")

    def working(self):
        """Context manager setting mpmath's dps to digits + guard."""
        return mp.workdps(self.digits + GUARD_DIGITS)

    @property
    def tolerance(self):
        """Relative error budget 10**(5 - digits) used throughout the tests."""
        with mp.workdps(self.digits + GUARD_DIGITS):
            return mpf(10) ** (5 - self.digits)

    @property
    def eps(self):
        """Hard floor 10**-(digits + guard/2) for truncation decisions."""
        with mp.workdps(self.digits + GUARD_DIGITS):
            return mpf(10) ** (-(self.digits + GUARD_DIGITS // 2))


DEFAULT_PRECISION = Precision()


def to_mpf(x):
    """mpf from int/float/str/Fraction (mpf() itself rejects Fraction)."""
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, int):
        return mpf(x.numerator) / mpf(x.denominator)
    return mpf(x)
