"""Arbitrary-precision special functions for the expansion formulas.

Incomplete gamma at (half-)integer order, complementary error function,
Hurwitz zeta, the digamma/cotangent constant, Hermite polynomials and
I/J-Bessel series.  Backed by mpmath primitives where those are the standard
tool; the incomplete gamma follows the upward recurrence from its erfc/exp
base cases so that half-integer orders stay exact in structure.
"""

from fractions import Fraction

from mpmath import mp, mpf

from .precision import Precision, DEFAULT_PRECISION, to_mpf


def _as_half_integer(s):
    """Return 2*s as an int, rejecting anything not in (1/2)Z."""
    if isinstance(s, int):
        return 2 * s
    f = Fraction(s).limit_denominator(4)
    if Fraction(s) != f or f.denominator not in (1, 2):
        raise ValueError(f"order {s} is not a half-integer")
    return int(2 * f)


def erfc(x, p: Precision = DEFAULT_PRECISION):
    """Complementary error function 2/sqrt(pi) * int_x^inf exp(-u^2) du."""
    with p.working():
        return mp.erfc(to_mpf(x))


def inc_gamma_upper(s, x, p: Precision = DEFAULT_PRECISION):
    """Upper incomplete gamma Gamma(s, x) for s in (1/2)Z.

    Computed by the upward recurrence Gamma(s+1,x) = s Gamma(s,x) + x^s e^-x
    from the bases Gamma(1/2,x) = sqrt(pi) erfc(sqrt(x)) and
    Gamma(1,x) = e^-x; downward for s <= 0 (x > 0 required there).
    """
    twos = _as_half_integer(s)
    with p.working():
        x = to_mpf(x)
        if x < 0:
            raise ValueError("x must be >= 0")
        if x == 0:
            if twos <= 0:
                raise ValueError("Gamma(s, 0) diverges for s <= 0")
            return mp.gamma(mpf(twos) / 2)
        if twos % 2 == 0:
            base_twos, val = 2, mp.exp(-x)
        else:
            base_twos, val = 1, mp.sqrt(mp.pi) * mp.erfc(mp.sqrt(x))
        cur = base_twos
        while cur < twos:
            val = (mpf(cur) / 2) * val + x ** (mpf(cur) / 2) * mp.exp(-x)
            cur += 2
        while cur > twos:
            cur -= 2
            val = (val - x ** (mpf(cur) / 2) * mp.exp(-x)) / (mpf(cur) / 2)
        return val


def hurwitz_zeta(s: int, rho, p: Precision = DEFAULT_PRECISION):
    """Hurwitz zeta(s, rho) = sum_{n>=0} (n+rho)^-s for integer s >= 2,
    rho in (0, 1]."""
    if not isinstance(s, int) or s < 2:
        raise ValueError("hurwitz_zeta needs an integer s >= 2")
    with p.working():
        rho = to_mpf(rho)
        if rho <= 0:
            raise ValueError("rho must be positive")
        return mp.zeta(s, rho)


def digamma_cot_term(k_frac, p: Precision = DEFAULT_PRECISION):
    """psi(1 - x) - psi(x) for 0 < x < 1; equals pi*cot(pi*x)."""
    with p.working():
        x = to_mpf(k_frac)
        if not 0 < x < 1:
            raise ValueError("argument must lie strictly between 0 and 1")
        return mp.digamma(1 - x) - mp.digamma(x)


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    h0, h1 = 1, 2 * x
    if n == 0:
        return h0
    if n == 1:
        return h1
    for m in range(1, n):
        h0, h1 = h1, 2 * x * h1 - 2 * m * h0
    return h1


def bessel_i(nu, x, p: Precision = DEFAULT_PRECISION):
    """Modified Bessel I_nu(x) by the ascending series, x > 0.

    All terms are positive, so the factorial tail bound makes the truncation
    rigorous once j exceeds x/2.
    """
    if to_mpf(x) <= 0:
        raise ValueError("x must be positive")
    _as_half_integer(nu)
    with p.working():
        x = to_mpf(x)
        nu = to_mpf(nu)
        half = x / 2
        term = half ** nu / mp.gamma(nu + 1)
        total = term
        j = 0
        floor_ = p.eps
        while True:
            j += 1
            term = term * half * half / (j * (nu + j))
            total += term
            if abs(term) < abs(total) * floor_ and j > half:
                return total
            if j > 20000:
                raise RuntimeError("Bessel series failed to converge")


def bessel_j(nu, x, p: Precision = DEFAULT_PRECISION):
    """Bessel J_nu(x) by the alternating ascending series, x > 0."""
    if to_mpf(x) <= 0:
        raise ValueError("x must be positive")
    _as_half_integer(nu)
    with p.working():
        x = to_mpf(x)
        nu = to_mpf(nu)
        half = x / 2
        term = half ** nu / mp.gamma(nu + 1)
        total = term
        j = 0
        floor_ = p.eps
        while True:
            j += 1
            term = -term * half * half / (j * (nu + j))
            total += term
            if abs(term) < (abs(total) + 1) * floor_ and j > half:
                return total
            if j > 20000:
                raise RuntimeError("Bessel series failed to converge")


def kummer_u(a, b, x, p: Precision = DEFAULT_PRECISION):
    """Kummer's U(a, b, x) as a test oracle, x > 0.

    For a > 0 via the integral representation
    U(a,b,x) = int_0^inf u^(a-1) (1+u)^(b-a-1) e^(-xu) du / Gamma(a);
    for a <= 0 lifted by the contiguous recurrence
    U(a-1,b,x) = -[(b-2a-x) U(a,b,x) + a(a-b+1) U(a+1,b,x)].
    Not on any computation path of the lifts.
    """
    with p.working():
        a, b, x = to_mpf(a), to_mpf(b), to_mpf(x)
        if x <= 0:
            raise ValueError("x must be positive")
        if a > 0:
            integrand = lambda u: u ** (a - 1) * (1 + u) ** (b - a - 1) * mp.exp(-x * u)
            val = mp.quad(integrand, [0, 1, mp.inf])
            return val / mp.gamma(a)
        hi = kummer_u(a + 2, b, x, p)
        mid = kummer_u(a + 1, b, x, p)
        return -((b - 2 * (a + 1) - x) * mid + (a + 1) * (a + 1 - b + 1) * hi)
