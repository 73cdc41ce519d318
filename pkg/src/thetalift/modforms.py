"""q-series engine for level-1 modular objects.

Exact-rational truncated Laurent series (E4, E6, Delta, j, J and ratios),
point evaluation with fundamental-domain reduction and the weight-w
automorphy factor, iterated Maass raising on holomorphic inputs, and the
completed-L-function pipeline for cusp forms.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from mpmath import mp, mpf, mpc

from .precision import Precision, DEFAULT_PRECISION, to_mpf
from .qforms import IDENTITY, S_MAT, mat_mul, translation
from .special import inc_gamma_upper


@dataclass(frozen=True)
class QSeries:
    """Truncated Laurent series sum_{n>=n0} c(n) q^n + O(q^order) with a
    declared modular weight."""

    weight: int
    n0: int
    coeffs: tuple  # exact Fractions (or ints); index i holds c(n0 + i)
    order: int     # exponent of the O(q^order) truncation

    def __post_init__(self):
        if self.order != self.n0 + len(self.coeffs):
            raise ValueError("order must equal n0 + len(coeffs)")

    def coefficient(self, n: int) -> Fraction:
        if n >= self.order:
            raise ValueError(f"coefficient q^{n} beyond truncation O(q^{self.order})")
        if n < self.n0:
            return Fraction(0)
        return Fraction(self.coeffs[n - self.n0])

    @property
    def is_cuspidal(self) -> bool:
        return self.n0 >= 1

    def trimmed(self) -> "QSeries":
        cs = list(self.coeffs)
        n0 = self.n0
        while cs and cs[0] == 0:
            cs.pop(0)
            n0 += 1
        if not cs:
            return QSeries(self.weight, self.order, (), self.order)
        return QSeries(self.weight, n0, tuple(cs), self.order)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = qseries_constant(other, self.order)
        n0 = min(self.n0, other.n0)
        order = min(self.order, other.order)
        cs = [Fraction(0)] * (order - n0)
        for src in (self, other):
            for i, c in enumerate(src.coeffs):
                n = src.n0 + i
                if n < order:
                    cs[n - n0] += Fraction(c)
        return QSeries(self.weight, n0, tuple(cs), order).trimmed()

    def __sub__(self, other):
        return self + (other * -1)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QSeries(
                self.weight, self.n0,
                tuple(Fraction(c) * other for c in self.coeffs), self.order)
        n0 = self.n0 + other.n0
        order = min(self.order + other.n0, other.order + self.n0)
        cs = [Fraction(0)] * (order - n0)
        for i, ci in enumerate(self.coeffs):
            if ci == 0:
                continue
            ni = self.n0 + i
            for j, cj in enumerate(other.coeffs):
                n = ni + other.n0 + j
                if n >= order:
                    break
                cs[n - n0] += Fraction(ci) * Fraction(cj)
        return QSeries(self.weight + other.weight, n0, tuple(cs), order)

    __rmul__ = __mul__

    def inverse(self) -> "QSeries":
        A = self.trimmed()
        if not A.coeffs or A.coeffs[0] == 0:
            raise ZeroDivisionError("series with zero leading coefficient")
        length = len(A.coeffs)
        lead = Fraction(A.coeffs[0])
        inv = [Fraction(0)] * length
        inv[0] = 1 / lead
        for n in range(1, length):
            acc = Fraction(0)
            for k in range(1, n + 1):
                if k < len(A.coeffs):
                    acc += Fraction(A.coeffs[k]) * inv[n - k]
            inv[n] = -acc / lead
        n0 = -A.n0
        return QSeries(-self.weight, n0, tuple(inv), n0 + length)

    def __truediv__(self, other):
        return self * other.inverse()

    def pow(self, e: int) -> "QSeries":
        if e < 0:
            return self.inverse().pow(-e)
        result = qseries_constant(1, len(self.coeffs))
        for _ in range(e):
            result = result * self
        return result

    def qderivative(self) -> "QSeries":
        """q d/dq: multiplies c(n) by n; used for 2i d/dz = -4 pi (q d/dq)."""
        cs = tuple(Fraction(c) * (self.n0 + i) for i, c in enumerate(self.coeffs))
        return QSeries(self.weight + 2, self.n0, cs, self.order)

    def to_json(self):
        return {
            "weight": self.weight,
            "n0": self.n0,
            "coeffs": [str(Fraction(c)) for c in self.coeffs],
        }


def qseries_constant(value, order: int, weight: int = 0) -> QSeries:
    if order < 1:
        raise ValueError("order must be >= 1 for a constant series")
    cs = [Fraction(0)] * order
    cs[0] = Fraction(value)
    return QSeries(weight, 0, tuple(cs), order)


def _sigma(k: int, n: int) -> int:
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d ** k
            e = n // d
            if e != d:
                total += e ** k
        d += 1
    return total


@lru_cache(maxsize=None)
def standard_series(name: str, terms: int) -> QSeries:
    """Built-in level-1 series to `terms` relative precision: E4, E6, Delta,
    j, J = j - 744."""
    if terms < 1:
        raise ValueError("need at least one term")
    if name == "E4":
        cs = [Fraction(1)] + [Fraction(240 * _sigma(3, n)) for n in range(1, terms)]
        return QSeries(4, 0, tuple(cs), terms)
    if name == "E6":
        cs = [Fraction(1)] + [Fraction(-504 * _sigma(5, n)) for n in range(1, terms)]
        return QSeries(6, 0, tuple(cs), terms)
    if name == "Delta":
        e4 = standard_series("E4", terms + 1)
        e6 = standard_series("E6", terms + 1)
        num = e4.pow(3) - e6.pow(2)
        delta = num * Fraction(1, 1728)
        delta = delta.trimmed()
        return QSeries(12, delta.n0, delta.coeffs[:terms], delta.n0 + min(terms, len(delta.coeffs)))
    if name == "j":
        e4 = standard_series("E4", terms + 2)
        delta = standard_series("Delta", terms + 2)
        j = e4.pow(3) / delta
        return QSeries(0, j.n0, j.coeffs[:terms], j.n0 + min(terms, len(j.coeffs)))
    if name == "J":
        return standard_series("j", terms) + (-744)
    raise ValueError(f"unknown series {name!r}")


def qseries_combine(op: str, A: QSeries, B) -> QSeries:
    """Combine series: op in {mul, div, pow}; weights add/subtract/scale."""
    if op == "mul":
        return A * B
    if op == "div":
        return A / B
    if op == "pow":
        return A.pow(int(B))
    raise ValueError(f"unknown op {op!r}")


_EXPR_TOKEN = re.compile(r"(E4|E6|Delta|J|j)(?:\^(-?\d+))?")


def series_from_expr(expr: str, terms: int) -> QSeries:
    """Parse monomial expressions like 'E4^2E6/Delta^2' into a QSeries."""
    parts = expr.replace(" ", "").split("/")
    if len(parts) > 2 or not parts[0]:
        raise ValueError(f"cannot parse series expression {expr!r}")

    def parse_product(s):
        factors, pos = [], 0
        while pos < len(s):
            m = _EXPR_TOKEN.match(s, pos)
            if not m:
                raise ValueError(f"cannot parse series expression {expr!r}")
            factors.append((m.group(1), int(m.group(2) or 1)))
            pos = m.end()
        return factors

    margin = terms + 8
    result = None
    for name, e in parse_product(parts[0]):
        f = standard_series(name, margin).pow(e)
        result = f if result is None else result * f
    if len(parts) == 2:
        for name, e in parse_product(parts[1]):
            result = result / standard_series(name, margin).pow(e)
    return result


# ---------------------------------------------------------------------------
# fundamental-domain reduction and evaluation


@dataclass(frozen=True)
class FundamentalReduction:
    z: object
    gamma: tuple  # integer matrix with gamma . z = z_red
    z_red: object


def fundamental_reduce(z, p: Precision = DEFAULT_PRECISION) -> FundamentalReduction:
    """Reduce z to |Re| <= 1/2, |z| >= 1 tracking the exact SL2(Z) matrix."""
    with p.working():
        z = mpc(z)
        if z.imag <= 0:
            raise ValueError("point must lie in the upper half-plane")
        z0 = z
        g = IDENTITY
        for _ in range(10000):
            t = int(mp.nint(z.real))
            if t != 0:
                z = z - t
                # moebius action: translation by -t is T^{-t}
                g = mat_mul(translation(-t), g)
            if abs(z) < 1 - mpf(10) ** (-p.digits - 5):
                z = -1 / z
                g = mat_mul(S_MAT, g)
            else:
                return FundamentalReduction(z0, g, z)
        raise RuntimeError("fundamental-domain reduction did not terminate")


def qexp_terms_needed(y0, target_digits: int) -> int:
    """Smallest truncation P with e^(4 pi sqrt(P)) e^(-2 pi P y0) < 10^-T.

    Heuristic coefficient bound |c(n)| <= C e^(4 pi sqrt(n)) for weakly
    holomorphic level-1 forms.
    """
    with mp.workdps(30):
        y0 = to_mpf(y0)
        T = to_mpf(target_digits) * mp.log(10)
        P = 8
        while 4 * mp.pi * mp.sqrt(P) - 2 * mp.pi * P * y0 > -T:
            P *= 2
            if P > 10 ** 7:
                raise ValueError("truncation requirement out of reach at this height")
        # tighten by bisection
        lo, hi = P // 2, P
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if 4 * mp.pi * mp.sqrt(mid) - 2 * mp.pi * mid * y0 > -T:
                lo = mid
            else:
                hi = mid
        return hi


def _series_sum(F: QSeries, z, p: Precision):
    q = mp.exp(2j * mp.pi * z)
    total = mpc(0)
    qn = q ** F.n0
    for c in F.coeffs:
        if c != 0:
            total += to_mpf(c) * qn
        qn *= q
    return total


def evaluate(F: QSeries, z, p: Precision = DEFAULT_PRECISION):
    """Evaluate a modular q-series at z, reducing to the fundamental domain
    and applying the weight-w automorphy factor when Im z < 1/2."""
    with p.working():
        z = mpc(z)
        if z.imag <= 0:
            raise ValueError("point must lie in the upper half-plane")
        if z.imag < mpf(1) / 2:
            red = fundamental_reduce(z, p)
            (a, b), (c, d) = red.gamma
            jfac = c * z + d
            return jfac ** (-F.weight) * _series_sum(F, red.z_red, p)
        return _series_sum(F, z, p)


# ---------------------------------------------------------------------------
# iterated Maass raising on holomorphic inputs


@dataclass(frozen=True)
class RaisedForm:
    """R_w^n F stored as (-4 pi)^n * sum_r (4 pi y)^(-r) g_r(z) with exact
    rational component series g_r.

    The rational normalization keeps D^(2k+1) F = -(4 pi)^(-2k-1) R^(2k+1) F
    a scalar multiple instead of a re-derivation.
    """

    base_weight: int
    n: int
    components: tuple  # QSeries g_0 ... g_n

    @property
    def weight(self) -> int:
        return self.base_weight + 2 * self.n


def raise_form(F: QSeries, n: int) -> RaisedForm:
    """Iterated Maass raising R_{w+2(n-1)} o ... o R_w on a q-series.

    Component recurrence per step at current weight kappa:
    g_r -> (q d/dq) g_r + (r - 1 - kappa) g_{r-1}, all exact rationals.
    """
    if n < 1:
        raise ValueError("raise count must be >= 1")
    comps = [F]
    w = F.weight
    for step in range(n):
        kappa = w + 2 * step
        new = []
        for r in range(len(comps) + 1):
            term = None
            if r < len(comps):
                term = comps[r].qderivative()
            if r >= 1:
                carry = comps[r - 1] * Fraction(r - 1 - kappa)
                carry = QSeries(carry.weight + 2, carry.n0, carry.coeffs, carry.order)
                term = carry if term is None else term + carry
            new.append(term)
        comps = new
    return RaisedForm(w, n, tuple(comps))


def evaluate_raised(R: RaisedForm, z, p: Precision = DEFAULT_PRECISION):
    """Evaluate a RaisedForm; the full object is modular of weight w + 2n,
    so low points are reduced with that weight even though the individual
    components are not modular."""
    with p.working():
        z = mpc(z)
        W = R.weight
        if z.imag < mpf(1) / 2:
            red = fundamental_reduce(z, p)
            (a, b), (c, d) = red.gamma
            jfac = (c * z + d) ** (-W)
            zz = red.z_red
        else:
            jfac = mpf(1)
            zz = z
        four_pi_y = 4 * mp.pi * zz.imag
        total = mpc(0)
        for r, g in enumerate(R.components):
            total += four_pi_y ** (-r) * _series_sum(g, zz, p)
        return jfac * (-4 * mp.pi) ** R.n * total


# ---------------------------------------------------------------------------
# completed L-function for level-1 cusp forms


def l_value(G: QSeries, s: int, p: Precision = DEFAULT_PRECISION):
    """L(G, s) for a level-1 cusp form by the incomplete-gamma-accelerated
    Dirichlet series

    Lambda(s) = sum_n a(n) [ (2 pi n)^-s Gamma(s, 2 pi n)
                             + eps (2 pi n)^(s-w) Gamma(w-s, 2 pi n) ],
    eps = (-1)^(w/2), L(s) = (2 pi)^s / Gamma(s) * Lambda(s).
    """
    if not G.is_cuspidal:
        raise ValueError("L-value pipeline requires a cusp form")
    w = G.weight
    eps = (-1) ** (w // 2)
    with p.working():
        twopi = 2 * mp.pi
        cutoff = (p.digits + 20) * mp.log(10)
        lam = mpf(0)
        reached = False
        for i, c in enumerate(G.coeffs):
            n = G.n0 + i
            x = twopi * n
            if c != 0:
                term = x ** (-s) * inc_gamma_upper(s, x, p)
                term += eps * x ** (s - w) * inc_gamma_upper(w - s, x, p)
                lam += to_mpf(c) * term
            if x > cutoff:
                reached = True
                break
        if not reached:
            raise ValueError(
                f"need q-expansion past n = {int(cutoff / twopi) + 1} for this precision")
        return twopi ** s / mp.gamma(s) * lam
