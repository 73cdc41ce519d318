"""Numerical geodesic cycle integrals and their regularized variants.

Closed geodesics (non-square D) are integrated over one period of the Pell
automorph, infinite geodesics (square D) by the split-at-one trick, both
with panelled Gauss-Legendre quadrature in u = log y and fundamental-domain
reduction at every sample.  The level-1 dictionary constants live in
qforms.dict_sqrt_mN / dict_four_mN.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

from mpmath import mp, mpf, mpc

from .precision import Precision, DEFAULT_PRECISION, to_mpf
from .qforms import (QuadForm, GeodesicFrame, geodesic_frame, dict_sqrt_mN,
                     dict_four_mN, mat_mul, S_MAT)
from .modforms import QSeries, RaisedForm, evaluate, evaluate_raised
from .maass import HarmonicTermSeries, slash_upper_triangular

GL_DEGREE = 16
MAX_PANEL_DOUBLINGS = 9


@dataclass(frozen=True)
class CycleIntegralResult:
    value: object
    error_estimate: object
    nodes_used: int
    representative: QuadForm
    frame: GeodesicFrame


class Evaluator:
    """Uniform (weight, point-evaluation) view of the modular objects that
    can appear under a cycle integral."""

    def __init__(self, weight, fn):
        self.weight = weight
        self._fn = fn

    def __call__(self, z, p):
        return self._fn(z, p)


def wrap_evaluator(G, p: Precision = DEFAULT_PRECISION) -> Evaluator:
    if isinstance(G, Evaluator):
        return G
    if isinstance(G, QSeries):
        return Evaluator(G.weight, lambda z, pp: evaluate(G, z, pp))
    if isinstance(G, RaisedForm):
        return Evaluator(G.weight, lambda z, pp: evaluate_raised(G, z, pp))
    if isinstance(G, HarmonicTermSeries):
        return Evaluator(G.weight, lambda z, pp: G.eval_modular(z, pp))
    raise TypeError(f"cannot evaluate objects of type {type(G).__name__}")


# ---------------------------------------------------------------------------
# Gauss-Legendre panels


@lru_cache(maxsize=64)
def _gl_rule(degree: int, prec: int):
    """Nodes and weights on [-1, 1] by Newton iteration on P_degree."""
    nodes, weights = [], []
    n = degree
    for i in range(1, n // 2 + 1 + n % 2):
        x = mp.cos(mp.pi * (i - mpf(1) / 4) / (n + mpf(1) / 2))
        for _ in range(60):
            p0, p1 = mpf(1), x
            for m in range(2, n + 1):
                p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
            dp = n * (x * p1 - p0) / (x * x - 1)
            dx = p1 / dp
            x -= dx
            if abs(dx) < mpf(10) ** (-(mp.dps + 5)):
                break
        p0, p1 = mpf(1), x
        for m in range(2, n + 1):
            p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
        dp = n * (x * p1 - p0) / (x * x - 1)
        w = 2 / ((1 - x * x) * dp * dp)
        nodes.append(x)
        weights.append(w)
    full_nodes, full_weights = [], []
    for x, w in zip(nodes, weights):
        full_nodes.append(-x)
        full_weights.append(w)
    for x, w in reversed(list(zip(nodes, weights))):
        if x == 0 and n % 2 == 1 and full_nodes and full_nodes[-1] == 0:
            continue
        full_nodes.append(x)
        full_weights.append(w)
    # de-duplicate the center node for odd degrees
    if n % 2 == 1:
        seen_zero = False
        fn, fw = [], []
        for x, w in zip(full_nodes, full_weights):
            if x == 0:
                if seen_zero:
                    continue
                seen_zero = True
            fn.append(x)
            fw.append(w)
        full_nodes, full_weights = fn, fw
    return tuple(full_nodes), tuple(full_weights)


def _integrate_panels(f, a, b, panels: int, p: Precision):
    with p.working():
        nodes, weights = _gl_rule(GL_DEGREE, mp.prec)
        a, b = to_mpf(a), to_mpf(b)
        h = (b - a) / panels
        total = mpc(0)
        for j in range(panels):
            mid = a + (j + mpf(1) / 2) * h
            for x, w in zip(nodes, weights):
                total += w * f(mid + x * h / 2)
        return total * h / 2


def _integrate_doubling(f, a, b, p: Precision, panels=None, tol_rel=None):
    """Panel-doubled Gauss-Legendre; returns (value, |I_2P - I_P|, panels)."""
    with p.working():
        if tol_rel is None:
            tol_rel = mpf(10) ** (-(p.digits - 8))
        if panels is not None:
            prev = _integrate_panels(f, a, b, max(1, panels // 2), p)
            val = _integrate_panels(f, a, b, panels, p)
            return val, abs(val - prev), panels
        n = 4
        prev = _integrate_panels(f, a, b, n, p)
        for _ in range(MAX_PANEL_DOUBLINGS):
            n *= 2
            val = _integrate_panels(f, a, b, n, p)
            est = abs(val - prev)
            if est <= tol_rel * (abs(val) + 1):
                return val, est, n
            prev = val
        return prev, est, n


# ---------------------------------------------------------------------------
# oriented integrands along the frame


def _moebius(g, z):
    return (g[0][0] * z + g[0][1]) / (g[1][0] * z + g[1][1])


def _slash_along_frame(G: Evaluator, g):
    """y |-> (G|_w g)(iy) evaluated through fundamental-domain reduction."""
    w = G.weight

    def f(y, p):
        z = mpc(0, 1) * y
        jf = g[1][0] * z + g[1][1]
        return jf ** (-w) * G(_moebius(g, z), p)

    return f


def _prefactor(kappa: int, D: int, p: Precision):
    """(-2 sqrt(|m| N) i)^kappa * i under the level-1 dictionary."""
    with p.working():
        base = 2 * dict_sqrt_mN(D, p)
        minus_i_pow = (mpc(0, -1)) ** (kappa % 4)
        return base ** kappa * minus_i_pow * mpc(0, 1)


def cycle_integral_closed(G, Q: QuadForm, p: Precision = DEFAULT_PRECISION,
                          panels: int | None = None) -> CycleIntegralResult:
    """Cycle integral of a weight-(2 kappa + 2) object over the closed
    geodesic of a non-square positive discriminant:

        C(G, Q) = (-2 sqrt(D) i)^kappa i  int_1^{eps^2} G_g(iy) y^kappa dy

    in the level-1 dictionary normalization.  The value is independent of
    the class representative and of the choice of frame.
    """
    D = Q.disc
    if D <= 0 or isqrt(D) ** 2 == D:
        raise ValueError("closed cycle integrals need non-square D > 0")
    G = wrap_evaluator(G, p)
    if G.weight % 2 != 0:
        raise ValueError("integrand weight must be even")
    kappa = (G.weight - 2) // 2
    with p.working():
        frame = geodesic_frame(Q, p)
        Gg = _slash_along_frame(G, frame.g)
        U = 2 * mp.log(frame.epsilon)

        def integrand(u):
            y = mp.exp(u)
            return Gg(y, p) * mp.exp((kappa + 1) * u)

        raw, est, n = _integrate_doubling(integrand, 0, U, p, panels=panels)
        pref = _prefactor(kappa, D, p)
        return CycleIntegralResult(pref * raw, abs(pref) * est,
                                   n * GL_DEGREE, Q, frame)


def _upper_cutoff(f, p: Precision, start=mpf(3)):
    """Smallest u with |f| below the precision floor from u on (probed)."""
    with p.working():
        floor = p.eps
        u = to_mpf(start)
        for _ in range(60):
            if all(abs(f(u + du)) < floor for du in (0, mpf(1) / 3, mpf(2) / 3)):
                return u + 1
            u += 1
        raise RuntimeError("integrand does not decay; non-cuspidal input?")


def cycle_integral_infinite(G, Q: QuadForm, p: Precision = DEFAULT_PRECISION,
                            split_at=1, panels: int | None = None) -> CycleIntegralResult:
    """Cycle integral over the infinite geodesic of a square discriminant,
    for cuspidal integrands, via the split

        int_0^inf = int_a^inf G_g + (-1)^(kappa+1) int_{1/a}^inf G_gS.
    """
    D = Q.disc
    n0 = isqrt(D)
    if D <= 0 or n0 * n0 != D:
        raise ValueError("infinite cycle integrals need square D > 0")
    if isinstance(G, QSeries) and not G.is_cuspidal:
        raise ValueError("infinite geodesics require a cuspidal integrand")
    G = wrap_evaluator(G, p)
    kappa = (G.weight - 2) // 2
    with p.working():
        frame = geodesic_frame(Q, p)
        gS = mat_mul(frame.g, S_MAT)
        Gg = _slash_along_frame(G, frame.g)
        GgS = _slash_along_frame(G, gS)
        a = to_mpf(split_at)
        sign = (-1) ** (kappa + 1)

        def make_integrand(side):
            return lambda u: side(mp.exp(u), p) * mp.exp((kappa + 1) * u)

        f1 = make_integrand(Gg)
        f2 = make_integrand(GgS)
        u1, u2 = mp.log(a), -mp.log(a)
        hi1 = _upper_cutoff(f1, p, start=u1 + 3)
        hi2 = _upper_cutoff(f2, p, start=u2 + 3)
        v1, e1, n1 = _integrate_doubling(f1, u1, hi1, p, panels=panels)
        v2, e2, n2 = _integrate_doubling(f2, u2, hi2, p, panels=panels)
        pref = _prefactor(kappa, D, p)
        value = pref * (v1 + sign * v2)
        return CycleIntegralResult(value, abs(pref) * (e1 + e2),
                                   (n1 + n2) * GL_DEGREE, Q, frame)


# ---------------------------------------------------------------------------
# regularized cycle integrals along infinite geodesics (weight -2k inputs)


def _rational_frame(Q: QuadForm):
    """The geodesic frame of a square-discriminant form with exact rational
    entries (endpoints of square-disc geodesics are rational)."""
    D = Q.disc
    n = isqrt(D)
    if n * n != D or D <= 0:
        raise ValueError("rational frames exist for square D > 0 only")
    a, b, c = Q.a, Q.b, Q.c
    if a != 0:
        w_start = Fraction(-b + n, 2 * a)
        w_end = Fraction(-b - n, 2 * a)
        det = w_end - w_start
        return ((w_end, w_start / det), (Fraction(1), 1 / det))
    finite = Fraction(-c, b)
    if b > 0:
        return ((Fraction(1), finite), (Fraction(0), Fraction(1)))
    return ((finite, Fraction(-1)), (Fraction(1), Fraction(0)))


def _cusp_normalizer(P):
    """gamma in SL2(Z) with gamma(P) = infinity for rational or infinite P."""
    if P is None:
        return ((1, 0), (0, 1))
    frac = Fraction(P)
    q, pnum = frac.denominator, frac.numerator
    g, x, y = _xgcd(pnum, q)
    assert g == 1, "cusp must be in lowest terms"
    return ((x, y), (-q, pnum))


def _xgcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def slash_rational(T: HarmonicTermSeries, g) -> HarmonicTermSeries:
    """T |_w g for a rational unimodular g: decomposed as gamma^-1 h with
    gamma in SL2(Z) (dropped by level-1 invariance) and h upper triangular."""
    g = tuple(tuple(Fraction(x) for x in row) for row in g)
    if g[0][0] * g[1][1] - g[0][1] * g[1][0] != 1:
        raise ValueError("frame must have determinant 1")
    target = None if g[1][0] == 0 else Fraction(g[0][0], g[1][0])
    gam = _cusp_normalizer(target)
    h = mat_mul(gam, g)
    assert h[1][0] == 0, "normalizer failed to send the cusp to infinity"
    alpha = Fraction(h[0][0])
    beta = Fraction(h[0][1]) / alpha if alpha != 0 else Fraction(0)
    # h = [[alpha, alpha beta], [0, 1/alpha]]
    assert alpha * h[1][1] == 1
    return slash_upper_triangular(T, alpha, beta)


def c_constant(ell: int, j: int, k: int) -> int:
    """C_{ell,j} = 2 (-1)^(ell+j) prod_{t=ell+1}^{j} (2t)(2k-2t+1)."""
    prod = 1
    for t in range(ell + 1, j + 1):
        prod *= (2 * t) * (2 * k - 2 * t + 1)
    return 2 * (-1) ** (ell + j) * prod


def regularized_cycle_integral(F, j: int, Q: QuadForm,
                               p: Precision = DEFAULT_PRECISION,
                               boundary_route: str = "minus"):
    """Regularized cycle integral of R^(2j+1) F along an infinite geodesic:

        (-2 sqrt(D) i)^(2j-k) i [ sum_l C_{l,j} R^(2l)F-_g(i)
                                  + (-1)^(k+1) sum_l C_{l,j} R^(2l)F-_gS(i)
                                  + int_1^inf R^(2j+1)F-_g(iy) y^(2j-k) dy
                                  + (-1)^(k+1) (same along gS) ]

    ``boundary_route='plus'`` evaluates the boundary sums through the
    identity R^(2l)F-_g(i) + (-1)^(k+1) R^(2l)F-_gS(i)
            = -R^(2l)F+_g(i) - (-1)^(k+1) R^(2l)F+_gS(i).
    """
    from .inputs import HarmonicInput  # local import to avoid a cycle
    if not isinstance(F, HarmonicInput):
        raise TypeError("regularized cycle integrals take a HarmonicInput")
    D = Q.disc
    if isqrt(D) ** 2 != D or D <= 0:
        raise ValueError("regularized integrals are for square discriminants")
    k = F.k
    with p.working():
        g = _rational_frame(Q)
        gS = mat_mul(g, S_MAT)
        T = F.term_series(p)
        sides = []
        for mat, sgn in ((g, 1), (gS, (-1) ** (k + 1))):
            slashed = slash_rational(T, mat)
            sides.append((slashed, sgn))

        total = mpc(0)
        zi = mpc(0, 1)
        for slashed, sgn in sides:
            minus = slashed.nonholomorphic_part()
            if boundary_route == "minus":
                for ell in range(j + 1):
                    total += sgn * c_constant(ell, j, k) \
                        * minus.raised(2 * ell).eval_raw(zi, p)
            # the y-integral of R^(2j+1) F^- along this side
            raised = minus.raised(2 * j + 1)

            def f(u, raised=raised):
                y = mp.exp(u)
                return raised.eval_raw(mpc(0, 1) * y, p) * mp.exp((2 * j - k + 1) * u)

            if minus.modes:
                hi = _upper_cutoff(f, p, start=mpf(3))
                v, _, _ = _integrate_doubling(f, 0, hi, p)
                total += sgn * v
        if boundary_route == "plus":
            for ell in range(j + 1):
                acc = mpc(0)
                for slashed, sgn in sides:
                    plus = slashed.holomorphic_part()
                    acc += sgn * plus.raised(2 * ell).eval_raw(zi, p)
                total -= c_constant(ell, j, k) * acc
        pref = _prefactor(2 * j - k, D, p)
        return pref * total


def bfk_regularized_cycle_integral(F, Q: QuadForm,
                                   p: Precision = DEFAULT_PRECISION):
    """The analytically-continued regularization of C(R_0 F, Q) for weakly
    holomorphic weight-0 inputs (k = j = 0):

        [i int_1^inf R_0 F_g(iy) e^(-ys) dy]|_{s=0} - (same along gS)
        = (-2i F_g(i) + 2i a+_g(0)) - (-2i F_gS(i) + 2i a+_gS(0)).
    """
    from .inputs import HarmonicInput
    if not isinstance(F, HarmonicInput):
        raise TypeError("expected a HarmonicInput")
    if F.k != 0 or not F.is_weakly_holomorphic:
        raise ValueError("the BFK comparison is defined for weakly "
                         "holomorphic weight-0 inputs")
    D = Q.disc
    if isqrt(D) ** 2 != D or D <= 0:
        raise ValueError("square discriminant required")
    with p.working():
        g = _rational_frame(Q)
        gS = mat_mul(g, S_MAT)
        T = F.term_series(p)
        zi = mpc(0, 1)
        total = mpc(0)
        for mat, sgn in ((g, 1), (gS, -1)):
            slashed = slash_rational(T, mat)
            a0 = slashed.constant_coefficient()
            total += sgn * (-2j * slashed.eval_raw(zi, p) + 2j * a0)
        return total


def cycle_identity_check(F, Q: QuadForm, j_list,
                         p: Precision = DEFAULT_PRECISION) -> dict:
    """Check C(R^(2j+1)F, Q) = (4|m|N)^-(k-j) j!(k-j)!(2k)!/(k!(2k-2j)!)
    conj(C(xi F, Q)) on a closed geodesic, plus the pairwise ratios."""
    from .inputs import HarmonicInput
    if not isinstance(F, HarmonicInput):
        raise TypeError("expected a HarmonicInput")
    k = F.k
    D = Q.disc
    with p.working():
        lam, xi_series = F.xi_image(p)
        xi_cycle = None
        if xi_series is not None:
            res = cycle_integral_closed(xi_series, Q, p)
            xi_cycle = lam * res.value
        report = {"k": k, "disc": D, "j": {}, "ratios": {}}
        lhs = {}
        for j in j_list:
            R = F.raised_evaluator(2 * j + 1, p)
            res = cycle_integral_closed(R, Q, p)
            lhs[j] = res.value
            entry = {"lhs": res.value, "quad_error": res.error_estimate}
            if xi_cycle is not None:
                const = (mpf(dict_four_mN(D)) ** (-(k - j))
                         * mp.factorial(j) * mp.factorial(k - j)
                         * mp.factorial(2 * k)
                         / (mp.factorial(k) * mp.factorial(2 * k - 2 * j)))
                rhs = const * mp.conj(xi_cycle)
                entry["rhs"] = rhs
                denom = max(abs(res.value), abs(rhs), mpf(10) ** (-p.digits))
                entry["abs_dev"] = abs(res.value - rhs)
                entry["rel_dev"] = abs(res.value - rhs) / denom
            report["j"][j] = entry
        for j1 in j_list:
            for j2 in j_list:
                if j1 >= j2:
                    continue
                expected = mpf(dict_four_mN(D)) ** (j1 - j2) \
                    * (mp.factorial(j1) * mp.factorial(k - j1)
                       * mp.factorial(2 * k - 2 * j2)) \
                    / (mp.factorial(j2) * mp.factorial(k - j2)
                       * mp.factorial(2 * k - 2 * j1))
                measured = lhs[j1] / lhs[j2]
                report["ratios"][(j1, j2)] = {
                    "measured": measured,
                    "expected": expected,
                    "rel_dev": abs(measured - expected) / abs(expected),
                }
        return report
