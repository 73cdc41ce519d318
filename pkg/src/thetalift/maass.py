"""Maass-Poincare series: genuinely harmonic inputs of weight -2k, k >= 1.

The holomorphic-part coefficients are Kloosterman/I-Bessel sums; the
non-holomorphic part is pinned inside S_{2k+2} by a single J-Bessel sum
(for 2k+2 = 12 that space is spanned by Delta, so one scalar determines
everything).  A slowly-converging direct coset-sum evaluator doubles as the
reference oracle for all normalizations.

Coefficient formulas in this seed normalization (principal part exactly
q^-m), frozen against the coset-sum oracle:

    a+(n) = -2 pi (m/n)^((2k+1)/2) sum_c S(-m,n;c)/c I_{2k+1}(4 pi sqrt(mn)/c)
    a+(0) = -(2 pi)^(2k+2) m^(2k+1) / (2k+1)! sum_c S(-m,0;c) c^-(2k+2)
    a-(-n) = -[delta_{n,m}
              + 2 pi (m/n)^((2k+1)/2) sum_c S(-m,-n;c)/c J_{2k+1}(...)] / (2k)!
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd

from mpmath import mp, mpf, mpc

from .precision import Precision, DEFAULT_PRECISION, to_mpf
from .qforms import mat_mul
from .modforms import standard_series, fundamental_reduce, qexp_terms_needed
from .special import bessel_i, bessel_j, inc_gamma_upper

DEFAULT_C_MAX = 600


class ConvergenceError(RuntimeError):
    """Raised when a Kloosterman c-sum fails its stabilization criterion."""


@lru_cache(maxsize=None)
def _coprime_pairs(c: int):
    return tuple((d, pow(d, -1, c)) for d in range(c) if gcd(d, c) == 1)


@lru_cache(maxsize=4096)
def _cos_table(c: int, prec: int):
    """cos(2 pi r / c) for r = 0..c-1 at the current binary precision."""
    return tuple(mp.cospi(mpf(2 * r) / c) for r in range(c))


def kloosterman(a: int, b: int, c: int, p: Precision = DEFAULT_PRECISION):
    """Kloosterman sum S(a,b;c) = sum_{d mod c, (d,c)=1} e((a d + b dbar)/c);
    always real."""
    if c < 1:
        raise ValueError("modulus must be positive")
    if c == 1:
        return mpf(1)
    with p.working():
        table = _cos_table(c, mp.prec)
        total = mpf(0)
        for d, dbar in _coprime_pairs(c):
            total += table[(a * d + b * dbar) % c]
        return total


@dataclass(frozen=True)
class PoincareForm:
    """Harmonic Maass-Poincare series of weight -2k with principal part q^-m.

    hol_coeffs maps n >= 1 to a+(n); a0 is a+(0); nonhol_scale is lambda with
    xi_{-2k} F = lambda * (normalized cusp form), zero when S_{2k+2} = 0.
    """

    k: int
    m: int
    digits: int
    c_max: int
    hol_coeffs: dict
    a0: object
    nonhol_scale: object
    diagnostics: dict = field(default_factory=dict)

    @property
    def weight(self) -> int:
        return -2 * self.k

    def principal_coefficients(self):
        return {-self.m: Fraction(1)}

    def nonhol_coefficient(self, n: int, p: Precision):
        """a-(-n), n > 0, read off lambda and the normalized cusp form."""
        lam = self.nonhol_scale
        if lam == 0:
            return mpf(0)
        tau = standard_series("Delta", n + 1).coefficient(n)
        with p.working():
            return -lam * to_mpf(tau) * (4 * mp.pi * n) ** (-(2 * self.k + 1))

    def to_json(self):
        coeffs = {"0": mp.nstr(self.a0, self.digits)}
        for n in sorted(self.hol_coeffs):
            coeffs[str(n)] = mp.nstr(self.hol_coeffs[n], self.digits)
        return {
            "k": self.k,
            "m": self.m,
            "digits": self.digits,
            "c_max": self.c_max,
            "coeffs": coeffs,
            "nonhol_scale": mp.nstr(self.nonhol_scale, self.digits),
        }

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    @staticmethod
    def load(path):
        with open(path) as fh:
            data = json.load(fh)
        digits = data["digits"]
        with mp.workdps(digits + 15):
            hol = {int(n): mpf(v) for n, v in data["coeffs"].items() if int(n) > 0}
            a0 = mpf(data["coeffs"]["0"])
            lam = mpf(data["nonhol_scale"])
        return PoincareForm(data["k"], data["m"], digits, data["c_max"],
                            hol, a0, lam, {"loaded": True})


def _csum(values_by_c, c_max, tol, what):
    """Sum a c-indexed family, checking last-decade stabilization."""
    total = mpf(0)
    tail_start = max(1, int(c_max * 0.9))
    lo = hi = None
    for c in range(1, c_max + 1):
        total += values_by_c(c)
        if c >= tail_start:
            lo = total if lo is None else min(lo, total)
            hi = total if hi is None else max(hi, total)
    spread = (hi - lo) / (abs(total) + 1)
    if spread > tol:
        raise ConvergenceError(
            f"{what}: c-sum spread {mp.nstr(spread, 3)} above tolerance "
            f"{mp.nstr(tol, 3)} at c_max={c_max}")
    return total, spread


def build_poincare(k: int, m: int, n_range: int = 48,
                   c_max: int = DEFAULT_C_MAX,
                   p: Precision = DEFAULT_PRECISION,
                   coeff_tol=None) -> PoincareForm:
    """Construct the weight -2k, index m Maass-Poincare form at level 1.

    Reproducible bit-for-bit for fixed (k, m, n_range, c_max, digits).
    ``coeff_tol`` is the relative stabilization demanded of each c-sum
    (default 1e-12; the c-tails decay like c^-(2k+1), so the achieved spread
    recorded in the diagnostics is typically far smaller).
    """
    if k < 1:
        raise ValueError("only k >= 1 inputs are built (weight <= -2)")
    if m < 1:
        raise ValueError("principal-part index m must be positive")
    dim_cusp = _dim_cusp_forms(2 * k + 2)
    if dim_cusp > 1:
        raise NotImplementedError(
            f"dim S_{2*k+2} = {dim_cusp} > 1: xi-image identification is only "
            "wired for the one-dimensional case 2k+2 = 12")
    with p.working():
        tol = mpf("1e-12") if coeff_tol is None else to_mpf(coeff_tol)
        order = 2 * k + 1
        spreads = {}
        hol = {}
        for n in range(1, n_range + 1):
            def term(c, n=n):
                x = 4 * mp.pi * mp.sqrt(mpf(m * n)) / c
                return kloosterman(-m, n, c, p) / c * bessel_i(order, x, p)
            s, spread = _csum(term, c_max, tol, f"a+({n})")
            hol[n] = -2 * mp.pi * (mpf(m) / n) ** (mpf(order) / 2) * s
            spreads[n] = spread
        s0, spread0 = _csum(
            lambda c: kloosterman(-m, 0, c, p) / mpf(c) ** (2 * k + 2),
            c_max, tol, "a+(0)")
        a0 = -(2 * mp.pi) ** (2 * k + 2) * mpf(m) ** order / mp.factorial(order) * s0

        if dim_cusp == 0:
            lam = mpf(0)
        else:
            def term_j(c):
                x = 4 * mp.pi * mp.sqrt(mpf(m)) / c
                return kloosterman(-m, -1, c, p) / c * bessel_j(order, x, p)
            sj, _ = _csum(term_j, c_max, tol, "a-(-1)")
            a_minus_1 = -(int(m == 1) + 2 * mp.pi * mpf(m) ** (mpf(order) / 2) * sj) \
                / mp.factorial(2 * k)
            # xi F = -conj(a-(-n)) (4 pi n)^(2k+1) q^n + ... = lambda * Delta
            lam = -a_minus_1 * (4 * mp.pi) ** order

        diag = {"spread_max": max(spreads.values()) if spreads else mpf(0),
                "spread_a0": spread0}
        return PoincareForm(k, m, p.digits, c_max, hol, a0, lam, diag)


def _dim_cusp_forms(weight: int) -> int:
    """dim S_weight for level 1 (even weight >= 0)."""
    if weight < 12 or weight % 2 == 1:
        return 0
    r = weight % 12
    return weight // 12 - 1 if r == 2 else weight // 12


# ---------------------------------------------------------------------------
# the harmonic term algebra


@dataclass(frozen=True)
class Atom:
    """coef * y^p * e^(2 pi b y) * [Gamma(s, 4 pi g y)] inside one Fourier mode."""

    coef: object
    p: int
    b: Fraction
    gamma_s: int | None = None
    gamma_g: Fraction | None = None


@dataclass(frozen=True)
class HarmonicTermSeries:
    """Finite Fourier series sum_f e^(2 pi i f x) * (atom profile in y),
    closed under Maass raising.  Frequencies are exact rationals so slashed
    (cusp-normalized) expansions stay in the algebra."""

    weight: int
    modes: tuple  # ordered tuple of (freq: Fraction, atoms: tuple[Atom])

    def raised(self, n: int) -> "HarmonicTermSeries":
        out = self
        for step in range(n):
            out = out._raise_once()
        return out

    def _raise_once(self) -> "HarmonicTermSeries":
        kappa = self.weight
        new_modes = []
        for freq, atoms in self.modes:
            acc = {}

            def add(coef, pp, bb, gs, gg):
                key = (pp, bb, gs, gg)
                acc[key] = acc.get(key, mpc(0)) + coef

            for at in atoms:
                # d/dy of the profile
                if at.p != 0:
                    add(at.coef * at.p, at.p - 1, at.b, at.gamma_s, at.gamma_g)
                add(at.coef * 2 * mp.pi * to_mpf(at.b), at.p, at.b,
                    at.gamma_s, at.gamma_g)
                if at.gamma_s is not None:
                    scale = 4 * mp.pi * to_mpf(at.gamma_g)
                    add(-at.coef * scale ** at.gamma_s,
                        at.p + at.gamma_s - 1, at.b - 2 * at.gamma_g, None, None)
                # -2 pi f * profile  (from 2i d/dz acting on e^(2 pi i f x))
                add(-2 * mp.pi * to_mpf(freq) * at.coef, at.p, at.b,
                    at.gamma_s, at.gamma_g)
                # kappa / y * profile
                add(at.coef * kappa, at.p - 1, at.b, at.gamma_s, at.gamma_g)
            new_atoms = tuple(
                Atom(v, k[0], k[1], k[2], k[3]) for k, v in acc.items() if v != 0)
            new_modes.append((freq, new_atoms))
        return HarmonicTermSeries(kappa + 2, tuple(new_modes))

    def filter_atoms(self, keep) -> "HarmonicTermSeries":
        modes = []
        for freq, atoms in self.modes:
            kept = tuple(a for a in atoms if keep(a))
            if kept:
                modes.append((freq, kept))
        return HarmonicTermSeries(self.weight, tuple(modes))

    def nonholomorphic_part(self) -> "HarmonicTermSeries":
        return self.filter_atoms(lambda a: a.gamma_s is not None)

    def holomorphic_part(self) -> "HarmonicTermSeries":
        return self.filter_atoms(lambda a: a.gamma_s is None)

    def constant_coefficient(self):
        """Coefficient of the frequency-0, pure-constant atom (p = b = 0)."""
        for freq, atoms in self.modes:
            if freq == 0:
                for a in atoms:
                    if a.p == 0 and a.b == 0 and a.gamma_s is None:
                        return a.coef
        return mpc(0)

    def scaled(self, factor) -> "HarmonicTermSeries":
        modes = tuple(
            (f, tuple(Atom(a.coef * factor, a.p, a.b, a.gamma_s, a.gamma_g)
                      for a in atoms))
            for f, atoms in self.modes)
        return HarmonicTermSeries(self.weight, modes)

    def eval_raw(self, z, p: Precision = DEFAULT_PRECISION):
        """Evaluate the Fourier series at z without any reduction."""
        with p.working():
            z = mpc(z)
            x, y = z.real, z.imag
            total = mpc(0)
            for freq, atoms in self.modes:
                phase = mp.expjpi(2 * to_mpf(freq) * x)
                profile = mpc(0)
                for at in atoms:
                    v = at.coef * mp.exp(2 * mp.pi * to_mpf(at.b) * y)
                    if at.p:
                        v *= y ** at.p
                    if at.gamma_s is not None:
                        v *= inc_gamma_upper(at.gamma_s,
                                             4 * mp.pi * to_mpf(at.gamma_g) * y, p)
                    profile += v
                total += phase * profile
            return total

    def eval_modular(self, z, p: Precision = DEFAULT_PRECISION):
        """Evaluate with fundamental-domain reduction at this object's weight
        (valid when the series is the expansion of a level-1 modular object)."""
        with p.working():
            z = mpc(z)
            if z.imag >= mpf(3) / 4:
                return self.eval_raw(z, p)
            red = fundamental_reduce(z, p)
            (_, _), (c, d) = red.gamma
            return (c * z + d) ** (-self.weight) * self.eval_raw(red.z_red, p)

def poincare_term_series(F: PoincareForm, n_terms: int | None = None,
                         p: Precision = DEFAULT_PRECISION) -> HarmonicTermSeries:
    """The full Fourier expansion of F as a term series: principal part,
    constant, holomorphic coefficients, and the incomplete-gamma tail."""
    with p.working():
        k = F.k
        modes = []
        # principal part q^-m
        modes.append((Fraction(-F.m), (Atom(mpc(1), 0, Fraction(F.m)),)))
        if F.a0 != 0:
            modes.append((Fraction(0), (Atom(mpc(F.a0), 0, Fraction(0)),)))
        ns = sorted(F.hol_coeffs)
        if n_terms is not None:
            ns = [n for n in ns if n <= n_terms]
        for n in ns:
            modes.append((Fraction(n), (Atom(mpc(F.hol_coeffs[n]), 0, Fraction(-n)),)))
        if F.nonhol_scale != 0:
            for n in ns:
                am = F.nonhol_coefficient(n, p)
                modes.append((Fraction(-n),
                              (Atom(mpc(am), 0, Fraction(n), 2 * k + 1, Fraction(n)),)))
        return HarmonicTermSeries(-2 * k, tuple(modes))


def evaluate_harmonic(F: PoincareForm, z, p: Precision = DEFAULT_PRECISION):
    """F(z) = F+(z) + F-(z), reducing to the fundamental domain first."""
    return poincare_term_series(F, None, p).eval_modular(z, p)


def raise_harmonic(F: PoincareForm, n: int,
                   p: Precision = DEFAULT_PRECISION) -> HarmonicTermSeries:
    """Term-wise iterated Maass raising R^n of the full expansion."""
    if n < 1:
        raise ValueError("raise count must be >= 1")
    return poincare_term_series(F, None, p).raised(n)


def slash_upper_triangular(T: HarmonicTermSeries, alpha: Fraction, beta: Fraction,
                           p: Precision = DEFAULT_PRECISION) -> HarmonicTermSeries:
    """T |_w h for h = [[alpha, beta], [0, 1/alpha]] rational upper triangular:
    (T|h)(z) = alpha^-w T(alpha^2 z + alpha beta)."""
    w = T.weight
    a2 = alpha * alpha
    ab = alpha * beta
    with p.working():
        pref = to_mpf(alpha) ** (-w)
        modes = []
        for freq, atoms in T.modes:
            phase = mp.expjpi(2 * to_mpf(freq * ab))
            new_atoms = []
            for at in atoms:
                coef = at.coef * pref * phase * to_mpf(a2) ** at.p
                gg = None if at.gamma_g is None else at.gamma_g * a2
                new_atoms.append(Atom(coef, at.p, at.b * a2, at.gamma_s, gg))
            modes.append((freq * a2, tuple(new_atoms)))
        return HarmonicTermSeries(w, tuple(modes))


# ---------------------------------------------------------------------------
# reference oracle: direct absolutely-convergent coset sum (k >= 1)


def poincare_reference_eval(k: int, m: int, z, coset_max: int = 30,
                            p: Precision = DEFAULT_PRECISION):
    """Evaluate the Poincare series by brute summation over Gamma_inf \\ Gamma
    with |c|, |d| <= coset_max.  Converges like coset_max^-2k; used as the
    normalization oracle in the tests, never on the computation path."""
    with p.working():
        z = mpc(z)

        def seed(w):
            t = 4 * mp.pi * m * w.imag
            low = mp.gamma(2 * k + 1) - inc_gamma_upper(2 * k + 1, t, p)
            return low / mp.factorial(2 * k) * mp.exp(t / 2) \
                * mp.expjpi(-2 * m * w.real)

        total = seed(z)
        for c in range(1, coset_max + 1):
            for d in range(-coset_max, coset_max + 1):
                if gcd(abs(d), c) != 1:
                    continue
                a = pow(d % c, -1, c) if c > 1 else 0
                b = (a * d - 1) // c
                total += (c * z + d) ** (2 * k) * seed((a * z + b) / (c * z + d))
        return total
