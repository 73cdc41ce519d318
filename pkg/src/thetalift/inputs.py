"""Harmonic inputs for the lifts: weakly holomorphic q-series, built-in
expressions, or Maass-Poincare forms, behind one interface."""

from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpf, mpc

from .precision import Precision, DEFAULT_PRECISION, to_mpf
from .modforms import (QSeries, RaisedForm, standard_series, series_from_expr,
                       raise_form, evaluate, evaluate_raised)
from .maass import (PoincareForm, HarmonicTermSeries, Atom,
                    poincare_term_series, _dim_cusp_forms)


@dataclass(frozen=True)
class HarmonicInput:
    """Tagged union over the input kinds the lifts accept.

    kind 'weakly_holomorphic': qseries holds the form, xi-image is zero.
    kind 'poincare': poincare holds a PoincareForm, xi-image is
    nonhol_scale times the normalized cusp form (2k+2 = 12 only).
    """

    kind: str
    k: int
    qseries: QSeries | None = None
    poincare: PoincareForm | None = None
    label: str = ""

    @property
    def weight(self) -> int:
        return -2 * self.k

    @property
    def is_weakly_holomorphic(self) -> bool:
        return self.kind == "weakly_holomorphic" or self.poincare.nonhol_scale == 0

    # -- exact holomorphic-part data ------------------------------------

    def a_plus(self, n: int):
        """Holomorphic-part coefficient for n <= 0, exact where possible."""
        if n > 0:
            raise ValueError("only principal-part and constant coefficients")
        if self.kind == "weakly_holomorphic":
            if n >= self.qseries.order:
                return Fraction(0)
            return self.qseries.coefficient(n)
        if n == 0:
            return self.poincare.a0
        return self.poincare.principal_coefficients().get(n, Fraction(0))

    def principal_indices(self):
        if self.kind == "weakly_holomorphic":
            F = self.qseries
            return tuple(n for n in range(F.n0, 0) if F.coefficient(n) != 0)
        return (-self.poincare.m,)

    @property
    def constant_term_zero(self) -> bool:
        return self.a_plus(0) == 0

    # -- xi image --------------------------------------------------------

    def xi_image(self, p: Precision = DEFAULT_PRECISION):
        """(lambda, normalized cusp q-series) with xi_{-2k} F = lambda * G,
        or (0, None) when the image vanishes."""
        if self.kind == "weakly_holomorphic":
            return mpf(0), None
        lam = self.poincare.nonhol_scale
        if lam == 0:
            return mpf(0), None
        terms = max(64, p.digits + 20)
        return lam, standard_series("Delta", terms)

    # -- evaluators -------------------------------------------------------

    def evaluator(self, p: Precision = DEFAULT_PRECISION):
        from .cycles import Evaluator
        if self.kind == "weakly_holomorphic":
            F = self.qseries
            return Evaluator(F.weight, lambda z, pp: evaluate(F, z, pp))
        P = self.poincare
        T = poincare_term_series(P, None, p)
        return Evaluator(-2 * self.k, lambda z, pp: T.eval_modular(z, pp))

    def raised_evaluator(self, n: int, p: Precision = DEFAULT_PRECISION):
        """R^n applied to the input, as an evaluatable object."""
        from .cycles import Evaluator
        if n == 0:
            return self.evaluator(p)
        if self.kind == "weakly_holomorphic":
            R = raise_form(self.qseries, n)
            return Evaluator(R.weight, lambda z, pp: evaluate_raised(R, z, pp))
        T = poincare_term_series(self.poincare, None, p).raised(n)
        return Evaluator(T.weight, lambda z, pp: T.eval_modular(z, pp))

    def term_series(self, p: Precision = DEFAULT_PRECISION) -> HarmonicTermSeries:
        """The full Fourier expansion in the harmonic term algebra."""
        if self.kind == "poincare":
            return poincare_term_series(self.poincare, None, p)
        F = self.qseries
        with p.working():
            modes = []
            for i, c in enumerate(F.coeffs):
                n = F.n0 + i
                if c == 0:
                    continue
                modes.append((Fraction(n),
                              (Atom(mpc(to_mpf(Fraction(c))), 0, Fraction(-n)),)))
            return HarmonicTermSeries(F.weight, tuple(modes))


def from_qseries(F: QSeries, label: str = "") -> HarmonicInput:
    if F.weight > 0 or F.weight % 2 != 0:
        raise ValueError("harmonic inputs have weight -2k, k >= 0")
    return HarmonicInput("weakly_holomorphic", -F.weight // 2, qseries=F,
                         label=label or "weaklyhol")


def from_poincare(P: PoincareForm) -> HarmonicInput:
    return HarmonicInput("poincare", P.k, poincare=P,
                         label=f"poincare:{P.k},{P.m}")


def builtin(spec: str, terms: int = 80, k: int | None = None) -> HarmonicInput:
    """Parse an input spec: 'J', 'weaklyhol:EXPR' with EXPR a monomial in
    E4, E6, Delta, j, J."""
    if spec == "J":
        return from_qseries(standard_series("J", terms), label="J")
    if spec.startswith("weaklyhol:"):
        expr = spec.split(":", 1)[1]
        F = series_from_expr(expr, terms)
        inp = from_qseries(F, label=spec)
        if k is not None and inp.k != k:
            raise ValueError(f"{expr} has weight {F.weight}, expected {-2 * k}")
        return inp
    raise ValueError(f"unknown harmonic input spec {spec!r}")
