"""Exact arithmetic on integral binary quadratic forms at level 1.

Reduction and SL2(Z)-class enumeration for all discriminant signs, Pell
automorphs, genus characters, CM points, and oriented geodesic frames.
Everything here is exact integer arithmetic except the frame/CM-point
constructors, which hand back mpmath numbers at the requested precision.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

from mpmath import mp, mpf, mpc

from .precision import Precision, DEFAULT_PRECISION

IDENTITY = ((1, 0), (0, 1))
S_MAT = ((0, -1), (1, 0))

# Bounded searches below are plumbing safety valves, not math cases: hitting a
# cap signals an implementation bug and raises.
REPRESENTED_BOX_FACTOR = 10
SQUARE_ORBIT_CAP_FACTOR = 400


def mat_mul(g, h):
    return (
        (g[0][0] * h[0][0] + g[0][1] * h[1][0], g[0][0] * h[0][1] + g[0][1] * h[1][1]),
        (g[1][0] * h[0][0] + g[1][1] * h[1][0], g[1][0] * h[0][1] + g[1][1] * h[1][1]),
    )


def mat_det(g):
    return g[0][0] * g[1][1] - g[0][1] * g[1][0]


def translation(s):
    return ((1, s), (0, 1))


@dataclass(frozen=True)
class QuadForm:
    """Integral binary quadratic form [a, b, c] = a x^2 + b xy + c y^2."""

    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def is_positive_definite(self) -> bool:
        return self.disc < 0 and self.a > 0

    def value(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def apply(self, g) -> "QuadForm":
        """Right action (Q o g)(x, y) = Q(alpha x + beta y, gamma x + delta y)."""
        (al, be), (ga, de) = g
        a2 = self.value(al, ga)
        c2 = self.value(be, de)
        b2 = 2 * self.a * al * be + self.b * (al * de + be * ga) + 2 * self.c * ga * de
        return QuadForm(a2, b2, c2)

    def mirror(self) -> "QuadForm":
        """The sign-flip [a,b,c] -> [-a,b,-c] swapping definiteness."""
        return QuadForm(-self.a, self.b, -self.c)

    def content(self) -> int:
        return gcd(gcd(abs(self.a), abs(self.b)), abs(self.c))

    def __repr__(self):
        return f"[{self.a},{self.b},{self.c}]"


@dataclass(frozen=True)
class ClassSet:
    """One representative per SL2(Z)-class, with stabilizer orders in PSL2(Z)."""

    discriminant: int
    representatives: tuple
    stabilizer_orders: tuple
    automorph_matrix: tuple | None = None  # generator data for D > 0 non-square


@dataclass(frozen=True)
class GenusCharContext:
    delta: int

    def __post_init__(self):
        if not is_fundamental_discriminant(self.delta):
            raise ValueError(f"{self.delta} is not a fundamental discriminant")


@dataclass(frozen=True)
class GeodesicFrame:
    """Oriented frame for the geodesic of an indefinite form.

    ``g`` is a real unimodular matrix taking the imaginary axis to the
    geodesic a|z|^2 + b Re z + c = 0, oriented so that the conjugated form
    matrix is +sqrt(D)/2 diag(1,-1).  For non-square D the fundamental
    automorph has trace t and the closed geodesic is g.(iy), 1 <= y < eps^2
    with eps = (t + u sqrt(D))/2 > 1; for square D the geodesic is infinite
    and eps is None.
    """

    form: QuadForm
    g: tuple
    epsilon: object  # mpf > 1, or None for square discriminant
    endpoints: tuple  # (g(0), g(inf)) as mpf or mp.inf, orientation start/end
    orientation: int = 1


def is_fundamental_discriminant(delta: int) -> bool:
    if delta == 1:
        return True
    if delta % 4 == 1:
        return _is_squarefree(abs(delta))
    if delta % 4 == 0:
        m = delta // 4
        return m % 4 in (2, 3) and _is_squarefree(abs(m))
    return False


def _is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


def kronecker(delta: int, n: int) -> int:
    """Extended Kronecker symbol (delta / n)."""
    a, b = delta, n
    if b == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and b % 2 == 0:
        return 0
    result = 1
    if b < 0:
        b = -b
        if a < 0:
            result = -result
    # strip powers of two from b using the 2-adic rule
    while b % 2 == 0:
        b //= 2
        if a % 8 in (3, 5):
            result = -result
    if b == 1:
        return result
    # now b odd positive; use quadratic reciprocity on the Jacobi symbol
    a %= b
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if b % 8 in (3, 5):
                result = -result
        a, b = b, a
        if a % 4 == 3 and b % 4 == 3:
            result = -result
        a %= b
    return result if b == 1 else 0


def reduce_definite(Q: QuadForm):
    """Gauss-reduce a positive definite form; returns (reduced, gamma) with
    Q o gamma equal to the reduced form."""
    if Q.disc >= 0 or Q.a <= 0:
        raise ValueError(f"{Q} is not positive definite")
    a, b, c = Q.a, Q.b, Q.c
    g = IDENTITY
    while True:
        if a > c:
            a, b, c = c, -b, a
            g = mat_mul(g, S_MAT)
            continue
        if b > a or b <= -a:
            # translate b into (-a, a]
            s = (a - b) // (2 * a)
            a, b, c = a, b + 2 * a * s, a * s * s + b * s + c
            g = mat_mul(g, translation(s))
            continue
        break
    if b < 0 and (-b == a or a == c):
        # normalization b >= 0 when |b| = a or a = c, via the S-flip
        a, b, c = c, -b, a
        g = mat_mul(g, S_MAT)
    reduced = QuadForm(a, b, c)
    assert Q.apply(g) == reduced and mat_det(g) == 1
    return reduced, g


def _stabilizer_order_definite(Q: QuadForm) -> int:
    R, _ = reduce_definite(Q if Q.a > 0 else QuadForm(-Q.a, -Q.b, -Q.c))
    if R.a == R.b == R.c:
        return 3
    if R.b == 0 and R.a == R.c:
        return 2
    return 1


def cm_point(Q: QuadForm, p: Precision = DEFAULT_PRECISION):
    """CM point alpha_Q = (-b + i sqrt(|D|)) / (2a) for positive definite Q."""
    if not Q.is_positive_definite:
        raise ValueError(f"{Q} is not positive definite")
    with p.working():
        return mpc(mpf(-Q.b), mp.sqrt(-Q.disc)) / (2 * Q.a)


# ---------------------------------------------------------------------------
# indefinite reduction, cycles and the Pell automorph


def _lt_sqrt(D, b, twoa):
    # test sqrt(D) - b < twoa < sqrt(D) + b exactly
    lower = twoa + b  # want (sqrt(D) < twoa + b)
    upper = twoa - b  # want (twoa - b < sqrt(D))
    return lower * lower > D and (upper < 0 or upper * upper < D)


def _reduced_indefinite(a, b, c, D):
    return b > 0 and b * b < D and _lt_sqrt(D, b, 2 * abs(a))


def _rho_step(a, b, c, D):
    """One step along the cycle: [a,b,c] -> [c,b',c'] with b' = -b mod 2|c|
    normalized into the standard window; returns the new triple and the SL2
    matrix realizing it.  Window: (-|c|, |c|] while |c| > sqrt(D), else
    (sqrt(D) - 2|c|, sqrt(D)); this is the textbook rho operator and
    terminates on arbitrary indefinite input."""
    s = isqrt(D)
    twoc = 2 * abs(c)
    r = (-b) % twoc
    if abs(c) > s:
        bp = r if r <= abs(c) else r - twoc
    else:
        bp = r + twoc * ((s - r) // twoc)
        if bp <= s - twoc:
            bp += twoc
    cp = (bp * bp - D) // (4 * c)
    m = (b + bp) // (2 * c)
    gmat = ((0, -1), (1, m))
    return (c, bp, cp), gmat


def _reduce_indefinite(Q: QuadForm):
    """Drive an indefinite (non-square disc) form onto its reduced cycle."""
    D = Q.disc
    a, b, c = Q.a, Q.b, Q.c
    g = IDENTITY
    s = isqrt(D)
    guard = 0
    while not _reduced_indefinite(a, b, c, D):
        guard += 1
        if guard > 10000:
            raise RuntimeError(f"indefinite reduction did not terminate for {Q}")
        if c == 0:
            raise ValueError("square discriminant has no reduced cycle")
        # normalize b into the window (sqrt(D) - 2|c|, sqrt(D)] modulo 2|c|,
        # then flip; this is the standard rho operator
        (a, b, c), step = _rho_step(a, b, c, D)
        g = mat_mul(g, step)
    return QuadForm(a, b, c), g


@lru_cache(maxsize=None)
def _reduced_cycles(D: int):
    """All reduced forms of non-square D > 0 grouped into rho-cycles."""
    s = isqrt(D)
    reduced = set()
    for b in range(1, s + 1):
        if (D - b * b) % 4 != 0:
            continue
        prod = (b * b - D) // 4  # = a*c < 0
        for a in _divisors_signed(prod):
            c = prod // a
            if _reduced_indefinite(a, b, c, D):
                reduced.add((a, b, c))
    cycles = []
    seen = set()
    for start in sorted(reduced):
        if start in seen:
            continue
        cyc = []
        cur = start
        while cur not in seen:
            seen.add(cur)
            cyc.append(cur)
            cur, _ = _rho_step(*cur, D)
        cycles.append(tuple(cyc))
    return tuple(cycles)


def _divisors_signed(n):
    """All divisors (both signs) of a negative integer n = a*c."""
    m = abs(n)
    out = []
    for d in range(1, isqrt(m) + 1):
        if m % d == 0:
            out.extend((d, -d, m // d, -(m // d)))
    return sorted(set(out))


def pell_minimal(D: int):
    """Minimal (t, u), t,u > 0, with t^2 - D u^2 = 4 (D > 0 non-square).

    Walks once around the rho-cycle of a reduced form of discriminant D; the
    accumulated matrix is the fundamental automorph, from which (t, u) is
    read off exactly.
    """
    if D <= 0 or isqrt(D) ** 2 == D:
        raise ValueError("Pell solver needs a positive non-square discriminant")
    cycles = _reduced_cycles(D)
    a0, b0, c0 = cycles[0][0]
    cur = (a0, b0, c0)
    g = IDENTITY
    while True:
        cur, step = _rho_step(*cur, D)
        g = mat_mul(g, step)
        if cur == (a0, b0, c0):
            break
    # cycle lengths are even, so g already fixes the form; normalize signs
    t = g[0][0] + g[1][1]
    if t < 0:
        g = tuple(tuple(-x for x in row) for row in g)
        t = -t
    u_num = g[1][0]
    if u_num % a0 != 0:
        raise RuntimeError(f"automorph extraction failed for D={D}")
    u = u_num // a0
    if u < 0:
        # take the inverse generator
        g = ((g[1][1], -g[0][1]), (-g[1][0], g[0][0]))
        u = -u
    assert t * t - D * u * u == 4
    return t, u


def automorph(Q: QuadForm):
    """Generator of the PSL2(Z)-stabilizer of an indefinite form (D > 0,
    non-square): [[(t-bu)/2, -cu], [au, (t+bu)/2]] from the minimal Pell
    solution of t^2 - D u^2 = 4."""
    D = Q.disc
    if D <= 0:
        raise ValueError("automorph requires positive discriminant")
    if isqrt(D) ** 2 == D:
        raise ValueError("square discriminant: stabilizer is trivial")
    t, u = pell_minimal(D)
    M = (((t - Q.b * u) // 2, -Q.c * u), (Q.a * u, (t + Q.b * u) // 2))
    assert mat_det(M) == 1 and Q.apply(M) == Q
    return M


# ---------------------------------------------------------------------------
# square-discriminant classes


def _square_candidates(D: int):
    n = isqrt(D)
    return tuple(QuadForm(0, n, c) for c in range(n))


@lru_cache(maxsize=None)
def _canonical_square(Q: QuadForm):
    """Deterministic BFS to the canonical representative [0, n, c], 0 <= c < n,
    of a form with square discriminant."""
    D = Q.disc
    n = isqrt(D)
    if n * n != D:
        raise ValueError("not a square discriminant")
    cap = SQUARE_ORBIT_CAP_FACTOR * max(
        n, abs(Q.a) + abs(Q.b) + abs(Q.c), 1
    )
    seen = {(Q.a, Q.b, Q.c)}
    frontier = [Q]
    gens = (translation(1), translation(-1), S_MAT)
    while frontier:
        nxt = []
        for F in frontier:
            if F.a == 0 and F.b == n and 0 <= F.c < n:
                return F
            for gmat in gens:
                G = F.apply(gmat)
                key = (G.a, G.b, G.c)
                if key in seen:
                    continue
                if max(abs(G.a), abs(G.b), abs(G.c)) > cap:
                    continue
                seen.add(key)
                nxt.append(G)
        frontier = nxt
    raise RuntimeError(f"square-disc canonicalization exhausted its box for {Q}")


@lru_cache(maxsize=None)
def enumerate_classes(D: int) -> ClassSet:
    """The SL2(Z)-class set of discriminant D (positive definite half for
    D < 0, one representative per cycle for non-square D > 0, the [0,n,c]
    list for square D)."""
    if D == 0 or D % 4 in (2, 3):
        raise ValueError(f"{D} is not a nonzero discriminant (need 0,1 mod 4)")
    if D < 0:
        reps = []
        for b in range(D % 2, isqrt(-D // 3) + 1, 2):
            prod = (b * b - D) // 4
            for a in range(max(b, 1), isqrt(prod) + 1):
                if prod % a != 0:
                    continue
                c = prod // a
                reps.append(QuadForm(a, b, c))
                if 0 < b < a < c:
                    reps.append(QuadForm(a, -b, c))
        reps.sort(key=lambda q: (q.a, q.b, q.c))
        orders = tuple(_stabilizer_order_definite(q) for q in reps)
        return ClassSet(D, tuple(reps), orders)
    n = isqrt(D)
    if n * n == D:
        reps = _square_candidates(D)
        # cross-check: candidates are pairwise inequivalent fixed points of
        # the canonicalization
        assert all(_canonical_square(q) == q for q in reps)
        return ClassSet(D, reps, tuple(1 for _ in reps))
    cycles = _reduced_cycles(D)
    reps = tuple(_cycle_representative(cyc) for cyc in cycles)
    t, u = pell_minimal(D)
    return ClassSet(D, reps, tuple(1 for _ in reps), automorph_matrix=(t, u))


def _cycle_representative(cyc) -> QuadForm:
    # prefer a positive leading coefficient; cycles alternate the sign of a
    positives = [f for f in cyc if f[0] > 0]
    return QuadForm(*min(positives or cyc))


def class_representative(Q: QuadForm) -> QuadForm:
    """Canonical representative of the SL2(Z)-class of Q (definite forms:
    the Gauss-reduced form; indefinite: smallest member of the cycle;
    square disc: the [0,n,c] normal form)."""
    D = Q.disc
    if D < 0:
        if Q.a > 0:
            return reduce_definite(Q)[0]
        R = reduce_definite(QuadForm(-Q.a, -Q.b, -Q.c))[0]
        return QuadForm(-R.a, -R.b, -R.c)
    if isqrt(D) ** 2 == D:
        return _canonical_square(Q)
    R, _ = _reduce_indefinite(Q)
    cyc = None
    for c in _reduced_cycles(D):
        if (R.a, R.b, R.c) in c:
            cyc = c
            break
    if cyc is None:
        raise RuntimeError(f"reduced form {R} missing from cycle table")
    return _cycle_representative(cyc)


def equivalent(Q1: QuadForm, Q2: QuadForm) -> bool:
    return Q1.disc == Q2.disc and class_representative(Q1) == class_representative(Q2)


# ---------------------------------------------------------------------------
# genus characters


def genus_character(ctx, Q: QuadForm) -> int:
    """GKZ genus character chi_Delta(Q): the Kronecker symbol (Delta/n) at a
    represented value n coprime to Delta, or 0 when gcd(a,b,c,Delta) > 1 or
    Delta does not divide the discriminant.

    The represented value is found by a deterministic growing-box scan; on
    the plus-space support (where D/Delta is a square mod 4) the result is
    independent of the scan.  Total function, never raises on math input.
    """
    delta = ctx.delta if isinstance(ctx, GenusCharContext) else int(ctx)
    if delta == 1:
        return 1
    if Q.disc % delta != 0:
        return 0
    if gcd(Q.content(), abs(delta)) != 1:
        return 0
    n = _represented_coprime(Q, delta)
    return kronecker(delta, n)


def _represented_coprime(Q: QuadForm, delta: int) -> int:
    cap = REPRESENTED_BOX_FACTOR * abs(delta)
    for box in range(1, cap + 1):
        for x in range(-box, box + 1):
            for y in range(-box, box + 1):
                if max(abs(x), abs(y)) != box:
                    continue
                n = Q.value(x, y)
                if n != 0 and gcd(abs(n), abs(delta)) == 1:
                    return n
    raise RuntimeError(
        f"no represented value coprime to {delta} found for {Q} within box {cap}; "
        "this indicates a bug since gcd(a,b,c,delta)=1"
    )


# ---------------------------------------------------------------------------
# geodesic frames


def dict_sqrt_mN(D: int, p: Precision = DEFAULT_PRECISION):
    """Level-1 form dictionary: the paper-symbol sqrt(|m| N) for a form of
    discriminant D > 0.  Implemented in exactly this one function so the
    convention cannot drift; the acceptance suite pins it to sqrt(D)."""
    with p.working():
        return mp.sqrt(D)


def dict_four_mN(D: int) -> int:
    """The companion dictionary constant for the paper-symbol 4 |m| N."""
    return 4 * D


def geodesic_frame(Q: QuadForm, p: Precision = DEFAULT_PRECISION) -> GeodesicFrame:
    """Oriented parametrizing frame of the geodesic of an indefinite form.

    g(0) is the automorph's attracting fixed point (-b + sqrt(D))/(2a), g(inf)
    the repelling one; for a = 0 the finite endpoint is -c/b.  The frame
    satisfies g^{-1} X_Q g = (sqrt(D)/2) diag(1,-1) for the form matrix
    X_Q = [[b/2, c], [-a, -b/2]].
    """
    D = Q.disc
    if D <= 0:
        raise ValueError("geodesic frame requires positive discriminant")
    a, b, c = Q.a, Q.b, Q.c
    with p.working():
        sqD = mp.sqrt(D)
        if a != 0:
            w_start = (-b + sqD) / (2 * a)   # attracting fixed point, = g(0)
            w_end = (-b - sqD) / (2 * a)     # repelling fixed point, = g(inf)
            det = w_end - w_start
            g = ((w_end, w_start / det), (mpf(1), 1 / det))
        else:
            finite = mpf(-c) / b
            if b > 0:
                # eigenvector for +sqrt(D)/2 is infinity: vertical line
                w_start, w_end = finite, mp.inf
                g = ((mpf(1), w_start), (mpf(0), mpf(1)))
            else:
                w_start, w_end = mp.inf, finite
                g = ((w_end, mpf(-1)), (mpf(1), mpf(0)))
        n = isqrt(D)
        if n * n == D:
            eps = None
        else:
            t, u = pell_minimal(D)
            eps = (t + u * sqD) / 2
        return GeodesicFrame(Q, g, eps, (w_start, w_end))
