"""Translation pairs, the anti-renormalization matrix and power-triples.

A commuting pair of translations ``(T_{-u}, T_v)`` is renormalized by
subtracting the shorter length from the longer one.  For a rotation number of
periodic type the composite of one period of these steps is a positive integer
matrix ``M``; its leading eigenvalue ``t`` drives the cascade
``T^{(n,a,b)} = T_{-u_n}^a T_{v_n}^b`` indexed by power-triples.

Column vectors ``(-u, v)`` are acted on from the left, row vectors ``(a, b)``
from the right, both by the same ``M``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._csv import write_table
from ._validation import check_positive_real, check_unit_interval
from .errors import (
    DegeneratePair,
    DomainError,
    EnumerationBudgetExceeded,
    NumericalError,
    PeriodNotFound,
)

PAIR_TOL = 1e-14
MAX_DESCENT = 400


@dataclass(frozen=True)
class TranslationPair:
    u: float
    v: float

    def __post_init__(self):
        check_positive_real(self.u, "u")
        check_positive_real(self.v, "v")

    @property
    def rotation(self):
        return rotation_of_pair(self)


@dataclass(frozen=True)
class IntMatrix2:
    m11: int
    m12: int
    m21: int
    m22: int

    def __post_init__(self):
        if min(self.m11, self.m12, self.m21, self.m22) < 0:
            raise DomainError("IntMatrix2 entries must be nonnegative")

    def __matmul__(self, other):
        return IntMatrix2(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    @property
    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self):
        return self.m11 + self.m22

    def apply_column(self, x, y):
        return self.m11 * x + self.m12 * y, self.m21 * x + self.m22 * y

    def apply_row(self, a, b):
        """Row vector ``(a b) M``."""
        return a * self.m11 + b * self.m21, a * self.m12 + b * self.m22

    def apply_row_inverse(self, a, b):
        """Row vector ``(a b) M^{-1}``; exact because ``det = +-1``."""
        d = self.det
        return (a * self.m22 - b * self.m21) * d, (b * self.m11 - a * self.m12) * d

    def to_array(self):
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=np.int64)

    def entries(self):
        return (self.m11, self.m12, self.m21, self.m22)


I_MINUS = IntMatrix2(1, 1, 0, 1)
I_PLUS = IntMatrix2(1, 0, 1, 1)
IDENTITY = IntMatrix2(1, 0, 0, 1)


class PowerTriple(NamedTuple):
    n: int
    a: int
    b: int


ZERO = PowerTriple(0, 0, 0)


@dataclass(frozen=True)
class CascadeState:
    """Immutable data of the translation cascade attached to ``theta``."""

    theta: float
    pair: TranslationPair
    matrix: IntMatrix2
    t: float
    weights: tuple
    period: int
    branches: tuple

    @property
    def u(self):
        return self.pair.u

    @property
    def v(self):
        return self.pair.v


def rotation_of_pair(p: TranslationPair) -> float:
    """Rotation number ``v / (u + v)`` of the quotient of a translation pair."""
    return p.v / (p.u + p.v)


def prime_renorm_pair(p: TranslationPair, tol=PAIR_TOL):
    """One prime renormalization step; returns the new pair and ``"I-"``/``"I+"``."""
    u, v = p.u, p.v
    if abs(u - v) <= tol * max(u, v):
        raise DegeneratePair(f"u == v == {u!r}: rotation number 1/2 has no prime renormalization")
    if u >= v:
        return TranslationPair(u - v, v), "I-"
    return TranslationPair(u, v - u), "I+"


def branch_matrix(flag):
    return I_MINUS if flag == "I-" else I_PLUS


def standard_renormalizations(p: TranslationPair, levels):
    """Pairs reached each time the branch flag changes, ``levels`` of them.

    These are the Gauss-map (standard) renormalizations expressed as runs of
    prime renormalizations.  Each entry is ``(pair, steps_so_far)``.
    """
    out = []
    flag_prev = None
    steps = 0
    while len(out) < levels:
        nxt, flag = prime_renorm_pair(p)
        if flag_prev is not None and flag != flag_prev:
            out.append((p, steps))
            if len(out) == levels:
                break
        p, flag_prev = nxt, flag
        steps += 1
    return out


def anti_renorm_matrix(theta, max_m=64, tol=1e-10) -> CascadeState:
    """Anti-renormalization matrix of a periodic-type ``theta``.

    Starts from ``u = theta``, ``v = 1 - theta`` and applies prime
    renormalizations until the pair becomes proportional to the initial one.
    """
    x = check_unit_interval(theta)
    pair0 = TranslationPair(x, 1.0 - x)
    ratio0 = pair0.v / pair0.u
    p = pair0
    M = IDENTITY
    flags = []
    for m in range(1, max_m + 1):
        p, flag = prime_renorm_pair(p)
        flags.append(flag)
        M = branch_matrix(flag) @ M
        if abs(p.v / p.u - ratio0) < tol * ratio0:
            break
    else:
        raise PeriodNotFound(f"no sector period <= {max_m} for theta={x!r}")
    if M.det != 1:
        raise NumericalError(f"composite matrix has determinant {M.det}")
    tr = M.trace
    t = (tr + math.sqrt(tr * tr - 4)) / 2.0
    # M (-u, v)^T must equal (-u, v)^T / t
    cu, cv = M.apply_column(-pair0.u, pair0.v)
    if abs(cu + pair0.u / t) > tol or abs(cv - pair0.v / t) > tol:
        raise NumericalError("composite matrix does not contract (-u, v) by 1/t")
    w2 = (t - M.m11) / M.m12 if M.m12 else M.m21 / (t - M.m22)
    if not w2 > 0:
        raise NumericalError("Perron eigenvector is not strictly positive")
    return CascadeState(x, pair0, M, t, (1.0, w2), m, tuple(flags))


# -- power-triple arithmetic -------------------------------------------------

def _descend(P, state, k=1):
    n, a, b = P
    for _ in range(k):
        a, b = state.matrix.apply_row(a, b)
        n -= 1
    return PowerTriple(n, a, b)


def _to_level(P, level, state):
    if P.n < level:
        raise ValueError("cannot lift to a higher level")
    return _descend(P, state, P.n - level)


def _common(P, Q, state):
    level = min(P.n, Q.n)
    return _to_level(P, level, state), _to_level(Q, level, state)


def _nonneg(P, state):
    """Rewrite a lattice point with positive iota so both exponents are >= 0."""
    for _ in range(MAX_DESCENT):
        if P.a >= 0 and P.b >= 0:
            return P
        P = _descend(P, state)
    raise NumericalError(f"{P} does not become nonnegative; iota <= 0?")


def pt_normalize(P, state) -> PowerTriple:
    """Canonical representative: lift to the highest level that stays integral
    and nonnegative.  The zero class is ``(0, 0, 0)``."""
    P = PowerTriple(*(int(v) for v in P))
    if P.a < 0 or P.b < 0:
        P = _nonneg(P, state)
    if P.a == 0 and P.b == 0:
        return ZERO
    n, a, b = P
    while True:
        a2, b2 = state.matrix.apply_row_inverse(a, b)
        if a2 < 0 or b2 < 0:
            return PowerTriple(n, a, b)
        n, a, b = n + 1, a2, b2


def pt_add(P, Q, state) -> PowerTriple:
    P, Q = _common(P, Q, state)
    return pt_normalize(PowerTriple(P.n, P.a + Q.a, P.b + Q.b), state)


def pt_scale(P, k, state) -> PowerTriple:
    """Multiplication by ``t**k``: ``(n, a, b) -> (n + k, a, b)``."""
    return pt_normalize(PowerTriple(P.n + int(k), P.a, P.b), state)


def pt_cmp(P, Q, state) -> int:
    """-1, 0 or 1 according to the order of ``P`` and ``Q``.

    Both are rewritten at ever lower levels until one dominates the other
    componentwise.
    """
    P, Q = _common(P, Q, state)
    if (P.a, P.b) == (Q.a, Q.b):
        return 0
    for _ in range(MAX_DESCENT):
        if P.a >= Q.a and P.b >= Q.b:
            return 1
        if P.a <= Q.a and P.b <= Q.b:
            return -1
        P, Q = _descend(P, state), _descend(Q, state)
    raise NumericalError("comparison did not resolve")


def pt_sub(P, Q, state) -> PowerTriple:
    P, Q = _common(P, Q, state)
    for _ in range(MAX_DESCENT):
        if P.a >= Q.a and P.b >= Q.b:
            return pt_normalize(PowerTriple(P.n, P.a - Q.a, P.b - Q.b), state)
        if P.a <= Q.a and P.b <= Q.b:
            raise DomainError("pt_sub requires P >= Q")
        P, Q = _descend(P, state), _descend(Q, state)
    raise NumericalError("subtraction did not resolve")


def iota(P, state) -> float:
    """Real embedding ``t**n * (a*w1 + b*w2)``."""
    w1, w2 = state.weights
    return state.t ** P.n * (P.a * w1 + P.b * w2)


def translation_length(P, state) -> float:
    """Signed displacement of ``T^P``: ``t**(-n) * (b*v - a*u)``."""
    return state.t ** (-P.n) * (P.b * state.v - P.a * state.u)


def cascade_translate(P, x, state) -> float:
    return x + translation_length(P, state)


def b_point(P, state) -> float:
    """``b_P = T^{-P}(0)``."""
    return -translation_length(P, state)


# -- dominant points ---------------------------------------------------------

@dataclass(frozen=True)
class DominantPoint:
    triple: PowerTriple
    iota: float
    b: float
    lattice: tuple  # (a, b) at the enumeration level, exact


@dataclass(frozen=True)
class CascadeWindow:
    """All classes with ``0 < iota <= iota_max`` and ``|b_P| <= x_max``."""

    level: int
    lattice: np.ndarray  # (k, 2) integer exponents at ``level``
    iota: np.ndarray
    b: np.ndarray
    x_max: float
    iota_max: float


def enumerate_window(state, x_max, iota_max, budget=500_000) -> CascadeWindow:
    """Every power-triple class inside the window, as exact lattice points.

    Classes are identified with lattice points ``(a, b)`` of one fixed level
    (negative entries allowed); positive ``iota`` guarantees a nonnegative
    representative further down, so nothing in the window is missed.
    """
    x_max = check_positive_real(x_max, "x_max")
    iota_max = check_positive_real(iota_max, "iota_max")
    t = state.t
    u, v = state.u, state.v
    w2 = state.weights[1]
    covol = v + u * w2
    expected = 2.0 * x_max * iota_max / covol
    if expected > budget:
        raise EnumerationBudgetExceeded(
            f"window holds about {expected:.0f} points, budget is {budget}")
    level = int(round(math.log(iota_max / x_max) / (2.0 * math.log(t))))
    X = x_max * t ** level       # |b v - a u| <= X
    I = iota_max * t ** (-level)  # 0 < a + b w2 <= I
    b_lo = math.floor(-X / covol) - 1
    b_hi = math.ceil((X + u * I) / covol) + 1
    pts = []
    for bb in range(b_lo, b_hi + 1):
        lo = max(math.ceil((bb * v - X) / u - 1e-12), math.floor(-bb * w2) + 1)
        hi = min(math.floor((bb * v + X) / u + 1e-12), math.floor(I - bb * w2 + 1e-12))
        if hi >= lo:
            aa = np.arange(lo, hi + 1, dtype=np.int64)
            pts.append(np.column_stack([aa, np.full_like(aa, bb)]))
    lat = np.concatenate(pts) if pts else np.zeros((0, 2), dtype=np.int64)
    a = lat[:, 0].astype(float)
    b = lat[:, 1].astype(float)
    io = t ** level * (a + b * w2)
    bp = -(t ** (-level)) * (b * v - a * u)
    keep = (io > 0) & (io <= iota_max * (1 + 1e-12)) & (np.abs(bp) <= x_max * (1 + 1e-12))
    lat, io, bp = lat[keep], io[keep], bp[keep]
    order = np.argsort(io, kind="stable")
    return CascadeWindow(level, lat[order], io[order], bp[order], x_max, iota_max)


def window_triples(window, state):
    """Canonical power-triples of the window points, in window order."""
    return [pt_normalize(PowerTriple(window.level, int(a), int(b)), state)
            for a, b in window.lattice]


def dominant_points(state, x_max, iota_max, budget=500_000):
    """Dominant points ``b_P`` within the window, sorted by ``iota``.

    ``b_P`` is dominant when no ``b_Q`` with ``0 < Q < P`` lies on the segment
    from 0 to ``b_P``.  The zero triple comes first.  The verdict is exact for
    the window: every competitor ``Q`` is itself inside it.
    """
    win = enumerate_window(state, x_max, iota_max, budget=budget)
    out = [DominantPoint(ZERO, 0.0, 0.0, (0, 0))]
    best_pos, best_neg = math.inf, -math.inf
    for (a, b), io, bp in zip(win.lattice, win.iota, win.b):
        if bp > 0:
            if bp < best_pos:
                P = pt_normalize(PowerTriple(win.level, int(a), int(b)), state)
                out.append(DominantPoint(P, float(io), float(bp), (int(a), int(b))))
                best_pos = bp
        elif bp < 0:
            if bp > best_neg:
                P = pt_normalize(PowerTriple(win.level, int(a), int(b)), state)
                out.append(DominantPoint(P, float(io), float(bp), (int(a), int(b))))
                best_neg = bp
    return out


@dataclass(frozen=True)
class PushWitness:
    i: int
    n: int
    m: int
    Q: PowerTriple
    error: float


def dominant_push_witness(dominants, i, state, tol=1e-9):
    """Search ``n < m <= i`` and ``Q > 0`` with ``T^Q [b_i, b_{i+1}] = [b_n, b_m]``.

    Indices refer to ``dominants`` (entry 0, the zero triple, is skipped).
    Returns ``None`` when no witness exists among the earlier points.
    """
    if not 1 <= i < len(dominants) - 1:
        raise DomainError(f"index {i} has no successor among the dominant points")
    Pi, Pj = dominants[i], dominants[i + 1]
    di = (Pj.lattice[0] - Pi.lattice[0], Pj.lattice[1] - Pi.lattice[1])
    for m in range(1, i + 1):
        for n in range(1, m):
            Pm, Pn = dominants[m], dominants[n]
            if (Pm.lattice[0] - Pn.lattice[0], Pm.lattice[1] - Pn.lattice[1]) != di:
                continue
            Q = pt_sub(Pi.triple, Pn.triple, state)
            e1 = abs(cascade_translate(Q, Pi.b, state) - Pn.b)
            e2 = abs(cascade_translate(Q, Pj.b, state) - Pm.b)
            err = max(e1, e2)
            if err <= tol * max(1.0, abs(Pi.b)):
                return PushWitness(i, n, m, Q, err)
    return None


DOMINANT_HEADER = ("n", "a", "b", "iota", "b_P")


def dominant_table(dominants, stream=None):
    """CSV table of dominant points in the fixed column order."""
    rows = [(d.triple.n, d.triple.a, d.triple.b, d.iota, d.b) for d in dominants]
    return write_table(DOMINANT_HEADER, rows, stream)
