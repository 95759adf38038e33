"""The rational family with critical points at 0, 1 and infinity.

    F_c(z) = -c * N(z) / D(z),
    N(z) = sum_{j=d0}^{d} C(d,j) (-z)^j,   D(z) = sum_{j=0}^{d0-1} C(d,j) (-z)^j,

with ``d = d0 + dinf - 1``.  Zero and infinity are superattracting fixed points
of local degree ``d0`` and ``dinf``; the free critical point 1 has local degree
``d`` and critical value ``c``.  In the symmetric case ``d0 == dinf`` and
``|c| = 1`` the unit circle is invariant.
"""

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from ._csv import write_table
from ._validation import check_complex, check_positive_int, check_unit_interval
from .errors import (
    BracketError,
    CenterSequenceError,
    CriticalStructureError,
    DomainError,
    LiftDiscontinuity,
    NewtonDivergence,
    NumericalError,
    OrbitEscaped,
    PoleError,
    WrongCombinatorics,
)
from .rotnum import best_approximants, closest_returns_rotation

R_ZERO = 1e-8
R_INF = 1e8
CHART_RADIUS = 1e3
POLE_TOL = 1e-14


@dataclass(frozen=True)
class Criticality:
    d0: int
    dinf: int

    def __post_init__(self):
        for name in ("d0", "dinf"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 2:
                raise DomainError(f"{name} must be an integer >= 2, got {v!r}")

    @property
    def d(self):
        return self.d0 + self.dinf - 1

    @property
    def symmetric(self):
        return self.d0 == self.dinf

    @property
    def num(self):
        """Coefficients of ``N`` in increasing degree."""
        d = self.d
        return np.array([comb(d, j) * (-1) ** j if j >= self.d0 else 0 for j in range(d + 1)],
                        dtype=float)

    @property
    def den(self):
        d = self.d
        return np.array([comb(d, j) * (-1) ** j for j in range(self.d0)], dtype=float)


@dataclass(frozen=True)
class MapParams:
    crit: Criticality
    c: complex

    def __post_init__(self):
        object.__setattr__(self, "c", check_complex(self.c, "c", nonzero=True))

    @classmethod
    def of(cls, d0, dinf, c):
        return cls(Criticality(d0, dinf), c)


class _Map:
    """Scalar evaluator with coefficient lists cached for tight loops."""

    def __init__(self, params):
        crit = params.crit
        self.c = params.c
        self.num = [float(a) for a in crit.num[::-1]]   # highest degree first
        self.den = [float(a) for a in crit.den[::-1]]
        self.dnum = [a * k for a, k in zip(self.num, range(crit.d, 0, -1))]
        self.dden = [a * k for a, k in zip(self.den, range(crit.d0 - 1, 0, -1))]
        # reciprocal chart: N(z) = z^d Nr(1/z), D(z) = z^(d0-1) Dr(1/z)
        self.num_r = self.num[::-1]
        self.den_r = self.den[::-1]
        self.dinf = crit.dinf

    @staticmethod
    def _horner(coef, z):
        acc = 0j
        for a in coef:
            acc = acc * z + a
        return acc

    def __call__(self, z):
        if abs(z) > CHART_RADIUS:
            w = 1.0 / z
            return -self.c * z ** self.dinf * self._horner(self.num_r, w) / self._horner(self.den_r, w)
        den = self._horner(self.den, z)
        if abs(den) < POLE_TOL:
            raise PoleError(f"pole of F_c at z={z!r}")
        return -self.c * self._horner(self.num, z) / den

    def with_derivative(self, z):
        """``(F(z), F'(z))`` in the standard chart."""
        n = self._horner(self.num, z)
        dn = self._horner(self.dnum, z)
        den = self._horner(self.den, z)
        if abs(den) < POLE_TOL:
            raise PoleError(f"pole of F_c at z={z!r}")
        dd = self._horner(self.dden, z) if self.dden else 0j
        f = -self.c * n / den
        df = -self.c * (dn * den - n * dd) / (den * den)
        return f, df


def eval_F(params: MapParams, z):
    """``F_c(z)`` for a complex scalar or array.

    Points with ``|z| > 1e3`` are evaluated through the reciprocal chart.
    Raises PoleError when the denominator vanishes.
    """
    crit = params.crit
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DomainError("z must be finite")
    if arr.ndim == 0:
        return complex(_Map(params)(complex(arr)))
    big = np.abs(arr) > CHART_RADIUS
    out = np.empty_like(arr)
    zs = arr[~big]
    den = np.polyval(crit.den[::-1], zs)
    if np.any(np.abs(den) < POLE_TOL):
        raise PoleError("pole of F_c in the input")
    out[~big] = -params.c * np.polyval(crit.num[::-1], zs) / den
    w = 1.0 / arr[big]
    out[big] = (-params.c * arr[big] ** crit.dinf
                * np.polyval(crit.num, w) / np.polyval(crit.den, w))
    return out


def eval_dF(params: MapParams, z) -> complex:
    return _Map(params).with_derivative(complex(z))[1]


# -- critical structure -----------------------------------------------------

def _series_quotient(a, b, order):
    """First ``order`` Taylor coefficients of a/b (increasing degree)."""
    a = np.concatenate([np.asarray(a, dtype=complex), np.zeros(order)])[:order]
    b = np.concatenate([np.asarray(b, dtype=complex), np.zeros(order)])[:order]
    if abs(b[0]) == 0:
        raise PoleError("series denominator vanishes at the expansion point")
    out = np.zeros(order, dtype=complex)
    for k in range(order):
        out[k] = (a[k] - np.dot(out[:k], b[k:0:-1])) / b[0]
    return out


def _shift(coef, x0):
    """Coefficients of p(x0 + h) in h, from coefficients of p (increasing)."""
    p = np.polynomial.Polynomial(coef)
    q = p(np.polynomial.Polynomial([x0, 1.0]))
    return q.coef


def _order(series, scale, tol):
    for k, a in enumerate(series):
        if abs(a) > tol * scale:
            return k
    return None


@dataclass(frozen=True)
class CriticalReport:
    degrees: tuple    # local degrees at (0, inf, 1)
    expected: tuple
    value_at_1: complex
    value_at_0: complex


def verify_critical_structure(params: MapParams, tol=1e-9) -> CriticalReport:
    """Local degrees at 0, infinity and 1 from series coefficients.

    The local degree at a point is the index of the first nonvanishing
    Taylor coefficient of ``F - F(point)`` (in the reciprocal chart at
    infinity).
    """
    crit, c = params.crit, params.c
    d = crit.d
    order = d + 3
    s0 = -c * _series_quotient(crit.num, crit.den, order)
    deg0 = _order(s0, abs(c), tol)
    # at infinity: 1/F(1/w) = -(1/c) w^d D(1/w) / (w^d N(1/w))
    den_full = np.zeros(d + 1)
    den_full[: crit.d0] = crit.den
    s_inf = -(1.0 / c) * _series_quotient(den_full[::-1], crit.num[::-1], order)
    deg_inf = _order(s_inf, 1.0 / abs(c), tol)
    s1 = -c * _series_quotient(_shift(crit.num, 1.0), _shift(crit.den, 1.0), order)
    val1 = complex(s1[0])
    s1[0] -= c
    deg1 = _order(s1, abs(c), tol)
    degrees = (deg0, deg_inf, deg1)
    expected = (crit.d0, crit.dinf, d)
    if degrees != expected or abs(val1 - c) > 1e-12 * max(1.0, abs(c)):
        raise CriticalStructureError(f"local degrees {degrees}, expected {expected}")
    return CriticalReport(degrees, expected, val1, complex(s0[0]))


# -- orbits --------------------------------------------------------------

@dataclass(frozen=True)
class Orbit:
    params: MapParams
    z: np.ndarray
    status: str  # "bounded", "attracted-to-0" or "attracted-to-inf"

    def __len__(self):
        return len(self.z)

    @property
    def escaped(self):
        return self.status != "bounded"


def orbit(params: MapParams, n, z0=1.0 + 0j, r_zero=R_ZERO, r_inf=R_INF) -> Orbit:
    """``z_0 = z0, z_{k+1} = F_c(z_k)`` for up to ``n`` points.

    Iteration stops at the first point captured by either basin; that point is
    the last entry.
    """
    n = check_positive_int(n, "n")
    f = _Map(params)
    z = complex(z0)
    out = [z]
    status = "bounded"
    for _ in range(n - 1):
        a = abs(z)
        if a < r_zero:
            status = "attracted-to-0"
            break
        if a > r_inf:
            status = "attracted-to-inf"
            break
        z = f(z)
        out.append(z)
    else:
        a = abs(z)
        if a < r_zero:
            status = "attracted-to-0"
        elif a > r_inf:
            status = "attracted-to-inf"
    return Orbit(params, np.array(out, dtype=complex), status)


def annulus_exit(z, r_min, r_max):
    """Index of the first point outside ``r_min <= |z| <= r_max`` or ``len(z)``."""
    a = np.abs(np.asarray(z))
    bad = np.nonzero((a < r_min) | (a > r_max) | ~np.isfinite(a))[0]
    return int(bad[0]) if len(bad) else len(a)


def closest_returns_orbit(z, N=None):
    """Times ``j >= 1`` where ``|z_j - z_0|`` is strictly below all earlier values."""
    z = np.asarray(z)
    if N is not None:
        z = z[: N + 1]
    dist = np.abs(z[1:] - z[0])
    if len(dist) == 0:
        return []
    running = np.minimum.accumulate(dist)
    rec = np.ones(len(dist), dtype=bool)
    rec[1:] = dist[1:] < running[:-1]
    return [int(t) for t in np.nonzero(rec)[0] + 1]


# -- rotation number on the invariant circle --------------------------------

def _displacement(crit, x):
    """Lifted displacement of ``B = F_1`` on the circle, ``B(0) = 0``."""
    e = np.exp(2j * np.pi * x)
    b = eval_F(MapParams(crit, 1.0), e)
    return np.angle(b / e) / (2 * np.pi)


def _check_lift(crit, grid=8192):
    x = np.linspace(0.0, 1.0, grid + 1)
    delta = _displacement(crit, x)
    jumps = np.abs(np.diff(delta))
    if np.max(jumps) > 0.25 or np.max(np.abs(delta)) > 0.49:
        raise LiftDiscontinuity("displacement of the circle map is not single valued in (-1/2, 1/2)")


def lift_rotation_number(h, x0=0.0, N=10**4):
    """``(h^N(x0) - x0)/N`` for a lift ``h`` of a circle homeomorphism.

    Returns ``(rho, error_bound)``; the bound ``1/N`` holds for any lift of
    degree one.
    """
    N = check_positive_int(N, "N")
    x = float(x0)
    for _ in range(N):
        x = float(h(x))
        if not math.isfinite(x):
            raise LiftDiscontinuity("lift produced a non-finite value")
    return (x - float(x0)) / N, 1.0 / N


def circle_map_lift(crit: Criticality, s):
    """Continuous lift ``x -> x + s + delta(x)`` of the circle map for ``c = exp(2 pi i s)``."""
    if not crit.symmetric:
        raise DomainError("the circle is invariant only when d0 == dinf")
    _check_lift(crit)
    s = float(s)
    return lambda x: x + s + float(_displacement(crit, x))


def rotation_numbers(crit: Criticality, s, N=10**4, x0=0.0):
    """Vectorized rotation number of ``x -> x + s + delta(x)`` for an array of ``s``.

    Estimated as ``(h^N(x0) - x0)/N``; the error is below ``1/N``.  The orbit is
    carried as unit complex numbers and the lift accumulates the principal
    displacement, which is single valued (checked once per call).
    """
    if not crit.symmetric:
        raise DomainError("the circle is invariant only when d0 == dinf")
    _check_lift(crit)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    # N(z) = z^d0 P(z), so B(z)/z = -z^(d0-1) P(z) / D(z)
    num = [float(a) for a in crit.num[::-1][: crit.d - crit.d0 + 1]]
    den = [float(a) for a in crit.den[::-1]]
    e = np.exp(2j * np.pi * np.full(s.shape, float(x0)))
    rot = np.exp(2j * np.pi * s)
    acc = np.zeros(s.shape)
    for _ in range(int(N)):
        a = num[0]
        for k in num[1:]:
            a = a * e + k
        b = den[0]
        for k in den[1:]:
            b = b * e + k
        ratio = -(a * e ** (crit.d0 - 1)) / b
        acc += np.angle(ratio)
        e = e * ratio * rot
        e /= np.abs(e)
    return acc / (2 * np.pi * N) + s


def circle_lift_rotation_number(crit: Criticality, s, N=10**4, x0=0.0):
    """Rotation number of the circle map for ``c = exp(2 pi i s)``; returns ``(rho, error_bound)``."""
    if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0.0 <= s < 1.0:
        raise DomainError(f"s must lie in [0, 1), got {s!r}")
    N = check_positive_int(N, "N")
    if N < 10**4:
        raise DomainError("N must be at least 10^4")
    rho = float(rotation_numbers(crit, [s], N, x0)[0])
    return rho, 1.0 / N


@dataclass(frozen=True)
class BisectionResult:
    c: complex
    s: float
    rho: float
    bracket: tuple
    evaluations: int


def _straddle(values, theta):
    idx = np.nonzero((values[:-1] <= theta) & (values[1:] >= theta))[0]
    return int(idx[0]) if len(idx) else None


def find_c_bisection(crit: Criticality, theta, tol=1e-6, N=2 * 10**5, scan=512,
                     scan_N=2 * 10**4, sections=255, s_tol=1e-13) -> BisectionResult:
    """Herman parameter ``c = exp(2 pi i s*)`` with rotation number ``theta``.

    A scan of ``scan`` values of ``s`` (at ``scan_N`` iterations) brackets
    ``theta`` and certifies monotonicity up to the estimator noise.  The
    bracket, widened by one scan cell on each side, is then shrunk by
    multisection at ``N`` iterations, ``sections`` interior points per round.
    The first round contains the bracket midpoint, which is returned at once
    if it already meets ``tol``.
    """
    theta = check_unit_interval(theta)
    N = check_positive_int(N, "N")
    scan_N = min(check_positive_int(scan_N, "scan_N"), N)
    if sections % 2 == 0:
        sections += 1
    s_grid = np.arange(scan + 1) / scan
    rho = rotation_numbers(crit, s_grid[:-1], scan_N)
    rho = np.append(rho, 1.0)
    evals = scan
    noise = 2.0 / scan_N
    if np.any(np.diff(rho) < -noise):
        k = int(np.argmin(np.diff(rho)))
        raise BracketError(f"rotation number decreases between s={s_grid[k]} and s={s_grid[k + 1]}")
    j = _straddle(rho, theta)
    if j is None:
        raise BracketError(f"no bracket for theta={theta!r} in the scan")
    lo = float(s_grid[max(j - 1, 0)])
    hi = float(s_grid[min(j + 2, scan)])
    noise = 2.0 / N
    first = True
    best_s, best_r = 0.5 * (lo + hi), None
    while hi - lo > s_tol:
        pts = np.linspace(lo, hi, sections + 2)
        r = rotation_numbers(crit, pts, N)
        evals += len(pts)
        if np.any(np.diff(r) < -noise):
            raise BracketError("non-monotone rotation number inside the bracket")
        if first:
            mid = (sections + 1) // 2
            if abs(r[mid] - theta) < tol:
                return BisectionResult(cmath.exp(2j * math.pi * pts[mid]), float(pts[mid]),
                                       float(r[mid]), (lo, hi), evals)
            if not r[0] <= theta <= r[-1]:
                raise BracketError("scan bracket does not hold at full resolution")
            first = False
        k = int(np.argmin(np.abs(r - theta)))
        best_s, best_r = float(pts[k]), float(r[k])
        j = _straddle(r, theta)
        lo, hi = float(pts[j]), float(pts[j + 1])
        if abs(best_r - theta) < tol and hi - lo < 1e-6:
            break
    return BisectionResult(cmath.exp(2j * math.pi * best_s), best_s, best_r, (lo, hi), evals)


# -- centers ---------------------------------------------------------------

def critical_orbit_and_derivative(params: MapParams, q):
    """``(F_c^q(1), d/dc F_c^q(1))`` by forward propagation."""
    f = _Map(params)
    c = params.c
    z, dz = 1.0 + 0j, 0j
    for _ in range(q):
        fz, dfz = f.with_derivative(z)
        dz = fz / c + dfz * dz
        z = fz
        if not (cmath.isfinite(z) and cmath.isfinite(dz)):
            raise NewtonDivergence("critical orbit overflowed")
    return z, dz


def newton_center(params: MapParams, q, tol=1e-12, max_steps=100, p=None) -> complex:
    """Solve ``F_c^q(1) = 1`` by Newton's method in ``c`` from ``params.c``.

    With ``p`` given the root must carry the combinatorics of the rotation by
    ``p/q``, otherwise WrongCombinatorics is raised.
    """
    q = check_positive_int(q, "q")
    crit = params.crit
    c = params.c
    for _ in range(max_steps):
        try:
            g, dg = critical_orbit_and_derivative(MapParams(crit, c), q)
        except PoleError as exc:
            raise NewtonDivergence(str(exc)) from exc
        g -= 1.0
        if abs(dg) < 1e-300:
            raise NewtonDivergence("parameter derivative underflow")
        step = g / dg
        c = c - step
        if c == 0 or not cmath.isfinite(c):
            raise NewtonDivergence("Newton iterate left the parameter plane")
        if abs(step) <= 4e-16 * max(1.0, abs(c)):
            break
    res = abs(critical_orbit_and_derivative(MapParams(crit, c), q)[0] - 1.0)
    if not res < tol:
        raise NewtonDivergence(f"residual {res:.3e} above {tol:.1e} for q={q}")
    if p is not None:
        rep = combinatorial_rotation_check(MapParams(crit, c), Fraction(p, q), q=q)
        if not rep.ok:
            raise WrongCombinatorics(f"root {c} has returns {rep.observed}, expected {rep.expected}")
    return c


@dataclass(frozen=True)
class CombinatorialReport:
    ok: bool
    observed: tuple
    expected: tuple
    iterations: int


def combinatorial_rotation_check(params: MapParams, theta, levels=None, q=None,
                                 annulus=(0.25, 4.0)) -> CombinatorialReport:
    """Compare closest returns of the orbit of 1 with those of a rigid rotation.

    ``theta`` is a float (compared with ``q_1..q_levels``) or a Fraction ``p/q``
    (the orbit of a center; compared with the returns of the rotation by
    ``p/q`` up to time ``q``).  Raises OrbitEscaped when the orbit leaves the
    annulus before the last time inspected.
    """
    if isinstance(theta, Fraction):
        if q is None:
            q = theta.denominator
        horizon = q
        expected = tuple(closest_returns_rotation(theta, horizon))
    else:
        levels = check_positive_int(levels, "levels")
        conv = best_approximants(theta, levels)
        horizon = conv.q[-1]
        expected = tuple(conv.q)
    orb = orbit(params, horizon + 1)
    if len(orb.z) < horizon + 1 or annulus_exit(orb.z, *annulus) <= horizon:
        raise OrbitEscaped(f"orbit of 1 leaves the annulus before time {horizon}")
    observed = tuple(closest_returns_orbit(orb.z, horizon))
    if isinstance(theta, Fraction):
        ok = observed == expected
    else:
        ok = observed[: len(expected)] == expected
    return CombinatorialReport(ok, observed, expected, horizon)


@dataclass(frozen=True)
class CenterRecord:
    n: int
    p: int
    q: int
    c: complex
    residual: float


def _unwrap(lc, target):
    k = round((target.imag - lc.imag) / (2 * math.pi))
    return lc + 2j * math.pi * k


def center_sequence(crit: Criticality, theta, n_max, tol=1e-12, fallback_rings=(0.05, 0.2, 0.5, 1.0),
                    fallback_phases=32):
    """Centers ``c_n`` with ``F_c^{q_n}(1) = 1`` along the convergents of ``theta``.

    Each seed interpolates ``log c`` linearly in the rotation number through
    the two previous centers (anchored by ``log c = 0`` at rotation 0 and
    ``2 pi i`` at rotation 1).  If Newton fails from there, rings of seeds
    around it are tried and the nearest valid root is kept.  Every center is
    validated by its closest-return pattern; a failure raises
    CenterSequenceError carrying the centers found so far.
    """
    n_max = check_positive_int(n_max, "n_max")
    conv = best_approximants(theta, n_max)
    th = [1.0, 0.0]
    logs = [2j * math.pi, 0j]
    out = []
    for n, (p, q) in enumerate(zip(conv.p, conv.q), start=1):
        t = p / q
        w = (t - th[-1]) / (th[-2] - th[-1])
        seed_log = logs[-1] + w * (logs[-2] - logs[-1])
        seed = cmath.exp(seed_log)
        c = _center_from_seed(crit, seed, p, q, tol)
        if c is None:
            radius = abs(out[-1].c - out[-2].c) if len(out) >= 2 else 0.1
            found = []
            for ring in fallback_rings:
                for k in range(fallback_phases):
                    s = seed + radius * ring * cmath.exp(2j * math.pi * (k + 0.5) / fallback_phases)
                    r = _center_from_seed(crit, s, p, q, tol)
                    if r is not None:
                        found.append(r)
                if found:
                    break
            if not found:
                raise CenterSequenceError(f"no center with combinatorics {p}/{q} near {seed}", out)
            c = min(found, key=lambda r: abs(r - seed))
        res = abs(critical_orbit_and_derivative(MapParams(crit, c), q)[0] - 1.0)
        out.append(CenterRecord(n, p, q, c, res))
        th.append(t)
        logs.append(_unwrap(cmath.log(c), seed_log))
    return out


def _center_from_seed(crit, seed, p, q, tol):
    try:
        with np.errstate(all="ignore"):
            return newton_center(MapParams(crit, seed), q, tol=tol, p=p)
    except (NumericalError, ZeroDivisionError, OverflowError):
        return None


@dataclass(frozen=True)
class CenterLimit:
    limit: complex
    ratios: tuple  # (c_{n+1} - c_n) / (c_n - c_{n-1})
    steps: tuple   # |c_{n+1} - c_n|


def center_limit(centers) -> CenterLimit:
    """Aitken extrapolation of a center sequence, with the step ratios.

    The ratio report is exploratory; no reference value exists for it.
    """
    cs = [r.c if isinstance(r, CenterRecord) else complex(r) for r in centers]
    if len(cs) < 3:
        raise DomainError("need at least three centers")
    diffs = [b - a for a, b in zip(cs, cs[1:])]
    ratios = tuple(b / a for a, b in zip(diffs, diffs[1:]) if a != 0)
    r = ratios[-1]
    limit = cs[-1] + diffs[-1] * r / (1 - r)
    return CenterLimit(limit, ratios, tuple(abs(d) for d in diffs))


ORBIT_HEADER = ("k", "re_z", "im_z")
CENTER_HEADER = ("n", "q_n", "re_c", "im_c", "residual")


def orbit_table(orb: Orbit, stream=None):
    rows = [(k, z.real, z.imag) for k, z in enumerate(orb.z)]
    return write_table(ORBIT_HEADER, rows, stream)


def center_table(centers, stream=None):
    rows = [(r.n, r.q, r.c.real, r.c.imag, r.residual) for r in centers]
    return write_table(CENTER_HEADER, rows, stream)
