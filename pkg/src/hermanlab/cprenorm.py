"""Critical commuting pairs sampled from the orbit of the critical point.

Level ``n`` uses the closest-return times ``q_{n-1} < q_n`` of ``theta``
(``q_0 = 1``).  An orbit point ``z_j`` belongs to the level-``n`` interval when
its rigid-rotation coordinate ``x_j = j*theta - round(j*theta)`` lies between
``eps_{n-1}`` and ``eps_n``, where ``eps_k = q_k*theta - p_k``.  Membership is
therefore decided by arithmetic alone; the geometry of the curve only enters
through the positions.

The pair is ``f_- = f^{q_n}`` on ``I_- = [-1, 0]`` and ``f_+ = f^{q_{n-1}}`` on
``I_+ = [0, e]``, normalized so that ``f_+(0) = -1``.  Odd levels are
normalized by an antiaffine map so that every level has the same orientation.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._csv import write_table
from ._validation import check_positive_int, check_unit_interval
from .errors import (
    DomainError,
    IncompatibleCombinatorics,
    InconclusiveInteriorTest,
    InsufficientOrbit,
    NumericalError,
)
from .ratmap import Orbit, annulus_exit, closest_returns_orbit
from .rotnum import best_approximants, signed_positions


def _z(orbit):
    if isinstance(orbit, Orbit):
        return orbit.z
    return np.asarray(orbit, dtype=complex)


def _eps_table(theta, n):
    """``(q_k, eps_k)`` for k = -1..n as two lists (index 0 is k = -1).

    ``eps_k`` is evaluated exactly for the double ``theta`` and rounded once;
    the float product ``q*theta`` would lose ``log10(q)`` digits.
    """
    conv = best_approximants(theta, max(n, 1))
    qs = [0, 1] + list(conv.q)
    ps = [1, 0] + list(conv.p)
    x = Fraction(theta)
    eps = [float(q * x - p) for p, q in zip(ps, qs)]
    return qs[: n + 2], eps[: n + 2]


def rigid_orbit(theta, n):
    """Orbit of 0 under the rigid rotation, drawn on the real line.

    Entry ``j`` is the signed offset ``j*theta - round(j*theta)``; closest
    returns to 0 are those of the rotation.
    """
    theta = check_unit_interval(theta)
    return signed_positions(theta, check_positive_int(n, "n")).astype(complex)


def herman_orbit(orbit, annulus=(0.9, 1.6), trust=0.5):
    """Trusted prefix of a critical orbit on a Herman curve.

    Rounding errors grow along the orbit until it drifts off the curve; when
    that happens (first exit from ``annulus``) only the first ``trust``
    fraction of the points before the exit is kept.
    """
    z = _z(orbit)
    k = annulus_exit(z, *annulus)
    if k < len(z):
        z = z[: max(int(trust * k), 1)]
    return z


@dataclass(frozen=True)
class CommutingPairSample:
    """A normalized critical commuting pair represented by orbit samples.

    ``t`` are the combinatorial coordinates (strictly increasing, ``I_-`` is
    ``[-1, 0]``), ``w`` the normalized positions, ``idx`` the orbit indices.
    ``e`` is the normalized position of ``f_-(0)``; ``e_model`` its
    combinatorial coordinate.  The normalization is
    ``w = (z - z0)/scale``, conjugated when ``conjugate`` is set.
    """

    level: int
    theta: float
    q_minus: int
    q_plus: int
    t: np.ndarray
    w: np.ndarray
    idx: np.ndarray
    e: complex
    e_model: float
    z0: complex
    scale: complex
    conjugate: bool
    orbit_length: int

    def __len__(self):
        return len(self.t)

    @property
    def minus_endpoint(self):
        return self._at_index(self.q_plus)

    @property
    def plus_endpoint(self):
        return self.e

    def _at_index(self, j):
        k = np.nonzero(self.idx == j)[0]
        if len(k) == 0:
            raise DomainError(f"orbit index {j} is not a sample of this pair")
        return complex(self.w[k[0]])

    def normalize(self, z):
        w = (np.asarray(z, dtype=complex) - self.z0) / self.scale
        return np.conj(w) if self.conjugate else w

    def branch(self, which):
        """Samples of ``I_-`` (``which='-'``) or ``I_+`` with their images.

        Returns ``(t, w, t_image, w_image)`` for every sample whose image is
        also a sample.
        """
        if which == "-":
            sel, shift = self.t <= 0, self.q_minus
        elif which == "+":
            sel, shift = self.t >= 0, self.q_plus
        else:
            raise DomainError("which must be '-' or '+'")
        pos = {int(j): k for k, j in enumerate(self.idx)}
        src = [k for k in np.nonzero(sel)[0] if int(self.idx[k]) + shift in pos]
        img = [pos[int(self.idx[k]) + shift] for k in src]
        return self.t[src], self.w[src], self.t[img], self.w[img]


def build_pair(orbit, theta, n, min_samples=2) -> CommutingPairSample:
    """Level-``n`` pair ``(f^{q_n}|I_-, f^{q_{n-1}}|I_+)`` from a critical orbit.

    ``orbit`` is an :class:`~hermanlab.ratmap.Orbit` or an array whose entry
    0 is the critical point.
    """
    theta = check_unit_interval(theta)
    n = check_positive_int(n, "n")
    z = _z(orbit)
    qs, eps = _eps_table(theta, n + 1)
    q_minus, q_plus = qs[n + 1], qs[n]
    if len(z) <= qs[n + 2]:
        raise InsufficientOrbit(f"level {n} needs more than q_{n + 1} = {qs[n + 2]} orbit points")
    e_lo, e_hi = eps[n], eps[n + 1]          # eps_{n-1}, eps_n
    x = signed_positions(theta, len(z))
    if abs(x[q_plus] - e_lo) > 1e-9 or abs(x[q_minus] - e_hi) > 1e-9:
        # happens at n = 1 when a_1 = 1: q_0 = q_1 and the endpoints collapse
        raise DomainError(f"level {n} is degenerate for theta={theta!r}")
    lo, hi = min(e_lo, e_hi), max(e_lo, e_hi)
    slack = 1e-12
    members = np.nonzero((x >= lo - slack) & (x <= hi + slack))[0]
    if len(members) < min_samples:
        raise InsufficientOrbit(f"only {len(members)} samples at level {n}")
    t = x[members] / (-e_lo)
    z0 = complex(z[0])
    scale = -(complex(z[q_plus]) - z0)
    if scale == 0:
        raise NumericalError("degenerate normalization: z_{q_{n-1}} equals the critical point")
    conj = n % 2 == 1
    w = (z[members] - z0) / scale
    e = (complex(z[q_minus]) - z0) / scale
    if conj:
        w, e = np.conj(w), e.conjugate()
    order = np.argsort(t, kind="stable")
    t, w, members = t[order], w[order], members[order]
    if np.any(np.diff(t) <= 0):
        raise NumericalError("combinatorial coordinates are not strictly ordered")
    return CommutingPairSample(n, theta, q_minus, q_plus, t, w, members, complex(e),
                               float(e_hi / (-e_lo)), z0, scale, conj, len(z))


def chi_of_pair(pair: CommutingPairSample, max_chi=10**6) -> int:
    """First ``chi`` with ``f_-^{chi+1}(f_+(0))`` in the interior of ``I_+``.

    Positions are tracked combinatorially: ``f_+(0)`` is orbit index
    ``q_{n-1}`` and each ``f_-`` adds ``q_n``.
    """
    theta = pair.theta
    j = pair.q_plus
    qs, eps = _eps_table(theta, pair.level + 1)
    unit = -eps[pair.level]
    tol = 1e-12
    for k in range(1, max_chi + 2):
        j += pair.q_minus
        if j >= pair.orbit_length:
            raise InsufficientOrbit(f"orbit too short to resolve chi at level {pair.level}")
        x = float(j * Fraction(theta) % 1)
        x = x - 1.0 if x > 0.5 else x
        tk = x / unit
        if abs(tk) < tol or abs(tk - pair.e_model) < tol:
            raise InconclusiveInteriorTest(f"f_-^{k}(f_+(0)) sits on the boundary of I_+")
        if 0.0 < tk < pair.e_model:
            return k - 1
    raise InconclusiveInteriorTest(f"no return into I_+ within {max_chi} steps")


def renormalize_pair(pair: CommutingPairSample) -> CommutingPairSample:
    """Renormalization of a sampled pair, reusing its own samples.

    The level ``n+1`` interval runs from ``e`` to ``f_+ f_-^chi (0)`` in old
    coordinates.  Coordinates are rescaled by ``-1/e_model`` and positions by
    the antilinear map ``w -> conj(-w / e)``, which sends ``e`` to ``-1``.
    """
    chi_of_pair(pair)
    qs, eps = _eps_table(pair.theta, pair.level + 2)
    n1 = pair.level + 1
    e_new = eps[n1 + 1] / (-eps[n1])
    t_new = -pair.t / pair.e_model
    keep = (t_new >= -1 - 1e-12) & (t_new <= e_new + 1e-12)
    if keep.sum() < 2:
        raise InsufficientOrbit(f"too few samples survive renormalization at level {pair.level}")
    w_new = np.conj(-pair.w / pair.e)
    order = np.argsort(t_new[keep], kind="stable")
    t_k, w_k, idx_k = t_new[keep][order], w_new[keep][order], pair.idx[keep][order]
    # position of f_-(0) at the new level is orbit index q_{n+1}
    q_minus = qs[n1 + 1]
    hit = np.nonzero(idx_k == q_minus)[0]
    if len(hit):
        e = complex(w_k[hit[0]])
    else:
        raise InsufficientOrbit(f"orbit index {q_minus} missing from the level-{pair.level} samples")
    z0 = pair.z0
    if pair.conjugate:
        scale = -pair.scale * pair.e.conjugate()
    else:
        scale = -pair.scale * pair.e
    return CommutingPairSample(n1, pair.theta, q_minus, pair.q_minus, t_k, w_k, idx_k, e,
                               float(e_new), z0, scale, not pair.conjugate, pair.orbit_length)


def pair_distance(pA: CommutingPairSample, pB: CommutingPairSample, comb_tol=1e-9) -> float:
    """Sup distance between two normalized pairs plus their endpoint gap.

    Samples are matched by nearest combinatorial coordinate; a match is
    rejected when it is farther than half the spacing around the source
    sample.  The result is the larger of the two one-sided sups.
    """
    if abs(pA.e_model - pB.e_model) > comb_tol:
        raise IncompatibleCombinatorics(
            f"levels {pA.level} and {pB.level} have endpoints {pA.e_model} and {pB.e_model}")
    d1 = _one_sided(pA, pB)
    d2 = _one_sided(pB, pA)
    if d1 is None and d2 is None:
        raise IncompatibleCombinatorics("no matching samples")
    d = max(v for v in (d1, d2) if v is not None)
    return float(d + abs(pA.e - pB.e))


def _one_sided(src, dst):
    ts, td = src.t, dst.t
    if len(ts) < 2 or len(td) < 1:
        return None
    k = np.clip(np.searchsorted(td, ts), 1, max(len(td) - 1, 1))
    if len(td) == 1:
        pick = np.zeros(len(ts), dtype=int)
    else:
        left, right = td[k - 1], td[k]
        pick = np.where(np.abs(ts - left) <= np.abs(ts - right), k - 1, k)
    gap = np.abs(td[pick] - ts)
    spacing = np.empty(len(ts))
    d = np.diff(ts)
    spacing[0], spacing[-1] = d[0], d[-1]
    spacing[1:-1] = np.minimum(d[:-1], d[1:])
    ok = gap <= 0.5 * spacing
    if not np.any(ok):
        return None
    return float(np.max(np.abs(src.w[ok] - dst.w[pick[ok]])))


def scaling_ratios(orbit, theta, n_max):
    """``s_n = (z_{q_{n+1}} - z_0)/(z_{q_n} - z_0)`` for n = 1..n_max."""
    return _ratios(orbit, theta, 1, n_max)


def mu_estimate(orbit, theta, p, n_max):
    """``mu_n = (z_{q_{n+p}} - z_0)/(z_{q_n} - z_0)`` for n = 1..n_max."""
    return _ratios(orbit, theta, check_positive_int(p, "p"), n_max)


def _ratios(orbit, theta, p, n_max):
    theta = check_unit_interval(theta)
    n_max = check_positive_int(n_max, "n_max")
    z = _z(orbit)
    q = best_approximants(theta, n_max + p).q
    if q[-1] >= len(z):
        raise InsufficientOrbit(f"need {q[-1] + 1} orbit points, have {len(z)}")
    z0 = z[0]
    return np.array([(z[q[n + p - 1]] - z0) / (z[q[n - 1]] - z0) for n in range(1, n_max + 1)])


@dataclass(frozen=True)
class RenormDiagnostics:
    levels: tuple
    q: tuple
    s: np.ndarray
    mu: np.ndarray
    delta: np.ndarray


def diagnostics(orbit, theta, p, n_min, n_max) -> RenormDiagnostics:
    """Scaling ratios, mu estimates and ``delta_n = dist(R^n, R^{n+p})`` for n_min..n_max."""
    z = _z(orbit)
    levels = tuple(range(n_min, n_max + 1))
    s = scaling_ratios(z, theta, n_max)[n_min - 1:]
    mu = mu_estimate(z, theta, p, n_max)[n_min - 1:]
    pairs = {}
    delta = []
    for n in levels:
        for m in (n, n + p):
            if m not in pairs:
                pairs[m] = build_pair(z, theta, m)
        delta.append(pair_distance(pairs[n], pairs[n + p]))
    q = best_approximants(theta, n_max).q
    return RenormDiagnostics(levels, tuple(q[n - 1] for n in levels), s, mu, np.array(delta))


def check_returns(orbit, theta, levels):
    """Closest returns of the sampled orbit against ``q_1..q_levels``."""
    z = _z(orbit)
    q = best_approximants(theta, levels).q
    if q[-1] >= len(z):
        raise InsufficientOrbit("orbit shorter than q_levels")
    return tuple(closest_returns_orbit(z, q[-1])[:levels]) == tuple(q)


DIAG_HEADER = ("n", "q_n", "re_s", "im_s", "re_mu", "im_mu", "delta")


def diagnostics_table(diag: RenormDiagnostics, stream=None):
    rows = [(n, q, s.real, s.imag, m.real, m.imag, d)
            for n, q, s, m, d in zip(diag.levels, diag.q, diag.s, diag.mu, diag.delta)]
    return write_table(DIAG_HEADER, rows, stream)
