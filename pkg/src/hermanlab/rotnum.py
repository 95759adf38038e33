"""Continued fractions, convergents and rotation-number maps.

Everything here is pure arithmetic on a single irrational ``theta`` in (0, 1).
Partial quotients are read off the exact binary value of the float, so the
expansion is the true expansion of the double; the caller decides how deep
that is meaningful.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ._validation import check_positive_int, check_unit_interval
from .errors import ConvergentOverflow, DomainError, RationalWithinResolution

MAX_DEPTH = 64
TERM_LIMIT = 10**9
REMAINDER_FLOOR = 1e-15
INT64_MAX = 2**63 - 1

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class ContinuedFraction:
    terms: tuple
    value: float

    def __post_init__(self):
        if any(a < 1 for a in self.terms):
            raise DomainError("partial quotients must be >= 1")

    @property
    def depth(self):
        return len(self.terms)


@dataclass(frozen=True)
class Convergents:
    """Convergents ``p[k]/q[k]`` for k = 1..n (index 0 of each list is k=1)."""

    p: tuple
    q: tuple

    def __len__(self):
        return len(self.q)

    def fractions(self):
        return [Fraction(a, b) for a, b in zip(self.p, self.q)]


@dataclass(frozen=True)
class RotationClass:
    theta: float
    kind: str  # "periodic", "pre-periodic", "bounded" or "unbounded"
    terms: tuple
    gauss_period: Optional[int] = None
    preperiod: Optional[int] = None
    prm_period: Optional[int] = None

    @property
    def is_bounded(self):
        return self.kind in ("bounded", "pre-periodic", "periodic")


def cf_expand(theta, depth, max_depth=MAX_DEPTH) -> ContinuedFraction:
    """Partial quotients ``a_1..a_depth`` of ``theta = [0; a_1, a_2, ...]``.

    Raises
    ------
    RationalWithinResolution
        If a remainder drops below ``1e-15`` or a term exceeds ``1e9`` before
        ``depth`` terms are produced.
    """
    x = check_unit_interval(theta)
    depth = check_positive_int(depth, "depth", maximum=max_depth)
    rem = Fraction(x)
    terms = []
    for k in range(depth):
        if rem < REMAINDER_FLOOR:
            raise RationalWithinResolution(
                f"rational within resolution: theta={x!r} terminates after {k} terms")
        inv = 1 / rem
        a = math.floor(inv)
        if a > TERM_LIMIT:
            raise RationalWithinResolution(
                f"rational within resolution: term {k + 1} of theta={x!r} exceeds {TERM_LIMIT}")
        terms.append(int(a))
        rem = inv - a
    return ContinuedFraction(tuple(terms), cf_value(terms))


def cf_value(terms: Sequence[int]) -> float:
    """Value of the finite continued fraction ``[0; a_1, ..., a_n]``."""
    if len(terms) == 0:
        raise DomainError("need at least one partial quotient")
    acc = Fraction(0)
    for a in reversed(terms):
        if a < 1:
            raise DomainError("partial quotients must be >= 1")
        acc = 1 / (a + acc)
    return float(acc)


def periodic_cf_value(period: Sequence[int]) -> float:
    """Value of the purely periodic expansion ``[0; period, period, ...]``.

    Solves ``q_{p-1} x^2 + (q_p - p_{p-1}) x - p_p = 0`` for its positive root.
    """
    period = [int(a) for a in period]
    if not period or any(a < 1 for a in period):
        raise DomainError("period must be a non-empty list of positive integers")
    p_prev, p_cur = 1, 0
    q_prev, q_cur = 0, 1
    for a in period:
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
    A, B, C = q_prev, q_cur - p_prev, -p_cur
    disc = B * B - 4 * A * C
    return (-B + math.sqrt(disc)) / (2 * A)


def _convergents_from_terms(terms, check_overflow=True):
    p_prev, p_cur = 1, 0
    q_prev, q_cur = 0, 1
    ps, qs = [], []
    for k, a in enumerate(terms, start=1):
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if check_overflow and q_cur > INT64_MAX:
            raise ConvergentOverflow(f"q_{k} = {q_cur} exceeds 2^63-1")
        ps.append(p_cur)
        qs.append(q_cur)
    return Convergents(tuple(ps), tuple(qs))


def best_approximants(theta, n) -> Convergents:
    """First ``n`` convergents of ``theta``.

    ``theta`` may also be a :class:`ContinuedFraction` or a sequence of partial
    quotients, which avoids re-expanding a float.
    """
    n = check_positive_int(n, "n", maximum=MAX_DEPTH)
    if isinstance(theta, ContinuedFraction):
        terms = theta.terms
    elif isinstance(theta, (list, tuple)):
        terms = tuple(int(a) for a in theta)
    else:
        terms = cf_expand(theta, n).terms
    if len(terms) < n:
        raise DomainError(f"need {n} partial quotients, have {len(terms)}")
    return _convergents_from_terms(terms[:n])


def convergent_errors(theta, n):
    """Signed errors ``q_k theta - p_k`` for k = -1..n as a float array.

    Entry 0 is k=-1 (value -1), entry 1 is k=0 (value theta).
    """
    conv = best_approximants(theta, n)
    out = [-1.0, float(theta)]
    for p, q in zip(conv.p, conv.q):
        out.append(q * theta - p)
    return np.array(out)


def gauss(theta) -> float:
    """Gauss map ``theta -> {1/theta}``."""
    x = check_unit_interval(theta)
    inv = 1.0 / x
    y = inv - math.floor(inv)
    if y < REMAINDER_FLOOR:
        raise RationalWithinResolution(f"gauss({x!r}) lands on the rational boundary 0")
    return y


def r_prm(theta) -> float:
    """Prime renormalization of a rotation number."""
    x = check_unit_interval(theta, closed_left=True)
    if x < 0.5:
        return x / (1.0 - x)
    return 2.0 - 1.0 / x


def r_prm_period(theta, max_m=64, tol=1e-9) -> Optional[int]:
    """Smallest ``m <= max_m`` with ``|r_prm^m(theta) - theta| < tol``, else None."""
    x0 = check_unit_interval(theta)
    max_m = check_positive_int(max_m, "max_m")
    x = x0
    for m in range(1, max_m + 1):
        x = r_prm(x)
        if abs(x - x0) < tol:
            return m
    return None


def reliable_depth(theta, limit=2**24, max_depth=MAX_DEPTH):
    """Number of leading partial quotients of a double that describe theta.

    Terms are trusted while ``q_k`` stays below ``limit``; past that point the
    rounding error of the double, amplified by ``q_k**2``, can flip a term.
    """
    x = check_unit_interval(theta)
    rem = Fraction(x)
    q_prev, q_cur = 0, 1
    k = 0
    while k < max_depth and rem >= REMAINDER_FLOOR:
        inv = 1 / rem
        a = math.floor(inv)
        if a > TERM_LIMIT:
            break
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if q_cur > limit:
            break
        rem = inv - a
        k += 1
    return k


def _smallest_period(seq, start=0, min_reps=2):
    n = len(seq) - start
    for p in range(1, n // min_reps + 1):
        if all(seq[i] == seq[i + p] for i in range(start, len(seq) - p)):
            return p
    return None


def rotation_class(theta, depth=None, bound=1000) -> RotationClass:
    """Classify ``theta`` as periodic, pre-periodic, bounded or unbounded type.

    Only the first ``depth`` partial quotients are inspected (default: the
    reliable depth of the double), so the verdict is "at truncation depth".
    """
    x = check_unit_interval(theta)
    if depth is None:
        depth = max(4, reliable_depth(x))
    terms = cf_expand(x, depth).terms
    p = _smallest_period(terms)
    if p is not None:
        total = sum(terms[:p])
        # a sector renormalization period is a sum of partial quotients
        m = r_prm_period(x, max_m=max(2 * total, 2))
        return RotationClass(x, "periodic", terms, gauss_period=p, preperiod=0, prm_period=m)
    for start in range(1, len(terms) // 2):
        p = _smallest_period(terms, start=start)
        if p is not None:
            return RotationClass(x, "pre-periodic", terms, gauss_period=p, preperiod=start)
    kind = "bounded" if max(terms) <= bound else "unbounded"
    return RotationClass(x, kind, terms)


def smallest_even_gauss_period(theta, depth=None) -> int:
    """Smallest even period of ``theta`` under the Gauss map (periodic type only)."""
    rc = rotation_class(theta, depth=depth)
    if rc.kind != "periodic":
        raise DomainError(f"theta={theta!r} is not of periodic type at truncation depth")
    p = rc.gauss_period
    return p if p % 2 == 0 else 2 * p


def closest_returns_rotation(theta, N):
    """Closest-return times of the rigid rotation by ``theta`` up to time ``N``.

    A time ``q`` qualifies when ``dist(q*theta, Z)`` is strictly smaller than at
    every earlier time, so of two tied candidates the earlier one wins.
    ``theta`` may be a :class:`fractions.Fraction` for exact rational rotations.
    """
    N = check_positive_int(N, "N", maximum=10**6)
    if isinstance(theta, Fraction):
        p, q = theta.numerator % theta.denominator, theta.denominator
        best = None
        out = []
        for j in range(1, N + 1):
            r = (j * p) % q
            d = min(r, q - r)
            if best is None or d < best:
                best = d
                out.append(j)
                if d == 0:
                    break
        return out
    x = check_unit_interval(theta)
    j = np.arange(1, N + 1, dtype=np.float64)
    y = j * x
    dist = np.abs(y - np.rint(y))
    running = np.minimum.accumulate(dist)
    rec = np.ones(N, dtype=bool)
    rec[1:] = dist[1:] < running[:-1]
    return [int(t) for t in np.nonzero(rec)[0] + 1]


def signed_positions(theta, n):
    """Signed offsets ``j*theta - round(j*theta)`` for j = 0..n-1.

    ``theta`` is split into a 26-bit head and a tail, so ``j*head`` and its
    rounding are exact for ``n <= 2**27``; the result carries one rounding.
    """
    if n > 2**27:
        raise DomainError(f"at most 2**27 positions, got {n}")
    x = float(theta)
    c = 134217729.0 * x
    head = c - (c - x)
    tail = x - head
    j = np.arange(n, dtype=np.float64)
    y = j * head
    return (y - np.rint(y)) + j * tail


_NAMED = {"golden": GOLDEN, "silver": SILVER}


def theta_from_string(text) -> float:
    """Parse ``golden``, ``silver``, a decimal, or ``cf:a1,a2,...``.

    A ``cf:`` list is read as one period of a purely periodic expansion.
    """
    s = str(text).strip().lower()
    if s in _NAMED:
        return _NAMED[s]
    if s.startswith("cf:"):
        try:
            period = [int(tok) for tok in s[3:].split(",") if tok.strip()]
        except ValueError as exc:
            raise DomainError(f"bad continued fraction list: {text!r}") from exc
        return periodic_cf_value(period)
    try:
        value = float(s)
    except ValueError as exc:
        raise DomainError(f"cannot parse rotation number {text!r}") from exc
    return check_unit_interval(value)
