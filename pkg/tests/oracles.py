"""Independent reference implementations used by the tests.

Nothing here imports the package.  Each routine is the slow, obvious
version of something the package does fast.
"""

from fractions import Fraction
import math


def cf_exact(x: Fraction, n):
    """Partial quotients of an exact rational by Euclid's algorithm."""
    out = []
    for _ in range(n):
        if x == 0:
            break
        x = 1 / x
        a = math.floor(x)
        out.append(a)
        x -= a
    return out


def value_of_terms(terms):
    acc = Fraction(0)
    for a in reversed(terms):
        acc = 1 / (a + acc)
    return acc


def denominators(terms):
    q = [0, 1]
    for a in terms:
        q.append(a * q[-1] + q[-2])
    return q[2:]


def closest_returns_brute(theta, N):
    """Record times of dist(j*theta, Z), strict improvement."""
    best = math.inf
    out = []
    for j in range(1, N + 1):
        y = j * theta
        d = abs(y - round(y))
        if d < best:
            best = d
            out.append(j)
    return out


def dominant_brute(points):
    """O(N^2) dominance over ``(iota, b)`` pairs with iota > 0.

    ``b_P`` is dominant when no other point with smaller iota lies on the
    closed segment between 0 and ``b_P``.
    """
    out = []
    for io, b in points:
        ok = True
        for io2, b2 in points:
            if io2 < io and min(0.0, b) <= b2 <= max(0.0, b) and b2 != 0.0:
                ok = False
                break
        if ok:
            out.append((io, b))
    return sorted(out)


def rprm_exact(x: Fraction):
    return x / (1 - x) if x < Fraction(1, 2) else 2 - 1 / x
