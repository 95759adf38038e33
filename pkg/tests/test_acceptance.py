"""Acceptance criteria 1-13, one check per criterion.

Each check returns ``(passed, detail)``.  Under pytest every criterion is a
test that records a PASS/FAIL line (printed in the terminal summary by
conftest.py); criterion 13 only warns.  ``python3 tests/test_acceptance.py``
runs the same checks without pytest.
"""

import cmath
import gzip
import math
import pathlib
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from hermanlab import cprenorm, ratmap, render, rotnum, sector
from hermanlab.ratmap import Criticality, MapParams
from hermanlab.rotnum import GOLDEN as g
from hermanlab.sector import PowerTriple

C22 = complex(-0.755700, -0.654917)
B32 = complex(-1.144208, -0.964454)
DATA = pathlib.Path(__file__).parent / "data"
RESULTS = []


def record(k, passed, detail, seconds):
    line = f"{'PASS' if passed else 'FAIL'} criterion {k:2d} ({seconds:.1f} s): {detail}"
    RESULTS.append(line)
    print(line)
    return line


def crit_01():
    err = abs(rotnum.r_prm(rotnum.r_prm(g)) - g)
    return err < 1e-12, f"|r_prm^2(g) - g| = {err:.2e}"


def crit_02():
    st = sector.anti_renorm_matrix(g)
    dt = abs(st.t - (3 + math.sqrt(5)) / 2)
    cu, cv = st.matrix.apply_column(-st.u, st.v)
    dv = max(abs(cu + st.u / st.t), abs(cv - st.v / st.t))
    return dt < 1e-10 and dv < 1e-10, f"|t - (3+sqrt5)/2| = {dt:.1e}, |M(-u,v) - (-u,v)/t| = {dv:.1e}"


def crit_03(n_checks=10_000, seed=20261019):
    st = sector.anti_renorm_matrix(g)
    rng = np.random.default_rng(seed)
    bad = []
    for k in range(n_checks):
        n1, n2 = rng.integers(-3, 4, size=2)
        a1, b1, a2, b2 = rng.integers(0, 25, size=4)
        if a1 + b1 == 0 or a2 + b2 == 0:
            a1 += 1
            a2 += 1
        P = PowerTriple(int(n1), int(a1), int(b1))
        if rng.random() < 0.3:
            # same class written one or two levels lower
            Q = sector._descend(P, st, int(rng.integers(1, 3)))
        else:
            Q = PowerTriple(int(n2), int(a2), int(b2))
        iP, iQ = sector.iota(P, st), sector.iota(Q, st)
        NP, NQ = sector.pt_normalize(P, st), sector.pt_normalize(Q, st)
        if abs(sector.iota(NP, st) - iP) > 1e-10 * iP:
            bad.append(("class", P))
        S = sector.pt_add(P, Q, st)
        if abs(sector.iota(S, st) - (iP + iQ)) > 1e-10 * (iP + iQ):
            bad.append(("add", P, Q))
        c = sector.pt_cmp(P, Q, st)
        if abs(iP - iQ) > 1e-9 * max(iP, iQ) and c != (1 if iP > iQ else -1):
            bad.append(("cmp", P, Q))
        same_map = abs(sector.translation_length(P, st) - sector.translation_length(Q, st)) < 1e-9
        if same_map != (NP == NQ):
            bad.append(("action", P, Q))
    return not bad, f"{n_checks} randomized checks, {len(bad)} failures"


def crit_04():
    st = sector.anti_renorm_matrix(g)
    win = sector.enumerate_window(st, 100.0, 10.0)
    b = np.abs(win.b)
    small = b[win.iota <= 0.01].min()
    large = b[win.iota <= 0.1].min()
    return small > large, f"min|b| over iota<=0.01 is {small:.3f}, over iota<=0.1 is {large:.3f}"


def crit_05():
    st = sector.anti_renorm_matrix(g)
    dom = sector.dominant_points(st, 1.0, 500.0)
    # indices 1 and 2 have no earlier gap to be pushed onto; the first pair
    # with a history is i = 3
    found, worst = [], 0.0
    for i in range(3, 13):
        w = sector.dominant_push_witness(dom, i, st, tol=1e-9)
        found.append(w is not None)
        if w is not None:
            worst = max(worst, w.error)
    return all(found), f"{sum(found)}/10 witnesses for i = 3..12, worst error {worst:.1e}"


def crit_06():
    res = ratmap.find_c_bisection(Criticality(2, 2), g, N=2 * 10**5)
    dmod = abs(abs(res.c) - abs(C22))
    darg = abs(cmath.phase(res.c) - cmath.phase(C22))
    ok = dmod < 1e-4 and darg < 1e-4
    return ok, f"c = {res.c.real:.8f}{res.c.imag:+.8f}i, |d mod| = {dmod:.1e}, |d arg| = {darg:.1e}"


def crit_07():
    seq = ratmap.center_sequence(Criticality(3, 2), g, 12)
    qs = [r.q for r in seq]
    lim = ratmap.center_limit(seq)
    ratios = np.abs(lim.ratios)
    geometric = bool(np.all(ratios[2:] < 0.5) and np.all(np.diff(lim.steps) < 0))
    combi = all(ratmap.combinatorial_rotation_check(MapParams(Criticality(3, 2), r.c),
                                                    Fraction(r.p, r.q)).ok for r in seq)
    dist = abs(lim.limit - B32)
    ok = qs[-1] == 233 and geometric and combi and dist < 1e-3
    return ok, (f"q up to {qs[-1]}, step ratio {ratios[-1]:.3f}, combinatorics ok: {combi}, "
                f"|limit - b| = {dist:.1e}")


def crit_08():
    rep = ratmap.combinatorial_rotation_check(MapParams.of(3, 2, B32), g, levels=8)
    return rep.ok, f"closest returns {rep.observed[:8]}"


def _herman():
    return cprenorm.herman_orbit(ratmap.orbit(MapParams.of(3, 2, B32), 4000))


def crit_09():
    d = cprenorm.diagnostics(_herman(), g, 2, 2, 8)
    slope = np.polyfit(np.array(d.levels, dtype=float), np.log(d.delta), 1)[0]
    mono = bool(np.all(np.diff(d.delta) < 0))
    return mono and slope < -0.2, (f"delta = {', '.join(f'{x:.3f}' for x in d.delta)}; "
                                   f"slope {slope:.3f}")


def crit_10():
    mu = cprenorm.mu_estimate(_herman(), g, 2, 10)   # entries n = 1..10
    mu = mu[1:]                                      # n = 2..10
    gaps = np.abs(mu[2:] - mu[:-2])                  # n = 2..8
    ok = bool(np.all(np.abs(mu) < 1) and np.all(np.diff(gaps) < 0))
    return ok, f"max|mu| = {np.abs(mu).max():.3f}, |mu_(n+2) - mu_n| = {', '.join(f'{x:.4f}' for x in gaps)}"


def crit_11():
    worst = 0.0
    for theta in (g, rotnum.SILVER):
        z = cprenorm.rigid_orbit(theta, rotnum.best_approximants(theta, 13).q[-1] + 2)
        pairs = [cprenorm.build_pair(z, theta, n) for n in range(2, 13)]
        for p in pairs:
            # samples of the rotation surrogate are the exact translation pair
            worst = max(worst, float(np.max(np.abs(p.w - p.t))), abs(p.e - p.e_model))
        for a, b in zip(pairs, pairs[1:]):
            (pair, _), = sector.standard_renormalizations(sector.TranslationPair(1.0, a.e_model), 1)
            worst = max(worst, abs(b.e_model - min(pair.u, pair.v) / max(pair.u, pair.v)))
            worst = max(worst, cprenorm.pair_distance(cprenorm.renormalize_pair(a), b))
    return worst < 1e-10, f"largest discrepancy over levels 2..12: {worst:.1e}"


def crit_12():
    params = MapParams.of(3, 2, B32)
    vp = render.ViewPort(0, 6.0, (512, 512))
    cfg = render.RenderConfig(max_iter=2000)
    a = render.render_dynamical(params, vp, cfg)
    b = render.render_dynamical(params, vp, cfg)
    same = render.ppm_bytes(a.rgb) == render.ppm_bytes(b.rgb)
    counts = a.counts()
    with gzip.open(DATA / "julia_32_512.ppm.gz", "rb") as fh:
        golden = fh.read()
    matches = render.ppm_bytes(a.rgb) == golden
    ok = same and counts["neither"] > 0 and matches
    return ok, f"repeatable: {same}, golden file: {matches}, counts {counts}"


def crit_13():
    # zoom about the extrapolated limit of the centers through q = 4181
    seq = ratmap.center_sequence(Criticality(3, 2), g, 18, tol=1e-9)
    c_star = ratmap.center_limit(seq).limit
    scales = [0.05 * 0.11788**k for k in range(4)]
    pairs = render.zoom_probe(Criticality(3, 2), c_star, scales,
                              render.RenderConfig(max_iter=3000, palette="flat"), pixels=128)
    mods = np.array([abs(p.best_lambda) for p in pairs])
    spread = (mods.max() - mods.min()) / mods.mean()
    return spread < 0.10, f"|lambda| = {', '.join(f'{m:.4f}' for m in mods)}, spread {100 * spread:.1f}%"


CRITERIA = [crit_01, crit_02, crit_03, crit_04, crit_05, crit_06, crit_07,
            crit_08, crit_09, crit_10, crit_11, crit_12, crit_13]
WARN_ONLY = {13}


def evaluate(k):
    t0 = time.perf_counter()
    try:
        passed, detail = CRITERIA[k - 1]()
    except Exception as exc:  # an exception is a failed criterion, reported as such
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return passed, record(k, passed, detail, time.perf_counter() - t0)


@pytest.mark.parametrize("k", range(1, 14))
def test_criterion(k):
    passed, line = evaluate(k)
    if k in WARN_ONLY:
        if not passed:
            warnings.warn(line)
        return
    assert passed, line


if __name__ == "__main__":
    failures = 0
    for k in range(1, 14):
        passed, _ = evaluate(k)
        failures += (not passed) and k not in WARN_ONLY
    raise SystemExit(1 if failures else 0)
