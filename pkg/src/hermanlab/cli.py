"""Command line front end.

Exit codes: 0 success, 1 numerical failure (one ``error: <Kind>: message``
line on stderr), 2 usage error.
"""

import argparse
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import cprenorm, ratmap, render, rotnum, sector
from ._csv import write_table
from .errors import CenterSequenceError, DomainError, HermanLabError, NumericalError

COMPLEX_OPTIONS = ("--c", "--center", "--c-star")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)
    out: str = None


# -- value parsers (range checks happen at parse time) -----------------------

def _theta(text):
    try:
        return rotnum.theta_from_string(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _complex(text):
    s = text.strip().replace(" ", "")
    try:
        if "," in s:
            re_, im_ = s.split(",")
            return complex(float(re_), float(im_))
        return complex(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse complex value {text!r}") from None


def _bounded_int(lo, hi=None):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < lo or (hi is not None and v > hi):
            raise argparse.ArgumentTypeError(f"{v} outside [{lo}, {hi if hi is not None else 'inf'}]")
        return v
    return parse


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _pixels(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"pixels must look like 512x512, got {text!r}") from None
    if not (1 <= w <= render.MAX_SIDE and 1 <= h <= render.MAX_SIDE):
        raise argparse.ArgumentTypeError(f"pixel sides must lie in [1, {render.MAX_SIDE}]")
    return (w, h)


def _scales(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scale list {text!r}") from None
    if len(vals) < 2 or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("need at least two positive scales")
    return vals


def _angle(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError("angle must lie in [0, 1)")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser():
    p = _Parser(prog="hermanlab", description="Herman curves of a rational map family: rotation numbers, parameters, renormalization, pictures.")
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", help="output file (default: stdout for tables)")
        return sp

    def crit(sp, d0=3, dinf=2):
        sp.add_argument("--d0", type=_bounded_int(2, 64), default=d0)
        sp.add_argument("--dinf", type=_bounded_int(2, 64), default=dinf)

    sp = add("cf", "continued fraction and convergents")
    sp.add_argument("--theta", type=_theta, required=True)
    sp.add_argument("--depth", type=_bounded_int(1, rotnum.MAX_DEPTH), default=10)

    sp = add("rotnum", "classification, r_prm and Gauss map of a rotation number")
    sp.add_argument("--theta", type=_theta, required=True)
    sp.add_argument("--max-m", type=_bounded_int(1, 10**4), default=64)

    sp = add("sector", "anti-renormalization matrix of a periodic-type rotation number")
    sp.add_argument("--theta", type=_theta, required=True)
    sp.add_argument("--max-m", type=_bounded_int(1, 10**4), default=64)

    sp = add("cascade", "dominant points of the translation cascade")
    sp.add_argument("--theta", type=_theta, required=True)
    sp.add_argument("--x-max", type=_positive, default=100.0)
    sp.add_argument("--iota-max", type=_positive, default=10.0)
    sp.add_argument("--budget", type=_bounded_int(1), default=500_000)

    sp = add("find-herman", "Herman parameter on the unit circle by bisection (d0 = dinf)")
    crit(sp, 2, 2)
    sp.add_argument("--theta", type=_theta, required=True)
    sp.add_argument("--tol", type=_positive, default=1e-6)
    sp.add_argument("--iterations", type=_bounded_int(10**4, 10**8), default=2 * 10**5)

    sp = add("centers", "Newton centers along the convergents")
    crit(sp)
    sp.add_argument("--theta", type=_theta, required=True)
    sp.add_argument("--n-max", type=_bounded_int(1, 40), default=12)
    sp.add_argument("--tol", type=_positive, default=1e-12)

    sp = add("renorm", "commuting-pair diagnostics along the critical orbit")
    crit(sp)
    sp.add_argument("--c", type=_complex, required=True)
    sp.add_argument("--theta", type=_theta, required=True)
    sp.add_argument("--p", type=_bounded_int(1, 64), default=None,
                    help="period for mu (default: smallest even Gauss period)")
    sp.add_argument("--n-min", type=_bounded_int(1, 60), default=2)
    sp.add_argument("--n-max", type=_bounded_int(1, 60), default=8)
    sp.add_argument("--length", type=_bounded_int(10, 10**7), default=20000)

    for name, what in (("render-julia", "dynamical plane"), ("render-param", "parameter plane")):
        sp = add(name, f"render the {what} as binary PPM")
        crit(sp)
        if name == "render-julia":
            sp.add_argument("--c", type=_complex, required=True)
            sp.add_argument("--center", type=_complex, default=0j)
            sp.add_argument("--width", type=_positive, default=6.0)
            sp.add_argument("--overlay", type=_bounded_int(0, 10**6), default=0)
        else:
            sp.add_argument("--center", type=_complex, default=complex(-1.144208, -0.964454))
            sp.add_argument("--width", type=_positive, default=0.05)
        sp.add_argument("--pixels", type=_pixels, default=(512, 512))
        sp.add_argument("--max-iter", type=_bounded_int(1, 10**6), default=500)
        sp.add_argument("--r-zero", type=_positive, default=1e-3)
        sp.add_argument("--r-inf", type=_positive, default=1e3)
        sp.add_argument("--palette", choices=sorted(render.PALETTES), default="default")

    sp = add("trace-ray", "external ray by inverse iteration")
    crit(sp)
    sp.add_argument("--c", type=_complex, required=True)
    sp.add_argument("--basin", choices=("0", "inf"), default="0")
    sp.add_argument("--angle", type=_angle, default=0.0)
    sp.add_argument("--depth", type=_bounded_int(1, 60), default=10)
    sp.add_argument("--substeps", type=_bounded_int(1, 1000), default=8)

    sp = add("zoom-probe", "self-similarity factor between parameter-plane zooms")
    crit(sp)
    sp.add_argument("--c-star", type=_complex, required=True)
    sp.add_argument("--scales", type=_scales, required=True)
    sp.add_argument("--pixels", type=_bounded_int(8, 2048), default=96)
    sp.add_argument("--max-iter", type=_bounded_int(1, 10**6), default=1000)
    sp.add_argument("--phases", type=_bounded_int(1, 1024), default=32)
    return p


def _merge_complex(argv):
    """Glue ``--c -1.1,-0.9`` into ``--c=-1.1,-0.9`` so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in COMPLEX_OPTIONS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def parse_args(argv) -> RunConfig:
    """Validated configuration; raises UsageError on any bad input."""
    ns = _build_parser().parse_args(_merge_complex(list(argv)))
    if ns.subcommand is None:
        raise UsageError("hermanlab: a subcommand is required")
    opts = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "out")}
    if ns.subcommand in ("render-julia", "render-param") and ns.out is None:
        raise UsageError(f"hermanlab {ns.subcommand}: --out is required")
    if "r_zero" in opts and not opts["r_zero"] < 1.0 < opts["r_inf"]:
        raise UsageError("capture radii must satisfy r_zero < 1 < r_inf")
    if ns.subcommand == "find-herman" and opts["d0"] != opts["dinf"]:
        raise UsageError("find-herman needs d0 == dinf")
    if ns.subcommand == "renorm" and opts["n_min"] > opts["n_max"]:
        raise UsageError("n-min must not exceed n-max")
    if ns.subcommand == "zoom-probe" and any(b > a for a, b in zip(opts["scales"], opts["scales"][1:])):
        raise UsageError("scales must be non-increasing")
    return RunConfig(ns.subcommand, opts, ns.out)


# -- subcommands -------------------------------------------------------------

def _cmd_cf(o):
    cf = rotnum.cf_expand(o["theta"], o["depth"])
    conv = rotnum.best_approximants(cf, o["depth"])
    rows = [(k, a, p, q) for k, (a, p, q) in enumerate(zip(cf.terms, conv.p, conv.q), start=1)]
    return ("k", "a_k", "p_k", "q_k"), rows


def _cmd_rotnum(o):
    th = o["theta"]
    rc = rotnum.rotation_class(th)
    prm = rotnum.r_prm_period(th, o["max_m"])
    try:
        g = rotnum.gauss(th)
    except NumericalError:
        g = None
    row = (th, rc.kind, rc.gauss_period, prm, rotnum.r_prm(th), g, rotnum.reliable_depth(th))
    return ("theta", "kind", "gauss_period", "prm_period", "r_prm", "gauss", "reliable_depth"), [row]


def _cmd_sector(o):
    st = sector.anti_renorm_matrix(o["theta"], max_m=o["max_m"])
    m = st.matrix
    row = (m.m11, m.m12, m.m21, m.m22, st.t, st.weights[0], st.weights[1], st.period, " ".join(st.branches))
    return ("m11", "m12", "m21", "m22", "t", "w1", "w2", "period", "branches"), [row]


def _cmd_cascade(o):
    st = sector.anti_renorm_matrix(o["theta"])
    dom = sector.dominant_points(st, o["x_max"], o["iota_max"], budget=o["budget"])
    rows = [(d.triple.n, d.triple.a, d.triple.b, d.iota, d.b) for d in dom]
    return sector.DOMINANT_HEADER, rows


def _cmd_find_herman(o):
    crit = ratmap.Criticality(o["d0"], o["dinf"])
    r = ratmap.find_c_bisection(crit, o["theta"], tol=o["tol"], N=o["iterations"])
    return ("re_c", "im_c", "s", "rho"), [(r.c.real, r.c.imag, r.s, r.rho)]


def _cmd_centers(o):
    crit = ratmap.Criticality(o["d0"], o["dinf"])
    cs = ratmap.center_sequence(crit, o["theta"], o["n_max"], tol=o["tol"])
    return ratmap.CENTER_HEADER, [(r.n, r.q, r.c.real, r.c.imag, r.residual) for r in cs]


def _cmd_renorm(o):
    params = ratmap.MapParams.of(o["d0"], o["dinf"], o["c"])
    p = o["p"] or rotnum.smallest_even_gauss_period(o["theta"])
    orb = ratmap.orbit(params, o["length"])
    z = cprenorm.herman_orbit(orb)
    d = cprenorm.diagnostics(z, o["theta"], p, o["n_min"], o["n_max"])
    rows = [(n, q, s.real, s.imag, m.real, m.imag, dd)
            for n, q, s, m, dd in zip(d.levels, d.q, d.s, d.mu, d.delta)]
    return cprenorm.DIAG_HEADER, rows


def _render_config(o):
    return render.RenderConfig(max_iter=o["max_iter"], r_zero=o["r_zero"], r_inf=o["r_inf"],
                               palette=o["palette"], overlay_orbit=o.get("overlay", 0))


def _cmd_render_julia(o):
    params = ratmap.MapParams.of(o["d0"], o["dinf"], o["c"])
    vp = render.ViewPort(o["center"], o["width"], o["pixels"])
    return render.render_dynamical(params, vp, _render_config(o))


def _cmd_render_param(o):
    crit = ratmap.Criticality(o["d0"], o["dinf"])
    vp = render.ViewPort(o["center"], o["width"], o["pixels"])
    return render.render_parameter(crit, vp, _render_config(o))


def _cmd_trace_ray(o):
    params = ratmap.MapParams.of(o["d0"], o["dinf"], o["c"])
    tr = render.trace_ray(params, o["basin"], o["angle"], o["depth"], substeps=o["substeps"])
    return ("k", "re_z", "im_z"), [(k, z.real, z.imag) for k, z in enumerate(tr.points)]


def _cmd_zoom_probe(o):
    crit = ratmap.Criticality(o["d0"], o["dinf"])
    cfg = render.RenderConfig(max_iter=o["max_iter"], palette="flat")
    pairs = render.zoom_probe(crit, o["c_star"], o["scales"], cfg, pixels=o["pixels"], phases=o["phases"])
    return render.ZOOM_HEADER, [(p.scale_i, p.scale_j, p.best_lambda.real, p.best_lambda.imag, p.score)
                                for p in pairs]


COMMANDS = {
    "cf": _cmd_cf, "rotnum": _cmd_rotnum, "sector": _cmd_sector, "cascade": _cmd_cascade,
    "find-herman": _cmd_find_herman, "centers": _cmd_centers, "renorm": _cmd_renorm,
    "render-julia": _cmd_render_julia, "render-param": _cmd_render_param,
    "trace-ray": _cmd_trace_ray, "zoom-probe": _cmd_zoom_probe,
}


def _emit_table(header, rows, out, stdout):
    text = write_table(header, rows)
    if out is None:
        stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _fail(stderr, exc):
    msg = str(exc).replace("\n", " ")
    stderr.write(f"error: {type(exc).__name__}: {msg}\n")


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        with np.errstate(all="ignore"):
            result = COMMANDS[config.subcommand](config.options)
        if isinstance(result, render.RenderResult):
            render.write_ppm(config.out, result.rgb)
            counts = result.counts()
            stdout.write(write_table(("neither", "zero", "inf"),
                                     [(counts["neither"], counts["zero"], counts["inf"])]))
        else:
            _emit_table(*result, config.out, stdout)
        return 0
    except CenterSequenceError as exc:
        rows = [(r.n, r.q, r.c.real, r.c.imag, r.residual) for r in exc.partial]
        try:
            _emit_table(ratmap.CENTER_HEADER, rows, config.out, stdout)
        except OSError:
            pass
        _fail(stderr, exc)
        return 1
    except DomainError as exc:
        _fail(stderr, exc)
        return 2
    except (HermanLabError, OSError, ArithmeticError) as exc:
        _fail(stderr, exc)
        return 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
