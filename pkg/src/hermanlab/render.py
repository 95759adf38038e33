"""Escape-time pictures of the dynamical and parameter planes, rays, zoom probe.

Pixels are classified by which superattracting basin (0 or infinity) captures
the orbit first; pixels captured by neither within ``max_iter`` iterations are
drawn in a sentinel color.  Images are plain ``(h, w, 3)`` uint8 arrays and are
written as binary PPM so golden files are codec independent.
"""

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from ._csv import write_table
from ._validation import check_complex, check_positive_int, check_positive_real
from .errors import BranchAmbiguity, DomainError, PixelBudgetExceeded
from .ratmap import Criticality, MapParams, verify_critical_structure

NEITHER, BASIN_ZERO, BASIN_INF = 0, 1, 2
MAX_SIDE = 16384
SENTINEL = (200, 24, 24)
ORBIT_COLOR = (255, 255, 255)


@dataclass(frozen=True)
class ViewPort:
    center: complex
    width: float
    pixels: tuple  # (w, h)

    def __post_init__(self):
        object.__setattr__(self, "center", check_complex(self.center, "center"))
        object.__setattr__(self, "width", check_positive_real(self.width, "width"))
        w, h = self.pixels
        w = check_positive_int(w, "pixel width", maximum=MAX_SIDE)
        h = check_positive_int(h, "pixel height", maximum=MAX_SIDE)
        object.__setattr__(self, "pixels", (w, h))

    @property
    def height(self):
        w, h = self.pixels
        return self.width * h / w

    @property
    def pixel_size(self):
        return self.width / self.pixels[0]

    def row(self, i):
        """Complex coordinates of pixel row ``i`` (row 0 at the top)."""
        w, h = self.pixels
        px = self.pixel_size
        x = self.center.real - self.width / 2 + (np.arange(w) + 0.5) * px
        y = self.center.imag + self.height / 2 - (i + 0.5) * px
        return x + 1j * y

    def grid(self, rows=None):
        rows = range(self.pixels[1]) if rows is None else rows
        return np.array([self.row(i) for i in rows])

    def to_pixel(self, z):
        """Integer ``(row, col)`` of a point, or None when outside."""
        px = self.pixel_size
        col = math.floor((z.real - (self.center.real - self.width / 2)) / px)
        row = math.floor(((self.center.imag + self.height / 2) - z.imag) / px)
        w, h = self.pixels
        if 0 <= row < h and 0 <= col < w:
            return row, col
        return None


@dataclass(frozen=True)
class RenderConfig:
    """Rendering constants.

    ``r_zero``/``r_inf`` are the capture radii of the basins of 0 and
    infinity; ``palette`` names an entry of PALETTES; ``overlay_orbit``
    draws that many points of the critical orbit; ``max_pixels`` guards
    memory.
    """

    max_iter: int = 500
    r_zero: float = 1e-3
    r_inf: float = 1e3
    palette: str = "default"
    overlay_orbit: int = 0
    max_pixels: int = 2**25
    threads: int = 0  # 0: HERMANLAB_THREADS or the number of processors

    def __post_init__(self):
        check_positive_int(self.max_iter, "max_iter")
        if not 0.0 < self.r_zero < 1.0 < self.r_inf:
            raise DomainError("capture radii must satisfy 0 < r_zero < 1 < r_inf")
        if self.palette not in PALETTES:
            raise DomainError(f"unknown palette {self.palette!r}")
        if self.overlay_orbit < 0:
            raise DomainError("overlay_orbit must be nonnegative")


@dataclass(frozen=True)
class RenderResult:
    rgb: np.ndarray        # (h, w, 3) uint8
    classes: np.ndarray    # (h, w) uint8: NEITHER, BASIN_ZERO, BASIN_INF
    smooth: np.ndarray     # (h, w) float, smoothed capture time (nan for NEITHER)

    def counts(self):
        return {name: int(np.count_nonzero(self.classes == k))
                for name, k in (("neither", NEITHER), ("zero", BASIN_ZERO), ("inf", BASIN_INF))}


def worker_count(config=None):
    if config is not None and config.threads:
        return int(config.threads)
    env = os.environ.get("HERMANLAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"HERMANLAB_THREADS must be an integer, got {env!r}") from None
        if n >= 1:
            return n
    return os.cpu_count() or 1


# -- iteration kernels -----------------------------------------------------

def _escape(z, c, crit, config):
    """Iterate ``F_c`` on arrays; ``c`` is a scalar or an array like ``z``.

    Returns ``(classes, smooth)``.  Captured points are dropped from the
    working set so the cost follows the number of live pixels.
    """
    num = [float(a) for a in crit.num[::-1]]
    den = [float(a) for a in crit.den[::-1]]
    shape = z.shape
    z = z.ravel().astype(complex)
    c_arr = np.broadcast_to(np.asarray(c, dtype=complex), shape).ravel()
    cls = np.zeros(z.size, dtype=np.uint8)
    smooth = np.full(z.size, np.nan)
    live = np.arange(z.size)
    zl, cl = z.copy(), c_arr.copy()
    lz, li = math.log(config.r_zero), math.log(config.r_inf)
    ld0, ldi = math.log(crit.d0), math.log(crit.dinf)
    with np.errstate(all="ignore"):
        for k in range(config.max_iter + 1):
            a = np.abs(zl)
            hit0 = a < config.r_zero
            hit_inf = (a > config.r_inf) | ~np.isfinite(a)
            done = hit0 | hit_inf
            if np.any(done):
                i0 = live[hit0]
                cls[i0] = BASIN_ZERO
                a0 = np.maximum(a[hit0], 1e-300)
                smooth[i0] = k - np.log(np.log(a0) / lz) / ld0
                ii = live[hit_inf]
                cls[ii] = BASIN_INF
                ai = a[hit_inf]
                fin = np.isfinite(ai)
                val = np.full(ai.shape, float(k))
                val[fin] = k - np.log(np.log(ai[fin]) / li) / ldi
                smooth[ii] = val
                keep = ~done
                live, zl, cl = live[keep], zl[keep], cl[keep]
            if live.size == 0 or k == config.max_iter:
                break
            p = num[0]
            for coef in num[1:]:
                p = p * zl + coef
            q = den[0]
            for coef in den[1:]:
                q = q * zl + coef
            zl = -cl * p / q
    return cls.reshape(shape), smooth.reshape(shape)


def _palette_default(cls, smooth):
    s = np.where(np.isnan(smooth), 0.0, smooth)
    u = np.mod(np.log1p(np.maximum(s, 0.0)) * 0.6, 1.0)
    rgb = np.zeros(cls.shape + (3,), dtype=np.uint8)
    m0 = cls == BASIN_ZERO
    rgb[m0, 0] = (20 + 60 * u[m0]).astype(np.uint8)
    rgb[m0, 1] = (60 + 140 * u[m0]).astype(np.uint8)
    rgb[m0, 2] = (140 + 115 * u[m0]).astype(np.uint8)
    mi = cls == BASIN_INF
    rgb[mi, 0] = (150 + 105 * u[mi]).astype(np.uint8)
    rgb[mi, 1] = (110 + 120 * u[mi]).astype(np.uint8)
    rgb[mi, 2] = (20 + 60 * u[mi]).astype(np.uint8)
    rgb[cls == NEITHER] = SENTINEL
    return rgb


def _palette_gray(cls, smooth):
    s = np.where(np.isnan(smooth), 0.0, smooth)
    u = np.mod(np.log1p(np.maximum(s, 0.0)) * 0.6, 1.0)
    g = (40 + 200 * u).astype(np.uint8)
    rgb = np.repeat(g[..., None], 3, axis=-1)
    rgb[cls == NEITHER] = SENTINEL
    return rgb


def _palette_flat(cls, smooth):
    """One color per class; escape-time shading would drift between zoom levels."""
    rgb = np.zeros(cls.shape + (3,), dtype=np.uint8)
    rgb[cls == BASIN_ZERO] = (40, 110, 200)
    rgb[cls == BASIN_INF] = (230, 190, 60)
    rgb[cls == NEITHER] = SENTINEL
    return rgb


PALETTES = {"default": _palette_default, "gray": _palette_gray, "flat": _palette_flat}


def _render(viewport, config, kernel):
    w, h = viewport.pixels
    if w * h > config.max_pixels:
        raise PixelBudgetExceeded(f"{w}x{h} pixels exceed the budget of {config.max_pixels}")
    workers = max(1, min(worker_count(config), h))
    block = max(1, math.ceil(h / (4 * workers)))
    blocks = [range(s, min(s + block, h)) for s in range(0, h, block)]

    def job(rows):
        return kernel(viewport.grid(rows))

    if workers == 1:
        parts = [job(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))  # map keeps row-major order
    cls = np.concatenate([p[0] for p in parts])
    smooth = np.concatenate([p[1] for p in parts])
    return cls, smooth


def render_dynamical(params: MapParams, viewport: ViewPort, config: RenderConfig = RenderConfig()):
    """Basins of 0 and infinity of ``F_c`` in the given window."""
    cls, smooth = _render(viewport, config, lambda z: _escape(z, params.c, params.crit, config))
    rgb = PALETTES[config.palette](cls, smooth)
    if config.overlay_orbit:
        _overlay(rgb, params, viewport, config)
    return RenderResult(rgb, cls, smooth)


def _overlay(rgb, params, viewport, config):
    from .ratmap import orbit
    orb = orbit(params, config.overlay_orbit, r_zero=config.r_zero, r_inf=config.r_inf)
    for z in orb.z:
        pix = viewport.to_pixel(complex(z))
        if pix is not None:
            rgb[pix] = ORBIT_COLOR


def render_parameter(crit: Criticality, viewport: ViewPort, config: RenderConfig = RenderConfig()):
    """Parameter plane: each pixel ``c`` is classified by the fate of the orbit of 1."""
    def kernel(cgrid):
        z = np.ones_like(cgrid)
        return _escape(z, cgrid, crit, config)

    cls, smooth = _render(viewport, config, kernel)
    return RenderResult(PALETTES[config.palette](cls, smooth), cls, smooth)


def ppm_bytes(rgb) -> bytes:
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DomainError("expected an (h, w, 3) image")
    h, w, _ = rgb.shape
    return b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes()


def write_ppm(path, rgb):
    data = ppm_bytes(rgb)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6" or parts[3] != b"255":
        raise DomainError(f"{path} is not an 8-bit binary PPM")
    w, h = int(parts[1]), int(parts[2])
    pix = np.frombuffer(parts[4][: w * h * 3], dtype=np.uint8)
    return pix.reshape(h, w, 3)


# -- external rays -----------------------------------------------------------

@dataclass(frozen=True)
class RayTrace:
    """External ray approximated by inverse iteration.

    ``points`` are samples at Boettcher radii ``rho0 ** (d ** -u)`` for
    ``u = 0, 1/substeps, ..., depth``.  ``F`` maps sample ``k`` of this ray to
    sample ``k`` of ``parent`` (the ray of angle ``d * angle``) shifted by
    one unit of ``u``; ``head`` holds the linearized samples for
    ``u`` in ``[-1, 0)``.
    """

    basin: str
    angle: float
    depth: int
    substeps: int
    points: np.ndarray
    head: np.ndarray
    parent: "RayTrace" = field(default=None, repr=False)
    collisions: tuple = ()


def _bottcher_slope(params, basin):
    """``lambda`` with ``lambda**(deg-1) = kappa`` for the leading coefficient ``kappa``."""
    crit, c = params.crit, params.c
    d = crit.d
    if basin == "0":
        kappa = -c * comb(d, crit.d0) * (-1) ** crit.d0
        return kappa ** (1.0 / (crit.d0 - 1)), crit.d0
    kappa = -c * (-1) ** crit.dinf / comb(d, crit.d0 - 1)
    # in the chart zeta = 1/z the map is zeta -> zeta^dinf / kappa
    return (1.0 / kappa) ** (1.0 / (crit.dinf - 1)), crit.dinf


def _preimages(params, w):
    """All solutions of ``F_c(z) = w``: roots of ``c N(z) + w D(z)``."""
    crit = params.crit
    d = crit.d
    den = np.zeros(d + 1, dtype=complex)
    den[: crit.d0] = crit.den
    poly = params.c * crit.num + w * den
    return np.roots(poly[::-1])


def trace_ray(params: MapParams, basin, angle, depth, substeps=8, rho0=1e-3, ambiguity=0.9):
    """External ray of ``angle`` in the basin ``"0"`` or ``"inf"``.

    The ray of angle ``d**depth * angle`` is seeded on the small Boettcher
    circle of radius ``rho0`` with the linear approximation ``b = lambda z``
    (``lambda w`` in the chart ``w = 1/z`` at infinity).  It is then pulled
    back ``depth`` times; along each pullback the preimage branch is the one
    nearest the previous sample, in ``substeps`` steps per unit of depth.
    A step whose two nearest preimages are within the ratio ``ambiguity``
    raises BranchAmbiguity.
    """
    basin = str(basin)
    if basin in ("oo", "infinity"):
        basin = "inf"
    if basin not in ("0", "inf"):
        raise DomainError("basin must be '0' or 'inf'")
    depth = check_positive_int(depth, "depth")
    substeps = check_positive_int(substeps, "substeps")
    verify_critical_structure(params)
    lam, deg = _bottcher_slope(params, basin)
    chart = (lambda z: z) if basin == "0" else (lambda z: 1.0 / z)
    t = float(angle) % 1.0

    def head(theta):
        u = np.arange(-substeps, 0) / substeps
        r = rho0 ** (deg ** (-u))
        b = r * np.exp(2j * math.pi * theta)
        zeta = b / lam
        return chart(zeta) if basin == "inf" else zeta

    angles = [(t * deg ** k) % 1.0 for k in range(depth + 1)][::-1]
    trace = RayTrace(basin, angles[0], 0, substeps, np.zeros(0, dtype=complex), head(angles[0]))
    for j in range(1, depth + 1):
        theta = angles[j]
        parent = trace
        targets = np.concatenate([parent.head, parent.points])
        guess0 = rho0 * cmath.exp(2j * math.pi * theta) / lam
        prev = chart(guess0) if basin == "inf" else guess0
        out = []
        collisions = list(parent.collisions)
        for k, w in enumerate(targets):
            roots = _preimages(params, w)
            dist = np.abs(chart(roots) - chart(prev))
            order = np.argsort(dist)
            if len(order) > 1 and dist[order[0]] > ambiguity * dist[order[1]]:
                raise BranchAmbiguity(f"two preimages equidistant at pullback {j}, sample {k}",
                                      step=(j, k))
            if len(order) > 1 and abs(roots[order[0]] - roots[order[1]]) < 1e-8:
                collisions.append((j, k))
            prev = roots[order[0]]
            out.append(prev)
        pts = np.array(out)
        trace = RayTrace(basin, theta, j, substeps, pts, head(theta), parent, tuple(collisions))
    return trace


def ray_residual(params: MapParams, trace: RayTrace) -> float:
    """Largest ``|F(points_k) - parent sample|`` over the traced samples."""
    from .ratmap import eval_F
    if trace.parent is None:
        return 0.0
    targets = np.concatenate([trace.parent.head, trace.parent.points])
    img = eval_F(params, trace.points)
    return float(np.max(np.abs(img - targets[: len(img)]) / np.maximum(1.0, np.abs(targets[: len(img)]))))


# -- zoom probe --------------------------------------------------------------

@dataclass(frozen=True)
class ZoomPair:
    scale_i: float
    scale_j: float
    best_lambda: complex
    score: float


def _luminance(result: RenderResult):
    rgb = result.rgb.astype(float)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def _bilinear(img, rows, cols):
    h, w = img.shape
    r = np.clip(rows, 0, h - 1.000001)
    c = np.clip(cols, 0, w - 1.000001)
    r0, c0 = np.floor(r).astype(int), np.floor(c).astype(int)
    fr, fc = r - r0, c - c0
    return ((1 - fr) * (1 - fc) * img[r0, c0] + (1 - fr) * fc * img[r0, c0 + 1]
            + fr * (1 - fc) * img[r0 + 1, c0] + fr * fc * img[r0 + 1, c0 + 1])


def _ncc(a, b):
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(np.sum(a * a)) * float(np.sum(b * b)))
    if den == 0.0:
        return 1.0 if np.allclose(a, b) else 0.0
    return float(np.clip(np.sum(a * b) / den, -1.0, 1.0))


def zoom_probe(crit: Criticality, c_star, scales, config: RenderConfig = RenderConfig(palette="flat"),
               pixels=96, moduli=None, phases=32, disk=0.7):
    """Best complex self-similarity factor between successive zoom windows.

    Window ``i`` has width ``scales[i]`` about ``c_star``.  A factor
    ``lambda`` predicts ``image_{i+1}(c* + x) = image_i(c* + x / lambda)``;
    the prediction is scored by normalized cross-correlation of luminance
    over a central disk.  Windows are drawn with the ``flat`` palette
    unless ``config`` names another one explicitly.  Candidate moduli are ``scales[i+1]/scales[i]``
    times ``moduli`` (default a grid around 1 that contains 1); phases are
    ``2 pi k / phases``.
    """
    c_star = check_complex(c_star, "c_star")
    scales = [check_positive_real(s, "scale") for s in scales]
    if len(scales) < 2:
        raise DomainError("need at least two scales")
    if any(b > a for a, b in zip(scales, scales[1:])):
        raise DomainError("scales must be non-increasing")
    if moduli is None:
        moduli = np.exp(np.linspace(math.log(0.8), math.log(1.25), 11))
    moduli = np.unique(np.append(np.asarray(moduli, dtype=float), 1.0))
    images = [_luminance(render_parameter(crit, ViewPort(c_star, s, (pixels, pixels)), config))
              for s in scales]
    # pixel centres in window units, x in [-1, 1]
    u = (np.arange(pixels) + 0.5) / pixels * 2 - 1
    X, Y = np.meshgrid(u, -u)
    inside = X ** 2 + Y ** 2 <= disk ** 2
    pts = (X + 1j * Y)[inside]
    out = []
    for i in range(len(scales) - 1):
        base = scales[i + 1] / scales[i]
        target = images[i + 1][inside]
        best = (-2.0, 1.0 + 0j)
        for m in moduli:
            for k in range(phases):
                lam = base * m * cmath.exp(2j * math.pi * k / phases)
                src = pts * (base / lam)        # window-i units
                cols = (src.real + 1) / 2 * pixels - 0.5
                rows = (1 - src.imag) / 2 * pixels - 0.5
                score = _ncc(_bilinear(images[i], rows, cols), target)
                if score > best[0] + 1e-12:
                    best = (score, lam)
        out.append(ZoomPair(scales[i], scales[i + 1], best[1], best[0]))
    return out


ZOOM_HEADER = ("scale_i", "scale_j", "best_lambda_re", "best_lambda_im", "score")


def zoom_table(pairs, stream=None):
    rows = [(p.scale_i, p.scale_j, p.best_lambda.real, p.best_lambda.imag, p.score) for p in pairs]
    return write_table(ZOOM_HEADER, rows, stream)
