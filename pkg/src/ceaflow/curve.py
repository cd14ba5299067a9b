"""Support-function representation of strictly convex closed curves."""

from dataclasses import dataclass, field
import warnings

import numpy as np

from . import diffops


@dataclass(frozen=True)
class AngularGrid:
    n: int

    def __post_init__(self):
        object.__setattr__(self, "n", diffops.check_grid_size(self.n))

    @property
    def theta(self):
        return diffops.nodes(self.n)


@dataclass(frozen=True, eq=False)
class SupportCurve:
    """Samples of the Euclidean support function h on a uniform angular grid.

    The sample array is copied and frozen on construction.  Construction does
    not enforce convexity; call :func:`validate` or :meth:`require_convex`.
    """

    h: np.ndarray
    grid: AngularGrid = field(default=None)

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim != 1:
            raise ValueError("support samples must be a 1-d array")
        grid = self.grid if self.grid is not None else AngularGrid(h.shape[0])
        if grid.n != h.shape[0]:
            raise ValueError(f"grid has {grid.n} nodes but h has {h.shape[0]} samples")
        if not np.all(np.isfinite(h)):
            raise ValueError("support samples must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "grid", grid)

    @property
    def n(self):
        return self.grid.n

    @property
    def theta(self):
        return self.grid.theta

    @property
    def radius_of_curvature(self):
        return diffops.deriv_theta(self.h, 2) + self.h

    def require_convex(self):
        report = validate(self)
        if not report.convex:
            raise ConvexityError(
                f"curve is not strictly convex about the origin "
                f"(min h = {report.min_h:.3g}, min r = {report.min_r:.3g})"
            )
        return self


class ConvexityError(ValueError):
    """The support function does not describe a strictly convex curve around 0."""


@dataclass(frozen=True)
class CurveSpec:
    """Recipe for an initial curve.

    ``kind`` is ``circle`` (uses ``radius``), ``ellipse`` (``a``, ``b``) or
    ``fourier`` (``base`` with cosine/sine amplitudes of the harmonics
    cos(2k theta), sin(2k theta), k = 1, 2, ...).  A fourier spec without
    explicit amplitudes draws ``harmonics`` random pairs from ``seed``.
    """

    kind: str = "circle"
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    base: float = 1.0
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    seed: int = None
    harmonics: int = 4
    amplitude: float = 0.1

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse", "fourier"):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        object.__setattr__(self, "cos_coeffs", tuple(float(x) for x in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(x) for x in self.sin_coeffs))


@dataclass(frozen=True)
class CurveReport:
    min_h: float
    min_r: float
    mean_r: float
    symmetry_defect: float

    @property
    def convex(self):
        return self.min_h > 0 and self.min_r > 0

    @property
    def symmetric(self):
        return self.symmetry_defect <= 1e-12 * max(1.0, abs(self.min_h))


def make_circle(R, n):
    if not R > 0:
        raise ValueError(f"circle radius must be positive, got {R!r}")
    grid = AngularGrid(n)
    return SupportCurve(np.full(grid.n, float(R)), grid)


def make_ellipse(a, b, n):
    """Origin-centred ellipse with semi-axes a (along x) and b (along y).

    Raises :class:`ConvexityError` when the grid is too coarse for the axis
    ratio, so that the spectral radius of curvature goes negative.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"ellipse semi-axes must be positive, got {a!r}, {b!r}")
    grid = AngularGrid(n)
    if a == b:
        return SupportCurve(np.full(grid.n, float(a)), grid)
    th = _half_nodes(grid)
    half = np.sqrt((a * np.cos(th)) ** 2 + (b * np.sin(th)) ** 2)
    return SupportCurve(np.concatenate((half, half)), grid).require_convex()


def _half_nodes(grid):
    # values at theta and theta + pi are computed once and tiled, so origin
    # symmetric constructions are symmetric bit for bit
    return grid.theta[: grid.n // 2]


def _fourier_parts(th, cos_coeffs, sin_coeffs):
    """Perturbation p(theta) and its contribution to r/base, both unscaled."""
    p = np.zeros_like(th)
    q = np.zeros_like(th)
    for k, (ak, bk) in enumerate(zip(cos_coeffs, sin_coeffs), start=1):
        term = ak * np.cos(2 * k * th) + bk * np.sin(2 * k * th)
        p += term
        q += (1 - 4 * k * k) * term
    return p, q


def random_coefficients(rng, harmonics=4, amplitude=0.1):
    """Gaussian amplitudes decaying like 1/k^2 for the harmonics cos/sin(2k theta)."""
    k = np.arange(1, harmonics + 1)
    a = amplitude * rng.standard_normal(harmonics) / k**2
    b = amplitude * rng.standard_normal(harmonics) / k**2
    return tuple(a.tolist()), tuple(b.tolist())


def make_fourier(spec, n, min_r_fraction=0.1):
    """h = base (1 + sum_k a_k cos 2k theta + b_k sin 2k theta), damped to convexity.

    If the raw amplitudes violate min r >= min_r_fraction * mean r they are
    multiplied by the largest factor in [0, 1] (found by bisection) that
    restores it.  Only even harmonics are used, so the result is origin
    symmetric sample-for-sample.
    """
    if spec.kind != "fourier":
        raise ValueError(f"make_fourier needs a fourier spec, got kind={spec.kind!r}")
    if not spec.base > 0:
        raise ValueError(f"fourier base radius must be positive, got {spec.base!r}")
    cos_c, sin_c = spec.cos_coeffs, spec.sin_coeffs
    if not cos_c and not sin_c and spec.seed is not None:
        cos_c, sin_c = random_coefficients(
            np.random.Generator(np.random.PCG64(spec.seed)), spec.harmonics, spec.amplitude
        )
    m = max(len(cos_c), len(sin_c))
    cos_c = tuple(cos_c) + (0.0,) * (m - len(cos_c))
    sin_c = tuple(sin_c) + (0.0,) * (m - len(sin_c))

    grid = AngularGrid(n)
    p, q = _fourier_parts(_half_nodes(grid), cos_c, sin_c)

    # mean r = base for every scale factor, so the test is min(1 + s q) >= frac
    def ok(s):
        return (1.0 + s * q).min() >= min_r_fraction

    scale = 1.0
    if not ok(1.0):
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        scale = lo
    half = spec.base * (1.0 + scale * p)
    return SupportCurve(np.concatenate((half, half)), grid)


def from_spec(spec, n):
    if spec.kind == "circle":
        return make_circle(spec.radius, n)
    if spec.kind == "ellipse":
        return make_ellipse(spec.a, spec.b, n)
    return make_fourier(spec, n)


def embed(curve):
    """Points gamma = h z + h_theta z_theta, returned as an (n, 2) array."""
    th = curve.theta
    h = curve.h
    h1 = diffops.deriv_theta(h, 1)
    c, s = np.cos(th), np.sin(th)
    return np.column_stack((h * c - h1 * s, h * s + h1 * c))


def shoelace_area(points):
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def validate(curve, warn=False):
    """Report min h, min and mean r, and the origin-symmetry defect."""
    h = curve.h
    r = curve.radius_of_curvature
    half = curve.n // 2
    report = CurveReport(
        min_h=float(h.min()),
        min_r=float(r.min()),
        mean_r=float(r.mean()),
        symmetry_defect=float(np.abs(h - np.roll(h, -half)).max()),
    )
    if warn and not report.symmetric:
        warnings.warn(
            f"curve is not origin symmetric (defect {report.symmetry_defect:.3g}); "
            "convergence results assume symmetric data",
            stacklevel=2,
        )
    return report
