"""Unimodular linear maps acting on support functions, and length normalization.

A convex body K mapped by T has support function
h_TK(u) = |T^T u| h_K(T^T u / |T^T u|).  The right side needs h off the grid,
which :func:`apply` gets from the trigonometric interpolant of the samples.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import minimize

from . import _kernels, diffops
from .curve import SupportCurve

UNIMODULAR_TOL = 1e-12
TIE_RTOL = 1e-13


@dataclass(frozen=True)
class SL2Transform:
    """The matrix [[a, b], [c, d]] with determinant 1."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, float(getattr(self, name)))
        det = self.a * self.d - self.b * self.c
        if not abs(det - 1.0) <= UNIMODULAR_TOL:
            raise ValueError(f"transform is not unimodular (det = {det!r})")

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, phi):
        c, s = math.cos(phi), math.sin(phi)
        return cls(c, -s, s, c)

    @classmethod
    def from_matrix(cls, mat):
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (2, 2):
            raise ValueError("expected a 2x2 matrix")
        return cls(mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1])

    @classmethod
    def from_params(cls, m, phi):
        """R(phi) diag(e^m, e^-m) R(-phi): stretch by e^m along direction phi."""
        return cls.from_matrix(_stretch_matrix(m * math.cos(2 * phi), m * math.sin(2 * phi)))

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def is_identity(self):
        return (self.a, self.b, self.c, self.d) == (1.0, 0.0, 0.0, 1.0)

    def __matmul__(self, other):
        if not isinstance(other, SL2Transform):
            return NotImplemented
        return SL2Transform.from_matrix(self.matrix @ other.matrix)

    def inverse(self):
        return SL2Transform(self.d, -self.b, -self.c, self.a)


def _stretch_matrix(x, y):
    # exp of the traceless symmetric matrix [[x, y], [y, -x]]
    m = math.hypot(x, y)
    sinhc = math.sinh(m) / m if m > 0 else 1.0
    ch = math.cosh(m)
    return np.array([[ch + sinhc * x, sinhc * y], [sinhc * y, ch - sinhc * x]])


def apply(t, curve):
    """Support function of the image of ``curve`` under ``t``.

    Raises :class:`~ceaflow.curve.ConvexityError` if interpolation noise on an
    under-resolved image makes it fail the convexity check.
    """
    if t.is_identity:
        return SupportCurve(curve.h, curve.grid)
    n = curve.n
    th = curve.theta
    # rows of T^T u for every node direction u
    vx = t.a * np.cos(th) + t.c * np.sin(th)
    vy = t.b * np.cos(th) + t.d * np.sin(th)
    norm = np.hypot(vx, vy)
    angles = np.mod(np.arctan2(vy, vx), 2.0 * np.pi)
    coef = np.fft.rfft(curve.h) / n
    h_out = norm * _kernels.trig_eval(coef, n, angles)
    return SupportCurve(h_out, curve.grid).require_convex()


def euclidean_length(curve):
    """Perimeter by Cauchy's formula, the integral of h over one turn."""
    return diffops.integrate_theta(curve.h)


def _length_objective(curve):
    """Perimeter of A(x, y) applied to ``curve`` without building the image.

    The tangent at normal angle theta is r(theta) (-sin, cos), so the image's
    perimeter is the integral of r |A t| d theta.
    """
    r = curve.radius_of_curvature
    tx, ty = -np.sin(curve.theta), np.cos(curve.theta)
    w = 2.0 * np.pi / curve.n

    def f(x, y):
        A = _stretch_matrix(x, y)
        return w * float(np.sum(r * np.hypot(A[0, 0] * tx + A[0, 1] * ty, A[1, 0] * tx + A[1, 1] * ty)))

    return f


@dataclass(frozen=True)
class NormalizationResult:
    transform: SL2Transform
    normalized: SupportCurve
    euclidean_length: float
    roundness: float
    m: float
    phi: float


def roundness(curve):
    h = curve.h
    return float((h.max() - h.min()) / h.mean())


def normalize(curve, m_max=3.0, grid=32, tol=1e-10):
    """Unimodular stretch minimizing the Euclidean perimeter of the image.

    A ``grid`` x ``grid`` scan over m in [0, m_max] and phi in [0, pi) seeds a
    Nelder-Mead refinement in the coordinates (m cos 2phi, m sin 2phi), where
    the objective is smooth even at m = 0.  If the identity is at least as good
    as the refined point (up to rounding) it is returned with phi = 0.
    """
    if not m_max > 0:
        raise ValueError("m_max must be positive")
    f = _length_objective(curve)
    ms = np.linspace(0.0, m_max, grid)
    phis = np.linspace(0.0, np.pi, grid, endpoint=False)
    best = (math.inf, 0.0, 0.0)
    for m in ms:
        for phi in phis:
            val = f(m * math.cos(2 * phi), m * math.sin(2 * phi))
            if val < best[0]:  # strict: the first (m, phi) wins ties
                best = (val, m, phi)
            if m == 0.0:
                break  # phi is irrelevant at m = 0
    _, m0, phi0 = best
    x0 = np.array([m0 * math.cos(2 * phi0), m0 * math.sin(2 * phi0)])
    step = m_max / (grid - 1)
    simplex = np.array([x0, x0 + [step, 0.0], x0 + [0.0, step]])
    res = minimize(
        lambda p: f(p[0], p[1]),
        x0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": tol, "fatol": tol * 1e-2, "maxiter": 20000},
    )
    x, y = res.x
    m = math.hypot(x, y)
    f_id = f(0.0, 0.0)
    # gains at rounding level do not justify leaving the identity
    if f_id <= res.fun + TIE_RTOL * f_id or m == 0.0:
        m, phi = 0.0, 0.0
    else:
        phi = (0.5 * math.atan2(y, x)) % math.pi
    if m > m_max:
        raise ValueError(f"length minimizer lies outside m <= {m_max} (m = {m:.3g})")
    t = SL2Transform.from_params(m, phi) if m > 0 else SL2Transform.identity()
    out = apply(t, curve)
    return NormalizationResult(
        transform=t,
        normalized=out,
        euclidean_length=euclidean_length(out),
        roundness=roundness(out),
        m=m,
        phi=phi,
    )
