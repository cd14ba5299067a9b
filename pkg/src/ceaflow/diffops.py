"""Spectral calculus for periodic samples on a uniform angular grid.

All functions take plain float arrays holding samples at the nodes
``theta_j = 2*pi*j/n``.  Derivatives are taken in coefficient space, so they
are exact (to rounding) for trigonometric polynomials of degree below ``n/2``.

Nonlinear quantities built from derivatives are not band-limited.  The
``fine_derivatives`` / ``project`` pair evaluates them on an oversampled grid
and brings them back, either by plain subsampling (pointwise values) or by
truncating to the original modes (dealiased field for time stepping).
"""

import numpy as np

MAX_ORDER = 6
MAX_S_ORDER = 4
MIN_GRID = 16


def check_grid_size(n):
    if int(n) != n or n < MIN_GRID or n % 2:
        raise ValueError(f"grid size must be an even integer >= {MIN_GRID}, got {n!r}")
    return int(n)


def nodes(n):
    return 2.0 * np.pi * np.arange(n) / n


def wavenumbers(n):
    return np.arange(n // 2 + 1, dtype=float)


def _chop(coef, chop):
    if chop is None:
        return coef
    cut = chop * np.abs(coef).max()
    return np.where(np.abs(coef) < cut, 0.0, coef)


def _multiplier(n, order):
    k = wavenumbers(n)
    mult = (1j * k) ** order
    if order % 2:
        mult[-1] = 0.0
    return mult


def deriv_theta(f, order=1, chop=None):
    """Spectral derivative d^order f / dtheta^order.

    The odd-order derivative of the Nyquist mode is set to zero.  ``chop``
    (relative to the largest coefficient) discards coefficients at rounding
    level before differentiating.
    """
    if order < 1 or order > MAX_ORDER or int(order) != order:
        raise ValueError(f"derivative order must be in 1..{MAX_ORDER}, got {order!r}")
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    coef = _chop(np.fft.rfft(f), chop)
    return np.fft.irfft(coef * _multiplier(n, order), n)


def integrate_theta(f):
    """Periodic trapezoid rule, the integral of f over one turn."""
    f = np.asarray(f, dtype=float)
    return float(f.sum() * (2.0 * np.pi / f.shape[-1]))


def deriv_s(f, r, order=1, chop=None):
    """Derivative with respect to equi-affine arclength, ds = r^(2/3) dtheta.

    Applies ``r^(-2/3) d/dtheta`` ``order`` times.
    """
    if order < 1 or order > MAX_S_ORDER or int(order) != order:
        raise ValueError(f"arclength derivative order must be in 1..{MAX_S_ORDER}, got {order!r}")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("deriv_s needs a positive radius of curvature")
    w = r ** (-2.0 / 3.0)
    out = np.asarray(f, dtype=float)
    for _ in range(order):
        out = w * deriv_theta(out, 1, chop=chop)
    return out


def resample(f, m):
    """Trigonometric interpolation of n samples onto a uniform m-point grid.

    Exact for fields band-limited below n/2.  The Nyquist coefficient is split
    evenly between +n/2 and -n/2 so that the interpolant is real.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    if m == n:
        return f.copy()
    if m < n:
        raise ValueError("resample only refines; use project to coarsen")
    coef = np.fft.rfft(f)
    fine = np.zeros(m // 2 + 1, dtype=complex)
    fine[: n // 2] = coef[: n // 2]
    fine[n // 2] = 0.5 * coef[n // 2]
    return np.fft.irfft(fine, m) * (m / n)


def fine_derivatives(f, orders, m, chop=None):
    """Values of f and its theta-derivatives on an m-point grid.

    Differentiation happens on the original n coefficients, so refining adds no
    rounding noise at the new high wavenumbers.  Returns a list aligned with
    ``orders``; order 0 means f itself.  Works along the last axis.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    coef = _chop(np.fft.rfft(f), chop)
    coef[..., n // 2] = 0.5 * coef[..., n // 2]
    out = []
    for order in orders:
        if order == 0:
            c = coef
        else:
            c = coef * _multiplier(n, order)
        fine = np.zeros(f.shape[:-1] + (m // 2 + 1,), dtype=complex)
        fine[..., : n // 2 + 1] = c
        if m == n:
            fine[..., n // 2] *= 2.0
        out.append(np.fft.irfft(fine, m) * (m / n))
    return out


def project(f_fine, n):
    """Truncate an m-point field to its lowest n modes and sample on n nodes.

    Works along the last axis.
    """
    f_fine = np.asarray(f_fine, dtype=float)
    m = f_fine.shape[-1]
    if m == n:
        return f_fine.copy()
    coef = np.fft.rfft(f_fine)[..., : n // 2 + 1] * (n / m)
    coef[..., n // 2] = 0.0
    return np.fft.irfft(coef, n)


def subsample(f_fine, n):
    """Exact restriction of an m-point field to the coarse nodes (m = q*n)."""
    m = f_fine.shape[-1]
    if m % n:
        raise ValueError("fine grid must be an integer multiple of the coarse grid")
    return np.asarray(f_fine[:: m // n], dtype=float)
