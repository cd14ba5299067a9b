"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The active implementation is chosen once at import time from the
``CEAFLOW_BACKEND`` environment variable (``numba`` or ``numpy``).  When the
variable is unset numba is used if it can be imported.  Both variants are
always importable as ``<name>_numpy`` / ``<name>_numba`` so that tests and the
benchmark can compare them directly.
"""

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _select_backend():
    requested = os.environ.get("CEAFLOW_BACKEND", "").strip().lower()
    if requested in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if requested not in ("numba", "numpy"):
        raise ValueError(f"CEAFLOW_BACKEND must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        raise ImportError("CEAFLOW_BACKEND=numba but numba is not installed")
    return requested


BACKEND = _select_backend()


# --- support-function PDE right-hand side ---------------------------------


def expanded_rhs_numpy(h, h1, h2, h3, h4):
    r = h2 + h
    c = np.cbrt(r)
    r43 = r * c
    r73 = r * r43
    r103 = r * r73
    g = h3 + h1
    return (
        -h * (h4 + h2) / (3.0 * r73)
        + 4.0 * h * g * g / (9.0 * r103)
        + h / r43
        - 1.0 / c
    )


def _expanded_rhs_loop(h, h1, h2, h3, h4):
    n = h.shape[0]
    out = np.empty(n)
    for i in range(n):
        r = h2[i] + h[i]
        c = np.cbrt(r)
        r43 = r * c
        r73 = r * r43
        r103 = r * r73
        g = h3[i] + h1[i]
        out[i] = (
            -h[i] * (h4[i] + h2[i]) / (3.0 * r73)
            + 4.0 * h[i] * g * g / (9.0 * r103)
            + h[i] / r43
            - 1.0 / c
        )
    return out


def jacobian_coeffs_numpy(h, h1, h2, h3, h4):
    """Partial derivatives of the expanded RHS with respect to h and its
    first four theta-derivatives.

    Returns (d0, ..., d4); the linearization acting on a perturbation v is
    the sum of d_j times the j-th derivative of v.
    """
    r = h2 + h
    c = np.cbrt(r)
    r43 = r * c
    r73 = r * r43
    r103 = r * r73
    r133 = r * r103
    g = h3 + h1
    a = h / (3.0 * r73)
    b = 8.0 * h * g / (9.0 * r103)
    # derivative through r = h'' + h
    d_r = (
        7.0 / 9.0 * h * (h4 + h2) / r103
        - 40.0 / 27.0 * h * g * g / r133
        - 4.0 / 3.0 * h / r73
        + 1.0 / (3.0 * r43)
    )
    d0 = -(h4 + h2) / (3.0 * r73) + 4.0 * g * g / (9.0 * r103) + 1.0 / r43 + d_r
    return d0, b, d_r - a, b.copy(), -a


def _jacobian_coeffs_loop(h, h1, h2, h3, h4):
    n = h.shape[0]
    d0 = np.empty(n)
    d1 = np.empty(n)
    d2 = np.empty(n)
    d3 = np.empty(n)
    d4 = np.empty(n)
    for i in range(n):
        r = h2[i] + h[i]
        c = np.cbrt(r)
        r43 = r * c
        r73 = r * r43
        r103 = r * r73
        r133 = r * r103
        g = h3[i] + h1[i]
        a = h[i] / (3.0 * r73)
        b = 8.0 * h[i] * g / (9.0 * r103)
        d_r = (
            7.0 / 9.0 * h[i] * (h4[i] + h2[i]) / r103
            - 40.0 / 27.0 * h[i] * g * g / r133
            - 4.0 / 3.0 * h[i] / r73
            + 1.0 / (3.0 * r43)
        )
        d0[i] = -(h4[i] + h2[i]) / (3.0 * r73) + 4.0 * g * g / (9.0 * r103) + 1.0 / r43 + d_r
        d1[i] = b
        d2[i] = d_r - a
        d3[i] = b
        d4[i] = -a
    return d0, d1, d2, d3, d4


# --- off-grid evaluation of a real trigonometric series --------------------


def trig_eval_numpy(coef, n, angles):
    """Evaluate the trigonometric interpolant with rfft coefficients ``coef``.

    ``coef`` is ``rfft(values) / n`` for ``n`` samples on the uniform grid.
    The Nyquist mode contributes ``Re(c) cos(n x / 2)``.
    """
    half = n // 2
    k = np.arange(1, half)
    phase = np.exp(1j * np.outer(angles, k))
    out = coef[0].real + 2.0 * (phase @ coef[1:half]).real
    out += coef[half].real * np.cos(half * angles)
    return out


def _trig_eval_loop(coef, n, angles):
    half = n // 2
    m = angles.shape[0]
    out = np.empty(m)
    for j in range(m):
        x = angles[j]
        step = complex(np.cos(x), np.sin(x))
        z = step
        acc = 0.0
        for k in range(1, half):
            acc += (coef[k] * z).real
            z *= step
        out[j] = coef[0].real + 2.0 * acc + coef[half].real * np.cos(half * x)
    return out


if HAVE_NUMBA:
    expanded_rhs_numba = numba.njit(cache=True, fastmath=False)(_expanded_rhs_loop)
    trig_eval_numba = numba.njit(cache=True, fastmath=False)(_trig_eval_loop)
    jacobian_coeffs_numba = numba.njit(cache=True, fastmath=False)(_jacobian_coeffs_loop)
else:  # pragma: no cover
    expanded_rhs_numba = None
    trig_eval_numba = None
    jacobian_coeffs_numba = None


if BACKEND == "numba":
    expanded_rhs = expanded_rhs_numba
    trig_eval = trig_eval_numba
    jacobian_coeffs = jacobian_coeffs_numba
else:
    expanded_rhs = expanded_rhs_numpy
    trig_eval = trig_eval_numpy
    jacobian_coeffs = jacobian_coeffs_numpy
