"""Time integration of the fourth-order support-function flow.

The support function evolves by

    h_t = -(h h'''' + h h'') / (3 r^(7/3)) + 4 h (h''' + h')^2 / (9 r^(10/3))
          + h / r^(4/3) - 1 / r^(1/3),        r = h'' + h,

which equals -r^(-1/3) sigma_ss.  Two linearly implicit Euler schemes are
available.  ``rosenbrock`` (the default) solves with the dense Jacobian of the
dealiased RHS, so stiff modes are damped at their own local rate even on very
eccentric curves.  ``stabilized`` treats only -c h'''' implicitly, with the
constant c = max h / (3 r^(7/3)), and needs just a diagonal solve per mode.
Both have F = 0 as an exact fixed point.  :func:`run` pairs one full step
with two half steps, uses their difference as the local error estimate and
keeps the Richardson combination 2*half - full, which is second order in
time.
"""

from dataclasses import dataclass, field, fields
import functools
import logging
import math

import numpy as np
import scipy.linalg

from . import _kernels, affine, diffops
from .curve import ConvexityError, SupportCurve, validate

log = logging.getLogger(__name__)

DEALIAS = 2
# near rest the raw speed is dominated by the rounding plateau of h's spectrum
# (about 1e-17, amplified by k^4); the convergence test ignores that plateau
SPEED_CHOP = 1e-16
SPEED_GATE = 1e-6

ROSENBROCK = "rosenbrock"
STABILIZED = "stabilized"
SCHEMES = (ROSENBROCK, STABILIZED)


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


@dataclass(frozen=True)
class FlowParams:
    t_end: float = 20.0
    dt_init: float = 1e-4
    dt_min: float = 1e-10
    dt_max: float = 0.05
    safety: float = 0.9
    r_floor: float = 0.05
    stop_energy: float = 1e-10
    step_tol: float = 1e-7
    dealias: bool = True
    max_steps: int = 2_000_000
    scheme: str = ROSENBROCK

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not (0 < self.safety <= 1):
            raise ValueError("safety factor must lie in (0, 1]")
        if not (0 < self.r_floor < 0.5):
            raise ValueError("r_floor must lie in (0, 0.5)")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.step_tol > 0:
            raise ValueError("step_tol must be positive")
        _check_scheme(self.scheme)


# --- right-hand side ---------------------------------------------------------


def _expanded_fine(h, m, chop=None):
    """Expanded RHS and the stabilization constant on an m-point grid."""
    H, H1, H2, H3, H4 = diffops.fine_derivatives(h, (0, 1, 2, 3, 4), m, chop=chop)
    r = H2 + H
    if np.any(r <= 0) or np.any(H <= 0):
        raise ConvexityError(f"lost strict convexity (min h = {H.min():.3g}, min r = {r.min():.3g})")
    F = _kernels.expanded_rhs(H, H1, H2, H3, H4)
    c = float(np.max(H / (3.0 * r * r * np.cbrt(r))))
    return F, c


def _grid_factor(oversample, dealias=True):
    if oversample is None:
        return DEALIAS if dealias else 1
    if int(oversample) != oversample or oversample < 1:
        raise ValueError("oversample must be a positive integer")
    return int(oversample)


def rhs(curve, form="expanded", oversample=None, project=True, chop=None):
    """Normal speed h_t of the flow at ``curve``, as a field on its nodes.

    ``form`` selects the expanded fourth-order formula or the compact
    -r^(-1/3) sigma_ss.  The nonlinear terms are evaluated on a grid
    ``oversample`` times finer (default 2).  With ``project`` the fine field
    is truncated to the curve's own modes (dealiasing); otherwise its values at
    the nodes are returned.  ``chop`` discards Fourier coefficients of h
    below that fraction of the largest before anything else: rounding noise in
    the samples reaches the RHS multiplied by k^4, so comparisons between
    formulas are best made on the band-limited curve.
    """
    n = curve.n
    q = _grid_factor(oversample)
    if form == "expanded":
        F, _ = _expanded_fine(curve.h, q * n, chop=chop)
    elif form == "compact":
        fine = affine._fine_fields(curve, q, chop=chop)
        F = -fine.sigma_ss / np.cbrt(fine.r)
    else:
        raise ValueError(f"unknown rhs form {form!r}")
    if q == 1:
        return F
    return diffops.project(F, n) if project else diffops.subsample(F, n)


# --- one step ----------------------------------------------------------------


@functools.lru_cache(maxsize=8)
def _operators(n, m):
    """Dense maps for the linearization: derivative-then-refine (m x n, orders
    0..4), projection back to n modes (n x m) and k^4."""
    eye = np.eye(n)
    refine = [d.T.copy() for d in diffops.fine_derivatives(eye, range(5), m)]
    proj = diffops.project(np.eye(m), n).T.copy() if m != n else np.eye(n)
    return refine, proj, diffops.wavenumbers(n) ** 4


class _Linearization:
    """Projected RHS at a state, plus what the implicit part of a step needs.

    ``c`` is the frozen stabilization constant; ``jac`` (Rosenbrock only) is the
    Jacobian of the dealiased RHS, assembled with the same refine / project
    pair as the RHS itself so both act identically on the highest modes.
    """

    def __init__(self, h, n, m, scheme, with_jacobian=True):
        H = diffops.fine_derivatives(h, (0, 1, 2, 3, 4), m)
        r = H[2] + H[0]
        if np.any(r <= 0) or np.any(H[0] <= 0):
            raise ConvexityError(f"lost strict convexity (min h = {H[0].min():.3g}, min r = {r.min():.3g})")
        F = _kernels.expanded_rhs(*H)
        self.F = diffops.project(F, n) if m != n else F
        self.sup = float(np.abs(self.F).max())
        self.c = float(np.max(H[0] / (3.0 * r * r * np.cbrt(r))))
        self.jac = None
        self._lu = {}
        if scheme == ROSENBROCK and with_jacobian:
            refine, proj, _ = _operators(n, m)
            coeffs = _kernels.jacobian_coeffs(*H)
            G = coeffs[0][:, None] * refine[0]
            for d, E in zip(coeffs[1:], refine[1:]):
                G += d[:, None] * E
            self.jac = proj @ G

    def factor(self, dt):
        # I - dt J, factored once per step size
        if dt not in self._lu:
            n = self.jac.shape[0]
            self._lu[dt] = scipy.linalg.lu_factor(np.eye(n) - dt * self.jac, check_finite=False)
        return self._lu[dt]


def _advance(h, F, lin, dt, k4, symmetric):
    """h + dt * (implicit update) in coefficient space, then mode cleanup."""
    h_hat = np.fft.rfft(h)
    if lin.jac is not None:
        d = scipy.linalg.lu_solve(lin.factor(dt), dt * F, check_finite=False)
        out = h_hat + np.fft.rfft(d)
    else:
        # (1 + dt c k^4) h_new = h + dt (F + c h''''), with h'''' <-> k^4 h_hat
        c = lin.c
        out = (h_hat + dt * (np.fft.rfft(F) + c * k4 * h_hat)) / (1.0 + dt * c * k4)
    # the projected RHS has no Nyquist component, so nothing would damp it
    out[-1] = 0.0
    if symmetric:
        out[1::2] = 0.0
    return np.fft.irfft(out, h.shape[0])


def resolved_speed(h, n, dealias=True):
    """sup |h_t| with rounding-level coefficients of h discarded first."""
    m = (DEALIAS if dealias else 1) * n
    H = diffops.fine_derivatives(h, (0, 1, 2, 3, 4), m, chop=SPEED_CHOP)
    F = _kernels.expanded_rhs(*H)
    Fn = diffops.project(F, n) if m != n else F
    return float(np.abs(Fn).max())


def _check_convex(h):
    r = diffops.deriv_theta(h, 2) + h
    if h.min() <= 0 or r.min() <= 0:
        raise ConvexityError(f"lost strict convexity (min h = {h.min():.3g}, min r = {r.min():.3g})")
    return r


def step(curve, dt, dealias=True, symmetric=False, scheme=ROSENBROCK):
    """One linearly implicit Euler step of size dt.

    ``scheme="stabilized"`` treats only -c h'''' implicitly, with c the largest
    value of h / (3 r^(7/3)); ``"rosenbrock"`` uses the full Jacobian of the
    RHS.  Raises :class:`ConvexityError` if the result is not strictly convex;
    the input curve is never modified.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    _check_scheme(scheme)
    n = curve.n
    m = (DEALIAS if dealias else 1) * n
    lin = _Linearization(curve.h, n, m, scheme)
    k4 = diffops.wavenumbers(n) ** 4
    h_new = _advance(curve.h, lin.F, lin, dt, k4, symmetric)
    _check_convex(h_new)
    return SupportCurve(h_new, curve.grid)


# --- monitoring --------------------------------------------------------------


@dataclass(frozen=True)
class EvolutionRates:
    """Predicted time derivatives of four global quantities, with L1 scales.

    ``affine_length``: -2/3 int sigma_ss K ds
    ``area``: -int sigma_ss ds
    ``santalo``: 6 int sigma^-4 sigma_s^2 ds
    ``total_curv``: 2/3 int sigma_ss (K_ss + K^2) ds
    Each ``*_scale`` integrates the absolute value of the integrand, so that
    ``|rate| <= scale`` and the scale vanishes only when the flow is at rest.
    """

    affine_length: float
    area: float
    santalo: float
    total_curv: float
    affine_length_scale: float
    area_scale: float
    santalo_scale: float
    total_curv_scale: float
    santalo_alt: float

    QUANTITIES = ("affine_length", "area", "santalo", "total_curv")


def evolution_rates(state):
    f = state.fine
    I = f.integral_ds
    alpha = f.sigma_ss
    K = f.kappa_aff
    K_ss = f.deriv_s(K, 2)
    s3 = f.sigma**-3
    return EvolutionRates(
        affine_length=-2.0 / 3.0 * I(alpha * K),
        area=-I(alpha),
        santalo=6.0 * I(f.sigma**-4 * f.sigma_s**2),
        total_curv=2.0 / 3.0 * I(alpha * (K_ss + K * K)),
        affine_length_scale=2.0 / 3.0 * I(np.abs(alpha * K)),
        area_scale=I(np.abs(alpha)),
        santalo_scale=2.0 * I(np.abs(alpha) * s3),
        total_curv_scale=2.0 / 3.0 * I(np.abs(alpha * (K_ss + K * K))),
        santalo_alt=2.0 * I(alpha * s3),
    )


def santalo_identity_residual(state):
    """|2 int sigma_ss sigma^-3 ds - 6 int sigma^-4 sigma_s^2 ds| / int sigma^-3 ds."""
    f = state.fine
    s3 = f.sigma**-3
    a = 2.0 * f.integral_ds(f.sigma_ss * s3)
    b = 6.0 * f.integral_ds(f.sigma**-4 * f.sigma_s**2)
    return abs(a - b) / f.integral_ds(s3)


@dataclass(frozen=True)
class MonitorRecord:
    t: float
    dt: float
    invariants: affine.ScalarInvariants
    area_drift_rel: float
    sup_ht: float
    symmetry_defect: float
    rates: EvolutionRates
    santalo_identity: float

    def __getattr__(self, name):
        # expose invariants as record.<field>, e.g. record.energy
        inv = self.__dict__.get("invariants")
        if inv is not None and name in inv.__dataclass_fields__:
            return getattr(inv, name)
        raise AttributeError(name)


def monitor(curve, t, dt, area0, script_L0, sup_ht=None):
    state, inv = affine.analyze(curve, script_L0=script_L0)
    if sup_ht is None:
        sup_ht = float(np.abs(rhs(curve)).max())
    return MonitorRecord(
        t=t,
        dt=dt,
        invariants=inv,
        area_drift_rel=abs(inv.area - area0) / area0,
        sup_ht=sup_ht,
        symmetry_defect=validate(curve).symmetry_defect,
        rates=evolution_rates(state),
        santalo_identity=santalo_identity_residual(state),
    )


@dataclass
class FlowTrajectory:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    termination: str = ""
    steps_accepted: int = 0
    steps_rejected: int = 0
    script_L0: float = math.nan
    B: float = math.nan
    symmetric: bool = False

    @property
    def final(self):
        return self.snapshots[-1]

    @property
    def final_record(self):
        return self.records[-1]

    def series(self, name):
        """Numpy array of a record attribute across the trajectory."""
        return np.array([getattr(rec, name) for rec in self.records])


# --- driver ------------------------------------------------------------------

REACHED_T_END = "reached_t_end"
CONVERGED = "converged"
CONVEXITY_LOST = "convexity_lost"
DT_UNDERFLOW = "dt_underflow"
MAX_STEPS = "max_steps"


def _at_rest(h, energy, n, params):
    return energy < params.stop_energy and resolved_speed(h, n, params.dealias) < params.stop_energy


def run(curve0, params=None, monitor_every=1, symmetric=None):
    """Integrate from ``curve0`` until t_end, convergence or failure.

    A record (and snapshot) is stored at t = 0, after every ``monitor_every``
    accepted steps, and at the end.  Convergence means both the energy and
    sup |h_t| (ignoring rounding-level modes of h) fall below
    ``params.stop_energy``; initial data that already passes this test runs to
    t_end.  When ``symmetric`` is true
    (default: detected from the initial data) odd Fourier modes are removed
    after every solve; they are unstable rounding noise for symmetric data.
    """
    params = params or FlowParams()
    if monitor_every < 1:
        raise ValueError("monitor_every must be >= 1")
    curve0.require_convex()
    report0 = validate(curve0)
    if symmetric is None:
        symmetric = report0.symmetric
    n = curve0.n
    m = (DEALIAS if params.dealias else 1) * n
    k4 = diffops.wavenumbers(n) ** 4
    grid = curve0.grid
    scheme = params.scheme

    state0, inv0 = affine.analyze(curve0)
    traj = FlowTrajectory(script_L0=inv0.script_L, B=affine.b_constant(inv0.script_L), symmetric=symmetric)
    area0 = inv0.area

    h = np.array(curve0.h)
    t = 0.0
    dt = params.dt_init
    lin = _Linearization(h, n, m, scheme)

    def record(h_arr, t_now, dt_now, sup):
        snap = SupportCurve(h_arr, grid)
        traj.times.append(t_now)
        traj.snapshots.append(snap)
        traj.records.append(monitor(snap, t_now, dt_now, area0, traj.script_L0, sup_ht=sup))

    record(h, t, 0.0, lin.sup)
    # data already at rest (a circle, say) runs to t_end instead of stopping at once
    armed = not _at_rest(h, inv0.energy, n, params)
    since_record = 0
    termination = None
    last_dt = 0.0

    while termination is None:
        if t >= params.t_end * (1 - 1e-14):
            termination = REACHED_T_END
            break
        if traj.steps_accepted >= params.max_steps:
            termination = MAX_STEPS
            break
        dt = min(dt, params.dt_max, params.t_end - t)
        if dt < params.dt_min and params.t_end - t > params.dt_min:
            termination = DT_UNDERFLOW
            break

        try:
            full = _advance(h, lin.F, lin, dt, k4, symmetric)
            half = _advance(h, lin.F, lin, 0.5 * dt, k4, symmetric)
            mid = _Linearization(half, n, m, scheme, with_jacobian=False)
            # the Rosenbrock variant keeps the step's Jacobian for the second half
            half2 = _advance(half, mid.F, lin if lin.jac is not None else mid, 0.5 * dt, k4, symmetric)
            cand = 2.0 * half2 - full
            r_cand = _check_convex(cand)
            err = float(np.abs(half2 - full).max())
            lin_new = _Linearization(cand, n, m, scheme) if err <= params.step_tol else None
        except ConvexityError:
            traj.steps_rejected += 1
            dt *= 0.5
            continue

        if lin_new is None:
            traj.steps_rejected += 1
            dt *= 0.5
            continue

        h = cand
        t += dt
        last_dt = dt
        lin = lin_new
        traj.steps_accepted += 1
        since_record += 1

        factor = params.safety * math.sqrt(params.step_tol / max(err, 1e-300))
        dt *= min(1.5, max(0.5, factor))

        if r_cand.min() < params.r_floor * r_cand.mean():
            termination = CONVEXITY_LOST
            break
        if armed and lin.sup < SPEED_GATE:
            _, inv = affine.analyze(SupportCurve(h, grid))
            if _at_rest(h, inv.energy, n, params):
                termination = CONVERGED
                break
        if since_record >= monitor_every:
            record(h, t, last_dt, lin.sup)
            since_record = 0

    if since_record or not traj.records or traj.times[-1] != t:
        record(h, t, last_dt, lin.sup)
    traj.termination = termination
    log.info(
        "flow stopped: %s at t=%.6g after %d steps (%d rejected)",
        termination,
        t,
        traj.steps_accepted,
        traj.steps_rejected,
    )
    return traj


# --- cross-checks ------------------------------------------------------------


def _central_derivative(t, f):
    """Second-order three-point derivative at the middle of possibly uneven nodes."""
    t0, t1, t2 = t
    f0, f1, f2 = f
    a, b = t1 - t0, t2 - t1
    return -b / (a * (a + b)) * f0 + (b - a) / (a * b) * f1 + a / (b * (a + b)) * f2


@dataclass(frozen=True)
class CrosscheckResult:
    """Finite-difference rate, predicted rate and relative residual per quantity."""

    t: float
    measured: dict
    predicted: dict
    relative: dict
    sup_ht: float


def evolution_crosscheck(records):
    """Compare central time differences of four quantities with their predicted rates.

    ``records`` are three consecutive monitor records.  Residuals are relative
    to the L1 scale of each predicted rate's integrand.
    """
    if len(records) != 3:
        raise ValueError(f"evolution_crosscheck needs exactly 3 records, got {len(records)}")
    ts = [rec.t for rec in records]
    if not (ts[0] < ts[1] < ts[2]):
        raise ValueError("records must have strictly increasing times")
    mid = records[1].rates
    measured, predicted, relative = {}, {}, {}
    for q in EvolutionRates.QUANTITIES:
        values = [getattr(rec.invariants, q) for rec in records]
        measured[q] = _central_derivative(ts, values)
        predicted[q] = getattr(mid, q)
        scale = getattr(mid, q + "_scale")
        relative[q] = abs(measured[q] - predicted[q]) / scale if scale > 0 else abs(measured[q])
    return CrosscheckResult(ts[1], measured, predicted, relative, records[1].sup_ht)


def crosscheck_trajectory(traj, min_speed=0.0):
    """evolution_crosscheck over every window of the trajectory's records."""
    out = []
    recs = traj.records
    for i in range(1, len(recs) - 1):
        if recs[i].sup_ht < min_speed:
            continue
        window = recs[i - 1 : i + 2]
        if not (window[0].t < window[1].t < window[2].t):
            continue
        out.append(evolution_crosscheck(window))
    return out


@dataclass(frozen=True)
class LogRCheck:
    lhs_sup: float
    rhs_sup: float
    abs_residual: float
    rel_residual: float


def logr_crosscheck(curve, oversample=affine.DEFAULT_OVERSAMPLE):
    """(log r)_t from differentiating h_t against -s4 + s2^2/sigma - s2/sigma.

    Here s2, s4 are the second and fourth arclength derivatives of sigma.  The
    left side is (h_t'' + h_t) / r with h_t from the expanded formula.
    """
    fine = affine._fine_fields(curve, oversample)
    F, _ = _expanded_fine(curve.h, oversample * curve.n, chop=affine.H_CHOP)
    lhs = (diffops.deriv_theta(F, 2, chop=affine.FINE_CHOP) + F) / fine.r
    s2 = fine.sigma_ss
    s4 = fine.deriv_s(fine.sigma_sss, 1)
    rhs_ = -s4 + s2 * s2 / fine.sigma - s2 / fine.sigma
    diff = float(np.abs(lhs - rhs_).max())
    lsup, rsup = float(np.abs(lhs).max()), float(np.abs(rhs_).max())
    scale = max(lsup, rsup)
    return LogRCheck(lsup, rsup, diff, diff / scale if scale > 0 else 0.0)
