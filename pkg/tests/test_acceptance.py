"""Acceptance criteria, one test per criterion (plus literal variants that are
known to be unattainable and are kept as strict xfails).

The conftest hook prints one PASS/FAIL line per criterion at the end of the run.
"""

import math
import time

import numpy as np
import pytest

from ceaflow import affine, cli, curve, flow, sl2
from ceaflow.flow import FlowParams
from ceaflow.sl2 import SL2Transform

from conftest import STANDARD_AREA, standard_curve

TARGET_SIGMA = math.pi ** (-2 / 3) * STANDARD_AREA ** (2 / 3)
EQUIV_PARAMS = FlowParams(t_end=1.0, stop_energy=0.0)
SHEAR_SEED = 2024
# Euclidean and affine quantities with a nonzero value at t = 1
NONVANISHING = (
    "area", "affine_length", "santalo", "total_curv", "inv_sigma",
    "min_sigma", "max_sigma", "min_r", "mean_r",
)


def timed_run(c, params, monitor_every=1):
    t0 = time.perf_counter()
    traj = flow.run(c, params, monitor_every=monitor_every)
    return traj, time.perf_counter() - t0


@pytest.fixture(scope="module")
def stationary_runs():
    circle = curve.make_circle(1.0, 128)
    ellipse = curve.make_ellipse(2.0, 0.5, 256)
    return {
        "circle": (circle,) + timed_run(circle, FlowParams(t_end=1.0)),
        "ellipse": (ellipse,) + timed_run(ellipse, FlowParams(t_end=1.0)),
    }


@pytest.fixture(scope="module")
def standard_run():
    # timed separately from the shared fixture so the budget covers one full run
    return timed_run(standard_curve(), FlowParams(t_end=20.0))


def shear():
    s = np.random.Generator(np.random.PCG64(SHEAR_SEED)).uniform(-0.5, 0.5)
    return SL2Transform(1.0, float(s), 0.0, 1.0)


@pytest.fixture(scope="module")
def equivariance_runs():
    c = standard_curve()
    base, _ = timed_run(c, EQUIV_PARAMS)
    out = {}
    for name, t in (("diag", SL2Transform(2.0, 0.0, 0.0, 0.5)), ("shear", shear())):
        moved, _ = timed_run(sl2.apply(t, c), EQUIV_PARAMS)
        out[name] = (t, moved)
    return c, base, out


# 1 -----------------------------------------------------------------------------


def test_criterion_01_stationarity(stationary_runs):
    for name, (c0, traj, secs) in stationary_runs.items():
        assert traj.termination == flow.REACHED_T_END, name
        change = max(np.abs(s.h - c0.h).max() for s in traj.snapshots)
        assert change < 1e-8, (name, change)
        assert secs < 5.0, (name, secs)


# 2 -----------------------------------------------------------------------------


def test_criterion_02_area_preservation(standard_run, standard_trajectory):
    traj, secs = standard_run
    assert secs < 60.0
    for t in (traj, standard_trajectory):
        assert t.series("area_drift_rel").max() <= 1e-5


# 3 -----------------------------------------------------------------------------


def test_criterion_03_santalo_monotone(standard_trajectory):
    assert np.diff(standard_trajectory.series("santalo")).min() >= -1e-8


# 4 -----------------------------------------------------------------------------


def test_criterion_04_convergence(standard_trajectory):
    traj = standard_trajectory
    assert traj.termination == flow.CONVERGED
    state, inv = affine.analyze(traj.final)
    assert inv.energy < 1e-8
    assert np.abs(state.fine.sigma - TARGET_SIGMA).max() < 1e-4
    res = sl2.normalize(traj.final)
    assert res.roundness < 1e-3
    assert abs(res.normalized.h.mean() - math.sqrt(STANDARD_AREA / math.pi)) < 1e-3
    assert np.abs(res.normalized.h - math.sqrt(STANDARD_AREA / math.pi)).max() < 1e-3


# 5 -----------------------------------------------------------------------------


def test_criterion_05_evolution_crosschecks(standard_trajectory):
    results = flow.crosscheck_trajectory(standard_trajectory)
    assert len(results) == len(standard_trajectory.records) - 2
    for q in flow.EvolutionRates.QUANTITIES:
        assert max(r.relative[q] for r in results) < 1e-3, q
    assert standard_trajectory.series("santalo_identity").max() < 1e-8


# 6 -----------------------------------------------------------------------------


def test_criterion_06_dual_formula():
    for spec in cli.suite_specs(100, 7):
        c = curve.make_fourier(spec, 256)
        e = flow.rhs(c, "expanded", oversample=4, project=False)
        k = flow.rhs(c, "compact", oversample=4, project=False)
        assert np.abs(e - k).max() < 1e-8, spec
        assert flow.logr_crosscheck(c).rel_residual < 1e-6, spec


# 7 -----------------------------------------------------------------------------


def test_criterion_07_inequality_suite():
    t0 = time.perf_counter()
    report = cli.run_inequality_suite(100, 7)
    secs = time.perf_counter() - t0
    assert report.checked == 100
    assert report.violations == []
    assert secs < 30.0


# 8 -----------------------------------------------------------------------------


def test_criterion_08_sl2_equivariance(equivariance_runs):
    c0, base, moved = equivariance_runs
    _, inv0 = affine.analyze(c0)
    for name, (t, traj) in moved.items():
        assert traj.termination == flow.REACHED_T_END
        # in the transformed frame: everything that does not vanish at t = 1
        _, a = affine.analyze(sl2.apply(t, base.final))
        b = traj.final_record.invariants
        for q in NONVANISHING:
            assert getattr(b, q) == pytest.approx(getattr(a, q), rel=1e-5), (name, q)
        # mapped back to the original frame, where the curve is well resolved,
        # every field agrees; quantities that have decayed to rounding level are
        # measured against their size at t = 0
        a = base.final_record.invariants
        _, b = affine.analyze(sl2.apply(t.inverse(), traj.final))
        for q, va in a.as_dict().items():
            vb, v0 = getattr(b, q), getattr(inv0, q)
            scale = max(abs(va), abs(vb), abs(v0))
            assert abs(va - vb) <= 1e-5 * scale + 1e-14, (name, q, va, vb)


@pytest.mark.xfail(strict=True, reason="relative error of quantities that decayed to rounding level; see ledger")
def test_criterion_08_literal_all_fields_relative(equivariance_runs):
    _, base, moved = equivariance_runs
    for t, traj in moved.values():
        _, a = affine.analyze(sl2.apply(t, base.final))
        b = traj.final_record.invariants
        for q, va in a.as_dict().items():
            assert getattr(b, q) == pytest.approx(va, rel=1e-5), q


# 9 -----------------------------------------------------------------------------


def _all_runs(stationary_runs, standard_run, standard_trajectory, equivariance_runs):
    runs = {f"stationary {k}": v[1] for k, v in stationary_runs.items()}
    runs["standard"] = standard_run[0]
    runs["standard, every step"] = standard_trajectory
    runs["equivariance base"] = equivariance_runs[1]
    runs.update({f"equivariance {k}": v[1] for k, v in equivariance_runs[2].items()})
    return runs


def _r_ratios(traj):
    reps = [curve.validate(s) for s in traj.snapshots]
    return np.array([r.min_r / r.mean_r for r in reps]), np.array([r.symmetry_defect for r in reps])


def test_criterion_09_symmetry_and_convexity(stationary_runs, standard_run, standard_trajectory, equivariance_runs):
    runs = _all_runs(stationary_runs, standard_run, standard_trajectory, equivariance_runs)
    for name, traj in runs.items():
        ratio, defect = _r_ratios(traj)
        assert traj.series("symmetry_defect").max() <= 1e-10, name
        assert defect.max() <= 1e-10, name
        if ratio[0] >= 0.1:
            assert ratio.min() >= 0.1, name
        else:
            # the (2, 1/2) ellipse and its relatives start below the floor;
            # convexity must then at least not degrade
            assert ratio.min() >= ratio[0] * (1 - 1e-9), name


@pytest.mark.xfail(strict=True, reason="initial data of criteria 1 and 8 already has min r < 0.1 mean r; see ledger")
def test_criterion_09_literal_r_floor(stationary_runs, standard_run, standard_trajectory, equivariance_runs):
    runs = _all_runs(stationary_runs, standard_run, standard_trajectory, equivariance_runs)
    for name, traj in runs.items():
        ratio, _ = _r_ratios(traj)
        assert ratio.min() >= 0.1, name


# 10 ----------------------------------------------------------------------------


def test_criterion_10_script_L_bound(standard_trajectory):
    traj = standard_trajectory
    L0 = traj.records[0].script_L
    assert traj.script_L0 == L0
    assert traj.B == pytest.approx(affine.b_constant(L0))
    assert traj.series("script_L").max() < affine.script_L_ceiling(L0)


# 11 ----------------------------------------------------------------------------


def test_criterion_11_operator_convergence():
    image = SL2Transform.from_params(1.1, 0.3)
    makers = {
        "ellipse(2.5, 0.4)": lambda n: curve.make_ellipse(2.5, 0.4, n),
        "stretched standard curve": lambda n: sl2.apply(image, standard_curve(n)),
    }
    for name, make in makers.items():
        coarse_state, coarse = affine.analyze(make(256))
        fine_state, fine = affine.analyze(make(512))
        assert fine_state.m_relation_residual * 10 <= coarse_state.m_relation_residual, name
        assert abs(fine.minkowski_residual) * 10 <= abs(coarse.minkowski_residual), name
