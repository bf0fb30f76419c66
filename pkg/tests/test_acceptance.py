"""
Long reproduction runs of the published model behaviors. Deselect with ``pytest -m "not slow"``.
"""

import math
import os

import pytest

from conftest import assert_classes_match_speed
from pilotwalk.analysis import classify, lyapunov_estimate, oscillation_frequency
from pilotwalk.dynamics import FullSystem, LowMemorySystem
from pilotwalk.integrator import integrate
from pilotwalk.memory_kernel import integrate_memory
from pilotwalk.models import *
from pilotwalk.output_utils import sweep_frame, write_csv
from pilotwalk.stability import omega_onset, r_critical
from pilotwalk.sweep import PRESETS, init_state, run_lowmem_sweep, run_sweep, velocity_point

pytestmark = pytest.mark.slow

WORKERS = max(2, min(8, os.cpu_count() or 1))


def _run_preset(name: str) -> tuple[Trajectory, Params]:
    preset = PRESETS[name]
    s0 = init_state(preset.init_rule, preset.params, X0=preset.X0)
    return integrate(FullSystem(preset.params), s0, IntegratorConfig()), preset.params


@pytest.mark.parametrize("sigma", [2.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0])
def test_trough_boundary_separates_rest_from_motion(sigma):
    r_c = r_critical(Params(sigma=sigma, r=0.0, A=1.0, B=5.0))

    for r, stationary in ((r_c - 0.3, True), (r_c + 0.3, False)):
        p = Params(sigma=sigma, r=r, A=1.0, B=5.0)
        traj = integrate(FullSystem(p), init_state(InitRule.TROUGH_REST, p), IntegratorConfig())
        assert (classify(traj, p) is BehaviorClass.STATIONARY) == stationary, f"r = {r:.3f}"


def test_onset_frequency():
    p = Params(sigma=10.0, r=1.0, A=1.0, B=5.0)
    p = Params(sigma=10.0, r=1.02 * r_critical(p), A=1.0, B=5.0)
    # measured while the growing oscillation is still small
    cfg = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-12, t_end=300.0)
    traj = integrate(FullSystem(p), init_state(InitRule.TROUGH_REST, p), cfg)

    assert oscillation_frequency(traj) == pytest.approx(omega_onset(p), rel=0.05)
    assert omega_onset(p) == pytest.approx(2.132, abs=1e-3)


@pytest.mark.parametrize("name", ["back-and-forth", "runaway", "irregular"])
def test_exemplar_behaviors(name):
    traj, p = _run_preset(name)
    assert classify(traj, p) is PRESETS[name].expected

    if PRESETS[name].expected is BehaviorClass.IRREGULAR:
        start = traj.states[traj.window_start(0.5)]
        assert lyapunov_estimate(p, start, t_end=1000.0) > 0.005
    if PRESETS[name].expected is BehaviorClass.BACK_AND_FORTH:
        start = traj.states[traj.window_start(0.5)]
        assert lyapunov_estimate(p, start, t_end=1000.0) <= 0.005


@pytest.mark.parametrize("name", ["basin-fast-walker", "basin-slow-walker"])
def test_multistable_point(name):
    traj, p = _run_preset(name)
    assert classify(traj, p) is PRESETS[name].expected


def test_bragg_dip():
    fixed = Params(sigma=10.0, r=10.0, A=1.0, B=1.0)
    integrator = IntegratorConfig()
    classifier = ClassifierConfig()

    dip = [velocity_point(fixed, integrator, classifier, (float(B), 3.0))
           for B in AxisRange(min=1.3, max=1.7, n=9).values()]
    assert min(point.avg_speed_normalized for point in dip) < 0.05

    walker = velocity_point(fixed, integrator, classifier, (0.75, 3.0))
    assert walker.avg_speed_normalized > 0.2
    assert walker.behavior is BehaviorClass.RUNAWAY


def test_lowmem_map_has_no_rest_and_no_chaos():
    spec = SweepSpec(plane=SweepPlane.A_B, params=Params(sigma=5.0, r=5.0, A=1.0, B=1.0),
                     axis1=AxisRange(min=0.1, max=2.0, n=50), axis2=AxisRange(min=0.1, max=10.0, n=50))
    result = run_lowmem_sweep(spec, workers=WORKERS)

    assert not result.failed_cells
    assert result.count(BehaviorClass.STATIONARY) == 0
    assert result.count(BehaviorClass.IRREGULAR) == 0
    assert_classes_match_speed(result)


def test_lowmem_boundary_at_e():
    behaviors = []
    for r in (math.e - 0.1, math.e + 0.1):
        p = Params(sigma=5.0, r=r, A=1.0, B=1.0)
        traj = integrate(LowMemorySystem(p), init_state(InitRule.TROUGH_REST, p, system=SystemKind.LOWMEM),
                         IntegratorConfig())
        behaviors.append(classify(traj, p))

    assert behaviors[0] is BehaviorClass.STATIONARY
    assert behaviors[1] is not BehaviorClass.STATIONARY


def test_sweep_csv_is_byte_identical_across_worker_counts(tmp_path):
    # full map resolution; the run length only sets the cost
    spec = SweepSpec(plane=SweepPlane.SIGMA_R, params=Params(sigma=10.0, r=10.0, A=1.0, B=5.0),
                     axis1=AxisRange(min=0.5, max=30.0, n=101), axis2=AxisRange(min=0.5, max=30.0, n=101),
                     integrator=IntegratorConfig(t_end=500.0))

    serial = write_csv(sweep_frame(run_sweep(spec, workers=1)), tmp_path / "serial.csv")
    parallel = write_csv(sweep_frame(run_sweep(spec, workers=8)), tmp_path / "parallel.csv")

    assert serial.read_bytes() == parallel.read_bytes()


def test_stationary_cells_sit_below_the_stability_boundary():
    spec = SweepSpec(plane=SweepPlane.SIGMA_R, params=Params(sigma=10.0, r=10.0, A=1.0, B=5.0),
                     axis1=AxisRange(min=2.0, max=20.0, n=4), axis2=AxisRange(min=1.0, max=12.0, n=12))
    step = (spec.axis2.max - spec.axis2.min) / (spec.axis2.n - 1)
    result = run_sweep(spec, workers=WORKERS)

    assert not result.failed_cells
    for cell in result.flat_cells():
        r_c = r_critical(Params(sigma=cell.axis1, r=cell.axis2, A=1.0, B=5.0))
        if cell.behavior is BehaviorClass.STATIONARY:
            assert cell.axis2 < r_c + step, cell
        else:
            assert cell.axis2 > r_c - step, cell
    assert_classes_match_speed(result)


def test_memory_oracle_oscillates_with_the_ode_period():
    p = Params(sigma=8.0, r=15.0, A=1.0, B=5.0)
    start = init_state(InitRule.TROUGH_REST, p)
    cfg = IntegratorConfig(t_end=400.0)

    ode = integrate(FullSystem(p), start, cfg)
    memory = integrate_memory(start, p, cfg, dt=0.01)

    assert oscillation_frequency(memory) == pytest.approx(oscillation_frequency(ode), rel=0.02)
