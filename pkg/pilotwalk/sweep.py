# Copyright 2024 Magnopus LLC

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     https://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import logging
import math
from functools import partial
from multiprocessing import Pool

from pilotwalk import __version__
from pilotwalk.analysis import (MIN_LYAPUNOV_T_END, average_speed, classify, lyapunov_estimate,
                                well_hops)
from pilotwalk.dynamics import free_walking_state, system_for
from pilotwalk.integrator import integrate
from pilotwalk.models import *

logger = logging.getLogger(__name__)

DEFAULT_MAP_POINTS = 201
DEFAULT_BASIN_POINTS = 101
DEFAULT_CURVE_POINTS = 400


def _preset(name, description, A, B, sigma, r, init_rule=InitRule.TROUGH_REST, X0=0.0, expected=None):
    return Preset(name=name, description=description, params=Params(sigma=sigma, r=r, A=A, B=B),
                  init_rule=init_rule, X0=X0, expected=expected)


PRESETS = {preset.name: preset for preset in [
    _preset("back-and-forth", "Back-and-forth oscillating walker from rest in a trough",
            1, 5, 8, 15, expected=BehaviorClass.BACK_AND_FORTH),
    _preset("runaway", "Runaway oscillating walker from rest in a trough",
            1, 5, 20, 15, expected=BehaviorClass.RUNAWAY),
    _preset("irregular", "Irregular walker from rest in a trough",
            1, 5, 4.5, 19.5, expected=BehaviorClass.IRREGULAR),
    _preset("complex-back-and-forth", "Back-and-forth walker with several velocity extrema per period",
            1, 5, 10, 10, expected=BehaviorClass.BACK_AND_FORTH),
    _preset("lorenz-like", "Irregular walker on a Lorenz-like strange attractor",
            1, 5, 10, 40, expected=BehaviorClass.IRREGULAR),
    _preset("well-dweller", "Rests in a well for a fixed time, then hops left or right at random",
            1.05, 9, 10, 10, expected=BehaviorClass.IRREGULAR),
    _preset("pair-hopper", "Oscillates between two wells, then hops to a neighboring pair",
            0.6, 1.55, 10, 10, expected=BehaviorClass.IRREGULAR),
    _preset("basin-fast-walker", "Multistable point: runaway near the free walking speed",
            2, 0.5, 35, 35, init_rule=InitRule.VELOCITY_SEEDED, X0=math.sqrt(34),
            expected=BehaviorClass.RUNAWAY),
    _preset("basin-slow-walker", "Multistable point: back-and-forth from rest",
            2, 0.5, 35, 35, init_rule=InitRule.VELOCITY_SEEDED, X0=0.0, expected=BehaviorClass.BACK_AND_FORTH),
    _preset("basin-b5", "Basin grid with structure periodic in the initial position",
            1, 5, 10, 10, init_rule=InitRule.VELOCITY_SEEDED),
    _preset("basin-b3.9", "Basin grid with structure periodic in the initial position",
            1, 3.9, 10, 10, init_rule=InitRule.VELOCITY_SEEDED),
    _preset("basin-b5.9", "Basin grid with intricate structure",
            1, 5.9, 10, 10, init_rule=InitRule.VELOCITY_SEEDED),
    _preset("velocity-curve", "Average velocity against B starting at the free walking speed",
            1, 1, 10, 10, init_rule=InitRule.VELOCITY_SEEDED, X0=3.0),
]}


def init_state(rule: InitRule, p: Params, x0: float | None = None, X0: float = 0.0,
               explicit_state: list[float] | None = None,
               system: SystemKind = SystemKind.FULL) -> State4 | State2:
    """
    Initial state for one run. Trough starts sit at x = pi / B; velocity-seeded starts use x0 when given.
    """
    trough = math.pi / p.B

    match rule:
        case InitRule.TROUGH_REST:
            if system is SystemKind.LOWMEM:
                return State2(x=trough, v=0.0)
            return State4(x=trough, X=0.0, Y=0.0, Z=0.0)
        case InitRule.FREE_WALKING:
            if system is SystemKind.LOWMEM:
                raise ValueError("the free-walking start is defined for the full system only")
            return free_walking_state(p, sign=1, x0=trough)
        case InitRule.VELOCITY_SEEDED:
            position = trough if x0 is None else x0
            if system is SystemKind.LOWMEM:
                return State2(x=position, v=X0)
            return State4(x=position, X=X0, Y=X0, Z=X0 * X0)
        case InitRule.EXPLICIT:
            if explicit_state is None:
                raise ValueError("init_rule explicit needs explicit_state")
            return state_from_array(explicit_state)

    raise ValueError(f"unknown init rule {rule}")


def cell_inputs(spec: SweepSpec, axis1: float, axis2: float) -> tuple[Params, float | None, float]:
    """Params and (x0, X0) for the grid cell at (axis1, axis2)."""
    values = spec.params.model_dump()
    x0 = spec.x0
    X0 = spec.X0

    match spec.plane:
        case SweepPlane.SIGMA_R:
            values.update(sigma=axis1, r=axis2)
        case SweepPlane.A_B:
            values.update(A=axis1, B=axis2)
        case SweepPlane.X0_X0:
            x0, X0 = axis1, axis2
        case SweepPlane.X0_B:
            X0 = axis1
            values.update(B=axis2)

    return Params(**values), x0, X0


def run_cell(spec: SweepSpec, task: tuple[int, int, float, float]) -> SweepCell:
    i, j, axis1, axis2 = task

    try:
        p, x0, X0 = cell_inputs(spec, axis1, axis2)
        s0 = init_state(spec.init_rule, p, x0=x0, X0=X0, explicit_state=spec.explicit_state, system=spec.system)
        system = system_for(spec.system, p)
        traj = integrate(system, s0, spec.integrator)

        lle = None
        if spec.compute_lle:
            start = traj.states[traj.window_start(spec.classifier.window_fraction)]
            lle = lyapunov_estimate(system, start, t_end=MIN_LYAPUNOV_T_END)

        return SweepCell(
            i=i, j=j, axis1=axis1, axis2=axis2,
            behavior=classify(traj, p, spec.classifier, lle=lle),
            avg_speed=average_speed(traj, spec.classifier.window_fraction),
            lle=lle,
            well_hops=well_hops(traj, p, spec.classifier.window_fraction),
        )
    except (ValueError, RuntimeError, ArithmeticError) as e:
        return SweepCell(i=i, j=j, axis1=axis1, axis2=axis2, error=f"{type(e).__name__}: {e}")


def run_tasks(function, tasks: list, workers: int, progress=None) -> list:
    """Map ``function`` over ``tasks`` in order, on a process pool when workers > 1."""
    results = []

    if workers <= 1:
        for task in tasks:
            results.append(function(task))
            if progress:
                progress(len(results), len(tasks))
        return results

    chunksize = max(1, len(tasks) // (workers * 4))
    with Pool(processes=workers) as pool:
        for result in pool.imap(function, tasks, chunksize=chunksize):
            results.append(result)
            if progress:
                progress(len(results), len(tasks))

    return results


def provenance(**configs) -> dict:
    record = {"version": __version__}
    for name, config in configs.items():
        record[name] = config.model_dump(mode="json") if isinstance(config, BaseModel) else config
    return record


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> SweepResult:
    """
    Integrate and classify every cell of the grid. Cells are independent; a failing cell is recorded with its
    error tag and the sweep carries on.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    axis1_values = spec.axis1.values()
    axis2_values = spec.axis2.values()
    tasks = [(i, j, float(a1), float(a2)) for i, a1 in enumerate(axis1_values) for j, a2 in enumerate(axis2_values)]

    logger.info(f"Starting {spec.system} sweep over the {spec.plane} plane: {len(tasks)} cells on {workers} "
                f"worker(s)")

    flat = run_tasks(partial(run_cell, spec), tasks, workers, progress)
    rows, columns = spec.shape
    cells = [flat[i * columns:(i + 1) * columns] for i in range(rows)]

    result = SweepResult(spec=spec, cells=cells, provenance=provenance(spec=spec))

    failed = result.failed_cells
    if failed:
        logger.warning(f"{len(failed)} of {len(tasks)} cells failed, first: ({failed[0].axis1:g}, "
                       f"{failed[0].axis2:g}) {failed[0].error}")

    logger.info("Sweep complete: " + ", ".join(f"{behavior}={result.count(behavior)}" for behavior in BehaviorClass))
    return result


def run_lowmem_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> SweepResult:
    """The (A, B) map of the low-memory system, every cell starting from (pi / B, 0)."""
    if spec.plane is not SweepPlane.A_B:
        raise ValueError(f"the low-memory sweep runs on the A-B plane, got {spec.plane}")

    lowmem_spec = SweepSpec(**{**spec.model_dump(), "system": SystemKind.LOWMEM,
                               "init_rule": InitRule.TROUGH_REST, "explicit_state": None})
    return run_sweep(lowmem_spec, workers, progress)


def basin_grid(p: Params, x0_range: AxisRange, X0_range: AxisRange,
               integrator: IntegratorConfig = IntegratorConfig(), classifier: ClassifierConfig = ClassifierConfig(),
               workers: int = 1, compute_lle: bool = False, progress=None) -> SweepResult:
    """Long-time behavior over initial positions and velocities, velocity-seeded starts."""
    spec = SweepSpec(plane=SweepPlane.X0_X0, params=p, axis1=x0_range, axis2=X0_range,
                     init_rule=InitRule.VELOCITY_SEEDED, integrator=integrator, classifier=classifier,
                     compute_lle=compute_lle)
    return run_sweep(spec, workers, progress)


def velocity_point(fixed: Params, integrator: IntegratorConfig, classifier: ClassifierConfig,
                   task: tuple[float, float]) -> VelocityCurvePoint:
    B, X0 = task

    try:
        p = Params(sigma=fixed.sigma, r=fixed.r, A=fixed.A, B=B)
        s0 = init_state(InitRule.VELOCITY_SEEDED, p, X0=X0)
        traj = integrate(system_for(SystemKind.FULL, p), s0, integrator)
        speed = average_speed(traj, classifier.window_fraction)
        free_speed = p.free_walking_speed

        return VelocityCurvePoint(
            B=B, X0=X0,
            avg_speed=speed,
            avg_speed_normalized=speed / free_speed if free_speed else None,
            behavior=classify(traj, p, classifier),
        )
    except (ValueError, RuntimeError, ArithmeticError) as e:
        return VelocityCurvePoint(B=B, X0=X0, error=f"{type(e).__name__}: {e}")


def velocity_vs_B(fixed: Params, B_range: AxisRange, X0_values: list[float],
                  integrator: IntegratorConfig = IntegratorConfig(),
                  classifier: ClassifierConfig = ClassifierConfig(), workers: int = 1,
                  progress=None) -> list[VelocityCurvePoint]:
    """
    Absolute average velocity against the wavelength ratio B for velocity-seeded starts at x0 = pi / B. The B of
    ``fixed`` is ignored. Rows run over B, then over X0_values.
    """
    if B_range.min <= 0:
        raise ValueError("B range must stay > 0")
    if not X0_values:
        raise ValueError("at least one X0 value is needed")

    tasks = [(float(B), float(X0)) for B in B_range.values() for X0 in X0_values]
    logger.info(f"Velocity curve over {B_range.n} values of B and {len(X0_values)} initial velocities")

    points = run_tasks(partial(velocity_point, fixed, integrator, classifier), tasks, workers, progress)

    failed = [point for point in points if point.error]
    if failed:
        logger.warning(f"{len(failed)} of {len(points)} velocity-curve points failed")

    return points
