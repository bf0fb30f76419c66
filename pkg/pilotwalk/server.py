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

from fastapi import FastAPI, HTTPException

from pilotwalk.analysis import average_speed, classify, well_hops
from pilotwalk.configuration import default_workers
from pilotwalk.dynamics import system_for
from pilotwalk.integrator import integrate
from pilotwalk.jobs import SweepSessionManager
from pilotwalk.models import *
from pilotwalk.stability import boundary_curve, lowmem_report, stability_report
from pilotwalk.sweep import PRESETS, init_state

logger = logging.getLogger(__name__)

pilotwalk_api = FastAPI(title="Pilotwalk")
sweep_manager = SweepSessionManager()


def _params(sigma: float, r: float, A: float, B: float) -> Params:
    try:
        return Params(sigma=sigma, r=r, A=A, B=B)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@pilotwalk_api.get('/stability')
async def get_stability(sigma: float, r: float, A: float, B: float, k: int = 1,
                        system: SystemKind = SystemKind.FULL) -> EquilibriumReport:
    """
    Linear stability of the rest state x = k pi / B: eigenvalues, verdict and instability mechanism.
    """
    params = _params(sigma, r, A, B)

    if system is SystemKind.LOWMEM:
        return lowmem_report(params, k)
    elif system is SystemKind.FULL:
        return stability_report(params, k)

    raise HTTPException(status_code=400, detail=f"No closed-form stability report for the {system} system.")


@pilotwalk_api.get('/boundary')
async def get_boundary(A: float, B: float, sigma_min: float = 0.5, sigma_max: float = 40.0,
                       n_points: int = 200) -> list[tuple[float, float]]:
    """
    Trough stability boundary r_c(sigma) as a polyline of (sigma, r_c) pairs.
    """
    params = _params(1.0, 0.0, A, B)

    try:
        return boundary_curve(params, (sigma_min, sigma_max), n_points)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@pilotwalk_api.get('/presets')
async def get_presets() -> list[Preset]:
    return list(PRESETS.values())


@pilotwalk_api.post('/simulate')
def simulate(request: SimulateRequest) -> SimulationSummary:
    """
    Integrates one run and returns its long-time behavior, average speed over the terminal window and final
    state. Runs synchronously, so keep t_end modest.
    """
    if request.system is SystemKind.MEMORY:
        raise HTTPException(status_code=400, detail="Use the full or low-memory system for /simulate.")

    try:
        s0 = init_state(request.init_rule, request.params, x0=request.x0, X0=request.X0,
                        explicit_state=request.explicit_state, system=request.system)
        traj = integrate(system_for(request.system, request.params), s0, request.integrator)
    except (ValueError, RuntimeError) as e:
        raise HTTPException(status_code=400, detail=f"{type(e).__name__}: {e}")

    window = request.classifier.window_fraction
    behavior = None
    error = None

    try:
        behavior = classify(traj, request.params, request.classifier)
    except ValueError as e:
        error = f"{type(e).__name__}: {e}"

    return SimulationSummary(
        behavior=behavior,
        avg_speed=average_speed(traj, window),
        well_hops=well_hops(traj, request.params, window),
        terminal_state=[float(value) for value in traj.states[-1]],
        error=error,
    )


@pilotwalk_api.post('/sweeps/start')
async def start_sweep(spec: SweepSpec, workers: int | None = None):
    """
    Starts a sweep in the background. Only one sweep runs at a time; poll /sweeps for progress and fetch the
    grid from /sweeps/result.
    """
    if sweep_manager.is_running():
        status = sweep_manager.get_status()
        raise HTTPException(status_code=400,
                            detail=f"Sweep already in progress ({status.done}/{status.total} cells), "
                                   f"request invalid.")

    try:
        worker_count = default_workers(requested=workers)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    if not sweep_manager.start_sweep(spec, worker_count):
        raise HTTPException(status_code=400, detail="Sweep already in progress, request invalid.")

    rows, columns = spec.shape
    return {"status": str(SweepStatus.RUNNING), "total": rows * columns}


@pilotwalk_api.get('/sweeps')
async def get_sweep_status() -> SweepJobStatus:
    return sweep_manager.get_status()


@pilotwalk_api.get('/sweeps/result')
async def get_sweep_result() -> SweepResult:
    result = sweep_manager.last_result()

    if result is None:
        raise HTTPException(status_code=404, detail="No finished sweep result available.")

    return result
