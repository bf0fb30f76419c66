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

import numpy as np

from pilotwalk.dynamics import ModelSystem
from pilotwalk.models import *

logger = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time:.6g})")
        self.time = time


class NonFiniteStateError(IntegrationError):
    pass


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])

# Difference between the 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

# Continuous extension, y(t + theta h) = y + h K^T P [theta, theta^2, theta^3, theta^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values * values)))


def dopri5_stages(fun, t: float, y: np.ndarray, f: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the seven Dormand-Prince stages of one step of size h starting from (t, y) with f = fun(t, y).
    Returns the stage matrix K and the 5th order solution.
    """
    K = np.empty((7, len(y)))
    K[0] = f

    for s in range(1, 6):
        K[s] = fun(t + _C[s] * h, y + h * (_A[s] @ K[:s]))

    y_new = y + h * (_A[6] @ K[:6])
    K[6] = fun(t + h, y_new)

    return K, y_new


def dopri5_step(fun, t: float, y: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One fixed Dormand-Prince step. Returns the 5th order solution and the embedded error estimate."""
    y = np.asarray(y, dtype=float)
    K, y_new = dopri5_stages(fun, t, y, fun(t, y), h)
    return y_new, h * (_E @ K)


class DormandPrince54:
    """
    Adaptive Dormand-Prince 5(4) stepper with PI step-size control and 4th order dense output. Each call to
    step() advances by one accepted step; dense() interpolates inside the last accepted step.
    """

    def __init__(self, fun, t0: float, y0: np.ndarray, t_bound: float, rel_tol: float, abs_tol: float,
                 max_step: float = math.inf, first_step: float | None = None):
        self.fun = fun
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.t_bound = float(t_bound)
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.max_step = max_step

        self.f = np.asarray(fun(self.t, self.y), dtype=float)
        self.h = first_step if first_step is not None else self._initial_step()

        self.t_old = self.t
        self.y_old = self.y
        self.h_last = 0.0
        self._Q = None
        self._err_old = 1e-4

        self.accepted_steps = 0
        self.rejected_steps = 0

    @property
    def finished(self) -> bool:
        return self.t >= self.t_bound

    def _initial_step(self) -> float:
        scale = self.abs_tol + np.abs(self.y) * self.rel_tol
        d0 = _rms(self.y / scale)
        d1 = _rms(self.f / scale)

        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1

        y1 = self.y + h0 * self.f
        f1 = self.fun(self.t + h0, y1)
        d2 = _rms((f1 - self.f) / scale) / h0

        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)

        return min(100 * h0, h1, self.max_step, self.t_bound - self.t)

    def step(self):
        t = self.t
        y = self.y
        min_step = 10 * abs(np.nextafter(t, math.inf) - t)
        h = min(self.h, self.max_step)
        rejected = False

        while True:
            if h < min_step:
                if not np.all(np.isfinite(y)):
                    raise NonFiniteStateError("non-finite state encountered", t)
                raise IntegrationError("step size underflow", t)

            if t + h > self.t_bound:
                h = self.t_bound - t

            K, y_new = dopri5_stages(self.fun, t, y, self.f, h)

            if np.all(np.isfinite(y_new)) and np.all(np.isfinite(K[6])):
                scale = self.abs_tol + self.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
                err = _rms(h * (_E @ K) / scale)
            else:
                err = math.inf

            if err <= 1.0:
                if err == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = _SAFETY * err ** (-_ALPHA) * self._err_old ** _BETA
                    factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                if rejected:
                    factor = min(1.0, factor)

                self._err_old = max(err, 1e-4)
                break

            if not math.isfinite(err):
                h *= _MIN_FACTOR
                if h < min_step:
                    raise NonFiniteStateError("non-finite state encountered", t)
            else:
                h *= max(_MIN_FACTOR, _SAFETY * err ** (-0.2))

            rejected = True
            self.rejected_steps += 1

        self.t_old = t
        self.y_old = y
        self.h_last = h
        self._Q = K.T @ _P

        # Land exactly on the bound when the last step was clipped to it
        self.t = self.t_bound if t + h >= self.t_bound else t + h
        self.y = y_new
        self.f = K[6]
        self.h = h * factor
        self.accepted_steps += 1

    def dense(self, times) -> np.ndarray:
        """States at ``times`` inside [t_old, t] of the last accepted step, one row per time."""
        theta = (np.atleast_1d(np.asarray(times, dtype=float)) - self.t_old) / self.h_last
        powers = np.cumprod(np.repeat(theta[:, None], 4, axis=1), axis=1)
        return self.y_old + self.h_last * (powers @ self._Q.T)


def sample_grid(sample_dt: float, t_end: float) -> np.ndarray:
    """Uniform output times {0, dt, 2 dt, ...} closing exactly on t_end."""
    count = int(math.floor(t_end / sample_dt + 1e-9))
    times = np.arange(count + 1) * sample_dt

    if abs(times[-1] - t_end) <= 1e-9 * max(1.0, t_end):
        times[-1] = t_end
    else:
        times = np.append(times, t_end)

    return times


def _check_start(system: ModelSystem, s0) -> np.ndarray:
    y0 = system.as_array(s0)
    if not np.all(np.isfinite(y0)):
        raise NonFiniteStateError("initial state is not finite", 0.0)
    return y0


def integrate(system: ModelSystem, s0: State4 | State2 | np.ndarray, cfg: IntegratorConfig) -> Trajectory:
    """
    Integrate ``system`` from s0 on [0, cfg.t_end] with the adaptive Dormand-Prince pair, sampled every
    cfg.sample_dt by dense interpolation. An exact declared equilibrium is seeded with
    cfg.initial_perturbation on the velocity.
    """
    y0 = _check_start(system, s0)

    if system.is_equilibrium(y0):
        logger.debug(f"Start {y0} is an equilibrium, seeding velocity with {cfg.initial_perturbation:g}")
        y0 = system.perturb(y0, cfg.initial_perturbation)

    times = sample_grid(cfg.sample_dt, cfg.t_end)
    states = np.empty((len(times), system.dimension))
    states[0] = y0
    next_index = 1

    solver = DormandPrince54(system.rhs, 0.0, y0, cfg.t_end, cfg.rel_tol, cfg.abs_tol,
                             max_step=cfg.effective_max_step)

    while not solver.finished:
        solver.step()

        stop = int(np.searchsorted(times, solver.t, side="right"))
        if stop > next_index:
            states[next_index:stop] = solver.dense(times[next_index:stop])
            if times[stop - 1] == solver.t:
                states[stop - 1] = solver.y
            next_index = stop

    logger.debug(f"Integrated to t={cfg.t_end:g} in {solver.accepted_steps} steps "
                 f"({solver.rejected_steps} rejected)")

    return Trajectory(times=times, states=states, params=system.params, system=system.kind)


def integrate_fixed_rk4(system: ModelSystem, s0: State4 | State2 | np.ndarray, dt: float,
                        t_end: float) -> Trajectory:
    """Classical fixed-step RK4, every step recorded. Used as a reference for the adaptive integrator."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if t_end <= 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")

    y = _check_start(system, s0)
    steps = max(1, int(round(t_end / dt)))
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, system.dimension))
    times[0] = 0.0
    states[0] = y

    fun = system.rhs
    t = 0.0

    for n in range(1, steps + 1):
        t_next = t_end if n == steps else n * dt
        h = t_next - t

        k1 = fun(t, y)
        k2 = fun(t + h / 2, y + h / 2 * k1)
        k3 = fun(t + h / 2, y + h / 2 * k2)
        k4 = fun(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

        if not np.all(np.isfinite(y)):
            raise NonFiniteStateError("non-finite state encountered", t_next)

        t = t_next
        times[n] = t
        states[n] = y

    return Trajectory(times=times, states=states, params=system.params, system=system.kind)
