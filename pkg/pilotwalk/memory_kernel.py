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
"""
Direct integration of the integro-differential form of the model, where the wave-memory force is

    G(t) = r * integral over s <= t of sin(x(t) - x(s)) exp(-(t - s)) ds

evaluated by quadrature over a finite window of past positions. It never touches the Y, Z variables of the
ODE system and serves as an independent check on it.
"""

import logging
import math

import numpy as np

from pilotwalk.dynamics import FullSystem, applied_sine
from pilotwalk.integrator import NonFiniteStateError
from pilotwalk.models import *

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 1e-12
MAX_MEMORY_DT = 0.01
_MATCH_TOL = 1e-9


class EmptyHistoryError(ValueError):
    pass


class UnsupportedHistoryError(ValueError):
    pass


def memory_horizon(cutoff: float = DEFAULT_CUTOFF) -> float:
    if not 0.0 < cutoff < 1.0:
        raise ValueError(f"cutoff must lie in (0, 1), got {cutoff}")
    return -math.log(cutoff)


class MemoryHistory:
    """
    Ring buffer of past positions x(s) on a uniform grid of step dt. Only the last horizon = -ln(cutoff)
    time units are kept; older samples carry a kernel weight below the cutoff.
    """

    def __init__(self, dt: float, cutoff: float = DEFAULT_CUTOFF):
        if dt <= 0:
            raise ValueError(f"dt must be > 0, got {dt}")

        self.dt = dt
        self.cutoff = cutoff
        self.horizon = memory_horizon(cutoff)
        self.capacity = int(math.ceil(self.horizon / dt)) + 1

        self._positions = np.empty(self.capacity)
        self._head = -1
        self._count = 0
        self.latest_time: float | None = None

        # exp(-lag) for lag = 0, dt, 2 dt, ... newest first
        self._decay = np.exp(-dt * np.arange(self.capacity))

    def __len__(self) -> int:
        return self._count

    @property
    def full(self) -> bool:
        return self._count == self.capacity

    def append(self, t: float, x: float):
        if not math.isfinite(x):
            raise NonFiniteStateError("non-finite position in memory history", t)

        if self.latest_time is not None:
            expected = self.latest_time + self.dt
            if abs(t - expected) > 1e-9 * max(1.0, abs(t)):
                raise ValueError(f"history samples must be {self.dt:g} apart, got t={t:g} after "
                                 f"t={self.latest_time:g}")

        self._head = (self._head + 1) % self.capacity
        self._positions[self._head] = x
        self._count = min(self._count + 1, self.capacity)
        self.latest_time = t

    def newest_first(self) -> np.ndarray:
        indices = (self._head - np.arange(self._count)) % self.capacity
        return self._positions[indices]

    def ordered(self) -> tuple[np.ndarray, np.ndarray]:
        """Retained (times, positions), oldest first."""
        positions = self.newest_first()[::-1]
        if self._count == 0:
            return np.empty(0), positions

        times = self.latest_time - self.dt * np.arange(self._count - 1, -1, -1)
        return times, positions

    def kernel_weights(self) -> np.ndarray:
        """Trapezoid weights times exp(-(t - s)) for the retained samples, newest first."""
        weights = self.dt * self._decay[:self._count].copy()
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return weights

    @classmethod
    def from_samples(cls, times, positions, cutoff: float = DEFAULT_CUTOFF) -> "MemoryHistory":
        times = np.asarray(times, dtype=float)
        positions = np.asarray(positions, dtype=float)

        if len(times) != len(positions):
            raise ValueError(f"{len(times)} times but {len(positions)} positions")
        if len(times) < 2:
            raise ValueError("at least two samples are needed to infer the history step")

        steps = np.diff(times)
        dt = float(steps.mean())
        if np.any(np.abs(steps - dt) > 1e-9 * max(1.0, dt)):
            raise ValueError("history samples must lie on a uniform grid")

        history = cls(dt, cutoff)
        for t, x in zip(times, positions):
            history.append(float(t), float(x))

        return history


def memory_force(history: MemoryHistory, x_now: float, p: Params) -> float:
    """
    r times the trapezoid rule for sin(x_now - x(s)) exp(-(t - s)) over the retained history, with t the
    time of the newest sample.
    """
    if len(history) == 0:
        raise EmptyHistoryError("memory history is empty")
    if len(history) == 1:
        return 0.0

    integrand = np.sin(x_now - history.newest_first())
    return p.r * float(integrand @ history.kernel_weights())


def history_for_state(state: State4, p: Params, dt: float, cutoff: float = DEFAULT_CUTOFF,
                      t0: float = 0.0) -> MemoryHistory:
    """
    A pre-history consistent with the memory variables of ``state``: rest when X = Y = Z = 0, or straight-line
    walking at speed X when Y = r X / (1 + X^2) and Z = r X^2 / (1 + X^2).
    """
    history = MemoryHistory(dt, cutoff)
    lags = dt * np.arange(history.capacity - 1, -1, -1)
    scale = _MATCH_TOL * max(1.0, p.r)

    if state.X == 0.0 and state.Y == 0.0 and state.Z == 0.0:
        positions = np.full(history.capacity, state.x)
    else:
        u = state.X
        walking_y = p.r * u / (1.0 + u * u)
        walking_z = p.r * u * u / (1.0 + u * u)

        if abs(state.Y - walking_y) > scale or abs(state.Z - walking_z) > scale:
            raise UnsupportedHistoryError(
                f"no matched history for Y={state.Y:g}, Z={state.Z:g}: only rest or steady walking at "
                f"X={u:g} (Y={walking_y:g}, Z={walking_z:g}) can be reconstructed")

        positions = state.x - u * lags

    for t, x in zip(t0 - lags, positions):
        history.append(float(t), float(x))

    return history


def integrate_memory(s0: State4, p: Params, cfg: IntegratorConfig, dt: float = MAX_MEMORY_DT,
                     history: MemoryHistory | None = None, cutoff: float = DEFAULT_CUTOFF) -> Trajectory:
    """
    Fixed-step velocity-Verlet integration of x'' = sigma (G - x' + A sin(B x)) with the memory force G
    evaluated explicitly from the history and the drag treated implicitly. Positions and velocities are
    recorded every round(cfg.sample_dt / dt) steps and at t_end.
    """
    if dt <= 0 or dt > MAX_MEMORY_DT:
        raise ValueError(f"dt must lie in (0, {MAX_MEMORY_DT}], got {dt}")

    y0 = s0.as_array()
    if FullSystem(p).is_equilibrium(y0):
        logger.debug(f"Start {y0} is an equilibrium, seeding velocity with {cfg.initial_perturbation:g}")
        s0 = s0.model_copy(update={"X": s0.X + cfg.initial_perturbation})

    if history is None:
        # history is built from the unperturbed memory variables
        history = history_for_state(s0.model_copy(update={"X": y0[1]}), p, dt, cutoff)
    elif abs(history.dt - dt) > 1e-12 * dt:
        raise ValueError(f"history step {history.dt:g} does not match dt={dt:g}")

    if history.latest_time is None:
        raise EmptyHistoryError("memory history is empty")

    steps = max(1, int(round(cfg.t_end / dt)))
    stride = max(1, int(round(cfg.sample_dt / dt)))
    sigma = p.sigma
    implicit = 1.0 + 0.5 * sigma * dt

    t0 = history.latest_time
    x = s0.x
    v = s0.X
    force = memory_force(history, x, p) + p.A * applied_sine(p.B, x)

    times = [0.0]
    states = [(x, v)]

    for n in range(1, steps + 1):
        accel = sigma * (force - v)
        x = x + dt * v + 0.5 * dt * dt * accel

        t = t0 + n * dt
        history.append(t, x)
        force = memory_force(history, x, p) + p.A * applied_sine(p.B, x)
        v = (v + 0.5 * dt * (accel + sigma * force)) / implicit

        if not (math.isfinite(x) and math.isfinite(v)):
            raise NonFiniteStateError("non-finite state encountered", n * dt)

        if n % stride == 0 or n == steps:
            times.append(n * dt)
            states.append((x, v))

    logger.debug(f"Memory integration finished {steps} steps of dt={dt:g}")

    return Trajectory(times=np.array(times), states=np.array(states), params=p, system=SystemKind.MEMORY)
