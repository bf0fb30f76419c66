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
Right-hand sides of the Lorenz-like model of a wave-particle entity in the potential A cos(B x) and of its
low-memory reduction, plus the equilibrium constructors.

Full system, state (x, X, Y, Z):

    x' = X
    X' = sigma (Y - X + A sin(B x))
    Y' = -X Z + r X - Y
    Z' = X Y - Z

Low-memory system, state (x, v):

    x' = v
    v' = sigma ((r / e) sin(v) + A sin(B x) - v)
"""

import math
from abc import ABC, abstractmethod

import numpy as np

from pilotwalk.models import *

_SNAP_ULPS = 4.0


class NoFreeWalkingSolutionError(ValueError):
    pass


def applied_sine(B: float, x: float) -> float:
    """
    sin(B x), returning exactly 0.0 when B x is an integer multiple of pi up to a few ulps so that the
    declared equilibria k pi / B are exact fixed points.
    """
    phase = B * x
    turns = phase / math.pi
    nearest = round(turns)

    if abs(turns - nearest) <= _SNAP_ULPS * np.finfo(float).eps * max(1.0, abs(turns)):
        return 0.0

    return math.sin(phase)


def rhs_full(s: State4, p: Params) -> np.ndarray:
    return FullSystem(p).rhs(0.0, s.as_array())


def rhs_lowmem(s: State2, p: Params) -> np.ndarray:
    return LowMemorySystem(p).rhs(0.0, s.as_array())


def equilibria(p: Params, k_min: int, k_max: int) -> list[Equilibrium]:
    if k_min > k_max:
        raise ValueError(f"k_min ({k_min}) must not exceed k_max ({k_max})")

    return [
        Equilibrium(k=k, x_eq=k * math.pi / p.B,
                    kind=EquilibriumKind.PEAK if k % 2 == 0 else EquilibriumKind.TROUGH)
        for k in range(k_min, k_max + 1)
    ]


def free_walking_state(p: Params, sign: int = 1, x0: float = 0.0) -> State4:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if p.r <= 1.0:
        raise NoFreeWalkingSolutionError(f"no free-walking solution for r={p.r} (needs r > 1)")

    speed = sign * math.sqrt(p.r - 1.0)
    return State4(x=x0, X=speed, Y=speed, Z=p.r - 1.0)


class ModelSystem(ABC):
    """
    A first-order autonomous system bound to one set of Params. Integrators and the Lyapunov estimator
    work on numpy arrays through this interface.
    """

    def __init__(self, params: Params):
        self.params = params

    @property
    @abstractmethod
    def kind(self) -> SystemKind:
        pass

    @property
    @abstractmethod
    def dimension(self) -> int:
        pass

    @property
    @abstractmethod
    def labels(self) -> list[str]:
        pass

    @abstractmethod
    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def jacobian(self, y: np.ndarray) -> np.ndarray:
        pass

    def is_equilibrium(self, y: np.ndarray) -> bool:
        """True when y is one of the declared rest states (k pi / B, 0, ...)."""
        if np.any(y[1:] != 0.0):
            return False
        return applied_sine(self.params.B, float(y[0])) == 0.0

    def perturb(self, y: np.ndarray, magnitude: float) -> np.ndarray:
        """Seed an exact equilibrium by adding ``magnitude`` to the velocity component."""
        seeded = np.array(y, dtype=float)
        seeded[1] += magnitude
        return seeded

    def as_array(self, state: State4 | State2 | np.ndarray) -> np.ndarray:
        if isinstance(state, (State4, State2)):
            values = state.as_array()
        else:
            values = np.array(state, dtype=float)

        if values.shape != (self.dimension,):
            raise ValueError(f"the {self.kind} system expects {self.dimension} state components, "
                             f"got shape {values.shape}")
        return values

    def tangent_rhs(self, t: float, augmented: np.ndarray) -> np.ndarray:
        """State and one tangent vector, stacked, for variational (Lyapunov) integration."""
        n = self.dimension
        y = augmented[:n]
        w = augmented[n:]
        return np.concatenate((self.rhs(t, y), self.jacobian(y) @ w))


class FullSystem(ModelSystem):
    @property
    def kind(self) -> SystemKind:
        return SystemKind.FULL

    @property
    def dimension(self) -> int:
        return 4

    @property
    def labels(self) -> list[str]:
        return FULL_STATE_LABELS

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        p = self.params
        x, X, Y, Z = float(y[0]), float(y[1]), float(y[2]), float(y[3])

        return np.array([
            X,
            p.sigma * (Y - X + p.A * applied_sine(p.B, x)),
            -X * Z + p.r * X - Y,
            X * Y - Z,
        ])

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        p = self.params
        x, X, Y, Z = float(y[0]), float(y[1]), float(y[2]), float(y[3])

        return np.array([
            [0.0, 1.0, 0.0, 0.0],
            [p.sigma * p.A * p.B * math.cos(p.B * x), -p.sigma, p.sigma, 0.0],
            [0.0, p.r - Z, -1.0, -X],
            [0.0, Y, X, -1.0],
        ])


class LowMemorySystem(ModelSystem):
    @property
    def kind(self) -> SystemKind:
        return SystemKind.LOWMEM

    @property
    def dimension(self) -> int:
        return 2

    @property
    def labels(self) -> list[str]:
        return LOWMEM_STATE_LABELS

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        p = self.params
        x, v = float(y[0]), float(y[1])

        return np.array([
            v,
            p.sigma * ((p.r / EULER) * math.sin(v) + p.A * applied_sine(p.B, x) - v),
        ])

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        p = self.params
        x, v = float(y[0]), float(y[1])

        return np.array([
            [0.0, 1.0],
            [p.sigma * p.A * p.B * math.cos(p.B * x), p.sigma * ((p.r / EULER) * math.cos(v) - 1.0)],
        ])


def system_for(kind: SystemKind, params: Params) -> ModelSystem:
    if kind is SystemKind.FULL:
        return FullSystem(params)
    return LowMemorySystem(params)
