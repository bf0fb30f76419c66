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

import math
from enum import StrEnum
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from pilotwalk.constants import *


class BehaviorClass(StrEnum):
    STATIONARY = "Stationary"
    BACK_AND_FORTH = "BackAndForth"
    RUNAWAY = "Runaway"
    IRREGULAR = "Irregular"


class SystemKind(StrEnum):
    FULL = FULL_SYSTEM
    LOWMEM = LOWMEM_SYSTEM
    MEMORY = MEMORY_SYSTEM

    @property
    def width(self) -> int:
        return 4 if self is SystemKind.FULL else 2


class Parity(StrEnum):
    EVEN = "even"
    ODD = "odd"

    @classmethod
    def of(cls, k: int) -> "Parity":
        return cls.EVEN if k % 2 == 0 else cls.ODD

    @property
    def sign(self) -> int:
        """(-1)^k for an equilibrium index k of this parity."""
        return 1 if self is Parity.EVEN else -1


class EquilibriumKind(StrEnum):
    PEAK = "peak"
    TROUGH = "trough"


class Verdict(StrEnum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class Mechanism(StrEnum):
    POSITIVE_REAL_ROOT = "positive-real-root"
    COMPLEX_PAIR_POSITIVE = "complex-pair-positive-real-part"
    ALL_NEGATIVE = "all-negative"
    COMPLEX_PAIR_NEGATIVE = "complex-pair-negative-real-part"
    MARGINAL = "marginal"
    FREE_SPACE = "neutral-direction-free-space"


class InitRule(StrEnum):
    TROUGH_REST = "trough-rest"
    FREE_WALKING = "free-walking"
    VELOCITY_SEEDED = "velocity-seeded"
    EXPLICIT = "explicit"


class SweepPlane(StrEnum):
    SIGMA_R = "sigma-r"
    A_B = "A-B"
    X0_X0 = "x0-X0"
    X0_B = "X0-B"

    @property
    def axis_names(self) -> tuple[str, str]:
        first, second = self.value.split("-")
        return first, second


class Params(BaseModel):
    """
    The four dimensionless model constants: inverse mass sigma, wave-memory force coefficient r,
    sinusoidal force coefficient A and wavelength ratio B.
    """
    sigma: float = Field(gt=0, allow_inf_nan=False)
    r: float = Field(ge=0, allow_inf_nan=False)
    A: float = Field(ge=0, allow_inf_nan=False)
    B: float = Field(gt=0, allow_inf_nan=False)

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={
            'examples': [
                {
                    'sigma': 8.0,
                    'r': 15.0,
                    'A': 1.0,
                    'B': 5.0,
                }
            ]
        }
    )

    @property
    def free_walking_speed(self) -> float | None:
        return math.sqrt(self.r - 1.0) if self.r > 1.0 else None


class State4(BaseModel):
    x: float = Field(allow_inf_nan=False)
    X: float = Field(allow_inf_nan=False)
    Y: float = Field(allow_inf_nan=False)
    Z: float = Field(allow_inf_nan=False)

    model_config = ConfigDict(frozen=True, extra="forbid")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.X, self.Y, self.Z], dtype=float)


class State2(BaseModel):
    x: float = Field(allow_inf_nan=False)
    v: float = Field(allow_inf_nan=False)

    model_config = ConfigDict(frozen=True, extra="forbid")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.v], dtype=float)


def state_from_array(values) -> State4 | State2:
    values = [float(value) for value in values]

    if len(values) == 4:
        return State4(x=values[0], X=values[1], Y=values[2], Z=values[3])
    elif len(values) == 2:
        return State2(x=values[0], v=values[1])

    raise ValueError(f"A state has 2 or 4 components, got {len(values)}.")


class Trajectory(BaseModel):
    """
    Time-stamped state sequence from one integration run. Rows of ``states`` hold the components of a
    State4 (x, X, Y, Z) or a State2 (x, v) depending on ``system``.
    """
    times: np.ndarray
    states: np.ndarray
    params: Params
    system: SystemKind = SystemKind.FULL

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def check_samples(self) -> "Trajectory":
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-D and states 2-D")
        if len(self.times) != len(self.states):
            raise ValueError(f"{len(self.times)} times but {len(self.states)} states")
        if len(self.times) == 0:
            raise ValueError("a trajectory needs at least one sample")
        if self.times[0] < 0:
            raise ValueError("the first sample time must be >= 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

        if self.states.shape[1] != self.system.width:
            raise ValueError(f"a {self.system} trajectory has {self.system.width} state columns")

        return self

    def __len__(self) -> int:
        return len(self.times)

    @property
    def labels(self) -> list[str]:
        if self.system is SystemKind.FULL:
            return FULL_STATE_LABELS
        elif self.system is SystemKind.LOWMEM:
            return LOWMEM_STATE_LABELS
        return MEMORY_STATE_LABELS

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def state_at(self, index: int) -> State4 | State2:
        return state_from_array(self.states[index])

    def window_start(self, window_fraction: float) -> int:
        """Index of the first sample in the terminal window covering ``window_fraction`` of the run."""
        start_time = self.times[-1] - window_fraction * self.duration
        return int(np.searchsorted(self.times, start_time - 1e-9 * max(1.0, abs(start_time))))

    def window(self, window_fraction: float) -> tuple[np.ndarray, np.ndarray]:
        start = self.window_start(window_fraction)
        return self.times[start:], self.states[start:]

    def mirrored(self) -> "Trajectory":
        signs = np.array([-1.0, -1.0, -1.0, 1.0]) if self.system.width == 4 else np.array([-1.0, -1.0])
        return self.model_copy(update={"states": self.states * signs})

    def shifted(self, offset: float) -> "Trajectory":
        states = self.states.copy()
        states[:, 0] += offset
        return self.model_copy(update={"states": states})


class IntegratorConfig(BaseModel):
    rel_tol: float = Field(default=1e-3, gt=0)
    abs_tol: float = Field(default=1e-6, gt=0)
    t_end: float = Field(default=2000.0, gt=0, allow_inf_nan=False)
    max_step: float | None = Field(default=None, gt=0)
    sample_dt: float = Field(default=0.05, gt=0)
    initial_perturbation: float = Field(default=1e-8, gt=0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_sampling(self) -> "IntegratorConfig":
        if self.sample_dt > self.t_end:
            raise ValueError("sample_dt must be <= t_end")
        return self

    @property
    def effective_max_step(self) -> float:
        return self.max_step if self.max_step is not None else self.t_end / 10.0


class ClassifierConfig(BaseModel):
    window_fraction: float = Field(default=0.5, gt=0, le=1)
    v_stationary: float = Field(default=1e-3, gt=0)
    drift_fraction: float = Field(default=0.1, gt=0)
    drift_floor: float = Field(default=0.05, gt=0)
    periodicity_threshold: float = Field(default=0.98, gt=0, le=1)
    lyapunov_threshold: float = Field(default=0.005, gt=0)
    min_duration: float = Field(default=200.0, gt=0)
    min_amplitude: float = Field(default=1e-6, gt=0)
    use_lyapunov: bool = True

    model_config = ConfigDict(frozen=True, extra="forbid")

    def drift_threshold(self, params: Params) -> float:
        if params.r > 1.0:
            return self.drift_fraction * math.sqrt(params.r - 1.0)
        return self.drift_floor


class CubicCoeffs(BaseModel):
    """Coefficients of the monic cubic lambda^3 + a1 lambda^2 + a2 lambda + a3."""
    a1: float = Field(allow_inf_nan=False)
    a2: float = Field(allow_inf_nan=False)
    a3: float = Field(allow_inf_nan=False)

    model_config = ConfigDict(frozen=True)

    def evaluate(self, value: complex) -> complex:
        return ((value + self.a1) * value + self.a2) * value + self.a3


class Eigenvalue(BaseModel):
    re: float
    im: float

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_complex(cls, value: complex) -> "Eigenvalue":
        return cls(re=float(value.real), im=float(value.imag))

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


class EquilibriumReport(BaseModel):
    k: int
    x_eq: float
    parity: EquilibriumKind
    system: SystemKind = SystemKind.FULL
    eigenvalues: list[Eigenvalue]
    verdict: Verdict
    mechanism: Mechanism
    discriminant: float | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_spectrum(self) -> "EquilibriumReport":
        if self.system is SystemKind.FULL:
            if len(self.eigenvalues) != 4:
                raise ValueError("the full system has exactly 4 eigenvalues")
            if not any(e.re == -1.0 and e.im == 0.0 for e in self.eigenvalues):
                raise ValueError("the full system always has the eigenvalue -1")
        elif len(self.eigenvalues) != 2:
            raise ValueError("the low-memory system has exactly 2 eigenvalues")
        return self

    @property
    def max_real_part(self) -> float:
        return max(e.re for e in self.eigenvalues)


class AxisRange(BaseModel):
    min: float = Field(allow_inf_nan=False)
    max: float = Field(allow_inf_nan=False)
    n: int = Field(ge=2)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_order(self) -> "AxisRange":
        if self.max <= self.min:
            raise ValueError("max must be greater than min")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.n)


class SweepSpec(BaseModel):
    plane: SweepPlane
    params: Params
    axis1: AxisRange
    axis2: AxisRange
    init_rule: InitRule = InitRule.TROUGH_REST
    x0: float | None = None
    X0: float = 0.0
    explicit_state: list[float] | None = None
    system: SystemKind = SystemKind.FULL
    integrator: IntegratorConfig = IntegratorConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    compute_lle: bool = False

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_ranges(self) -> "SweepSpec":
        lower_bounds = {"sigma": (0.0, True), "r": (0.0, False), "A": (0.0, False), "B": (0.0, True)}

        for axis_name, axis in zip(self.plane.axis_names, (self.axis1, self.axis2)):
            if axis_name in lower_bounds:
                bound, strict = lower_bounds[axis_name]
                if axis.min < bound or (strict and axis.min == bound):
                    relation = ">" if strict else ">="
                    raise ValueError(f"{axis_name} axis must stay {relation} {bound:g}")

        if self.plane in (SweepPlane.X0_X0, SweepPlane.X0_B) and self.init_rule is not InitRule.VELOCITY_SEEDED:
            raise ValueError(f"the {self.plane} plane varies the initial state and needs init_rule velocity-seeded")

        if self.system is SystemKind.MEMORY:
            raise ValueError("sweeps run the full or the low-memory system")

        if self.init_rule is InitRule.EXPLICIT:
            if self.explicit_state is None or len(self.explicit_state) != self.system.width:
                raise ValueError(f"init_rule explicit needs explicit_state with {self.system.width} components")

        return self

    @property
    def shape(self) -> tuple[int, int]:
        return self.axis1.n, self.axis2.n


class SweepCell(BaseModel):
    i: int
    j: int
    axis1: float
    axis2: float
    behavior: BehaviorClass | None = None
    avg_speed: float | None = None
    lle: float | None = None
    well_hops: int | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class SweepResult(BaseModel):
    spec: SweepSpec
    cells: list[list[SweepCell]]
    provenance: dict[str, Any] = {}

    @model_validator(mode="after")
    def check_grid(self) -> "SweepResult":
        rows, columns = self.spec.shape
        if len(self.cells) != rows or any(len(row) != columns for row in self.cells):
            raise ValueError(f"sweep grid must be {rows}x{columns}")
        return self

    def flat_cells(self) -> list[SweepCell]:
        return [cell for row in self.cells for cell in row]

    def count(self, behavior: BehaviorClass) -> int:
        return sum(1 for cell in self.flat_cells() if cell.behavior is behavior)

    @property
    def failed_cells(self) -> list[SweepCell]:
        return [cell for cell in self.flat_cells() if cell.failed]


class VelocityCurvePoint(BaseModel):
    B: float
    X0: float
    avg_speed: float | None = None
    avg_speed_normalized: float | None = None
    behavior: BehaviorClass | None = None
    error: str | None = None


class Equilibrium(BaseModel):
    k: int
    x_eq: float
    kind: EquilibriumKind

    model_config = ConfigDict(frozen=True)

    def rest_state(self) -> State4:
        return State4(x=self.x_eq, X=0.0, Y=0.0, Z=0.0)


class StabilityMapCell(BaseModel):
    AB: float
    r: float
    verdict: Verdict
    mechanism: Mechanism
    max_real_part: float

    model_config = ConfigDict(frozen=True)


class Preset(BaseModel):
    name: str
    description: str
    params: Params
    init_rule: InitRule = InitRule.TROUGH_REST
    X0: float = 0.0
    expected: BehaviorClass | None = None

    model_config = ConfigDict(frozen=True)


class Command(StrEnum):
    SIMULATE = "simulate"
    STABILITY = "stability"
    SWEEP = "sweep"
    BASIN = "basin"
    VELOCITY_CURVE = "velocity-curve"
    LOWMEM_SWEEP = "lowmem-sweep"


def _split_floats(value):
    if isinstance(value, str):
        return [float(item) for item in value.split(",") if item.strip()]
    return value


FloatList = Annotated[list[float], BeforeValidator(_split_floats)]


class SimulateSection(BaseModel):
    init_rule: InitRule = InitRule.TROUGH_REST
    x0: float | None = None
    X0: float = 0.0
    explicit_state: FloatList | None = None
    system: SystemKind = SystemKind.FULL
    memory_dt: float = Field(default=0.01, gt=0, le=0.01)

    model_config = ConfigDict(extra="forbid")


class StabilitySection(BaseModel):
    k_min: int = 0
    k_max: int = 1
    sigma_min: float = Field(default=0.5, gt=0)
    sigma_max: float = Field(default=40.0, gt=0)
    n_points: int = Field(default=200, ge=2)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_ranges(self) -> "StabilitySection":
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")
        if self.sigma_max <= self.sigma_min:
            raise ValueError("sigma_max must be greater than sigma_min")
        return self


class SweepSection(BaseModel):
    """Grid of one sweep command. The plane defaults to the command's natural plane."""
    plane: SweepPlane | None = None
    axis1_min: float
    axis1_max: float
    axis1_n: int = Field(default=201, ge=2)
    axis2_min: float
    axis2_max: float
    axis2_n: int = Field(default=201, ge=2)
    init_rule: InitRule = InitRule.TROUGH_REST
    x0: float | None = None
    X0: float = 0.0
    explicit_state: FloatList | None = None
    compute_lle: bool = False

    model_config = ConfigDict(extra="forbid")


class VelocitySection(BaseModel):
    B_min: float = Field(default=0.5, gt=0)
    B_max: float = Field(default=6.0, gt=0)
    B_n: int = Field(default=400, ge=2)
    X0_values: FloatList = [0.0, 3.0]

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_range(self) -> "VelocitySection":
        if self.B_max <= self.B_min:
            raise ValueError("B_max must be greater than B_min")
        if not self.X0_values:
            raise ValueError("X0_values needs at least one value")
        return self


_SWEEP_COMMANDS = (Command.SWEEP, Command.BASIN, Command.LOWMEM_SWEEP)


class RunConfig(BaseModel):
    command: Command
    output_path: str
    workers: int | None = Field(default=None, ge=1)
    workbook_path: str | None = None
    params: Params
    integrator: IntegratorConfig = IntegratorConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    simulate: SimulateSection | None = None
    stability: StabilitySection | None = None
    sweep: SweepSection | None = None
    velocity: VelocitySection | None = None

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_sections(self) -> "RunConfig":
        if self.command in _SWEEP_COMMANDS and self.sweep is None:
            raise ValueError(f"section [sweep] is required for the {self.command} command")

        if self.command is Command.BASIN and self.sweep.plane not in (None, SweepPlane.X0_X0):
            raise ValueError("the basin command runs on the x0-X0 plane")
        if self.command is Command.LOWMEM_SWEEP and self.sweep.plane not in (None, SweepPlane.A_B):
            raise ValueError("the lowmem-sweep command runs on the A-B plane")

        return self

    def sweep_spec(self) -> SweepSpec:
        section = self.sweep
        plane = section.plane
        init_rule = section.init_rule
        system = SystemKind.FULL

        if self.command is Command.BASIN:
            plane = SweepPlane.X0_X0
            init_rule = InitRule.VELOCITY_SEEDED
        elif self.command is Command.LOWMEM_SWEEP:
            plane = SweepPlane.A_B
            init_rule = InitRule.TROUGH_REST
            system = SystemKind.LOWMEM
        elif plane is None:
            plane = SweepPlane.SIGMA_R

        return SweepSpec(
            plane=plane,
            params=self.params,
            axis1=AxisRange(min=section.axis1_min, max=section.axis1_max, n=section.axis1_n),
            axis2=AxisRange(min=section.axis2_min, max=section.axis2_max, n=section.axis2_n),
            init_rule=init_rule,
            x0=section.x0,
            X0=section.X0,
            explicit_state=section.explicit_state,
            system=system,
            integrator=self.integrator,
            classifier=self.classifier,
            compute_lle=section.compute_lle,
        )


class SimulateRequest(BaseModel):
    params: Params
    init_rule: InitRule = InitRule.TROUGH_REST
    x0: float | None = None
    X0: float = 0.0
    explicit_state: list[float] | None = None
    system: SystemKind = SystemKind.FULL
    integrator: IntegratorConfig = IntegratorConfig()
    classifier: ClassifierConfig = ClassifierConfig()

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            'examples': [
                {
                    'params': {'sigma': 8.0, 'r': 15.0, 'A': 1.0, 'B': 5.0},
                    'init_rule': 'trough-rest',
                    'integrator': {'t_end': 2000.0},
                }
            ]
        }
    )


class SimulationSummary(BaseModel):
    behavior: BehaviorClass | None = None
    avg_speed: float
    well_hops: int
    terminal_state: list[float]
    error: str | None = None


class SweepStatus(StrEnum):
    IDLE = "idle"
    RUNNING = "running"
    FINISHED = "finished"
    FAILED = "failed"


class SweepJobStatus(BaseModel):
    status: SweepStatus
    done: int = 0
    total: int = 0
    error: str | None = None
