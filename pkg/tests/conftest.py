
import numpy as np
import pytest

from pilotwalk.dynamics import ModelSystem
from pilotwalk.models import *
from pilotwalk.sweep import cell_inputs


class LinearSystem(ModelSystem):
    """y' = M y with a constant matrix, for checks against closed-form solutions."""

    def __init__(self, matrix, params: Params | None = None):
        super().__init__(params or Params(sigma=1.0, r=0.0, A=0.0, B=1.0))
        self.matrix = np.array(matrix, dtype=float)

    @property
    def kind(self) -> SystemKind:
        return SystemKind.LOWMEM if len(self.matrix) == 2 else SystemKind.FULL

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    @property
    def labels(self) -> list[str]:
        return LOWMEM_STATE_LABELS if self.dimension == 2 else FULL_STATE_LABELS

    def rhs(self, t, y):
        return self.matrix @ y

    def jacobian(self, y):
        return self.matrix

    def is_equilibrium(self, y) -> bool:
        return False


class BlowUpSystem(LinearSystem):
    """x' = x^2 escapes to infinity at t = 1 / x(0)."""

    def __init__(self):
        super().__init__(np.zeros((2, 2)))

    def rhs(self, t, y):
        return np.array([y[0] * y[0], 0.0])


def assert_classes_match_speed(result: SweepResult):
    """Stationary cells move slower than v_stationary and Runaway cells drift faster than the drift threshold."""
    cfg = result.spec.classifier
    for cell in result.flat_cells():
        if cell.failed:
            continue
        p, _, _ = cell_inputs(result.spec, cell.axis1, cell.axis2)
        if cell.behavior is BehaviorClass.STATIONARY:
            assert cell.avg_speed < cfg.v_stationary, cell
        if cell.behavior is BehaviorClass.RUNAWAY:
            assert cell.avg_speed >= cfg.drift_threshold(p), cell


@pytest.fixture
def exemplar_params():
    return Params(sigma=10.0, r=10.0, A=1.0, B=5.0)


@pytest.fixture
def free_space_params():
    return Params(sigma=10.0, r=10.0, A=0.0, B=1.0)


@pytest.fixture
def oscillator():
    return LinearSystem([[0.0, 1.0], [-1.0, 0.0]])


@pytest.fixture
def blow_up():
    return BlowUpSystem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def synthetic_trajectory(times, positions, velocities, params, system=SystemKind.FULL):
    times = np.asarray(times, dtype=float)
    columns = [np.asarray(positions, dtype=float), np.asarray(velocities, dtype=float)]
    if system is SystemKind.FULL:
        columns += [np.zeros_like(times), np.zeros_like(times)]
    return Trajectory(times=times, states=np.column_stack(columns), params=params, system=system)


@pytest.fixture
def make_trajectory():
    return synthetic_trajectory