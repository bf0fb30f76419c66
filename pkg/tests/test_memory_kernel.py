import math

import numpy as np
import pytest

from pilotwalk.dynamics import FullSystem, free_walking_state
from pilotwalk.integrator import NonFiniteStateError, integrate
from pilotwalk.memory_kernel import (EmptyHistoryError, MemoryHistory, UnsupportedHistoryError, history_for_state,
                                     integrate_memory, memory_force, memory_horizon)
from pilotwalk.models import *


def _walking_state(p: Params, u: float, x: float = 0.0) -> State4:
    return State4(x=x, X=u, Y=p.r * u / (1 + u * u), Z=p.r * u * u / (1 + u * u))


def _walking_force_error(p: Params, u: float, dt: float) -> float:
    history = history_for_state(_walking_state(p, u), p, dt)
    return abs(memory_force(history, 0.0, p) - p.r * u / (1 + u * u))


def test_horizon_follows_cutoff():
    assert memory_horizon(1e-12) == pytest.approx(12 * math.log(10))
    with pytest.raises(ValueError):
        memory_horizon(1.5)


def test_empty_history_raises(exemplar_params):
    with pytest.raises(EmptyHistoryError):
        memory_force(MemoryHistory(0.01), 0.0, exemplar_params)


def test_single_sample_carries_no_force(exemplar_params):
    history = MemoryHistory(0.01)
    history.append(0.0, 0.3)
    assert memory_force(history, 0.5, exemplar_params) == 0.0


def test_rest_history_exerts_no_force(exemplar_params):
    history = history_for_state(State4(x=0.7, X=0.0, Y=0.0, Z=0.0), exemplar_params, 0.01)
    assert history.full
    assert memory_force(history, 0.7, exemplar_params) == 0.0


def test_constant_offset_history(exemplar_params):
    history = history_for_state(State4(x=0.0, X=0.0, Y=0.0, Z=0.0), exemplar_params, 0.01)
    offset = 0.4
    expected = exemplar_params.r * math.sin(offset) * (1 - math.exp(-history.horizon))

    assert memory_force(history, offset, exemplar_params) == pytest.approx(expected, rel=1e-4)


def test_steady_walking_history(exemplar_params):
    u = 3.0
    history = history_for_state(_walking_state(exemplar_params, u), exemplar_params, 0.01)
    expected = exemplar_params.r * u / (1 + u * u)

    assert memory_force(history, 0.0, exemplar_params) == pytest.approx(expected, rel=1e-3)


def test_quadrature_is_second_order(exemplar_params):
    ratio = _walking_force_error(exemplar_params, 3.0, 0.1) / _walking_force_error(exemplar_params, 3.0, 0.05)
    assert 3.5 < ratio < 4.5


def test_unmatched_memory_variables_are_rejected(exemplar_params):
    with pytest.raises(UnsupportedHistoryError):
        history_for_state(State4(x=0.0, X=1.0, Y=0.3, Z=0.0), exemplar_params, 0.01)


def test_ring_buffer_keeps_the_horizon():
    history = MemoryHistory(1.0, cutoff=0.04)
    assert history.capacity == 5

    for t in range(7):
        history.append(float(t), 10.0 * t)

    assert len(history) == 5 and history.full
    np.testing.assert_array_equal(history.newest_first(), [60.0, 50.0, 40.0, 30.0, 20.0])

    times, positions = history.ordered()
    np.testing.assert_array_equal(times, [2.0, 3.0, 4.0, 5.0, 6.0])
    np.testing.assert_array_equal(positions, [20.0, 30.0, 40.0, 50.0, 60.0])

    weights = history.kernel_weights()
    assert weights[0] == 0.5 and weights[-1] == pytest.approx(0.5 * math.exp(-4.0))


def test_history_rejects_bad_samples():
    history = MemoryHistory(0.5)
    history.append(0.0, 1.0)

    with pytest.raises(ValueError):
        history.append(0.7, 1.0)
    with pytest.raises(NonFiniteStateError):
        history.append(0.5, math.nan)


def test_history_from_samples():
    history = MemoryHistory.from_samples([0.0, 0.1, 0.2, 0.3], [1.0, 2.0, 3.0, 4.0])
    assert history.dt == pytest.approx(0.1)
    assert history.latest_time == 0.3

    with pytest.raises(ValueError):
        MemoryHistory.from_samples([0.0, 0.1, 0.3], [1.0, 2.0, 3.0])


def test_memory_step_must_resolve_the_kernel(exemplar_params):
    start = State4(x=0.1, X=0.0, Y=0.0, Z=0.0)
    with pytest.raises(ValueError):
        integrate_memory(start, exemplar_params, IntegratorConfig(t_end=1.0), dt=0.05)


def test_memory_integration_matches_ode_near_trough():
    p = Params(sigma=10.0, r=2.0, A=1.0, B=5.0)
    start = State4(x=math.pi / 5 + 0.05, X=0.0, Y=0.0, Z=0.0)

    ode = integrate(FullSystem(p), start, IntegratorConfig(rel_tol=1e-9, abs_tol=1e-12, t_end=50.0))
    memory = integrate_memory(start, p, IntegratorConfig(t_end=50.0), dt=0.01)

    assert memory.system is SystemKind.MEMORY
    assert len(memory) == len(ode)
    assert np.max(np.abs(memory.positions - ode.positions)) < 1e-3


def test_memory_integration_walks_in_free_space(free_space_params):
    start = free_walking_state(free_space_params)
    traj = integrate_memory(start, free_space_params, IntegratorConfig(t_end=20.0))

    np.testing.assert_allclose(traj.velocities, 3.0, atol=1e-3)
    assert traj.positions[-1] == pytest.approx(60.0, rel=1e-3)
