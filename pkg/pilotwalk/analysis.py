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

from pilotwalk.dynamics import ModelSystem, system_for
from pilotwalk.integrator import DormandPrince54
from pilotwalk.models import *

logger = logging.getLogger(__name__)

MIN_LYAPUNOV_T_END = 500.0
LYAPUNOV_DISCARD_FRACTION = 0.1
LYAPUNOV_REL_TOL = 1e-6
LYAPUNOV_ABS_TOL = 1e-9
MIN_CROSSINGS = 4


class TrajectoryTooShortError(ValueError):
    pass


class NotOscillatoryError(ValueError):
    pass


def average_speed(traj: Trajectory, window_fraction: float = 0.5) -> float:
    """|mean of the sampled velocity| over the terminal window."""
    _, states = traj.window(window_fraction)
    return abs(float(states[:, 1].mean()))


def periodicity(x) -> tuple[float, int]:
    """
    Peak of the Pearson autocorrelation of the mean-removed signal over lags between its first zero crossing
    and half the signal length, with the lag (in samples) where it occurs. A constant signal is periodic with
    peak 1 and lag 0; a signal whose autocorrelation never changes sign has peak 0.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)

    if n < 4:
        return 0.0, 0

    y = x - x.mean()
    if np.max(np.abs(y)) <= 1e-9 * max(1.0, float(np.max(np.abs(x)))):
        return 1.0, 0

    max_lag = n // 2
    lags = np.arange(1, max_lag + 1)
    size = 1 << int(math.ceil(math.log2(2 * n)))
    spectrum = np.fft.rfft(y, size)
    products = np.fft.irfft(spectrum * np.conj(spectrum), size)[1:max_lag + 1]

    # per-lag means and sums of squares of the overlapping segments y[:n-lag] and y[lag:]
    cumulative = np.concatenate(([0.0], np.cumsum(y)))
    cumulative_sq = np.concatenate(([0.0], np.cumsum(y * y)))
    counts = n - lags
    head_sum = cumulative[counts]
    tail_sum = cumulative[n] - cumulative[lags]
    head_sq = cumulative_sq[counts]
    tail_sq = cumulative_sq[n] - cumulative_sq[lags]

    covariance = products - head_sum * tail_sum / counts
    variance = (head_sq - head_sum ** 2 / counts) * (tail_sq - tail_sum ** 2 / counts)
    acf = np.where(variance > 0, covariance / np.sqrt(np.maximum(variance, 1e-300)), 0.0)

    below = np.nonzero(acf <= 0.0)[0]
    if len(below) == 0:
        return 0.0, 0

    start = below[0]
    best = start + int(np.argmax(acf[start:]))
    return float(acf[best]), int(lags[best])


def oscillation_frequency(traj: Trajectory, window_fraction: float = 0.5, min_amplitude: float = 1e-6) -> float:
    """Angular frequency 2 pi / T from upward zero crossings of the mean-removed velocity."""
    times, states = traj.window(window_fraction)
    y = states[:, 1] - states[:, 1].mean()

    if len(y) < 2 or 0.5 * float(np.ptp(y)) < min_amplitude:
        raise NotOscillatoryError("not oscillatory: velocity amplitude below the oscillation floor")

    upward = np.nonzero((y[:-1] < 0.0) & (y[1:] >= 0.0))[0]
    if len(upward) < MIN_CROSSINGS:
        raise NotOscillatoryError(f"not oscillatory: {len(upward)} upward crossings, need {MIN_CROSSINGS}")

    fraction = -y[upward] / (y[upward + 1] - y[upward])
    crossings = times[upward] + fraction * (times[upward + 1] - times[upward])
    period = (crossings[-1] - crossings[0]) / (len(crossings) - 1)

    return 2.0 * math.pi / period


def well_hops(traj: Trajectory, p: Params, window_fraction: float = 0.5) -> int:
    """Number of potential maxima x = 2 k pi / B crossed inside the terminal window."""
    _, states = traj.window(window_fraction)
    cells = np.floor(p.B * states[:, 0] / (2.0 * math.pi))
    return int(np.sum(np.abs(np.diff(cells))))


def lyapunov_estimate(system: ModelSystem | Params, s0: State4 | State2 | np.ndarray, t_end: float = 1000.0,
                      renorm_dt: float = 1.0) -> float:
    """
    Largest Lyapunov exponent from a tangent vector integrated along the trajectory with the Jacobian and
    renormalized every renorm_dt. Growth over the first tenth of the run is discarded.
    """
    if isinstance(system, Params):
        system = system_for(SystemKind.FULL, system)

    if t_end < MIN_LYAPUNOV_T_END:
        raise ValueError(f"t_end must be >= {MIN_LYAPUNOV_T_END:g}, got {t_end}")
    if renorm_dt <= 0 or renorm_dt > t_end:
        raise ValueError(f"renorm_dt must lie in (0, t_end], got {renorm_dt}")

    n = system.dimension
    y = system.as_array(s0)
    w = np.ones(n) / math.sqrt(n)
    augmented = np.concatenate((y, w))

    discard = LYAPUNOV_DISCARD_FRACTION * t_end
    t = 0.0
    h = None
    growth = 0.0
    measured = 0.0

    while t < t_end - 1e-12:
        t_next = min(t + renorm_dt, t_end)
        solver = DormandPrince54(system.tangent_rhs, t, augmented, t_next, LYAPUNOV_REL_TOL, LYAPUNOV_ABS_TOL,
                                 max_step=renorm_dt, first_step=h)
        while not solver.finished:
            solver.step()
        h = min(solver.h, renorm_dt)

        augmented = solver.y
        norm = float(np.linalg.norm(augmented[n:]))
        if norm == 0.0 or not math.isfinite(norm):
            raise ValueError(f"tangent vector degenerated at t={t_next:g}")
        augmented[n:] /= norm

        if t >= discard:
            growth += math.log(norm)
            measured += t_next - t
        t = t_next

    return growth / measured


def _by_drift(mean_speed: float, threshold: float) -> BehaviorClass:
    return BehaviorClass.RUNAWAY if mean_speed > threshold else BehaviorClass.BACK_AND_FORTH


def classify(traj: Trajectory, p: Params, cfg: ClassifierConfig = ClassifierConfig(),
             lle: float | None = None) -> BehaviorClass:
    """
    Long-time behavior over the terminal window:

    * Stationary when the velocity stays below v_stationary;
    * Runaway when the velocity signal is periodic and drifts faster than the drift threshold;
    * BackAndForth when it is periodic, does not drift and the position stays within two wavelengths plus
      one period's excursion;
    * Irregular when the velocity is aperiodic. A periodic signal that fits neither test is Irregular when its
      Lyapunov exponent exceeds lyapunov_threshold and BackAndForth otherwise.

    Drift is the mean sampled velocity, the same observable average_speed reports, so Runaway always has
    average_speed above the drift threshold and Stationary below v_stationary.
    """
    times, states = traj.window(cfg.window_fraction)
    positions = states[:, 0]
    velocities = states[:, 1]

    peak, lag = periodicity(velocities)
    periodic = peak >= cfg.periodicity_threshold

    if traj.duration < cfg.min_duration:
        sample_dt = float(np.median(np.diff(times))) if len(times) > 1 else 0.0
        if not (periodic and lag > 0 and times[-1] - times[0] >= 2 * lag * sample_dt):
            raise TrajectoryTooShortError(f"trajectory of duration {traj.duration:g} is shorter than "
                                          f"{cfg.min_duration:g} and its window holds fewer than two periods")

    if float(np.max(np.abs(velocities))) < cfg.v_stationary:
        return BehaviorClass.STATIONARY

    mean_speed = float(abs(velocities.mean()))
    threshold = cfg.drift_threshold(p)

    if not periodic:
        if traj.system is SystemKind.LOWMEM:
            # planar flow on the cylinder, a slow transient rather than chaos
            logger.debug(f"Aperiodic low-memory window (peak {peak:.3f}), deciding by drift")
            return _by_drift(mean_speed, threshold)
        return BehaviorClass.IRREGULAR

    if mean_speed > threshold:
        return BehaviorClass.RUNAWAY

    one_period = positions[:lag + 1] if lag > 0 else positions[:1]
    bound = 4.0 * math.pi / p.B + float(np.ptp(one_period))
    if float(np.ptp(positions)) < bound:
        return BehaviorClass.BACK_AND_FORTH

    if cfg.use_lyapunov and traj.system is not SystemKind.MEMORY:
        if lle is None:
            system = system_for(traj.system, p)
            lle = lyapunov_estimate(system, states[0], t_end=MIN_LYAPUNOV_T_END)
        if lle > cfg.lyapunov_threshold:
            return BehaviorClass.IRREGULAR

    # drift is already below the threshold here
    return BehaviorClass.BACK_AND_FORTH
