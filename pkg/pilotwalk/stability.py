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
Closed-form linear stability of the rest states x = k pi / B. The Jacobian of the full system there splits into
the decoupled Z direction (eigenvalue -1) and the monic cubic

    lambda^3 + (sigma + 1) lambda^2 + sigma (1 - r - (-1)^k A B) lambda - (-1)^k A B sigma
"""

import cmath
import logging
import math

import numpy as np

from pilotwalk.models import *

logger = logging.getLogger(__name__)

MARGINAL_TOL = 1e-10
DEGENERATE_DISCRIMINANT_TOL = 1e-12
_NEWTON_ITERATIONS = 3


class RuleNotApplicableError(ValueError):
    pass


def characteristic_cubic(p: Params, parity: Parity) -> CubicCoeffs:
    ab = p.A * p.B
    return CubicCoeffs(
        a1=p.sigma + 1.0,
        a2=p.sigma * (1.0 - p.r - parity.sign * ab),
        a3=-parity.sign * ab * p.sigma,
    )


def discriminant(c: CubicCoeffs) -> float:
    a1, a2, a3 = c.a1, c.a2, c.a3
    return (a1 * a1 * a2 * a2 - 4.0 * a2 ** 3 - 4.0 * a1 ** 3 * a3 - 27.0 * a3 * a3
            + 18.0 * a1 * a2 * a3)


def _polish(c: CubicCoeffs, root: float) -> float:
    for _ in range(_NEWTON_ITERATIONS):
        slope = (3.0 * root + 2.0 * c.a1) * root + c.a2
        if slope == 0.0:
            break
        step = c.evaluate(root).real / slope
        if not math.isfinite(step):
            break
        root -= step
    return root


def _sorted_roots(roots) -> list[complex]:
    return sorted((complex(root) for root in roots), key=lambda z: (-z.real, -z.imag))


def cubic_roots(c: CubicCoeffs) -> list[complex]:
    """
    Roots of the monic cubic, largest real part first. Three real roots come from the trigonometric form,
    a single real root from Cardano's formula; real roots are Newton-polished and a complex pair is recovered
    from the deflated quadratic so that it is exactly conjugate.
    """
    shift = c.a1 / 3.0
    p = c.a2 - c.a1 * c.a1 / 3.0
    q = 2.0 * c.a1 ** 3 / 27.0 - c.a1 * c.a2 / 3.0 + c.a3
    delta = discriminant(c)

    if delta >= 0.0 and p < 0.0:
        m = 2.0 * math.sqrt(-p / 3.0)
        argument = 3.0 * q / (p * m)
        theta = math.acos(min(1.0, max(-1.0, argument))) / 3.0
        real_roots = [_polish(c, m * math.cos(theta - 2.0 * math.pi * n / 3.0) - shift) for n in range(3)]
        return _sorted_roots(real_roots)

    if delta >= 0.0:
        # p vanishes: a triple root
        root = _polish(c, float(np.cbrt(-q)) - shift)
        return _sorted_roots([root, root, root])

    d = math.sqrt(max(0.0, q * q / 4.0 + p ** 3 / 27.0))
    u = -math.copysign(float(np.cbrt(abs(q) / 2.0 + d)), q) if q != 0.0 else float(np.cbrt(d))
    t = u - p / (3.0 * u) if u != 0.0 else 0.0
    r1 = _polish(c, t - shift)

    # lambda^2 + b lambda + e after dividing out (lambda - r1)
    b = c.a1 + r1
    e = c.a2 + r1 * b
    quad = b * b - 4.0 * e

    if quad < 0.0:
        half_width = math.sqrt(-quad) / 2.0
        pair = [complex(-b / 2.0, half_width), complex(-b / 2.0, -half_width)]
    else:
        root = -(b + math.copysign(math.sqrt(quad), b)) / 2.0
        pair = [root, e / root if root != 0.0 else -b - root]

    return _sorted_roots([r1, *pair])


def companion_roots(c: CubicCoeffs) -> list[complex]:
    """Eigenvalues of the companion matrix, an independent check on cubic_roots."""
    companion = np.array([
        [-c.a1, -c.a2, -c.a3],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
    ])
    return _sorted_roots(np.linalg.eigvals(companion))


def descartes_classify(p: Params, parity: Parity) -> tuple[int, ...]:
    """
    Possible numbers of positive real roots of the characteristic cubic by Descartes' rule of signs, largest
    first. Peaks always give exactly one; troughs give none below r = 1 + A B and two or none above.
    """
    c = characteristic_cubic(p, parity)

    if c.a3 == 0.0:
        raise RuleNotApplicableError("rule not applicable: A B = 0 puts a root at zero")

    signs = [math.copysign(1.0, value) for value in (1.0, c.a1, c.a2, c.a3) if value != 0.0]
    changes = sum(1 for first, second in zip(signs, signs[1:]) if first != second)

    return tuple(range(changes, -1, -2))


def r_critical(p: Params) -> float:
    """Memory force at which the trough loses stability through a complex pair."""
    return 1.0 + p.A * p.B * p.sigma / (p.sigma + 1.0)


def omega_onset(p: Params) -> float:
    return math.sqrt(p.A * p.B * p.sigma / (p.sigma + 1.0))


def _verdict(max_real: float) -> Verdict:
    if abs(max_real) <= MARGINAL_TOL:
        return Verdict.MARGINAL
    return Verdict.UNSTABLE if max_real > 0.0 else Verdict.STABLE


def _mechanism(roots: list[complex], verdict: Verdict, degenerate: bool) -> Mechanism:
    if degenerate or verdict is Verdict.MARGINAL:
        return Mechanism.MARGINAL

    leading = max(roots, key=lambda z: z.real)

    if verdict is Verdict.UNSTABLE:
        return Mechanism.POSITIVE_REAL_ROOT if leading.imag == 0.0 else Mechanism.COMPLEX_PAIR_POSITIVE

    if all(root.imag == 0.0 for root in roots):
        return Mechanism.ALL_NEGATIVE
    return Mechanism.COMPLEX_PAIR_NEGATIVE


def _without_zero_root(roots: list[complex]) -> list[complex]:
    nearest = min(range(len(roots)), key=lambda n: abs(roots[n]))
    return [root for n, root in enumerate(roots) if n != nearest]


def stability_report(p: Params, k: int) -> EquilibriumReport:
    parity = Parity.of(k)
    coeffs = characteristic_cubic(p, parity)
    roots = cubic_roots(coeffs)
    delta = discriminant(coeffs)

    if p.A == 0.0:
        remaining = _without_zero_root(roots)
        verdict = _verdict(max(-1.0, *(root.real for root in remaining)))
        mechanism = Mechanism.FREE_SPACE
    else:
        verdict = _verdict(max(root.real for root in roots))
        mechanism = _mechanism(roots, verdict, abs(delta) <= DEGENERATE_DISCRIMINANT_TOL)

    return EquilibriumReport(
        k=k,
        x_eq=k * math.pi / p.B,
        parity=EquilibriumKind.PEAK if parity is Parity.EVEN else EquilibriumKind.TROUGH,
        system=SystemKind.FULL,
        eigenvalues=[Eigenvalue(re=-1.0, im=0.0)] + [Eigenvalue.from_complex(root) for root in roots],
        verdict=verdict,
        mechanism=mechanism,
        discriminant=delta,
    )


def lowmem_eigenvalues(p: Params, parity: Parity) -> tuple[complex, complex]:
    half_trace = 0.5 * p.sigma * (p.r / EULER - 1.0)
    root = cmath.sqrt(half_trace * half_trace + parity.sign * p.A * p.B * p.sigma)

    if root.imag == 0.0:
        return complex(half_trace + root.real), complex(half_trace - root.real)
    return complex(half_trace, root.imag), complex(half_trace, -root.imag)


def lowmem_report(p: Params, k: int) -> EquilibriumReport:
    parity = Parity.of(k)
    eigenvalues = list(lowmem_eigenvalues(p, parity))
    half_trace = 0.5 * p.sigma * (p.r / EULER - 1.0)
    quad = half_trace * half_trace + parity.sign * p.A * p.B * p.sigma

    if p.A == 0.0:
        remaining = _without_zero_root(eigenvalues)
        verdict = _verdict(remaining[0].real)
        mechanism = Mechanism.FREE_SPACE
    else:
        verdict = _verdict(max(value.real for value in eigenvalues))
        mechanism = _mechanism(eigenvalues, verdict, abs(quad) <= DEGENERATE_DISCRIMINANT_TOL)

    return EquilibriumReport(
        k=k,
        x_eq=k * math.pi / p.B,
        parity=EquilibriumKind.PEAK if parity is Parity.EVEN else EquilibriumKind.TROUGH,
        system=SystemKind.LOWMEM,
        eigenvalues=[Eigenvalue.from_complex(value) for value in eigenvalues],
        verdict=verdict,
        mechanism=mechanism,
        discriminant=quad,
    )


def boundary_curve(p_template: Params, sigma_range: tuple[float, float], n_points: int) -> list[tuple[float, float]]:
    """Polyline (sigma, r_c) of the trough stability boundary at the template's A and B."""
    sigma_min, sigma_max = sigma_range

    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    if sigma_min <= 0 or sigma_max <= sigma_min:
        raise ValueError(f"sigma range must satisfy 0 < min < max, got ({sigma_min}, {sigma_max})")

    curve = []
    for sigma in np.linspace(sigma_min, sigma_max, n_points):
        params = Params(sigma=float(sigma), r=p_template.r, A=p_template.A, B=p_template.B)
        curve.append((float(sigma), r_critical(params)))

    return curve


def stability_map(sigma: float, ab_range: AxisRange, r_range: AxisRange, k: int = 1,
                  B: float = 1.0) -> list[StabilityMapCell]:
    """
    Verdict and instability mechanism of the k-th rest state over the (A B, r) plane at fixed sigma, row-major
    in A B. A B is varied through A at the given B.
    """
    if ab_range.min < 0:
        raise ValueError("A B must stay >= 0")
    if r_range.min < 0:
        raise ValueError("r must stay >= 0")

    cells = []
    for ab in ab_range.values():
        for r in r_range.values():
            report = stability_report(Params(sigma=sigma, r=float(r), A=float(ab) / B, B=B), k)
            cells.append(StabilityMapCell(AB=float(ab), r=float(r), verdict=report.verdict,
                                          mechanism=report.mechanism, max_real_part=report.max_real_part))

    logger.info(f"Stability map of {len(cells)} points at sigma={sigma:g}, k={k}")
    return cells
