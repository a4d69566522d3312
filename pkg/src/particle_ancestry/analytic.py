"""Closed-form quantities for the two-state resampling model.

The model has two states ``a`` and ``b``, initial law ``(alpha, 1-alpha)``,
an identity transition kernel, and strictly positive potentials
``p_a``, ``p_b``.  This module evaluates the normalized potentials
``q_a, q_b`` of the first resampled generation, their second-generation
counterparts ``q_a', q_b'``, and the product ``R = t1 * t2 * t3`` that
bounds, from below and asymptotically in the particle count, ``N/2``
times the probability that a twice-fertile tagged lineage attaches to
the first particle.  ``R > 1`` is the quantitative failure of the naive
``offspring/N`` attachment rule.

All evaluation is plain 64-bit floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "CounterexampleParams",
    "AnalyticReport",
    "f_weight",
    "analytic_report",
    "r_curve",
]


@dataclass(frozen=True)
class CounterexampleParams:
    """Parameters of the two-state model: initial weight of state ``a``
    and the two potentials."""

    alpha: float
    p_a: float
    p_b: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.p_a > 0.0 and math.isfinite(self.p_a)):
            raise ParameterError(f"p_a must be a positive real, got {self.p_a}")
        if not (self.p_b > 0.0 and math.isfinite(self.p_b)):
            raise ParameterError(f"p_b must be a positive real, got {self.p_b}")


@dataclass(frozen=True)
class AnalyticReport:
    """Normalized potentials, the three factors, and their product R."""

    q_a: float
    q_b: float
    q_a_prime: float
    q_b_prime: float
    t1: float
    t2: float
    t3: float
    R: float


def f_weight(x):
    """Probability that a unit with selection intensity ``x`` is chosen
    exactly twice in a large pool: ``x**2 * exp(-x) / 2``.

    Equals the Poisson(x) probability mass at 2.  Accepts a scalar or an
    ndarray; ``x`` must be nonnegative.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ParameterError("f_weight requires x >= 0")
    out = 0.5 * x * x * np.exp(-x)
    return float(out) if out.ndim == 0 else out


def analytic_report(params: CounterexampleParams) -> AnalyticReport:
    """Evaluate the attachment-probability lower bound R and its factors.

    Requires ``p_b <= p_a`` (equality gives the uniform case where every
    q collapses to 1 and R reduces to ``alpha``).
    """
    if not isinstance(params, CounterexampleParams):
        params = CounterexampleParams(*params)
    al, pa, pb = params.alpha, params.p_a, params.p_b
    if pb > pa:
        raise ParameterError(
            f"analytic_report requires p_b <= p_a, got p_a={pa}, p_b={pb}"
        )

    mean_g = al * pa + (1.0 - al) * pb
    q_a = pa / mean_g
    q_b = pb / mean_g
    mean_gq = al * pa * q_a + (1.0 - al) * pb * q_b
    q_a_prime = pa / mean_gq
    q_b_prime = pb / mean_gq

    t1 = 1.0 / (al * q_a)
    t2 = al * f_weight(q_a) / (al * f_weight(q_a) + (1.0 - al) * f_weight(q_b))
    num3 = al * q_a * f_weight(q_a_prime)
    t3 = num3 / (num3 + (1.0 - al) * q_b * f_weight(q_b_prime))

    return AnalyticReport(
        q_a=q_a,
        q_b=q_b,
        q_a_prime=q_a_prime,
        q_b_prime=q_b_prime,
        t1=t1,
        t2=t2,
        t3=t3,
        R=t1 * t2 * t3,
    )


def r_curve(alpha, p_a, pb_min, pb_max, points):
    """Evaluate R on an evenly spaced grid of ``p_b`` values.

    Returns a ``(points, 2)`` array with columns ``(p_b, R)``.  A requested
    endpoint ``pb_min == 0`` lies outside the model (potentials are strictly
    positive), so it is mapped to the smallest positive grid value instead
    of being evaluated at zero.
    """
    points = int(points)
    if points < 2:
        raise ParameterError(f"r_curve needs points >= 2, got {points}")
    if not (0.0 <= pb_min < pb_max):
        raise ParameterError(
            f"r_curve needs 0 <= pb_min < pb_max, got [{pb_min}, {pb_max}]"
        )
    grid = np.linspace(pb_min, pb_max, points)
    if grid[0] == 0.0:
        grid[0] = grid[1]
    out = np.empty((points, 2), dtype=float)
    out[:, 0] = grid
    for i, pb in enumerate(grid):
        out[i, 1] = analytic_report(CounterexampleParams(alpha, p_a, pb)).R
    return out
