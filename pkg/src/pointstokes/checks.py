"""Finite-difference verification of the closed-form fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .singular import (
    CutoffSpec,
    SingularSource,
    correction_residual_check,
    stokeslet_residual_check,
)

ORDER_STEPS = (4e-4, 2e-4, 1e-4)


def ring_points(x0, r_min: float, r_max: float, count: int, rng) -> np.ndarray:
    """Uniformly random directions at radii uniform in ``(r_min, r_max)``."""
    x0 = np.asarray(x0, dtype=float)
    d = rng.normal(size=(count, len(x0)))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(r_min, r_max, size=count)
    return x0 + r[:, None] * d


@dataclass(frozen=True)
class AnalyticsResult:
    dim: int
    correction_momentum: float  # max |FD defect of chi * Stokeslet - g|
    correction_divergence: float  # max |FD div(chi * Stokeslet) - h|
    correction_order: float  # observed order in the FD step
    stokeslet_momentum: float
    stokeslet_divergence: float


def _order(steps, values):
    return float(np.polyfit(np.log(steps), np.log(values), 1)[0])


def run_analytics_checks(
    n_points: int = 200,
    fd_step: float = 1e-5,
    spec: CutoffSpec = CutoffSpec(),
    mu: float = 1.0,
    seed: int = 0,
    stokeslet_step: float = 1e-4,
) -> list[AnalyticsResult]:
    """Residual maxima over random ring points in two and three dimensions."""
    rng = np.random.default_rng(seed)
    results = []
    for dim in (2, 3):
        x0 = np.full(dim, 0.5)
        F = rng.normal(size=dim)
        src = SingularSource(x0, F / np.linalg.norm(F), mu)
        margin = 3.0 * max(ORDER_STEPS + (fd_step,))
        pts = ring_points(x0, spec.a + margin, spec.b - margin, n_points, rng)

        def worst(step, subset=pts):
            mom = div = 0.0
            for x in subset:
                m, d = correction_residual_check(x, src, spec, step)
                mom = max(mom, float(np.abs(m).max()))
                div = max(div, abs(d))
            return mom, div

        mom, div = worst(fd_step)
        tail = [max(worst(s, pts[:20])) for s in ORDER_STEPS]

        # away from the source: |x - x0| >= 0.25
        far = x0 + np.r_[0.3, 0.1] if dim == 2 else x0 + np.r_[0.2, 0.2, 0.1]
        s_mom = s_div = 0.0
        for x in [far, *ring_points(x0, 0.25, 0.45, 20, rng)]:
            m, d = stokeslet_residual_check(x, src, stokeslet_step)
            s_mom = max(s_mom, float(np.abs(m).max()))
            s_div = max(s_div, abs(d))
        results.append(
            AnalyticsResult(dim, mom, div, _order(ORDER_STEPS, tail), s_mom, s_div)
        )
    return results
