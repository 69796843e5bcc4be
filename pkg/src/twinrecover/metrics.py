"""Distances between densities on a shared grid."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .estimators import DiscreteTable, Grid, GriddedDensity


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ErrorReport:
    l1: float
    l2: float
    js: float
    wasserstein: float
    grid: Grid | None = None
    n: int | None = None
    seeds: int | None = None

    def to_json(self) -> dict:
        out = asdict(self)
        out["grid"] = asdict(self.grid) if self.grid else None
        return out


def _check(a: GriddedDensity, b: GriddedDensity) -> np.ndarray:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    return a.grid.points


def l1_distance(a: GriddedDensity, b: GriddedDensity) -> float:
    pts = _check(a, b)
    return float(trapezoid(np.abs(a.values - b.values), pts))


def l2_distance(a: GriddedDensity, b: GriddedDensity) -> float:
    pts = _check(a, b)
    return math.sqrt(float(trapezoid((a.values - b.values) ** 2, pts)))


def _cell_masses(d: GriddedDensity) -> np.ndarray:
    m = d.values * d.grid.trapezoid_weights()
    return m / m.sum()


def _kl_to_mixture(p: np.ndarray, q: np.ndarray) -> float:
    # KL(p || (p+q)/2) written as p log(2p/(p+q)); halving subnormal masses would underflow to 0
    mask = p > 0
    pm = p[mask]
    return float(np.sum(pm * (np.log(pm / (pm + q[mask])) + math.log(2.0))))


def js_divergence(a: GriddedDensity, b: GriddedDensity, base: float = math.e) -> float:
    """Jensen-Shannon divergence of the cell-mass histograms (natural log by default)."""
    _check(a, b)
    p, q = _cell_masses(a), _cell_masses(b)
    js = 0.5 * _kl_to_mixture(p, q) + 0.5 * _kl_to_mixture(q, p)
    return min(max(0.0, js), math.log(2.0)) / math.log(base)


def wasserstein_1d(a: GriddedDensity, b: GriddedDensity) -> float:
    """Integral of |CDF_a - CDF_b|, the 1-D earth mover's distance."""
    pts = _check(a, b)
    cdf_a = cumulative_trapezoid(a.values, pts, initial=0.0)
    cdf_b = cumulative_trapezoid(b.values, pts, initial=0.0)
    return float(trapezoid(np.abs(cdf_a - cdf_b), pts))


def compare(a: GriddedDensity, b: GriddedDensity, n: int | None = None, seeds: int | None = None) -> ErrorReport:
    return ErrorReport(
        l1=l1_distance(a, b),
        l2=l2_distance(a, b),
        js=js_divergence(a, b),
        wasserstein=wasserstein_1d(a, b),
        grid=a.grid,
        n=n,
        seeds=seeds,
    )


def mean_report(reports: list[ErrorReport], n: int | None = None) -> ErrorReport:
    if not reports:
        raise ValueError("no reports to average")
    return ErrorReport(
        l1=float(np.mean([r.l1 for r in reports])),
        l2=float(np.mean([r.l2 for r in reports])),
        js=float(np.mean([r.js for r in reports])),
        wasserstein=float(np.mean([r.wasserstein for r in reports])),
        grid=reports[0].grid,
        n=n if n is not None else reports[0].n,
        seeds=len(reports),
    )


def discrete_l1(a: DiscreteTable, b: DiscreteTable) -> float:
    """Sum of absolute probability differences over the union of cells."""
    pa, pb = a.normalize(), b.normalize()
    keys = set(pa.weights) | set(pb.weights)
    return float(sum(abs(pa.weights.get(k, 0) - pb.weights.get(k, 0)) for k in keys))
