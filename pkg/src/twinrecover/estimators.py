"""Execute recovery formulas on data.

Discrete recovery is exact (``fractions.Fraction`` throughout). Continuous
recovery stratifies the adjustment covariates into equal-probability cells of
the external sample and mixes per-cell Gaussian KDEs of the outcome.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

MASS_TOLERANCE = 0.02


class EstimationError(ValueError):
    pass


class UnsupportedStratum(EstimationError):
    def __init__(self, cell: Mapping[str, object]):
        self.cell = dict(cell)
        desc = ", ".join(f"{k}={v}" for k, v in self.cell.items())
        super().__init__(f"unsupported stratum: no biased data at ({desc}) but positive external weight")


# -- discrete -----------------------------------------------------------------


def _as_value(text: str):
    try:
        return int(text)
    except ValueError:
        return text


@dataclass(frozen=True)
class DiscreteTable:
    """Counts or probabilities indexed by joint assignment of ``variables``.

    Weights are kept as :class:`~fractions.Fraction` so sums stay exact.
    """

    variables: tuple[str, ...]
    weights: Mapping[tuple, Fraction]
    normalized: bool = False

    def __post_init__(self):
        weights = {}
        for key, w in self.weights.items():
            key = tuple(key)
            if len(key) != len(self.variables):
                raise ValueError(f"cell {key} does not match variables {self.variables}")
            w = Fraction(w)
            if w < 0:
                raise ValueError(f"negative weight at {key}")
            weights[key] = weights.get(key, Fraction(0)) + w
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "weights", weights)
        if self.normalized and sum(weights.values()) != 1:
            raise ValueError("normalized table does not sum to 1")

    @classmethod
    def from_rows(cls, variables: Sequence[str], rows: Iterable[Sequence], normalized: bool = False) -> DiscreteTable:
        weights: dict[tuple, Fraction] = {}
        for *key, w in rows:
            key = tuple(key)
            weights[key] = weights.get(key, Fraction(0)) + Fraction(w)
        return cls(tuple(variables), weights, normalized)

    @classmethod
    def read_csv(cls, path) -> DiscreteTable:
        """Header ``<vars...>,count`` or ``<vars...>,p``; the last column is the weight."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            rows = [[_as_value(v.strip()) for v in r[:-1]] + [Fraction(r[-1].strip())] for r in reader if r]
        table = cls.from_rows(header[:-1], rows)
        if header[-1] == "p":
            return table.normalize()
        return table

    def write_csv(self, path, weight_column: str = "p") -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([*self.variables, weight_column])
            for key in sorted(self.weights):
                writer.writerow([*key, float(self.weights[key])])

    @property
    def total(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def normalize(self) -> DiscreteTable:
        total = self.total
        if total == 0:
            raise EstimationError("cannot normalize an empty table")
        return DiscreteTable(self.variables, {k: w / total for k, w in self.weights.items()}, True)

    def marginal(self, keep: Sequence[str]) -> DiscreteTable:
        idx = [self.variables.index(v) for v in keep]
        out: dict[tuple, Fraction] = {}
        for key, w in self.weights.items():
            sub = tuple(key[i] for i in idx)
            out[sub] = out.get(sub, Fraction(0)) + w
        return DiscreteTable(tuple(keep), out, self.normalized)

    def select(self, **fixed) -> DiscreteTable:
        """Restrict to cells matching ``fixed`` and drop those columns."""
        keep = [v for v in self.variables if v not in fixed]
        idx = {v: i for i, v in enumerate(self.variables)}
        out: dict[tuple, Fraction] = {}
        for key, w in self.weights.items():
            if all(key[idx[v]] == val for v, val in fixed.items()):
                sub = tuple(key[idx[v]] for v in keep)
                out[sub] = out.get(sub, Fraction(0)) + w
        return DiscreteTable(tuple(keep), out)

    def prob(self, value) -> Fraction:
        if not isinstance(value, tuple):
            value = (value,)
        return self.weights.get(value, Fraction(0)) / self.total

    def __getitem__(self, value) -> Fraction:
        return self.prob(value)


def recover_discrete(
    biased: DiscreteTable,
    external: DiscreteTable,
    x,
    treatment: str | None = None,
    outcome: str | None = None,
) -> DiscreteTable:
    """Sum over strata z of P(y | x, z, S=1) P(z), exactly.

    ``biased`` covers (treatment, strata..., outcome); by default the first
    column is the treatment and the last the outcome. The strata are the
    variables of ``external``.
    """
    treatment = treatment or biased.variables[0]
    outcome = outcome or biased.variables[-1]
    strata = external.variables
    missing = set(strata) - set(biased.variables)
    if missing:
        raise EstimationError(f"biased table lacks strata columns {sorted(missing)}")
    ext = external.normalize()
    arm = biased.select(**{treatment: x}).marginal([*strata, outcome])
    outcomes = sorted({key[-1] for key in arm.weights}, key=str)
    result = {(y,): Fraction(0) for y in outcomes}
    for zkey, pz in sorted(ext.weights.items(), key=lambda kv: str(kv[0])):
        if pz == 0:
            continue
        cell = {(k[-1]): w for k, w in arm.weights.items() if k[:-1] == zkey}
        n = sum(cell.values(), Fraction(0))
        if n == 0:
            raise UnsupportedStratum({treatment: x, **dict(zip(strata, zkey))})
        for y in outcomes:
            result[(y,)] += cell.get(y, Fraction(0)) / n * pz
    return DiscreteTable((outcome,), result, normalized=True)


def biased_discrete(biased: DiscreteTable, x, treatment: str | None = None, outcome: str | None = None) -> DiscreteTable:
    """P(y | x, S=1), ignoring strata."""
    treatment = treatment or biased.variables[0]
    outcome = outcome or biased.variables[-1]
    arm = biased.select(**{treatment: x}).marginal([outcome])
    if arm.total == 0:
        raise EstimationError(f"no biased data at {treatment}={x}")
    return arm.normalize()


def relative_error(estimate: float, truth: float) -> float:
    if truth == 0:
        raise ZeroDivisionError("relative error undefined for zero truth")
    return (estimate - truth) / truth


# -- gridded densities --------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    n: int = 512

    def __post_init__(self):
        if not self.hi > self.lo or self.n < 2:
            raise ValueError(f"invalid grid [{self.lo}, {self.hi}] with {self.n} points")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n, self.step)
        w[0] = w[-1] = self.step / 2
        return w


@dataclass(frozen=True, eq=False)
class GriddedDensity:
    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError("density values do not match grid size")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def mass(self) -> float:
        return float(trapezoid(self.values, self.grid.points))

    def normalized(self) -> GriddedDensity:
        mass = self.mass
        if mass <= 0:
            raise EstimationError("density has zero mass")
        return GriddedDensity(self.grid, self.values / mass, {**self.meta, "mass_before_normalization": mass})

    def mean(self) -> float:
        pts = self.grid.points
        return float(trapezoid(pts * self.values, pts) / self.mass)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["grid", "value"])
            for g, v in zip(self.grid.points, self.values):
                writer.writerow([repr(float(g)), repr(float(v))])

    @classmethod
    def read_csv(cls, path) -> GriddedDensity:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        pts, vals = data[:, 0], data[:, 1]
        grid = Grid(float(pts[0]), float(pts[-1]), len(pts))
        if not np.allclose(grid.points, pts, rtol=0, atol=1e-9 * max(1.0, abs(grid.hi))):
            raise ValueError(f"{path}: grid points are not uniformly spaced")
        return cls(grid, vals)


# -- Gaussian ground truth ----------------------------------------------------


@dataclass(frozen=True)
class GaussianSpec:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def default_grid(self, n: int = 512, width: float = 6.0) -> Grid:
        return Grid(self.mean - width * self.sd, self.mean + width * self.sd, n)


def theoretical_gaussian(alpha, beta, gamma, sigma_w, sigma_z, sigma_y, x) -> GaussianSpec:
    """Law of Y*_{x} for Y = alpha X + beta Z + gamma W + U_Y with Gaussian W, Z, U_Y.

    ``beta`` multiplies Z and ``gamma`` multiplies W.
    """
    for name, s in (("sigma_w", sigma_w), ("sigma_z", sigma_z), ("sigma_y", sigma_y)):
        if not s > 0:
            raise ValueError(f"{name} must be positive")
    return GaussianSpec(alpha * x, beta**2 * sigma_z**2 + gamma**2 * sigma_w**2 + sigma_y**2)


def density_of_gaussian(truth: GaussianSpec, grid: Grid) -> GriddedDensity:
    # the grid must reach three standard deviations on each side
    if grid.lo > truth.mean - 3 * truth.sd or grid.hi < truth.mean + 3 * truth.sd:
        raise ValueError("grid too narrow: needs mean +/- 3 sd")
    return GriddedDensity(grid, norm.pdf(grid.points, truth.mean, truth.sd))


# -- KDE ----------------------------------------------------------------------


def silverman_bandwidth(samples: np.ndarray) -> float:
    """0.9 * min(sd, IQR / 1.34) * n^(-1/5); falls back to sd when the IQR is 0."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n < 2:
        raise EstimationError("bandwidth needs at least two samples")
    sd = float(np.std(samples, ddof=1))
    q75, q25 = np.percentile(samples, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0:
        raise EstimationError("bandwidth undefined for constant samples")
    return 0.9 * spread * n ** (-0.2)


def kde_on_grid(samples: np.ndarray, grid: Grid, bandwidth: float | None = None) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    h = silverman_bandwidth(samples) if bandwidth is None else bandwidth
    u = (grid.points[:, None] - samples[None, :]) / h
    return np.exp(-0.5 * u * u).sum(axis=1) / (len(samples) * h * math.sqrt(2 * math.pi))


def biased_continuous(y: np.ndarray, x: np.ndarray, x_value, grid: Grid) -> GriddedDensity:
    """Plain KDE of the outcome in one treatment arm of the biased cohort."""
    arm = np.asarray(y, dtype=float)[np.asarray(x) == x_value]
    if len(arm) < 2:
        raise EstimationError(f"empty treatment arm at x={x_value}")
    h = silverman_bandwidth(arm)
    dens = GriddedDensity(grid, kde_on_grid(arm, grid, h), {"bandwidth": h, "n": len(arm)})
    return dens.normalized()


def default_grid_from_data(y: np.ndarray, n: int = 512) -> Grid:
    y = np.asarray(y, dtype=float)
    pad = 3 * silverman_bandwidth(y)
    return Grid(float(y.min()) - pad, float(y.max()) + pad, n)


def quantile_edges(external: np.ndarray, bins: Sequence[int]) -> list[np.ndarray]:
    """Inner cut points of equal-probability bins, one array per covariate."""
    return [
        np.quantile(external[:, d], np.linspace(0, 1, b + 1)[1:-1])
        for d, b in enumerate(bins)
    ]


def assign_cells(values: np.ndarray, edges: list[np.ndarray]) -> list[tuple[int, ...]]:
    idx = np.stack([np.searchsorted(e, values[:, d], side="right") for d, e in enumerate(edges)], axis=1)
    return [tuple(int(i) for i in row) for row in idx]


AUTO_POINTS_PER_CELL = 20


def auto_bins(n_arm: int, k: int, lo: int = 2, hi: int = 10) -> tuple[int, ...]:
    """Bins per covariate giving about AUTO_POINTS_PER_CELL treated samples a cell."""
    b = round((n_arm / AUTO_POINTS_PER_CELL) ** (1.0 / k))
    return (int(min(hi, max(lo, b))),) * k


def recover_continuous(
    x: np.ndarray,
    covariates: np.ndarray,
    y: np.ndarray,
    external: np.ndarray,
    x_value,
    grid: Grid,
    bins: int | str | Sequence[int] = 10,
    min_cell: int = 5,
) -> GriddedDensity:
    """Mixture over covariate cells of KDE(y | x_value, cell, S=1) * P(cell).

    ``x``, ``covariates`` and ``y`` describe the biased cohort; ``external`` is
    an unbiased sample of the same covariates. Cells are products of
    per-covariate quantile bins of ``external``. A cell with fewer than
    ``min_cell`` treated samples borrows the KDE of the nearest populated cell.
    ``bins="auto"`` sizes the grid of cells from the treated arm (see
    ``auto_bins``). The returned density is renormalized; ``meta`` holds the
    diagnostics.
    """
    x = np.asarray(x)
    y = np.asarray(y, dtype=float)
    covariates = np.asarray(covariates, dtype=float).reshape(len(y), -1)
    external = np.asarray(external, dtype=float).reshape(-1, covariates.shape[1])
    k = covariates.shape[1]
    if len(external) == 0:
        raise EstimationError("external sample is empty")
    in_arm = x == x_value
    if in_arm.sum() < 2:
        raise EstimationError(f"empty treatment arm at x={x_value}")
    if bins == "auto":
        bins = auto_bins(int(in_arm.sum()), k)
    elif isinstance(bins, str):
        raise ValueError(f"unknown bins setting {bins!r}")
    bins = (bins,) * k if isinstance(bins, int) else tuple(bins)
    if len(bins) != k or any(b < 1 for b in bins):
        raise ValueError(f"need one positive bin count per covariate, got {bins} for {k}")
    edges = quantile_edges(external, bins)
    ext_cells = assign_cells(external, edges)
    arm_cells = assign_cells(covariates[in_arm], edges)
    arm_y = y[in_arm]

    all_cells = list(itertools.product(*(range(b) for b in bins)))
    ext_counts = dict.fromkeys(all_cells, 0)
    for c in ext_cells:
        ext_counts[c] += 1
    members: dict[tuple, list[float]] = {c: [] for c in all_cells}
    for c, v in zip(arm_cells, arm_y):
        members[c].append(v)
    populated = [c for c in all_cells if len(members[c]) >= min_cell]
    if not populated:
        raise EstimationError("all covariate cells are under-populated")

    kdes: dict[tuple, np.ndarray] = {}
    bandwidths: dict[tuple, float] = {}
    borrowed: dict[tuple, tuple] = {}
    values = np.zeros(grid.n)
    for c in all_cells:
        weight = ext_counts[c] / len(external)
        if weight == 0:
            continue
        source = c
        if len(members[c]) < min_cell:
            source = min(populated, key=lambda p: (sum((a - b) ** 2 for a, b in zip(p, c)), p))
            borrowed[c] = source
        if source not in kdes:
            samples = np.asarray(members[source])
            bandwidths[source] = silverman_bandwidth(samples)
            kdes[source] = kde_on_grid(samples, grid, bandwidths[source])
        values += weight * kdes[source]

    meta = {
        "bins": list(bins),
        "min_cell": min_cell,
        "edges": [e.tolist() for e in edges],
        "cell_counts": {",".join(map(str, c)): len(members[c]) for c in all_cells},
        "cell_weights": {",".join(map(str, c)): ext_counts[c] / len(external) for c in all_cells},
        "bandwidths": {",".join(map(str, c)): h for c, h in bandwidths.items()},
        "borrowed": {",".join(map(str, c)): ",".join(map(str, s)) for c, s in borrowed.items()},
        "bandwidth_rule": "silverman",
    }
    return GriddedDensity(grid, values, meta).normalized()
