"""Synthetic trials with explicit selection, and seeded sweeps over cohort size."""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .estimators import (
    EstimationError,
    GaussianSpec,
    Grid,
    GriddedDensity,
    biased_continuous,
    density_of_gaussian,
    recover_continuous,
    theoretical_gaussian,
)
from .graph import CausalGraph, NodeKind
from .metrics import ErrorReport, compare, mean_report

log = logging.getLogger(__name__)

DEFAULT_SIZES = (100, 200, 500, 1000, 2000, 4000)


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for one named stream of a seed."""
    child = np.random.SeedSequence(seed).spawn(stream + 1)[stream]
    return np.random.Generator(np.random.Philox(child))


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


# -- configs ------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteScmConfig:
    p_w: float = 0.5
    p_z: float = 0.5
    p_x: float = 0.5
    # P(Y=1 | x, w, z)
    outcome_table: dict = field(
        default_factory=lambda: {
            (0, 0, 0): 0.90, (0, 0, 1): 0.50, (0, 1, 0): 0.70, (0, 1, 1): 0.30,
            (1, 0, 0): 0.95, (1, 0, 1): 0.80, (1, 1, 0): 0.90, (1, 1, 1): 0.60,
        }
    )
    # P(S=1 | z)
    selection: dict = field(default_factory=lambda: {0: 0.3, 1: 0.7})

    def __post_init__(self):
        for name in ("p_w", "p_z", "p_x"):
            _check_prob(name, getattr(self, name))
        cells = {(x, w, z) for x in (0, 1) for w in (0, 1) for z in (0, 1)}
        if set(self.outcome_table) != cells:
            raise ValueError("outcome_table must cover all 8 (x, w, z) cells")
        for key, p in self.outcome_table.items():
            _check_prob(f"outcome_table{key}", p)
        if set(self.selection) != {0, 1}:
            raise ValueError("selection needs P(S=1|z) for z in {0, 1}")
        for key, p in self.selection.items():
            _check_prob(f"selection[{key}]", p)

    def to_json(self) -> dict:
        return {
            "model": "discrete",
            "p_w": self.p_w,
            "p_z": self.p_z,
            "p_x": self.p_x,
            "outcome_table": {"".join(map(str, k)): v for k, v in sorted(self.outcome_table.items())},
            "selection": {str(k): v for k, v in sorted(self.selection.items())},
        }


@dataclass(frozen=True)
class ContinuousScmConfig:
    """Linear-Gaussian trial; ``gamma_w = 0`` gives the basic model."""

    alpha: float = 2.0
    beta: float = 1.0
    gamma_wy: float = 1.0
    sigma_y: float = 1.0
    gamma_z: float = 0.5
    gamma_w: float = 0.0
    sigma_s: float = 1.0
    c: float = 0.2
    p_x: float = 0.5
    gamma_wx: float = 0.0
    n_external: int = 20000

    def __post_init__(self):
        if not (self.sigma_y > 0 and self.sigma_s > 0):
            raise ValueError("sigma_y and sigma_s must be positive")
        if not 0.0 < self.p_x < 1.0:
            raise ValueError("p_x must lie in (0, 1)")
        if self.n_external < 1:
            raise ValueError("n_external must be positive")

    @property
    def covariates(self) -> tuple[str, ...]:
        return ("w", "z")

    def theoretical(self, x) -> GaussianSpec:
        return theoretical_gaussian(self.alpha, self.beta, self.gamma_wy, 1.0, 1.0, self.sigma_y, x)

    def to_json(self) -> dict:
        return {"model": "continuous", **asdict(self)}


BASIC = ContinuousScmConfig()
ADVANCED = ContinuousScmConfig(gamma_w=0.5)


def config_hash(cfg) -> str:
    return hashlib.sha256(json.dumps(cfg.to_json(), sort_keys=True).encode()).hexdigest()[:16]


def read_config(path) -> DiscreteScmConfig | ContinuousScmConfig:
    """Flat ``key = value`` file; ``model`` selects discrete / continuous / advanced.

    Discrete outcome cells use keys ``y_xwz`` (e.g. ``y_101``), selection
    probabilities ``s_z0`` and ``s_z1``.
    """
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
    model = values.pop("model", "continuous")
    if model == "discrete":
        base = DiscreteScmConfig()
        table = dict(base.outcome_table)
        sel = dict(base.selection)
        kwargs = {}
        for key, val in values.items():
            if key.startswith("y_") and len(key) == 5:
                table[tuple(int(ch) for ch in key[2:])] = float(val)
            elif key in ("s_z0", "s_z1"):
                sel[int(key[-1])] = float(val)
            elif key in ("p_w", "p_z", "p_x"):
                kwargs[key] = float(val)
            else:
                raise ValueError(f"unknown discrete config key {key!r}")
        return DiscreteScmConfig(outcome_table=table, selection=sel, **kwargs)
    if model not in ("continuous", "advanced"):
        raise ValueError(f"unknown model {model!r}")
    base = ADVANCED if model == "advanced" else BASIC
    known = {f.name: f.type for f in fields(ContinuousScmConfig)}
    kwargs = {}
    for key, val in values.items():
        if key not in known:
            raise ValueError(f"unknown continuous config key {key!r}")
        kwargs[key] = int(val) if key == "n_external" else float(val)
    return replace(base, **kwargs)


# -- datasets -----------------------------------------------------------------


COLUMNS = ("x", "w", "z", "y", "s")


@dataclass(frozen=True, eq=False)
class Dataset:
    x: np.ndarray
    w: np.ndarray
    z: np.ndarray
    y: np.ndarray
    s: np.ndarray
    config_hash: str
    seed: int
    n_requested: int

    @property
    def n_selected(self) -> int:
        return int(self.s.sum())

    def biased(self) -> Dataset:
        keep = self.s == 1
        return Dataset(*(getattr(self, c)[keep] for c in COLUMNS), self.config_hash, self.seed, self.n_requested)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def to_csv(self) -> str:
        lines = [",".join(COLUMNS)]
        for row in zip(*(getattr(self, c) for c in COLUMNS)):
            lines.append(",".join(repr(v.item()) for v in row))
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        h = hashlib.sha256()
        for c in COLUMNS:
            h.update(np.ascontiguousarray(getattr(self, c)).tobytes())
        return h.hexdigest()

    def provenance(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "n_requested": self.n_requested,
            "n_selected": self.n_selected,
            "n_rows": len(self.s),
        }


def simulate_discrete(cfg: DiscreteScmConfig, n: int, seed: int) -> Dataset:
    """``n`` recruited units; ``s`` flags the ones selected into the trial.

    Treatment and outcome are drawn for every unit so the unselected rows give
    the unbiased reference.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = generator(seed)
    w = (rng.random(n) < cfg.p_w).astype(np.int64)
    z = (rng.random(n) < cfg.p_z).astype(np.int64)
    s_prob = np.where(z == 1, cfg.selection[1], cfg.selection[0])
    s = (rng.random(n) < s_prob).astype(np.int64)
    x = (rng.random(n) < cfg.p_x).astype(np.int64)
    table = np.array([[[cfg.outcome_table[(a, b, c)] for c in (0, 1)] for b in (0, 1)] for a in (0, 1)])
    y = (rng.random(n) < table[x, w, z]).astype(np.int64)
    return Dataset(x, w, z, y, s, config_hash(cfg), seed, n)


def _continuous_units(cfg: ContinuousScmConfig, rng: np.random.Generator, m: int):
    w = rng.standard_normal(m)
    z = rng.standard_normal(m)
    u_x = rng.random(m)
    u_y = rng.normal(0.0, cfg.sigma_y, m)
    u_s = rng.normal(0.0, cfg.sigma_s, m)
    # threshold 1 - p_x turns the uniform draw into Bernoulli(p_x) when gamma_wx = 0
    x = (cfg.gamma_wx * w + u_x > 1.0 - cfg.p_x).astype(np.int64)
    y = cfg.alpha * x + cfg.beta * z + cfg.gamma_wy * w + u_y
    s = (cfg.gamma_w * w + cfg.gamma_z * z + u_s > cfg.c).astype(np.int64)
    return x, w, z, y, s


def simulate_continuous(cfg: ContinuousScmConfig, n: int, seed: int) -> Dataset:
    """Recruit until ``n`` units are selected; rows run up to the n-th selected unit."""
    if n <= 0:
        raise ValueError("n must be positive")
    rng = generator(seed, 0)
    chunks = []
    selected = 0
    while selected < n:
        chunk = _continuous_units(cfg, rng, 2 * (n - selected) + 64)
        chunks.append(chunk)
        selected += int(chunk[4].sum())
    cols = [np.concatenate(parts) for parts in zip(*chunks)]
    cut = int(np.flatnonzero(cols[4] == 1)[n - 1]) + 1
    x, w, z, y, s = (c[:cut] for c in cols)
    return Dataset(x, w, z, y, s, config_hash(cfg), seed, n)


def simulate_external(cfg: ContinuousScmConfig, m: int, seed: int) -> np.ndarray:
    """Unbiased population sample of (w, z), drawn from its own stream."""
    rng = generator(seed, 1)
    return np.column_stack([rng.standard_normal(m), rng.standard_normal(m)])


def simulate_interventional(cfg: ContinuousScmConfig, x_value, m: int, seed: int) -> np.ndarray:
    """Outcomes with treatment forced to ``x_value`` and no selection."""
    rng = generator(seed, 2)
    w = rng.standard_normal(m)
    z = rng.standard_normal(m)
    u_y = rng.normal(0.0, cfg.sigma_y, m)
    return cfg.alpha * x_value + cfg.beta * z + cfg.gamma_wy * w + u_y


# -- sweep --------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorSettings:
    adjust: tuple[str, ...] = ("z",)
    bins: int | str | tuple[int, ...] = 10
    min_cell: int = 5
    grid_points: int = 512
    treatments: tuple[int, ...] = (0, 1)


@dataclass(frozen=True)
class SweepRow:
    n: int
    recovered: ErrorReport
    biased: ErrorReport
    failures: int = 0


@dataclass
class SweepResult:
    rows: list[SweepRow]
    per_seed: list[dict]
    errors: list[dict]
    # (n, treatment) -> seed-averaged (recovered, biased) densities
    mean_densities: dict = field(default_factory=dict)


def truth_grid(cfg: ContinuousScmConfig, x_value, points: int = 512) -> Grid:
    return cfg.theoretical(x_value).default_grid(points)


def run_cell(cfg: ContinuousScmConfig, n: int, seed: int, settings: EstimatorSettings) -> dict:
    """Simulate one (n, seed) cell and score both estimators against the truth."""
    data = simulate_continuous(cfg, n, seed).biased()
    external_all = simulate_external(cfg, cfg.n_external, seed)
    col = {"w": 0, "z": 1}
    idx = [col[a] for a in settings.adjust]
    covs = np.column_stack([data.column(a) for a in settings.adjust])
    external = external_all[:, idx]
    rec_reports, bias_reports = [], []
    densities = {}
    for t in settings.treatments:
        grid = truth_grid(cfg, t, settings.grid_points)
        truth = density_of_gaussian(cfg.theoretical(t), grid)
        rec = recover_continuous(data.x, covs, data.y, external, t, grid, settings.bins, settings.min_cell)
        bias = biased_continuous(data.y, data.x, t, grid)
        rec_reports.append(compare(rec, truth, n=n))
        bias_reports.append(compare(bias, truth, n=n))
        densities[t] = (rec.values, bias.values)
    rec = mean_report(rec_reports, n)
    bias = mean_report(bias_reports, n)
    return {"n": n, "seed": seed, "recovered": rec, "biased": bias, "densities": densities}


AGGREGATES = ("density", "metric")


def _mean_densities(cfg: ContinuousScmConfig, cells: list[dict], settings: EstimatorSettings) -> dict:
    out = {}
    for t in settings.treatments:
        grid = truth_grid(cfg, t, settings.grid_points)
        rec = np.mean([c["densities"][t][0] for c in cells], axis=0)
        bias = np.mean([c["densities"][t][1] for c in cells], axis=0)
        out[t] = (GriddedDensity(grid, rec), GriddedDensity(grid, bias))
    return out


def _score_mean_density(cfg: ContinuousScmConfig, means: dict, n: int):
    rec_reports, bias_reports = [], []
    for t, (rec, bias) in means.items():
        truth = density_of_gaussian(cfg.theoretical(t), rec.grid)
        rec_reports.append(compare(rec, truth, n=n))
        bias_reports.append(compare(bias, truth, n=n))
    return mean_report(rec_reports, n), mean_report(bias_reports, n)


def _threads() -> int:
    try:
        cap = int(os.environ.get("TWINRECOVER_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def sweep(
    cfg: ContinuousScmConfig,
    sizes=DEFAULT_SIZES,
    seeds=range(50),
    settings: EstimatorSettings | None = None,
    aggregate: str = "density",
) -> SweepResult:
    """Per-size error reports over seeds, recovered and biased vs truth.

    ``aggregate="density"`` scores the seed-averaged density of each arm;
    ``"metric"`` averages the per-seed scores. Per-seed scores are kept in
    ``per_seed`` either way.
    """
    if aggregate not in AGGREGATES:
        raise ValueError(f"aggregate must be one of {AGGREGATES}, got {aggregate!r}")
    sizes, seeds = list(sizes), list(seeds)
    if not sizes or not seeds:
        raise ValueError("sizes and seeds must be nonempty")
    settings = settings or EstimatorSettings()
    jobs = [(n, seed) for n in sizes for seed in seeds]
    results: dict[tuple[int, int], dict] = {}
    errors = []

    def record(job, fut_result=None, exc=None):
        if exc is not None:
            log.warning("sweep cell n=%s seed=%s failed: %s", job[0], job[1], exc)
            errors.append({"n": job[0], "seed": job[1], "error": str(exc)})
        else:
            results[job] = fut_result

    workers = _threads()
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            futs = {pool.submit(run_cell, cfg, n, s, settings): (n, s) for n, s in jobs}
            for fut in concurrent.futures.as_completed(futs):
                exc = fut.exception()
                record(futs[fut], None if exc else fut.result(), exc)
    else:
        for n, s in jobs:
            try:
                record((n, s), run_cell(cfg, n, s, settings))
            except EstimationError as exc:
                record((n, s), exc=exc)

    rows = []
    per_seed = []
    mean_densities = {}
    for n in sizes:
        cells = [results[(n, s)] for s in seeds if (n, s) in results]
        for cell in cells:
            per_seed.append({
                "n": n,
                "seed": cell["seed"],
                **{f"{k}_rec": v for k, v in _metric_dict(cell["recovered"]).items()},
                **{f"{k}_bias": v for k, v in _metric_dict(cell["biased"]).items()},
            })
        if not cells:
            continue
        means = _mean_densities(cfg, cells, settings)
        mean_densities.update({(n, t): pair for t, pair in means.items()})
        if aggregate == "density":
            rec, bias = _score_mean_density(cfg, means, n)
            rec, bias = replace(rec, seeds=len(cells)), replace(bias, seeds=len(cells))
        else:
            rec = mean_report([c["recovered"] for c in cells], n)
            bias = mean_report([c["biased"] for c in cells], n)
        rows.append(SweepRow(n, rec, bias, failures=len(seeds) - len(cells)))
    return SweepResult(rows, per_seed, errors, mean_densities)


def _metric_dict(r: ErrorReport) -> dict:
    return {"l1": r.l1, "l2": r.l2, "js": r.js, "wass": r.wasserstein}


TABLE_COLUMNS = ("N", "L1_rec", "L1_bias", "L2_rec", "L2_bias", "JS_rec", "JS_bias", "Wass_rec", "Wass_bias")


def table_rows(result: SweepResult) -> list[list[float]]:
    """One row per cohort size, in TABLE_COLUMNS order."""
    out = []
    for row in result.rows:
        r, b = row.recovered, row.biased
        out.append([row.n, r.l1, b.l1, r.l2, b.l2, r.js, b.js, r.wasserstein, b.wasserstein])
    return out


# -- binary twin-world simulation -------------------------------------------------


def _sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


@dataclass(frozen=True)
class BinaryScm:
    """Random logistic-threshold SCM over a graph with explicit exogenous nodes.

    Each non-exogenous node ``v`` is ``1{U_v < sigmoid(b_v + sum w_pv * p)}``
    where ``U_v`` is its first exogenous parent; further exogenous parents
    enter the sum centred at 0.5.
    """

    graph: CausalGraph
    bias: dict
    weight: dict

    @classmethod
    def random(cls, g: CausalGraph, seed: int) -> BinaryScm:
        rng = generator(seed, 3)
        bias, weight = {}, {}
        for v in g.topological_order():
            if g.kind(v) is NodeKind.EXOGENOUS:
                continue
            bias[v] = float(rng.uniform(-1.0, 1.0))
            for p in sorted(g.parents(v)):
                magnitude = rng.uniform(1.0, 2.5)
                weight[(p, v)] = float(magnitude if rng.random() < 0.5 else -magnitude)
        return cls(g, bias, weight)

    def _noise_parent(self, v: str) -> str:
        exo = sorted(p for p in self.graph.parents(v) if self.graph.kind(p) is NodeKind.EXOGENOUS)
        if not exo:
            raise ValueError(f"node {v!r} has no exogenous parent")
        return exo[0]

    def simulate_twin(self, x: str, x_value: int, n: int, seed: int) -> tuple[dict, dict]:
        """Factual values and counterfactual values under do(x = x_value), sharing noise."""
        g = self.graph
        rng = generator(seed, 4)
        u = {v: rng.random(n) for v in g.topological_order() if g.kind(v) is NodeKind.EXOGENOUS}
        factual: dict[str, np.ndarray] = dict(u)
        counter: dict[str, np.ndarray] = dict(u)
        for v in g.topological_order():
            if g.kind(v) is NodeKind.EXOGENOUS:
                continue
            noise = self._noise_parent(v)
            for world in (factual, counter):
                if world is counter and v == x:
                    world[v] = np.full(n, x_value, dtype=np.int64)
                    continue
                t = np.full(n, self.bias[v])
                for p in g.parents(v):
                    if p == noise:
                        continue
                    val = world[p] - 0.5 if g.kind(p) is NodeKind.EXOGENOUS else world[p]
                    t = t + self.weight[(p, v)] * val
                world[v] = (world[noise] < _sigmoid(t)).astype(np.int64)
        return factual, counter


def selection_gap(scm: BinaryScm, x: str, y: str, x_value: int, n: int, seed: int) -> dict:
    """Compare P(y*_{x*}=1 | S=1) with P(y*_{x*}=1) in one simulated population."""
    factual, counter = scm.simulate_twin(x, x_value, n, seed)
    s = factual[scm.graph.selection] == 1
    y_cf = counter[y]
    p_all = float(y_cf.mean())
    p_sel = float(y_cf[s].mean()) if s.any() else float("nan")
    n_sel = int(s.sum())
    pooled = p_all * (1 - p_all)
    se = math.sqrt(pooled * (1.0 / max(n_sel, 1) + 1.0 / n))
    return {"p_selected": p_sel, "p_population": p_all, "n_selected": n_sel, "se": se}


# -- named experiments ------------------------------------------------------------

# config, graph fixture, default bins
EXPERIMENTS = {
    "continuous": ("basic", "fig10a", 10),
    "advanced": ("advanced", "fig10b", "auto"),
}


def experiment(name: str) -> tuple[ContinuousScmConfig, EstimatorSettings]:
    """Config and estimator settings for a named continuous experiment.

    The adjustment set is the smallest one the decision procedure returns for
    the experiment's graph when W and Z are measured externally.
    """
    from .fixtures import load
    from .recover import DataRegime, RecoverableWith, decide

    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    model, fixture, bins = EXPERIMENTS[name]
    verdict = decide(load(fixture), "X", "Y", DataRegime(external_unbiased=("W", "Z")))
    if not isinstance(verdict, RecoverableWith):
        raise RuntimeError(f"{fixture} is not recoverable by adjustment")
    adjust = tuple(v.lower() for v in verdict.adjustment_sets[0])
    cfg = ADVANCED if model == "advanced" else BASIC
    return cfg, EstimatorSettings(adjust=adjust, bins=bins)
