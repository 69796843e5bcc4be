"""Command-line entry point: ``twinrecover <subcommand> ...``.

Exit codes: 0 success (or recoverable), 2 not recoverable / reproduction
check failed, 1 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import reference
from .dsep import d_separated, explain, format_path
from .estimators import (
    DiscreteTable,
    EstimationError,
    Grid,
    GriddedDensity,
    biased_continuous,
    biased_discrete,
    default_grid_from_data,
    density_of_gaussian,
    recover_continuous,
    recover_discrete,
    relative_error,
)
from .fixtures import trial_table
from .graph import CausalGraph, GraphError, load_graph, render_graph
from .metrics import GridMismatch, compare
from .recover import DataRegime, Failure, RCDepthExceeded, decide, verdict_to_json
from .report import RunManifest, csv_text, line_chart, tool_version, write_with_manifest
from .sim import (
    ADVANCED,
    BASIC,
    DEFAULT_SIZES,
    TABLE_COLUMNS,
    ContinuousScmConfig,
    DiscreteScmConfig,
    EstimatorSettings,
    config_hash,
    experiment,
    read_config,
    simulate_continuous,
    simulate_discrete,
    sweep,
    table_rows,
)

log = logging.getLogger("twinrecover")

EXIT_OK, EXIT_ERROR, EXIT_NOT_RECOVERABLE = 0, 1, 2


class InputError(Exception):
    pass


def _names(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _value(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


def _graph_json(g: CausalGraph) -> dict:
    return {
        "nodes": [{"name": v, "kind": g.kind(v).value} for v in sorted(g.nodes)],
        "edges": [list(e) for e in sorted(g.edges)],
        "target": list(g.target) if g.target else None,
        "implicit_exogenous": g.implicit_exogenous,
    }


def _target(g: CausalGraph, args) -> tuple[str, str]:
    x = getattr(args, "x", None) or (g.target[0] if g.target else None)
    y = getattr(args, "y", None) or (g.target[1] if g.target else None)
    if not x or not y:
        raise InputError("no target: pass --x and --y or add a 'target X -> Y' line")
    return x, y


class Output:
    """Routes results to stdout and, with ``--out``, to files with manifests."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out) if args.out else None
        self.files: list[str] = []

    def file(self, name: str, data: str, manifest: RunManifest) -> str | None:
        if self.out is None:
            return None
        path = write_with_manifest(self.out / name, data, manifest)
        self.files.append(str(path))
        return str(path)

    def result(self, payload: dict, text: str) -> None:
        if self.args.json:
            print(json.dumps({"command": self.args.command, "version": tool_version(), **payload}, sort_keys=True))
        elif text:
            print(text, end="" if text.endswith("\n") else "\n")


# -- graph commands ---------------------------------------------------------------


def cmd_parse(args, out: Output) -> int:
    g = load_graph(args.graph)
    text = render_graph(g)
    out.file("graph.txt", text, RunManifest.for_inputs("parse", [args.graph]))
    out.result({"graph": _graph_json(g)}, text)
    return EXIT_OK


def cmd_twin(args, out: Output) -> int:
    from .twin import build_twin

    g = load_graph(args.graph)
    x, y = _target(g, args)
    tw = build_twin(g, x, y)
    text = render_graph(tw.graph)
    out.file("twin.txt", text, RunManifest.for_inputs("twin", [args.graph]))
    payload = {
        "graph": _graph_json(tw.graph),
        "factual_of": dict(sorted(tw.factual_of.items())),
        "intervention": tw.intervention,
        "outcome": tw.outcome,
        "selection": tw.selection,
    }
    out.result(payload, text)
    return EXIT_OK


def cmd_dsep(args, out: Output) -> int:
    g = load_graph(args.graph)
    which = "factual"
    if args.twin:
        from .twin import build_twin

        g = build_twin(g, *_target(g, args)).graph
        which = "twin"
    x, y, z = _names(args.nodes_x), _names(args.nodes_y), _names(args.given)
    if not x or not y:
        raise InputError("dsep needs --x and --y")
    sep = d_separated(g, x, y, z)
    path = None if sep or not args.explain else explain(g, x, y, z)
    text = "separated" if sep else "connected"
    if path:
        text += f"\nactive path: {format_path(g, path)}"
    out.result(
        {
            "graph": which,
            "x": list(x),
            "y": list(y),
            "given": list(z),
            "separated": sep,
            "path": path,
            "path_text": format_path(g, path) if path else None,
        },
        text,
    )
    return EXIT_OK


def cmd_decide(args, out: Output) -> int:
    g = load_graph(args.graph)
    x, y = _target(g, args)
    measured = _names(args.measured) if args.measured is not None else None
    regime = DataRegime(measured, _names(args.external))
    verdict = decide(g, x, y, regime, max_size=args.max_size, depth_budget=args.depth)
    body = verdict_to_json(verdict, x, y)
    out.file("verdict.json", json.dumps(body, indent=2, sort_keys=True) + "\n", RunManifest.for_inputs("decide", [args.graph]))
    lines = [f"verdict: {verdict.kind}"]
    if isinstance(verdict, Failure):
        lines.append(f"reason: {verdict.reason}")
    else:
        for plan in body["plans"]:
            lines.append(f"  {plan['formula']}")
    out.result({"verdict": body}, "\n".join(lines))
    return EXIT_NOT_RECOVERABLE if isinstance(verdict, Failure) else EXIT_OK


# -- estimators ---------------------------------------------------------------------


def _table_json(t: DiscreteTable) -> list[dict]:
    return [{"y": k[0], "p": float(w), "exact": str(w)} for k, w in sorted(t.weights.items(), key=lambda kv: str(kv[0]))]


def cmd_recover_discrete(args, out: Output) -> int:
    biased = DiscreteTable.read_csv(args.biased)
    external = DiscreteTable.read_csv(args.external)
    x = _value(args.treatment_value)
    rec = recover_discrete(biased, external, x)
    bias = biased_discrete(biased, x)
    outcome = biased.variables[-1]
    rows = [[k[0], float(rec.weights[k]), str(rec.weights[k]), float(bias.weights.get(k, 0)), str(bias.weights.get(k, 0))]
            for k in sorted(rec.weights, key=str)]
    data = csv_text([outcome, "recovered", "recovered_exact", "biased", "biased_exact"], rows)
    out.file("recovered.csv", data, RunManifest.for_inputs("recover-discrete", [args.biased, args.external]))
    out.result(
        {"x": x, "treatment": biased.variables[0], "outcome": outcome, "recovered": _table_json(rec), "biased": _table_json(bias)},
        data,
    )
    return EXIT_OK


def _read_columns(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = [h.strip() for h in fh.readline().split(",")]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise InputError(f"{path}: {data.shape[1]} columns but header has {len(header)}")
    return header, data


def _parse_grid(text: str) -> Grid:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise InputError("--grid takes lo,hi or lo,hi,n")
    return Grid(float(parts[0]), float(parts[1]), int(parts[2]) if len(parts) == 3 else 512)


def cmd_recover_continuous(args, out: Output) -> int:
    header, biased = _read_columns(args.biased)
    ext_header, external = _read_columns(args.external)
    if header[0] != "x" or header[-1] != "y":
        raise InputError(f"{args.biased}: header must be x,<covariates...>,y")
    covs = header[1:-1]
    if covs != ext_header:
        raise InputError(f"external columns {ext_header} do not match covariates {covs}")
    x, y = biased[:, 0], biased[:, -1]
    t = _value(args.treatment_value)
    grid = _parse_grid(args.grid) if args.grid else default_grid_from_data(y)
    bins = args.bins if args.bins == "auto" else int(args.bins)
    rec = recover_continuous(x, biased[:, 1:-1], y, external, t, grid, bins, args.min_cell)
    bias = biased_continuous(y, x, t, grid)
    manifest = RunManifest.for_inputs("recover-continuous", [args.biased, args.external])
    header_csv = ["grid", "value"]
    out.file("recovered.csv", csv_text(header_csv, zip(grid.points.tolist(), rec.values.tolist())), manifest)
    out.file("biased.csv", csv_text(header_csv, zip(grid.points.tolist(), bias.values.tolist())), manifest)
    diagnostics = {"recovered": rec.meta, "biased": bias.meta}
    out.file("diagnostics.json", json.dumps(diagnostics, indent=2, sort_keys=True) + "\n", manifest)
    payload = {
        "x": t,
        "grid": {"lo": grid.lo, "hi": grid.hi, "n": grid.n},
        "diagnostics": diagnostics,
        "recovered_mean": rec.mean(),
        "biased_mean": bias.mean(),
        "files": list(out.files),
    }
    text = f"recovered mean {rec.mean():.4f}, biased mean {bias.mean():.4f}, bins {rec.meta['bins']}"
    if out.out is None and not args.json:
        text = csv_text(["grid", "recovered", "biased"], zip(grid.points.tolist(), rec.values.tolist(), bias.values.tolist()))
    out.result(payload, text)
    return EXIT_OK


def cmd_metrics(args, out: Output) -> int:
    a = GriddedDensity.read_csv(args.a)
    b = GriddedDensity.read_csv(args.b)
    report = compare(a, b)
    body = report.to_json()
    out.file("metrics.json", json.dumps(body, sort_keys=True) + "\n", RunManifest.for_inputs("metrics", [args.a, args.b]))
    # always one line of JSON
    print(json.dumps({"command": "metrics", "version": tool_version(), **body}, sort_keys=True))
    return EXIT_OK


# -- simulation ---------------------------------------------------------------------


MODELS = ("discrete", "continuous", "advanced")


def _config(args) -> DiscreteScmConfig | ContinuousScmConfig:
    if args.config:
        return read_config(args.config)
    return {"discrete": DiscreteScmConfig(), "continuous": BASIC, "advanced": ADVANCED}[args.model]


def cmd_simulate(args, out: Output) -> int:
    cfg = _config(args)
    if isinstance(cfg, DiscreteScmConfig):
        data = simulate_discrete(cfg, args.n, args.seed)
    else:
        data = simulate_continuous(cfg, args.n, args.seed)
    if args.biased_only:
        data = data.biased()
    manifest = RunManifest.for_inputs("simulate", [args.config] if args.config else [], config_hash=config_hash(cfg), seeds=[args.seed])
    path = out.file("dataset.csv", data.to_csv(), manifest)
    payload = {
        "model": "discrete" if isinstance(cfg, DiscreteScmConfig) else "continuous",
        "config": cfg.to_json(),
        "config_hash": config_hash(cfg),
        "seed": args.seed,
        "n_requested": args.n,
        "n_rows": len(data.x),
        "n_selected": data.n_selected,
        "digest": data.digest(),
        "output": path,
    }
    if args.json:
        out.result(payload, "")
    elif path is None:
        sys.stdout.write(data.to_csv())
    else:
        print(f"wrote {path} ({len(data.x)} rows, {data.n_selected} selected)")
    return EXIT_OK


def _sweep_setup(args) -> tuple[str, ContinuousScmConfig, EstimatorSettings]:
    if args.config:
        cfg = read_config(args.config)
        if not isinstance(cfg, ContinuousScmConfig):
            raise InputError("sweep needs a continuous config")
        name = "advanced" if cfg.gamma_w != 0 else "continuous"
    else:
        name = args.model
        cfg = None
    base_cfg, settings = experiment(name)
    cfg = cfg or base_cfg
    changes = {}
    if args.adjust:
        changes["adjust"] = tuple(a.lower() for a in _names(args.adjust))
    if args.bins:
        changes["bins"] = args.bins if args.bins == "auto" else int(args.bins)
    if args.min_cell is not None:
        changes["min_cell"] = args.min_cell
    if changes:
        settings = EstimatorSettings(**{**settings.__dict__, **changes})
    return name, cfg, settings


def _settings_json(settings: EstimatorSettings) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in settings.__dict__.items()}


def _run_sweep(args, name, cfg, settings, sizes):
    seeds = list(range(args.seed, args.seed + args.seeds))
    result = sweep(cfg, sizes, seeds, settings, aggregate=args.aggregate)
    manifest = RunManifest.for_inputs(
        f"{args.command} {name}",
        [args.config] if getattr(args, "config", None) else [],
        config_hash=config_hash(cfg),
        seeds=seeds,
    )
    return result, manifest, seeds


def _table_text(rows) -> str:
    return csv_text(TABLE_COLUMNS, [[int(r[0]), *(f"{v:.4f}" for v in r[1:])] for r in rows])


def cmd_sweep(args, out: Output) -> int:
    name, cfg, settings = _sweep_setup(args)
    sizes = [int(s) for s in _names(args.sizes)] if args.sizes else list(DEFAULT_SIZES)
    result, manifest, seeds = _run_sweep(args, name, cfg, settings, sizes)
    rows = table_rows(result)
    table = _table_text(rows)
    out.file("table.csv", table, manifest)
    if result.per_seed:
        keys = list(result.per_seed[0])
        out.file("per_seed.csv", csv_text(keys, [[r[k] for k in keys] for r in result.per_seed]), manifest)
    payload = {
        "experiment": name,
        "aggregate": args.aggregate,
        "settings": _settings_json(settings),
        "seeds": len(seeds),
        "columns": list(TABLE_COLUMNS),
        "rows": rows,
        "failures": result.errors,
        "files": list(out.files),
    }
    out.result(payload, table)
    return EXIT_OK


# -- reproduction -------------------------------------------------------------------


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def discrete_truth(cfg: DiscreteScmConfig, x: int) -> Fraction:
    """Population P(Y=1 | do(x)) from the outcome table, averaging over W and Z."""
    pw, pz = Fraction(str(cfg.p_w)), Fraction(str(cfg.p_z))
    total = Fraction(0)
    for w in (0, 1):
        for z in (0, 1):
            weight = (pw if w else 1 - pw) * (pz if z else 1 - pz)
            total += Fraction(str(cfg.outcome_table[(x, w, z)])) * weight
    return total


def reproduce_discrete() -> tuple[list[list], list[dict]]:
    table = trial_table()
    external = DiscreteTable.from_rows(("z",), [(0, 1), (1, 1)])
    cfg = DiscreteScmConfig()
    rows, checks = [], []
    for x in (0, 1):
        truth = discrete_truth(cfg, x)
        rec = recover_discrete(table, external, x)[(1,)]
        bias = biased_discrete(table, x)[(1,)]
        re_bias_shown = relative_error(round(float(bias), 3), float(truth)) * 100
        re_rec_shown = relative_error(round(float(rec), 3), float(truth)) * 100
        re_bias = relative_error(float(bias), float(truth)) * 100
        re_rec = relative_error(float(rec), float(truth)) * 100
        rows.append([x, str(truth), float(truth), str(rec), float(rec), str(bias), float(bias),
                     round(re_bias, 3), round(re_rec, 3), round(re_bias_shown, 1), round(re_rec_shown, 1)])
        ref = reference.DISCRETE
        checks += [
            _check(f"truth x={x}", float(truth) == ref["truth"][x], f"{truth} vs {ref['truth'][x]}"),
            # published probabilities carry three decimals
            _check(f"recovered x={x}", abs(float(rec) - ref["recovered"][x]) < 1e-3, f"{float(rec):.5f} vs {ref['recovered'][x]}"),
            _check(f"biased x={x}", abs(float(bias) - ref["biased"][x]) < 1e-3, f"{float(bias):.5f} vs {ref['biased'][x]}"),
            _check(f"RE_bias x={x}", round(re_bias_shown, 1) == ref["re_bias"][x], f"{re_bias_shown:.2f}% (exact {re_bias:.2f}%) vs {ref['re_bias'][x]}%"),
            _check(f"RE_rec x={x}", round(re_rec_shown, 1) == ref["re_rec"][x], f"{re_rec_shown:.2f}% (exact {re_rec:.2f}%) vs {ref['re_rec'][x]}%"),
        ]
    return rows, checks


DISCRETE_COLUMNS = ("x", "truth_exact", "truth", "recovered_exact", "recovered", "biased_exact", "biased",
                    "re_bias_pct", "re_rec_pct", "re_bias_pct_rounded_inputs", "re_rec_pct_rounded_inputs")


def continuous_checks(name: str, rows) -> list[dict]:
    (rec_lo, rec_hi), (bias_lo, bias_hi) = reference.BANDS[name]
    l1_rec = [r[1] for r in rows]
    last = rows[-1]
    checks = [
        _check("L1_rec decreases with n", all(a > b for a, b in zip(l1_rec, l1_rec[1:])), " > ".join(f"{v:.4f}" for v in l1_rec)),
        _check(f"L1_rec at n={last[0]} in band", rec_lo <= last[1] <= rec_hi, f"{last[1]:.4f} in [{rec_lo}, {rec_hi}]"),
        _check(f"L1_bias at n={last[0]} in band", bias_lo <= last[2] <= bias_hi, f"{last[2]:.4f} in [{bias_lo}, {bias_hi}]"),
    ]
    for r in rows:
        better = all(r[i] < r[i + 1] for i in (1, 3, 5, 7))
        checks.append(_check(f"recovered beats biased at n={r[0]}", better,
                             ", ".join(f"{TABLE_COLUMNS[i][:-4]} {r[i]:.4f}<{r[i + 1]:.4f}" for i in (1, 3, 5, 7))))
    return checks


def _charts(cfg: ContinuousScmConfig, result, name: str) -> dict[str, str]:
    charts = {}
    n_max = max(r.n for r in result.rows)
    for t in (0, 1):
        if (n_max, t) not in result.mean_densities:
            continue
        rec, bias = result.mean_densities[(n_max, t)]
        truth = density_of_gaussian(cfg.theoretical(t), rec.grid)
        pts = rec.grid.points
        charts[f"density_x{t}.svg"] = line_chart(
            {"theoretical": (pts, truth.values), "recovered": (pts, rec.values), "biased": (pts, bias.values)},
            title=f"{name}: mean densities at n={n_max}, x={t}", xlabel="y", ylabel="density",
        )
    ns = [r.n for r in result.rows]
    for metric, attr in (("L1", "l1"), ("L2", "l2"), ("JS", "js"), ("Wasserstein", "wasserstein")):
        charts[f"{attr}_vs_n.svg"] = line_chart(
            {"recovered": (ns, [getattr(r.recovered, attr) for r in result.rows]),
             "biased": (ns, [getattr(r.biased, attr) for r in result.rows])},
            title=f"{name}: {metric} vs n", xlabel="n", ylabel=metric, log_x=True,
        )
    return charts


def cmd_reproduce(args, out: Output) -> int:
    name = args.experiment
    if out.out is None:
        out.out = Path(f"reproduce-{name}")
    files = []
    if name == "discrete":
        rows, checks = reproduce_discrete()
        manifest = RunManifest("reproduce discrete", config_hash=config_hash(DiscreteScmConfig()))
        files.append(out.file("discrete_report.csv", csv_text(DISCRETE_COLUMNS, rows), manifest))
        payload_rows = rows
    else:
        cfg, settings = experiment(name)
        if args.bins:
            settings = EstimatorSettings(**{**settings.__dict__, "bins": args.bins if args.bins == "auto" else int(args.bins)})
        result, manifest, seeds = _run_sweep(args, name, cfg, settings, list(DEFAULT_SIZES))
        payload_rows = table_rows(result)
        checks = continuous_checks(name, payload_rows)
        ref = reference.ADVANCED_TABLE if name == "advanced" else reference.CONTINUOUS_TABLE
        files.append(out.file("table.csv", _table_text(payload_rows), manifest))
        files.append(out.file("reference_table.csv", _table_text(ref), manifest))
        keys = list(result.per_seed[0])
        files.append(out.file("per_seed.csv", csv_text(keys, [[r[k] for k in keys] for r in result.per_seed]), manifest))
        for fname, svg in _charts(cfg, result, name).items():
            files.append(out.file(fname, svg, manifest))
    passed = all(c["passed"] for c in checks)
    summary = {"experiment": name, "passed": passed, "checks": checks, "rows": payload_rows}
    files.append(out.file("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n", manifest))
    lines = [f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['detail']}" for c in checks]
    lines.append(f"{name}: {'all checks passed' if passed else 'some checks failed'}; reports in {out.out}")
    out.result({**summary, "files": files}, "\n".join(lines))
    return EXIT_OK if passed else EXIT_NOT_RECOVERABLE


# -- argument parsing ---------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, top: bool) -> None:
    # subparsers repeat the flags with SUPPRESS so they work on either side of the subcommand
    default = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--seed", type=int, default=default(0), help="base random seed (default 0)")
    parser.add_argument("--json", action="store_true", default=default(False), help="machine-readable JSON on stdout")
    parser.add_argument("--out", metavar="DIR", default=default(None), help="write result files (with manifests) here")
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twinrecover", description="Selection-bias recoverability on twin networks.")
    _global_flags(p, top=True)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_, aliases=()):
        sp = sub.add_parser(name, help=help_, aliases=list(aliases))
        _global_flags(sp, top=False)
        sp.set_defaults(func=func, command=name)
        return sp

    sp = add("parse", cmd_parse, "validate a graph file and print its canonical form")
    sp.add_argument("graph")

    sp = add("twin", cmd_twin, "print the twin network of a graph")
    sp.add_argument("graph")
    sp.add_argument("--x", help="intervention node (default: the file's target)")
    sp.add_argument("--y", help="outcome node (default: the file's target)")

    sp = add("dsep", cmd_dsep, "test a d-separation statement")
    sp.add_argument("graph")
    sp.add_argument("--x", dest="nodes_x", required=True, help="comma-separated node list")
    sp.add_argument("--y", dest="nodes_y", required=True, help="comma-separated node list")
    sp.add_argument("--given", default="", help="comma-separated conditioning set")
    sp.add_argument("--twin", action="store_true", help="query the twin network built from the file's target")
    sp.add_argument("--explain", action="store_true", help="print an active path when not separated")

    sp = add("decide", cmd_decide, "decide recoverability of P(Y*_x*)", aliases=("analyze",))
    sp.add_argument("graph")
    sp.add_argument("--x")
    sp.add_argument("--y")
    sp.add_argument("--external", default="", help="variables with unbiased external data")
    sp.add_argument("--measured", default=None, help="variables measured in the biased cohort (default: all)")
    sp.add_argument("--max-size", type=int, default=4)
    sp.add_argument("--depth", type=int, default=8, help="RC recursion budget")

    sp = add("recover-discrete", cmd_recover_discrete, "exact adjustment on count tables")
    sp.add_argument("--biased", required=True, help="CSV x,<z...>,y,count of the selected cohort")
    sp.add_argument("--external", required=True, help="CSV <z...>,count or <z...>,p")
    sp.add_argument("--x", dest="treatment_value", required=True)

    sp = add("recover-continuous", cmd_recover_continuous, "binned KDE adjustment on continuous samples")
    sp.add_argument("--biased", required=True, help="CSV x,<covariates...>,y")
    sp.add_argument("--external", required=True, help="CSV <covariates...>")
    sp.add_argument("--x", dest="treatment_value", required=True)
    sp.add_argument("--bins", default="10", help="bins per covariate, or 'auto'")
    sp.add_argument("--min-cell", type=int, default=5)
    sp.add_argument("--grid", help="lo,hi[,n]")

    sp = add("metrics", cmd_metrics, "compare two gridded densities")
    sp.add_argument("a")
    sp.add_argument("b")

    sp = add("simulate", cmd_simulate, "draw a synthetic trial")
    sp.add_argument("--model", choices=MODELS, default="continuous")
    sp.add_argument("--config", help="key = value config file (overrides --model)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--biased-only", action="store_true", help="keep only selected rows")

    for name, func, help_ in (("sweep", cmd_sweep, "error metrics over cohort sizes and seeds"),
                              ("reproduce", cmd_reproduce, "rerun a reference experiment and check it")):
        sp = add(name, func, help_)
        if name == "sweep":
            sp.add_argument("--model", choices=MODELS[1:], default="continuous")
            sp.add_argument("--config")
            sp.add_argument("--sizes", help="comma-separated cohort sizes")
            sp.add_argument("--adjust", help="adjustment covariates, e.g. w,z")
            sp.add_argument("--min-cell", type=int)
        else:
            sp.add_argument("experiment", choices=MODELS)
        sp.add_argument("--seeds", type=int, default=50, help="number of seeds, starting at --seed")
        sp.add_argument("--bins", help="bins per covariate, or 'auto'")
        sp.add_argument("--aggregate", choices=("density", "metric"), default="density")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Output(args)
    try:
        return args.func(args, out)
    except (InputError, GraphError, EstimationError, GridMismatch, RCDepthExceeded, OSError, ValueError, KeyError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"unknown name {exc}"
        if args.json:
            print(json.dumps({"command": args.command, "version": tool_version(), "error": msg}, sort_keys=True))
        print(f"twinrecover {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
