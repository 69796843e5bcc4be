"""Output plumbing: atomic file writes, run manifests, tiny SVG charts."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from html import escape
from importlib import metadata
from pathlib import Path


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def atomic_write(path, data: str | bytes) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``.

    An interrupted run leaves either the old file or none, never a partial one.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config_hash: str | None = None
    inputs: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    tool_version: str = field(default_factory=tool_version)
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))

    @classmethod
    def for_inputs(cls, command: str, paths=(), **kw) -> RunManifest:
        return cls(command, inputs={str(p): file_digest(p) for p in paths}, **kw)

    def key(self) -> dict:
        """Everything that determines the outputs (the timestamp does not)."""
        d = asdict(self)
        d.pop("timestamp")
        return d

    def to_json(self) -> dict:
        return asdict(self)


def write_with_manifest(path, data: str | bytes, manifest: RunManifest) -> Path:
    path = atomic_write(path, data)
    atomic_write(Path(f"{path}.manifest.json"), json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")
    return path


# -- SVG ------------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def line_chart(
    series: dict[str, tuple],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 480,
    height: int = 320,
    log_x: bool = False,
) -> str:
    """Polyline chart; ``series`` maps a label to ``(xs, ys)``."""
    if not series:
        raise ValueError("nothing to plot")
    fx = (lambda v: math.log10(v)) if log_x else (lambda v: v)
    xs = [fx(float(v)) for xs_, _ in series.values() for v in xs_]
    ys = [float(v) for _, ys_ in series.values() for v in ys_]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    ml, mr, mt, mb = 56, 120, 28, 40
    pw, ph = width - ml - mr, height - mt - mb

    def px(v):
        return ml + (fx(float(v)) - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (float(v) - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml + pw / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 6}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{ml - 4}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
        xv = x0 + frac * (x1 - x0)
        label = 10**xv if log_x else xv
        out.append(f'<text x="{ml + frac * pw:.1f}" y="{mt + ph + 14}" text-anchor="middle">{label:.4g}</text>')
    for i, (label, (sx, sy)) in enumerate(series.items()):
        colour = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = mt + 14 * i + 6
        out.append(f'<line x1="{ml + pw + 8}" y1="{ly}" x2="{ml + pw + 24}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 28}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def output_schema() -> dict:
    """The JSON schema every ``--json`` payload validates against."""
    from importlib.resources import files

    return json.loads(files("twinrecover").joinpath("schemas/cli-output.schema.json").read_text(encoding="utf-8"))
