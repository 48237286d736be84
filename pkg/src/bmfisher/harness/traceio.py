"""On-disk layout of a training run.

A run directory holds ``trace.csv`` (one row per recorded iteration, columns
``TRACE_COLUMNS``), ``eigenvalues.csv`` and ``thetas.csv`` (wide, one row per
recorded iteration), optional ``moments_iter<t>.csv`` tables and a
``meta.json`` sidecar with the full configuration.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..data import atomic_write
from ..encoding import Encoding
from ..fisher import MomentTable, Source, moment_tuples
from ..optim import TRACE_COLUMNS, TrainConfig, TrainingTrace
from ..sampler import AnnealSchedule

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _wide_csv(prefix: str, iters, arrays) -> str:
    width = len(arrays[0]) if arrays else 0
    lines = [",".join(["iter"] + [f"{prefix}{k}" for k in range(width)])]
    for t, arr in zip(iters, arrays):
        lines.append(",".join([str(int(t))] + [_fmt(v) for v in arr]))
    return "\n".join(lines) + "\n"


def trace_csv(trace: TrainingTrace) -> str:
    lines = [",".join(TRACE_COLUMNS)]
    for row in trace.rows:
        lines.append(",".join(_fmt(row[c]) for c in TRACE_COLUMNS))
    return "\n".join(lines) + "\n"


def moments_csv(m: MomentTable) -> str:
    lines = ["order,indices,value"]
    for order, arr in enumerate(m.orders(), 1):
        for tup, v in zip(moment_tuples(m.d, order), arr):
            lines.append(f"{order},{'-'.join(map(str, tup))},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def write_trace(trace: TrainingTrace, run_dir, run_id: str, extra_meta: dict | None = None) -> Path:
    run_dir = Path(run_dir)
    iters = trace.iters
    atomic_write(run_dir / "trace.csv", trace_csv(trace))
    atomic_write(run_dir / "eigenvalues.csv", _wide_csv("ev", iters, trace.eigenvalues))
    atomic_write(run_dir / "thetas.csv", _wide_csv("theta", iters, trace.thetas))
    for t, m in sorted(trace.moments.items()):
        atomic_write(run_dir / f"moments_iter{t}.csv", moments_csv(m))
    meta = {
        "schema_version": SCHEMA_VERSION,
        "run_id": run_id,
        "columns": list(TRACE_COLUMNS),
        "config": trace.config.to_dict(),
        **trace.meta,
        **(extra_meta or {}),
    }
    atomic_write(run_dir / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return run_dir


def _read_wide(path: Path) -> tuple[np.ndarray, list[np.ndarray]]:
    lines = path.read_text().splitlines()[1:]
    iters, arrays = [], []
    for line in lines:
        parts = line.split(",")
        iters.append(int(parts[0]))
        arrays.append(np.array([float(v) for v in parts[1:]]))
    return np.array(iters), arrays


def config_from_dict(cfg: dict) -> TrainConfig:
    cfg = dict(cfg)
    cfg["schedule"] = AnnealSchedule(**cfg["schedule"])
    return TrainConfig(**cfg)


def read_trace(run_dir) -> TrainingTrace:
    run_dir = Path(run_dir)
    meta = json.loads((run_dir / "meta.json").read_text())
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{run_dir}: trace schema version {meta.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    header, *body = (run_dir / "trace.csv").read_text().splitlines()
    if tuple(header.split(",")) != TRACE_COLUMNS:
        raise SchemaError(f"{run_dir}: unexpected trace columns {header!r}")
    rows = []
    for line in body:
        vals = line.split(",")
        row = {c: float(v) for c, v in zip(TRACE_COLUMNS, vals)}
        row["iter"] = int(vals[0])
        rows.append(row)
    _, eigs = _read_wide(run_dir / "eigenvalues.csv")
    _, thetas = _read_wide(run_dir / "thetas.csv")
    cfg = config_from_dict(meta["config"])
    d = meta["d"]
    moments = {}
    for path in sorted(run_dir.glob("moments_iter*.csv")):
        t = int(path.stem.removeprefix("moments_iter"))
        by_order: dict[int, list[float]] = {}
        for line in path.read_text().splitlines()[1:]:
            order, _, value = line.split(",")
            by_order.setdefault(int(order), []).append(float(value))
        arrays = [np.array(by_order[k]) for k in sorted(by_order)]
        source = Source.EXACT if cfg.moment_source.value == "EXACT" else Source.EMPIRICAL
        moments[t] = MomentTable.from_list(d, Encoding.parse(cfg.encoding), arrays, source)
    trace = TrainingTrace(cfg, rows, eigs, thetas, moments, {}, meta, meta.get("aborted"))
    return trace
