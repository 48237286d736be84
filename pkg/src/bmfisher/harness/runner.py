"""Run matrices: expansion over datasets, encodings, optimizers and seeds."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from ..data import DatasetSpec, write_dataset
from ..optim import TrainConfig, TrainingTrace, train
from .traceio import write_trace

log = logging.getLogger(__name__)

MOMENT_SNAPSHOT_ITER = 100


@dataclass(frozen=True)
class RunSpec:
    dataset: DatasetSpec
    config: TrainConfig

    @property
    def run_id(self) -> str:
        c = self.config
        return (
            f"{self.dataset.label}_s{self.dataset.seed}_{c.encoding.value}_{c.optimizer.value}_{c.moment_source.value}"
        ).lower()


@dataclass
class ExperimentPlan:
    runs: list[RunSpec]
    out_dir: Path | None = None

    def __post_init__(self):
        ids = [r.run_id for r in self.runs]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise ValueError(f"duplicate run ids: {sorted(dupes)}")

    @classmethod
    def expand(cls, datasets, base: TrainConfig, encodings=("ISING", "QUBO"), optimizers=("SGD", "NGD"), out_dir=None):
        runs = []
        for ds in datasets:
            for opt in optimizers:
                for enc in encodings:
                    runs.append(RunSpec(ds, replace(base, encoding=enc, optimizer=opt, seed=ds.seed)))
        return cls(runs, Path(out_dir) if out_dir else None)

    def __add__(self, other: "ExperimentPlan") -> "ExperimentPlan":
        return ExperimentPlan(self.runs + other.runs, self.out_dir or other.out_dir)


def execute_run(spec: RunSpec, out_dir: Path | None = None) -> TrainingTrace:
    data = spec.dataset.build()
    keep = (MOMENT_SNAPSHOT_ITER,) if spec.config.iterations >= MOMENT_SNAPSHOT_ITER else ()
    trace = train(data, spec.config, keep_moments_at=keep)
    if out_dir is not None:
        ds_path = Path(out_dir) / "datasets" / f"{spec.dataset.label}_s{spec.dataset.seed}.txt"
        if not ds_path.exists():
            write_dataset(data, ds_path)
        write_trace(
            trace,
            Path(out_dir) / "runs" / spec.run_id,
            spec.run_id,
            {"dataset": {k: v for k, v in data.meta.items() if k != "true_params"}},
        )
    if trace.aborted:
        log.warning("run %s aborted: %s", spec.run_id, trace.aborted)
    return trace


def _execute(args):
    spec, out_dir = args
    return spec.run_id, execute_run(spec, out_dir)


def execute(plan: ExperimentPlan, jobs: int = 1) -> dict[str, TrainingTrace]:
    """Run every spec; results are keyed by run id and independent of ``jobs``."""
    work = [(spec, plan.out_dir) for spec in plan.runs]
    if jobs <= 1:
        results = [_execute(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, work))
    return dict(results)
