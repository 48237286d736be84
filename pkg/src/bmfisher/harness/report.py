"""Reproduction report: figure series, renders and the criteria summary."""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path

from ..data import atomic_write
from ..optim import TrainConfig, TrainingTrace
from . import checks, figures
from .checks import BAS2, BAS3, JCS, SYNTH, CheckResult, RunMatrix, dataset
from .runner import ExperimentPlan, RunSpec, execute
from .traceio import read_trace

log = logging.getLogger(__name__)


def reproduce_plan(seeds, iterations: int, out_dir=None) -> tuple[ExperimentPlan, TrainConfig]:
    base = TrainConfig(iterations=iterations)
    specs = [dataset(BAS2, s) for s in seeds] + [dataset(BAS3, s) for s in seeds]
    specs += [dataset(SYNTH, s, jc) for jc in JCS for s in seeds]
    return ExperimentPlan.expand(specs, base, out_dir=out_dir), base


def sa_plan(iterations: int, seed: int = 0, out_dir=None) -> ExperimentPlan:
    base = TrainConfig(iterations=iterations, moment_source="SA", fim_source="SA", seed=seed)
    return ExperimentPlan.expand([dataset(SYNTH, seed, 1.0)], base, out_dir=out_dir)


def _groups(mx: RunMatrix, kind, seeds, jc=None, optimizers=("SGD", "NGD")) -> dict:
    return {
        (enc, opt): [mx.get(dataset(kind, s, jc), enc, opt) for s in seeds]
        for enc in ("ISING", "QUBO")
        for opt in optimizers
    }


def render_figures(mx: RunMatrix, seeds, out: Path, sa: dict[str, TrainingTrace] | None = None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    bas_panels = {"BAS 2x2": _groups(mx, BAS2, seeds)}
    try:
        bas_panels["BAS 3x3"] = _groups(mx, BAS3, seeds)
    except KeyError:
        pass
    p = out / "kl_bas.svg"
    figures.band_figure(bas_panels, "kl", p, "KL(p_data || p_model)", logy=True)
    paths.append(p)

    synth_panels = {}
    for jc in JCS:
        try:
            synth_panels[f"Ising data J_c={jc:g}"] = _groups(mx, SYNTH, seeds, jc)
        except KeyError:
            synth_panels[f"Ising data J_c={jc:g}"] = _groups(mx, SYNTH, seeds, jc, ("NGD",))
    p = out / "kl_ising.svg"
    figures.band_figure(synth_panels, "kl", p, "KL(p_data || p_model)", logy=True)
    paths.append(p)

    p = out / "entropy_ising.svg"
    figures.band_figure(synth_panels, "spectral_entropy", p, "spectral entropy (nats)")
    paths.append(p)

    s0 = seeds[0]
    ds = dataset(SYNTH, s0, 1.0)
    traj = {f"{enc} / NGD": mx.get(ds, enc, "NGD") for enc in ("ISING", "QUBO")}
    try:
        traj.update({f"{enc} / SGD": mx.get(ds, enc, "SGD") for enc in ("ISING", "QUBO")})
    except KeyError:
        pass
    p = out / "eigenvalues_jc1.svg"
    figures.eigen_trajectory_figure(traj, p)
    paths.append(p)

    at = 100
    snaps = {
        f"QUBO/NGD J_c={jc:g}": [mx.get(dataset(SYNTH, s, jc), "QUBO", "NGD").eigenvalues[at] for s in seeds]
        for jc in JCS
    }
    p = out / "qubo_eigs_iter100.svg"
    figures.eigen_snapshot_figure(snaps, p)
    paths.append(p)

    tables = {
        (enc, jc): mx.get(dataset(SYNTH, s0, jc), enc, "NGD").moments[at] for enc in ("ISING", "QUBO") for jc in JCS
    }
    p = out / "moment_hists_iter100.svg"
    figures.moment_histogram_figure(tables, p)
    paths.append(p)

    if sa:
        panel = {"SA cross-check, J_c=1.0": {(t.config.encoding.value, t.config.optimizer.value): [t] for t in sa.values()}}
        p = out / "sa_crosscheck_kl.svg"
        figures.band_figure(panel, "kl", p, "KL(p_data || p_model)", logy=True)
        paths.append(p)
    return paths


def summary_text(results: list[CheckResult], seeds, iterations, extra: list[str] = ()) -> str:
    header = [
        "Boltzmann machine encoding study: reproduction summary",
        f"seeds: {list(seeds)}; iterations per run: {iterations}; moments and FIMs: exact enumeration",
        "series report the median over seeds with min/max bands",
        "KL direction: D(p_data || p_model), nats; spectral entropy: natural log",
        "",
    ]
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results if r.number)
    total = sum(1 for r in results if r.number)
    footer = ["", f"criteria passed: {passed}/{total}", *extra]
    return "\n".join(header + lines + footer) + "\n"


def reproduce(
    out: Path,
    seeds=checks.SEEDS,
    iterations: int = checks.ITERATIONS,
    jobs: int = 1,
    sa_iterations: int = 100,
    standalone: bool = True,
) -> tuple[list[CheckResult], Path]:
    out = Path(out)
    plan, base = reproduce_plan(seeds, iterations, out)
    log.info("running %d exact-moment runs", len(plan.runs))
    mx = RunMatrix(execute(plan, jobs), base)
    sa = None
    if sa_iterations > 0:
        log.info("running SA cross-check (%d iterations)", sa_iterations)
        sa = execute(sa_plan(sa_iterations, seeds[0], out), jobs)
    render_figures(mx, seeds, out / "figures", sa)

    results = []
    if standalone:
        results += checks.standalone_checks()
    results += checks.matrix_checks(mx, seeds, iterations)
    if standalone:
        results.append(checks.check_determinism())
    results += checks.figure_checks(mx, seeds)
    extra = []
    if sa:
        extra.append("SA cross-check final KL: " + ", ".join(f"{k}={t.kl[-1]:.4f}" for k, t in sorted(sa.items())))
    summary = out / "summary.txt"
    atomic_write(summary, summary_text(results, seeds, iterations, extra))
    return results, summary


def load_matrix(root: Path) -> tuple[RunMatrix, list[int], int]:
    """Load every run under ``root/runs``; raises on schema mismatch."""
    traces = {}
    for run_dir in sorted((Path(root) / "runs").iterdir()):
        if (run_dir / "meta.json").exists():
            t = read_trace(run_dir)
            traces[t.meta["run_id"]] = t
    if not traces:
        raise FileNotFoundError(f"no runs found under {root}/runs")
    exact = [t for t in traces.values() if t.config.moment_source.value == "EXACT"]
    base = replace(exact[0].config, encoding="ISING", optimizer="SGD", seed=0)
    seeds = sorted({t.meta["dataset"]["seed"] for t in exact})
    return RunMatrix(traces, base), seeds, base.iterations


def analyze_runs(root: Path, out: Path | None = None) -> tuple[list[CheckResult], Path]:
    mx, seeds, iterations = load_matrix(root)
    out = Path(out or Path(root) / "analysis")
    sa = {k: t for k, t in mx.traces.items() if t.config.moment_source.value == "SA"} or None
    render_figures(mx, seeds, out / "figures", sa)
    results = []
    for fn in (
        lambda: checks.check_sgd_ordering(mx, seeds, iterations),
        lambda: checks.check_ngd_invariance(mx, seeds),
        lambda: checks.check_entropy_ordering(mx, seeds),
        lambda: checks.check_small_eig_persistence(mx, seeds),
        lambda: checks.check_schur(mx),
        lambda: checks.check_moment_geometry(mx, seeds),
    ):
        try:
            results.append(fn())
        except KeyError as exc:
            log.warning("skipping criterion, missing run %s", exc)
    summary = out / "summary.txt"
    atomic_write(summary, summary_text(results, seeds, iterations))
    return results, summary


__all__ = ["reproduce", "analyze_runs", "load_matrix", "render_figures", "RunSpec"]
