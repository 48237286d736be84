"""CSV series and matplotlib renders for the reproduction report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..data import atomic_write  # noqa: E402
from ..fisher import moment_tuples  # noqa: E402

COLORS = {"ISING": "tab:blue", "QUBO": "tab:orange"}
STYLES = {"SGD": "--", "NGD": "-"}

plt.rcParams.update(
    {"figure.dpi": 100, "font.size": 9, "axes.grid": True, "grid.alpha": 0.3, "svg.hashsalt": "bmfisher"}
)


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def band(traces, column: str):
    """Median, min and max of a trace column across seeds (iteration grid of the first trace)."""
    n = min(len(t.rows) for t in traces)
    stack = np.array([t.column(column)[:n] for t in traces])
    return traces[0].iters[:n], np.median(stack, axis=0), stack.min(axis=0), stack.max(axis=0)


def _series_csv(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(str(v) if isinstance(v, str) else f"{v:.17g}" for v in r) for r in rows]
    atomic_write(path, "\n".join(lines) + "\n")


def band_figure(panels: dict, column: str, path: Path, ylabel: str, logy: bool = False) -> list:
    """``panels`` maps a panel title to ``{(encoding, optimizer): [traces...]}``."""
    rows = []
    fig, axes = plt.subplots(1, len(panels), figsize=(4.2 * len(panels), 3.2), squeeze=False)
    for ax, (title, groups) in zip(axes[0], panels.items()):
        for (enc, opt), traces in sorted(groups.items()):
            it, med, lo, hi = band(traces, column)
            ax.plot(it, med, STYLES[opt], color=COLORS[enc], label=f"{enc} / {opt}", lw=1.3)
            ax.fill_between(it, lo, hi, color=COLORS[enc], alpha=0.15, lw=0)
            rows += [(title, enc, opt, int(i), m, a, b) for i, m, a, b in zip(it, med, lo, hi)]
        ax.set_title(title)
        ax.set_xlabel("iteration")
        ax.set_ylabel(ylabel)
        if logy:
            ax.set_yscale("log")
    axes[0][0].legend(fontsize=7)
    _save(fig, path)
    _series_csv(
        path.with_suffix(".csv"), f"panel,encoding,optimizer,iter,{column}_median,{column}_min,{column}_max", rows
    )
    return rows


def eigen_trajectory_figure(traces: dict, path: Path, every: int = 10) -> None:
    """Eigenvalue trajectories; ``traces`` maps a panel label to one trace."""
    fig, axes = plt.subplots(1, len(traces), figsize=(4.2 * len(traces), 3.2), squeeze=False, sharey=True)
    rows = []
    for ax, (label, trace) in zip(axes[0], traces.items()):
        E = np.array(trace.eigenvalues)
        it = trace.iters
        for k in range(E.shape[1]):
            ax.plot(it, np.clip(E[:, k], 1e-12, None), lw=0.6, color=plt.cm.viridis(k / max(E.shape[1] - 1, 1)))
        ax.set_yscale("log")
        ax.set_title(label)
        ax.set_xlabel("iteration")
        for t, ev in zip(it[::every], E[::every]):
            rows.append((label, int(t), *ev))
    axes[0][0].set_ylabel("FIM eigenvalue")
    _save(fig, path)
    width = len(rows[0]) - 2 if rows else 0
    _series_csv(path.with_suffix(".csv"), "panel,iter," + ",".join(f"ev{k}" for k in range(width)), rows)


def eigen_snapshot_figure(snapshots: dict, path: Path) -> None:
    """Sorted spectra at one iteration; ``snapshots`` maps a label to a list of spectra (one per seed)."""
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    rows = []
    for k, (label, spectra) in enumerate(snapshots.items()):
        color = plt.cm.plasma(k / max(len(snapshots) - 1, 1))
        for s, ev in enumerate(spectra):
            ax.plot(np.arange(1, ev.size + 1), np.clip(ev, 1e-12, None), "o-", ms=2, lw=0.7, color=color,
                    label=label if s == 0 else None)
            rows += [(label, s, r + 1, v) for r, v in enumerate(ev)]
    ax.set_yscale("log")
    ax.set_xlabel("eigenvalue rank")
    ax.set_ylabel("eigenvalue")
    ax.legend(fontsize=7)
    _save(fig, path)
    _series_csv(path.with_suffix(".csv"), "label,seed,rank,eigenvalue", rows)


def moment_histogram_figure(tables: dict, path: Path) -> None:
    """Histograms of 1st..4th order moments; ``tables`` maps (encoding, jc) to a MomentTable."""
    encodings = sorted({enc for enc, _ in tables})
    fig, axes = plt.subplots(len(encodings), 4, figsize=(13, 2.8 * len(encodings)), squeeze=False)
    rows = []
    for r, enc in enumerate(encodings):
        for (e, jc), m in sorted(tables.items()):
            if e != enc:
                continue
            for order, arr in enumerate(m.orders(), 1):
                axes[r][order - 1].hist(arr, bins=30, alpha=0.45, label=f"J_c={jc:g}")
                rows += [
                    (enc, f"{jc:g}", str(order), "-".join(map(str, t)), v)
                    for t, v in zip(moment_tuples(m.d, order), arr)
                ]
        sym = "s" if enc == "ISING" else "x"
        for order in range(1, 5):
            axes[r][order - 1].set_title(f"{enc}: E[{sym}^{order} products]")
        axes[r][0].legend(fontsize=7)
    _save(fig, path)
    _series_csv(path.with_suffix(".csv"), "encoding,jc,order,indices,value", rows)


def spectrum_figure(eigenvalues: np.ndarray, path: Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.semilogy(np.arange(1, eigenvalues.size + 1), np.clip(eigenvalues, 1e-16, None), "o-", ms=3)
    ax.set_xlabel("rank")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title)
    _save(fig, path)
