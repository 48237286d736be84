"""Single-variable-flip Metropolis sampling with an optional annealing ramp."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .encoding import Convention, Encoding, ModelParams
from .fisher import MomentTable, Source, weighted_moments

REFRESH_SWEEPS = 1000


class SampleSource(str, enum.Enum):
    EXACT = "EXACT"
    SA = "SA"


@dataclass(frozen=True)
class SampleSet:
    d: int
    convention: Convention
    samples: np.ndarray
    source: SampleSource
    seed: int

    def __post_init__(self):
        conv = Convention(self.convention)
        samples = np.asarray(self.samples, dtype=np.int8)
        if samples.ndim != 2 or samples.shape[1] != self.d or samples.shape[0] < 1:
            raise ValueError(f"samples must have shape (n>=1, {self.d}), got {samples.shape}")
        allowed = (-1, 1) if conv is Convention.SPIN else (0, 1)
        if not np.all(np.isin(samples, allowed)):
            raise ValueError(f"sample entries must lie in {allowed}")
        object.__setattr__(self, "convention", conv)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "source", SampleSource(self.source))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def bits(self) -> np.ndarray:
        if self.convention is Convention.BIT:
            return self.samples
        return ((self.samples + 1) // 2).astype(np.int8)

    def dump(self, path) -> None:
        """Debug dump: one configuration per line as a 0/1 string."""
        lines = ["".join(map(str, row)) for row in self.bits()]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class AnnealSchedule:
    beta_start: float = 0.1
    beta_end: float = 1.0
    sweeps_anneal: int = 100
    sweeps_burnin: int = 100
    sweeps_thin: int = 1

    def __post_init__(self):
        for name in ("beta_start", "beta_end"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive")
        if self.sweeps_anneal < 0 or self.sweeps_burnin < 0:
            raise ValueError("sweep counts must be nonnegative")
        if self.sweeps_thin < 1:
            raise ValueError("sweeps_thin must be >= 1")

    @classmethod
    def fixed(cls, burnin: int = 100, thin: int = 1) -> "AnnealSchedule":
        """Plain Metropolis at the target temperature."""
        return cls(1.0, 1.0, 0, burnin, thin)

    def betas(self, beta: float) -> np.ndarray:
        """Inverse temperature for each pre-sampling sweep."""
        ramp = np.geomspace(self.beta_start, self.beta_end, self.sweeps_anneal) if self.sweeps_anneal else np.zeros(0)
        hold = np.full(self.sweeps_burnin, self.beta_end)
        return beta * np.concatenate([ramp, hold])


@numba.njit(cache=True)
def _run_chain(z, lin, W, betas, sites, uniforms, spin, thin, n_keep, refresh):
    d = z.shape[0]
    n_pre = betas.shape[0] - 1
    out = np.empty((n_keep, d), dtype=np.int8)
    field = lin + W @ z
    kept = 0
    total = sites.shape[0]
    for sweep in range(total):
        if sweep > 0 and sweep % refresh == 0:
            field = lin + W @ z
        b = betas[sweep] if sweep < n_pre else betas[n_pre]
        for step in range(d):
            i = sites[sweep, step]
            dz = -2.0 * z[i] if spin else 1.0 - 2.0 * z[i]
            dE = dz * field[i]
            if dE <= 0.0 or uniforms[sweep, step] < np.exp(-b * dE):
                z[i] += dz
                for k in range(d):
                    field[k] += W[k, i] * dz
        if sweep >= n_pre - 1:
            post = sweep - (n_pre - 1)
            if post > 0 and post % thin == 0 and kept < n_keep:
                for k in range(d):
                    out[kept, k] = np.int8(z[k])
                kept += 1
    return out


def _chain_sizes(n: int, n_chains: int) -> list[int]:
    base, extra = divmod(n, n_chains)
    return [base + (c < extra) for c in range(n_chains)]


def metropolis_sample(
    params: ModelParams,
    beta: float,
    schedule: AnnealSchedule,
    n: int,
    seed: int,
    n_chains: int = 8,
    sequential: bool = False,
) -> SampleSet:
    """Draw ``n`` samples pooled from ``n_chains`` independent Metropolis chains.

    Each chain starts from a uniformly random configuration, runs the
    annealing ramp and burn-in, then keeps one configuration every
    ``schedule.sweeps_thin`` sweeps at inverse temperature
    ``beta * schedule.beta_end``. A sweep proposes ``d`` flips at uniformly
    random sites (or sites ``0..d-1`` in order when ``sequential``). Chain ``c``
    draws from the stream ``SeedSequence(seed, spawn_key=(c,))``; the pooled
    samples are ordered by chain then draw.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    d = params.d
    spin = params.encoding is Encoding.ISING
    W = params.coupling_matrix()
    W = W + W.T
    lin = params.linear.astype(np.float64)
    pre = schedule.betas(beta)
    # index n_pre holds the sampling-phase temperature
    betas = np.concatenate([pre, [beta * schedule.beta_end]])
    chunks = []
    for c, n_c in enumerate(_chain_sizes(n, min(n_chains, n))):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(c,)))
        total = pre.size + n_c * schedule.sweeps_thin
        z0 = rng.integers(0, 2, size=d).astype(np.float64)
        if spin:
            z0 = 2.0 * z0 - 1.0
        if sequential:
            sites = np.tile(np.arange(d, dtype=np.int64), (total, 1))
        else:
            sites = rng.integers(0, d, size=(total, d), dtype=np.int64)
        uniforms = rng.random((total, d))
        chunks.append(
            _run_chain(z0, lin, W, betas, sites, uniforms, spin, schedule.sweeps_thin, n_c, REFRESH_SWEEPS)
        )
    conv = Convention.SPIN if spin else Convention.BIT
    return SampleSet(d, conv, np.concatenate(chunks), SampleSource.SA, seed)


def empirical_moments(samples: SampleSet, max_order: int = 4, encoding=None) -> MomentTable:
    """Sample averages of variable products over sorted index tuples.

    ``encoding`` selects the alphabet the moments are taken in; by default it
    follows the sample convention.
    """
    native = Encoding.ISING if samples.convention is Convention.SPIN else Encoding.QUBO
    encoding = native if encoding is None else Encoding.parse(encoding)
    z = samples.samples
    if encoding is not native:
        z = 2 * z - 1 if encoding is Encoding.ISING else (z + 1) // 2
    w = np.full(samples.n, 1.0 / samples.n)
    ms = weighted_moments(z, w, max_order)
    return MomentTable.from_list(samples.d, encoding, ms, Source.EMPIRICAL)
