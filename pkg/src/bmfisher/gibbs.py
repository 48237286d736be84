"""Exact Gibbs distributions by enumeration of all ``2^d`` configurations.

Configurations are indexed by an integer ``k`` whose bit ``i`` is variable
``i`` in bit convention, for both encodings.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .encoding import Convention, Encoding, ModelParams
from .fisher import (
    MomentTable,
    Source,
    moment_tuples,
    product_columns,
    split_orders,
    stats_matrix,
    weighted_moments,
)
from .sampler import SampleSet, SampleSource

MAX_ENUM_D = 24


def _guard(d: int) -> None:
    if d > MAX_ENUM_D:
        raise ValueError(f"exact enumeration limited to d <= {MAX_ENUM_D}, got d={d}")


@lru_cache(maxsize=8)
def all_bits(d: int) -> np.ndarray:
    """``(2^d, d)`` array of bit configurations, row ``k`` encodes integer ``k``."""
    _guard(d)
    k = np.arange(2**d, dtype=np.int64)
    bits = ((k[:, None] >> np.arange(d)) & 1).astype(np.int8)
    bits.setflags(write=False)
    return bits


def configs_in(d: int, convention: Convention) -> np.ndarray:
    bits = all_bits(d)
    return bits if convention is Convention.BIT else (2 * bits - 1).astype(np.int8)


def bits_to_index(bits: np.ndarray) -> np.ndarray:
    """Row-wise bit arrays to configuration integers."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
    return bits @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))


_BASIS_MAX_ENTRIES = 2**24


@lru_cache(maxsize=4)
def _product_basis(d: int, convention: Convention) -> np.ndarray | None:
    """Products over all sorted tuples of orders 1..4 for every configuration, or None if too large."""
    z = configs_in(d, convention)
    n_cols = sum(len(moment_tuples(d, k)) for k in range(1, 5))
    if z.shape[0] * n_cols > _BASIS_MAX_ENTRIES:
        return None
    basis = np.concatenate(product_columns(z, 4), axis=1)
    basis.setflags(write=False)
    return basis


def energies(params: ModelParams) -> np.ndarray:
    """Energy of every configuration, evaluated in the encoding's own alphabet."""
    conv = params.encoding.convention
    basis = _product_basis(params.d, conv)
    if basis is not None:
        return basis[:, : params.theta.size] @ params.theta
    return stats_matrix(configs_in(params.d, conv)) @ params.theta


@dataclass(frozen=True)
class ExactDistribution:
    d: int
    beta: float
    logZ: float
    logp: np.ndarray

    @property
    def p(self) -> np.ndarray:
        return np.exp(self.logp)


@dataclass
class EmpiricalDistribution:
    """Data distribution over configurations.

    ``samples`` holds configuration integers in draw order so that datasets
    can be written back out unchanged; ``counts`` is derived from it.
    """

    d: int
    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64).reshape(-1)
        if self.samples.size < 1:
            raise ValueError("empirical distribution needs at least one sample")
        if self.samples.min() < 0 or self.samples.max() >= 2**self.d:
            raise ValueError(f"configuration index out of range for d={self.d}")

    @classmethod
    def from_counts(cls, d: int, counts: dict) -> "EmpiricalDistribution":
        keys = sorted(counts)
        samples = np.repeat(np.array(keys, dtype=np.int64), [int(counts[k]) for k in keys])
        return cls(d, samples)

    @property
    def total(self) -> int:
        return int(self.samples.size)

    @property
    def counts(self) -> dict[int, int]:
        keys, cnt = np.unique(self.samples, return_counts=True)
        return {int(k): int(c) for k, c in zip(keys, cnt)}

    def support_and_weights(self) -> tuple[np.ndarray, np.ndarray]:
        keys, cnt = np.unique(self.samples, return_counts=True)
        return keys, cnt / self.total

    def bits(self) -> np.ndarray:
        return ((self.samples[:, None] >> np.arange(self.d)) & 1).astype(np.int8)

    def digest(self) -> str:
        """SHA-256 over ``d`` and the ordered sample indices."""
        h = hashlib.sha256(f"{self.d}:".encode())
        h.update(self.samples.astype("<i8").tobytes())
        return h.hexdigest()


def enumerate_distribution(params: ModelParams, beta: float = 1.0) -> ExactDistribution:
    _guard(params.d)
    if not beta > 0:
        raise ValueError("beta must be positive")
    neg = -beta * energies(params)
    logZ = float(logsumexp(neg))
    logp = neg - logZ
    logp.setflags(write=False)
    return ExactDistribution(params.d, float(beta), logZ, logp)


def kl_divergence(p, q: ExactDistribution) -> float:
    """``D(p || q)`` in nats, with ``0 log 0 = 0``."""
    if p.d != q.d:
        raise ValueError(f"dimension mismatch: {p.d} vs {q.d}")
    if isinstance(p, EmpiricalDistribution):
        keys, w = p.support_and_weights()
        kl = float(np.sum(w * (np.log(w) - q.logp[keys])))
    else:
        pk = p.p
        mask = pk > 0
        kl = float(np.sum(pk[mask] * (p.logp[mask] - q.logp[mask])))
    return max(kl, 0.0)


def exact_moments(dist: ExactDistribution, encoding, max_order: int = 4):
    """Moments of the sufficient statistics under ``dist`` in the given alphabet."""
    encoding = Encoding.parse(encoding)
    _guard(dist.d)
    basis = _product_basis(dist.d, encoding.convention)
    if basis is None:
        ms = weighted_moments(configs_in(dist.d, encoding.convention), dist.p, max_order)
    else:
        n_cols = sum(len(moment_tuples(dist.d, k)) for k in range(1, max_order + 1))
        ms = split_orders(dist.d, dist.p @ basis[:, :n_cols], max_order)
    return MomentTable.from_list(dist.d, encoding, ms, Source.EXACT)


def sample_exact(dist: ExactDistribution, n: int, seed: int, convention=Convention.BIT):
    """``n`` independent categorical draws by inverse-CDF lookup on uniforms."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.p)
    cdf /= cdf[-1]
    u = rng.random(n)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    bits = ((idx[:, None] >> np.arange(dist.d)) & 1).astype(np.int8)
    conv = Convention(convention)
    z = bits if conv is Convention.BIT else (2 * bits - 1).astype(np.int8)
    return SampleSet(dist.d, conv, z, SampleSource.EXACT, seed)


def data_moments(data: EmpiricalDistribution, encoding, max_order: int = 2) -> MomentTable:
    """Moments of the data distribution in the alphabet of ``encoding``."""
    encoding = Encoding.parse(encoding)
    keys, w = data.support_and_weights()
    bits = ((keys[:, None] >> np.arange(data.d)) & 1).astype(np.int8)
    z = bits if encoding is Encoding.QUBO else 2 * bits - 1
    ms = weighted_moments(z, w, max_order)
    return MomentTable.from_list(data.d, encoding, ms, Source.EMPIRICAL)
