"""Sufficient statistics, the likelihood gradient and the Fisher information matrix.

The FIM of a Boltzmann machine is the covariance of its sufficient statistics,
scaled by ``beta**2``. It is assembled here from tabulated moments up to fourth
order; products of statistics are reduced to a single sorted index tuple with
``s_i**2 = 1`` (spin) or ``x_i**2 = x_i`` (bit).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np

from .encoding import BinaryConfig, Convention, Encoding, flat_to_term, n_params

_TOL = 1e-12


class Source(str, enum.Enum):
    EXACT = "EXACT"
    EMPIRICAL = "EMPIRICAL"


@lru_cache(maxsize=None)
def moment_tuples(d: int, order: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(d), order))


def stats_matrix(z: np.ndarray) -> np.ndarray:
    """Row-wise sufficient statistics ``(z_i, z_i z_j for i<j)``."""
    z = np.asarray(z, dtype=np.float64)
    iu, ju = np.triu_indices(z.shape[1], 1)
    return np.concatenate([z, z[:, iu] * z[:, ju]], axis=1)


def sufficient_stats(config: BinaryConfig) -> np.ndarray:
    """Energy gradient with respect to the flat parameter vector."""
    return stats_matrix(config.values[None, :])[0]


def product_columns(z: np.ndarray, max_order: int) -> list[np.ndarray]:
    """Per-row products over sorted index tuples, one ``(n, C(d, k))`` block per order ``k``."""
    if max_order not in (1, 2, 3, 4):
        raise ValueError("max_order must be in 1..4")
    z = np.asarray(z, dtype=np.float64)
    d = z.shape[1]
    out = [z]
    if max_order >= 2:
        out.append(stats_matrix(z)[:, d:])
    for order in range(3, max_order + 1):
        tup = np.array(moment_tuples(d, order), dtype=np.int64).reshape(-1, order)
        prod = z[:, tup[:, 0]].copy()
        for col in range(1, order):
            prod *= z[:, tup[:, col]]
        out.append(prod)
    return out


def weighted_moments(z: np.ndarray, w: np.ndarray, max_order: int) -> list[np.ndarray]:
    """Weighted averages of products over sorted index tuples, orders ``1..max_order``."""
    w = np.asarray(w, dtype=np.float64)
    return [w @ block for block in product_columns(z, max_order)]


def split_orders(d: int, stacked: np.ndarray, max_order: int) -> list[np.ndarray]:
    """Split a concatenation of order-1..max_order tables back into per-order arrays."""
    out, start = [], 0
    for order in range(1, max_order + 1):
        size = len(moment_tuples(d, order))
        out.append(stacked[start : start + size])
        start += size
    return out


@lru_cache(maxsize=None)
def _tuple_positions(d: int, max_order: int) -> dict[tuple[int, ...], int]:
    """Position of each sorted tuple in the stacked vector ``[1, m1, m2, ...]``."""
    pos = {(): 0}
    for order in range(1, max_order + 1):
        for t in moment_tuples(d, order):
            pos[t] = len(pos)
    return pos


@lru_cache(maxsize=None)
def _subset_parents(d: int, max_order: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs (child, parent) of stacked positions where parent's index set drops one element."""
    pos = _tuple_positions(d, max_order)
    child, parent = [], []
    for t, k in pos.items():
        if len(t) < 2:
            continue
        for drop in range(len(t)):
            child.append(k)
            parent.append(pos[t[:drop] + t[drop + 1 :]])
    return np.array(child, dtype=np.int64), np.array(parent, dtype=np.int64)


@dataclass(frozen=True)
class MomentTable:
    d: int
    encoding: Encoding
    m1: np.ndarray
    m2: np.ndarray | None = None
    m3: np.ndarray | None = None
    m4: np.ndarray | None = None
    source: Source = Source.EXACT

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding.parse(self.encoding))
        object.__setattr__(self, "source", Source(self.source))
        for order, arr in enumerate(self.orders(), 1):
            expected = len(moment_tuples(self.d, order))
            if arr.shape != (expected,):
                raise ValueError(f"order-{order} table has shape {arr.shape}, expected ({expected},)")
        stacked = self.stacked()
        if self.encoding is Encoding.ISING:
            if np.any(np.abs(stacked) > 1 + _TOL):
                raise ValueError("spin moments must lie in [-1, 1]")
        else:
            if np.any(stacked < -_TOL) or np.any(stacked > 1 + _TOL):
                raise ValueError("bit moments must lie in [0, 1]")
            child, parent = _subset_parents(self.d, self.max_order)
            if np.any(stacked[child] > stacked[parent] + _TOL):
                raise ValueError("bit moments must shrink as the index set grows")

    @classmethod
    def from_list(cls, d, encoding, moments, source) -> "MomentTable":
        padded = list(moments) + [None] * (4 - len(moments))
        return cls(d, encoding, *padded, source=source)

    def orders(self) -> list[np.ndarray]:
        out = []
        for arr in (self.m1, self.m2, self.m3, self.m4):
            if arr is None:
                break
            out.append(np.asarray(arr, dtype=np.float64))
        return out

    @property
    def max_order(self) -> int:
        return len(self.orders())

    def stacked(self) -> np.ndarray:
        return np.concatenate([[1.0], *self.orders()])

    def flat_stats(self) -> np.ndarray:
        """Expected sufficient statistics in the flat parameter layout."""
        if self.max_order < 2:
            raise ValueError("first- and second-order moments are required")
        return np.concatenate([self.m1, self.m2])

    def lookup(self, indices) -> float:
        """Moment of an arbitrary product of variables, reduced with the alphabet identity."""
        t = _reduce(tuple(indices), self.encoding.convention)
        if len(t) > self.max_order:
            raise KeyError(f"moment of order {len(t)} not tabulated")
        return float(self.stacked()[_tuple_positions(self.d, self.max_order)[t]])


def _reduce(indices: tuple[int, ...], convention: Convention) -> tuple[int, ...]:
    if convention is Convention.SPIN:
        odd = {i for i in set(indices) if indices.count(i) % 2 == 1}
        return tuple(sorted(odd))
    return tuple(sorted(set(indices)))


@lru_cache(maxsize=None)
def _fim_gather_index(d: int, convention: Convention) -> np.ndarray:
    pos = _tuple_positions(d, 4)
    terms = [flat_to_term(k, d) for k in range(n_params(d))]
    P = len(terms)
    idx = np.empty((P, P), dtype=np.int64)
    for a in range(P):
        for b in range(a, P):
            idx[a, b] = idx[b, a] = pos[_reduce(terms[a] + terms[b], convention)]
    idx.setflags(write=False)
    return idx


@dataclass(frozen=True)
class FimMatrix:
    d: int
    encoding: Encoding
    M: np.ndarray
    source: Source = Source.EXACT

    def __post_init__(self):
        P = n_params(self.d)
        if self.M.shape != (P, P):
            raise ValueError(f"FIM has shape {self.M.shape}, expected ({P}, {P})")

    @property
    def linear_block(self) -> slice:
        return slice(0, self.d)

    @property
    def pair_block(self) -> slice:
        return slice(self.d, n_params(self.d))


def likelihood_gradient(data: MomentTable, model: MomentTable, beta: float = 1.0) -> np.ndarray:
    """``beta * (E_data[phi] - E_model[phi])``.

    This is the gradient of the average negative log-likelihood, so the update
    ``theta - eta * g`` increases the likelihood.
    """
    if data.d != model.d:
        raise ValueError(f"dimension mismatch: {data.d} vs {model.d}")
    if data.encoding is not model.encoding:
        raise ValueError(f"encoding mismatch: {data.encoding.value} vs {model.encoding.value}")
    return beta * (data.flat_stats() - model.flat_stats())


def fim_from_moments(m: MomentTable, beta: float = 1.0) -> FimMatrix:
    """Covariance of the sufficient statistics, times ``beta**2``."""
    if m.max_order < 4:
        raise ValueError("FIM assembly needs moments up to fourth order")
    stacked = m.stacked()
    idx = _fim_gather_index(m.d, m.encoding.convention)
    mu = stacked[1 : n_params(m.d) + 1]
    M = stacked[idx] - np.outer(mu, mu)
    if beta != 1.0:
        M *= beta**2
    return FimMatrix(m.d, m.encoding, M, m.source)


def fim_blocks(F: FimMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split into (linear x linear, linear x pair, pair x linear, pair x pair)."""
    lin, pr = F.linear_block, F.pair_block
    M = F.M
    return M[lin, lin], M[lin, pr], M[pr, lin], M[pr, pr]


def offblock_ratio(F: FimMatrix) -> float:
    """``||F12||_F / ||F||_F``, zero for an all-zero matrix."""
    _, F12, F21, _ = fim_blocks(F)
    total = np.linalg.norm(F.M)
    if total == 0:
        return 0.0
    return float(np.sqrt(np.linalg.norm(F12) ** 2 + np.linalg.norm(F21) ** 2) / total)


def write_fim_csv(F: FimMatrix, path, iteration: int = 0) -> None:
    """Dense CSV: first line ``encoding,d,iteration`` values, then one row per matrix row."""
    rows = [f"{F.encoding.value},{F.d},{iteration}"]
    rows += [",".join(f"{v:.17g}" for v in row) for row in F.M]
    Path(path).write_text("\n".join(rows) + "\n")


def read_fim_csv(path) -> tuple[FimMatrix, int]:
    lines = Path(path).read_text().splitlines()
    enc, d, iteration = lines[0].split(",")
    M = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return FimMatrix(int(d), Encoding.parse(enc), M), int(iteration)
