"""Ising and QUBO energies, the shared parameter layout, and exact conversion.

Both encodings use the same flat layout of length ``d + d(d-1)/2``: the first
``d`` entries are the linear coefficients (``h_i`` or ``Q_ii``), followed by
the pair coefficients (``J_ij`` or ``Q_ij``) for ``i < j`` in lexicographic
order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np


class Convention(str, enum.Enum):
    SPIN = "SPIN"
    BIT = "BIT"


class Encoding(str, enum.Enum):
    ISING = "ISING"
    QUBO = "QUBO"

    @property
    def convention(self) -> Convention:
        return Convention.SPIN if self is Encoding.ISING else Convention.BIT

    @classmethod
    def parse(cls, value) -> "Encoding":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


def n_params(d: int) -> int:
    return d + d * (d - 1) // 2


@lru_cache(maxsize=None)
def pair_list(d: int) -> tuple[tuple[int, int], ...]:
    """Lexicographic list of pairs ``(i, j)`` with ``i < j``."""
    return tuple((i, j) for i in range(d) for j in range(i + 1, d))


def pair_index(i: int, j: int, d: int) -> int:
    """Flat index of the pair coefficient ``(i, j)``, ``i < j``."""
    if not 0 <= i < j < d:
        raise ValueError(f"need 0 <= i < j < d, got ({i}, {j}) with d={d}")
    # pairs before row i: sum_{r<i} (d - 1 - r)
    return d + i * (2 * d - i - 1) // 2 + (j - i - 1)


def flat_to_term(k: int, d: int) -> tuple[int, ...]:
    """Inverse of the flat layout: ``(i,)`` for linear, ``(i, j)`` for pairs."""
    if not 0 <= k < n_params(d):
        raise ValueError(f"flat index {k} out of range for d={d}")
    if k < d:
        return (k,)
    return pair_list(d)[k - d]


def term_to_flat(term: tuple[int, ...], d: int) -> int:
    if len(term) == 1:
        (i,) = term
        if not 0 <= i < d:
            raise ValueError(f"index {i} out of range for d={d}")
        return i
    i, j = term
    return pair_index(i, j, d)


@dataclass(frozen=True)
class BinaryConfig:
    values: np.ndarray
    convention: Convention

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int8).reshape(-1)
        conv = Convention(self.convention)
        if values.size < 1:
            raise ValueError("configuration needs d >= 1")
        allowed = (-1, 1) if conv is Convention.SPIN else (0, 1)
        if not np.all(np.isin(values, allowed)):
            raise ValueError(f"entries must lie in {allowed} for {conv.value} convention")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "convention", conv)

    @property
    def d(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, BinaryConfig):
            return NotImplemented
        return self.convention is other.convention and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.convention, self.values.tobytes()))


def convert_config(config: BinaryConfig) -> BinaryConfig:
    """Switch between spin and bit conventions via ``s = 2x - 1``."""
    if config.convention is Convention.BIT:
        return BinaryConfig(2 * config.values.astype(np.int8) - 1, Convention.SPIN)
    return BinaryConfig((config.values.astype(np.int8) + 1) // 2, Convention.BIT)


@dataclass(frozen=True)
class ModelParams:
    encoding: Encoding
    d: int
    theta: np.ndarray

    def __post_init__(self):
        enc = Encoding.parse(self.encoding)
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if theta.size != n_params(self.d):
            raise ValueError(f"theta has length {theta.size}, expected {n_params(self.d)} for d={self.d}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("parameters must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "encoding", enc)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zeros(cls, encoding, d: int) -> "ModelParams":
        return cls(encoding, d, np.zeros(n_params(d)))

    @classmethod
    def from_ising(cls, h, J) -> "ModelParams":
        """Build from a field vector and a coupling matrix (upper triangle is read)."""
        h = np.asarray(h, dtype=float)
        J = np.asarray(J, dtype=float)
        d = h.size
        iu = np.triu_indices(d, 1)
        return cls(Encoding.ISING, d, np.concatenate([h, J[iu]]))

    @classmethod
    def from_qubo(cls, Q) -> "ModelParams":
        """Build from a QUBO matrix; only the upper triangle (incl. diagonal) is read."""
        Q = np.asarray(Q, dtype=float)
        d = Q.shape[0]
        iu = np.triu_indices(d, 1)
        return cls(Encoding.QUBO, d, np.concatenate([np.diag(Q), Q[iu]]))

    @property
    def linear(self) -> np.ndarray:
        return self.theta[: self.d]

    @property
    def pairs(self) -> np.ndarray:
        return self.theta[self.d :]

    def coupling_matrix(self) -> np.ndarray:
        """Strict upper-triangular matrix of pair coefficients."""
        W = np.zeros((self.d, self.d))
        W[np.triu_indices(self.d, 1)] = self.pairs
        return W


@dataclass(frozen=True)
class AffineConstant:
    c: float

    def __post_init__(self):
        if not np.isfinite(self.c):
            raise ValueError("constant must be finite")


def _check_pair(config: BinaryConfig, params: ModelParams, encoding: Encoding):
    if params.encoding is not encoding:
        raise ValueError(f"expected {encoding.value} parameters, got {params.encoding.value}")
    if config.convention is not encoding.convention:
        raise ValueError(
            f"{encoding.value} energy needs a {encoding.convention.value} configuration, "
            f"got {config.convention.value}"
        )
    if config.d != params.d:
        raise ValueError(f"dimension mismatch: config d={config.d}, params d={params.d}")


def _quadratic_energy(z: np.ndarray, params: ModelParams) -> float:
    z = z.astype(np.float64)
    iu, ju = np.triu_indices(params.d, 1)
    return float(params.linear @ z + params.pairs @ (z[iu] * z[ju]))


def ising_energy(config: BinaryConfig, params: ModelParams) -> float:
    """``sum_i h_i s_i + sum_{i<j} J_ij s_i s_j``."""
    _check_pair(config, params, Encoding.ISING)
    return _quadratic_energy(config.values, params)


def qubo_energy(config: BinaryConfig, params: ModelParams) -> float:
    """``sum_{i<=j} Q_ij x_i x_j`` with ``x_i^2 = x_i`` on the diagonal."""
    _check_pair(config, params, Encoding.QUBO)
    return _quadratic_energy(config.values, params)


def energy(config: BinaryConfig, params: ModelParams) -> float:
    if params.encoding is Encoding.ISING:
        return ising_energy(config, params)
    return qubo_energy(config, params)


def qubo_to_ising(params: ModelParams) -> tuple[ModelParams, AffineConstant]:
    """Map QUBO coefficients to Ising ones so that ``E_qubo(x) = E_ising(2x-1) + c``."""
    if params.encoding is not Encoding.QUBO:
        raise ValueError("qubo_to_ising needs QUBO parameters")
    d = params.d
    W = params.coupling_matrix()
    Wsym = W + W.T
    diag = params.linear
    h = diag / 2.0 + Wsym.sum(axis=1) / 4.0
    J = params.pairs / 4.0
    c = diag.sum() / 2.0 + params.pairs.sum() / 4.0
    return ModelParams(Encoding.ISING, d, np.concatenate([h, J])), AffineConstant(float(c))


def ising_to_qubo(params: ModelParams) -> tuple[ModelParams, AffineConstant]:
    """Inverse map; ``E_ising(s) = E_qubo((s+1)/2) + c``."""
    if params.encoding is not Encoding.ISING:
        raise ValueError("ising_to_qubo needs Ising parameters")
    d = params.d
    W = params.coupling_matrix()
    Wsym = W + W.T
    h = params.linear
    Q_diag = 2.0 * (h - Wsym.sum(axis=1))
    Q_pairs = 4.0 * params.pairs
    c = -h.sum() + params.pairs.sum()
    return ModelParams(Encoding.QUBO, d, np.concatenate([Q_diag, Q_pairs])), AffineConstant(float(c))


# --- parameter file -------------------------------------------------------

def format_params(params: ModelParams) -> str:
    lines = [f"encoding {params.encoding.value}", f"d {params.d}"]
    for k, value in enumerate(params.theta):
        term = flat_to_term(k, params.d)
        if params.encoding is Encoding.ISING:
            if len(term) == 1:
                lines.append(f"h {term[0]} {value:.17g}")
            else:
                lines.append(f"J {term[0]} {term[1]} {value:.17g}")
        else:
            i, j = (term[0], term[0]) if len(term) == 1 else term
            lines.append(f"Q {i} {j} {value:.17g}")
    return "\n".join(lines) + "\n"


def parse_params(text: str) -> ModelParams:
    """Parse the key/value parameter format written by :func:`format_params`.

    Coefficients that are not listed default to zero. Blank lines and lines
    starting with ``#`` are ignored.
    """
    encoding = d = None
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *rest = line.split()
        if key == "encoding":
            encoding = Encoding.parse(rest[0])
        elif key == "d":
            d = int(rest[0])
        elif key in ("h", "J", "Q"):
            entries.append((lineno, key, rest))
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if encoding is None or d is None:
        raise ValueError("parameter file needs 'encoding' and 'd' lines")
    theta = np.zeros(n_params(d))
    for lineno, key, rest in entries:
        if (key == "Q") != (encoding is Encoding.QUBO):
            raise ValueError(f"line {lineno}: key {key!r} not valid for {encoding.value}")
        if key == "h":
            term = (int(rest[0]),)
        else:
            i, j = int(rest[0]), int(rest[1])
            if key == "Q" and i > j:
                raise ValueError(f"line {lineno}: QUBO storage is upper-triangular, got Q {i} {j}")
            term = (i,) if i == j and key == "Q" else (i, j)
        theta[term_to_flat(term, d)] = float(rest[-1])
    return ModelParams(encoding, d, theta)


def write_params(params: ModelParams, path) -> None:
    Path(path).write_text(format_params(params))


def read_params(path) -> ModelParams:
    return parse_params(Path(path).read_text())
