"""Bars-and-stripes and Ising-sampled datasets, plus their text file format.

Dataset files start with a header ``kind d count seed`` followed by one
configuration per line as a 0/1 string (variable 0 first). Generating
parameters live in a JSON sidecar ``<file>.meta.json``.
"""

from __future__ import annotations

import enum
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .encoding import Encoding, ModelParams, format_params, n_params, parse_params
from .gibbs import MAX_ENUM_D, EmpiricalDistribution, bits_to_index, enumerate_distribution, sample_exact


class DatasetKind(str, enum.Enum):
    BAS = "BAS"
    ISING_SYNTH = "ISING_SYNTH"

    @classmethod
    def parse(cls, value) -> "DatasetKind":
        if isinstance(value, cls):
            return value
        v = str(value).upper()
        return cls.ISING_SYNTH if v in ("ISING", "ISING_SYNTH") else cls(v)


@dataclass(frozen=True)
class DatasetSpec:
    kind: DatasetKind
    count: int
    seed: int = 0
    n: int | None = None
    d: int | None = None
    jc: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DatasetKind.parse(self.kind))
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.kind is DatasetKind.BAS:
            if self.n is None or self.n < 1 or self.n * self.n > MAX_ENUM_D:
                raise ValueError(f"BAS needs 1 <= n with n*n <= {MAX_ENUM_D}")
        else:
            if self.d is None or not 1 <= self.d <= MAX_ENUM_D:
                raise ValueError(f"synthetic data needs 1 <= d <= {MAX_ENUM_D}")
            if self.jc is None or not self.jc > 0:
                raise ValueError("synthetic data needs jc > 0")

    @property
    def dim(self) -> int:
        return self.n * self.n if self.kind is DatasetKind.BAS else self.d

    @property
    def label(self) -> str:
        if self.kind is DatasetKind.BAS:
            return f"bas{self.n}x{self.n}"
        return f"ising_d{self.d}_jc{self.jc:g}"

    def build(self) -> EmpiricalDistribution:
        if self.kind is DatasetKind.BAS:
            return gen_bas(self.n, self.count, self.seed)
        data, _ = gen_ising_synthetic(self.d, self.jc, self.count, self.seed)
        return data


def bas_patterns(n: int) -> np.ndarray:
    """Sorted configuration indices of all n-by-n bars-and-stripes grids (row-major)."""
    grids = set()
    for mask in range(2**n):
        line = np.array([(mask >> k) & 1 for k in range(n)], dtype=np.int8)
        rows = np.repeat(line[:, None], n, axis=1)  # row r uniform with value line[r]
        grids.add(int(bits_to_index(rows.reshape(1, -1))[0]))
        grids.add(int(bits_to_index(rows.T.reshape(1, -1))[0]))
    return np.array(sorted(grids), dtype=np.int64)


def is_bas(bits: np.ndarray, n: int) -> bool:
    grid = np.asarray(bits).reshape(n, n)
    rows_uniform = np.all(grid == grid[:, :1])
    cols_uniform = np.all(grid == grid[:1, :])
    return bool(rows_uniform or cols_uniform)


def gen_bas(n: int, total: int, seed: int) -> EmpiricalDistribution:
    """``total`` uniform draws with replacement from the bars-and-stripes patterns."""
    if n < 1:
        raise ValueError("n must be >= 1")
    patterns = bas_patterns(n)
    if total < patterns.size:
        raise ValueError(f"total={total} is below the pattern count {patterns.size}")
    rng = np.random.default_rng(seed)
    samples = patterns[rng.integers(0, patterns.size, size=total)]
    meta = {"kind": DatasetKind.BAS.value, "n": n, "d": n * n, "count": total, "seed": seed}
    return EmpiricalDistribution(n * n, samples, meta)


def gaussian_inverse_cdf(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals as ``Phi^-1(u)`` with ``u`` uniform on ``(0, 1)``."""
    u = rng.random(size)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return ndtri(u)


def gen_ising_synthetic(d: int, jc: float, count: int, seed: int) -> tuple[EmpiricalDistribution, ModelParams]:
    """Draw ``J_ij ~ N(0, jc^2/d)`` with ``h = 0`` and sample ``count`` exact configurations at beta = 1."""
    if not 1 <= d <= MAX_ENUM_D:
        raise ValueError(f"d must be in 1..{MAX_ENUM_D}")
    if count < 1:
        raise ValueError("count must be >= 1")
    coupling_ss, sample_ss = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(coupling_ss)
    J = jc / np.sqrt(d) * gaussian_inverse_cdf(rng, n_params(d) - d)
    truth = ModelParams(Encoding.ISING, d, np.concatenate([np.zeros(d), J]))
    dist = enumerate_distribution(truth, 1.0)
    draws = sample_exact(dist, count, int(sample_ss.generate_state(1)[0]))
    samples = bits_to_index(draws.bits())
    meta = {
        "kind": DatasetKind.ISING_SYNTH.value,
        "d": d,
        "jc": jc,
        "count": count,
        "seed": seed,
        "h_assumed_zero": True,
        "true_params": format_params(truth),
    }
    return EmpiricalDistribution(d, samples, meta), truth


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_dataset(data: EmpiricalDistribution, path) -> str:
    """Write the dataset and its sidecar; returns the dataset digest."""
    path = Path(path)
    kind = data.meta.get("kind", "BAS")
    seed = data.meta.get("seed", 0)
    lines = [f"{kind} {data.d} {data.total} {seed}"]
    lines += ["".join(map(str, row)) for row in data.bits()]
    atomic_write(path, "\n".join(lines) + "\n")
    digest = data.digest()
    atomic_write(meta_path(path), json.dumps({**data.meta, "digest": digest}, indent=2, sort_keys=True) + "\n")
    return digest


def read_dataset(path) -> EmpiricalDistribution:
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    kind, d, count, seed = lines[0].split()
    d, count = int(d), int(count)
    rows = lines[1:]
    if len(rows) != count:
        raise ValueError(f"{path}: header declares {count} rows, found {len(rows)}")
    bits = np.array([[int(ch) for ch in row] for row in rows], dtype=np.int64)
    if bits.shape[1] != d or not np.all((bits == 0) | (bits == 1)):
        raise ValueError(f"{path}: rows must be {d} characters of 0/1")
    meta = {"kind": DatasetKind.parse(kind).value, "d": d, "count": count, "seed": int(seed)}
    mp = meta_path(path)
    if mp.exists():
        meta.update(json.loads(mp.read_text()))
    return EmpiricalDistribution(d, bits_to_index(bits), meta)


def true_params(data: EmpiricalDistribution) -> ModelParams | None:
    text = data.meta.get("true_params")
    return parse_params(text) if text else None
