"""Tests for dataset generators and the dataset file format."""

import itertools
import json

import numpy as np
import pytest

from bmfisher.data import (
    DatasetKind,
    DatasetSpec,
    bas_patterns,
    gaussian_inverse_cdf,
    gen_bas,
    gen_ising_synthetic,
    is_bas,
    meta_path,
    read_dataset,
    true_params,
    write_dataset,
)
from bmfisher.gibbs import bits_to_index
from bmfisher.harness.checks import SYNTH


def brute_bas(n):
    """Index set of BAS grids found by scanning every n x n grid."""
    out = set()
    for cells in itertools.product((0, 1), repeat=n * n):
        g = np.array(cells).reshape(n, n)
        rows_uniform = all(len(set(r)) == 1 for r in g)
        cols_uniform = all(len(set(c)) == 1 for c in g.T)
        if rows_uniform or cols_uniform:
            out.add(int(bits_to_index(np.array(cells)[None, :])[0]))
    return out


class TestBas:
    @pytest.mark.parametrize("n,count", [(1, 2), (2, 6), (3, 14)])
    def test_pattern_counts(self, n, count):
        pats = bas_patterns(n)
        assert pats.size == count
        assert set(pats.tolist()) == brute_bas(n)

    def test_is_bas(self):
        assert is_bas(np.array([1, 1, 0, 0]), 2)
        assert not is_bas(np.array([1, 0, 0, 0]), 2)

    def test_bas2_dataset(self):
        data = gen_bas(2, 450, 7)
        assert data.total == 450 and data.d == 4
        assert set(data.counts) <= set(bas_patterns(2).tolist())
        assert len(data.counts) == 6

    def test_bas3_dataset(self):
        data = gen_bas(3, 1120, 0)
        assert data.total == 1120 and set(data.counts) <= set(bas_patterns(3).tolist())

    def test_seeded(self):
        assert gen_bas(2, 100, 3).digest() == gen_bas(2, 100, 3).digest()
        assert gen_bas(2, 100, 3).digest() != gen_bas(2, 100, 4).digest()

    def test_total_too_small(self):
        with pytest.raises(ValueError):
            gen_bas(3, 10, 0)


class TestSynthetic:
    def test_deterministic_digest(self):
        data, truth = gen_ising_synthetic(10, 1.0, 2000, 1)
        assert data.digest() == "55cd9ce1458f38a1d14cbf1684e62d7d6fa8e727182b62147134929e55ecda73"
        assert not np.any(truth.linear)
        assert data.meta["h_assumed_zero"] is True

    def test_coupling_scale(self):
        _, truth = gen_ising_synthetic(12, 1.5, 1, 0)
        J = truth.pairs
        assert abs(np.std(J) - 1.5 / np.sqrt(12)) < 0.2 * 1.5 / np.sqrt(12)

    def test_weak_coupling_limit(self):
        n = 5000
        data, _ = gen_ising_synthetic(6, 1e-6, n, 2)
        s = 2 * data.bits() - 1
        assert np.all(np.abs(s.mean(axis=0)) <= 5 / np.sqrt(n))

    def test_inverse_cdf_normals(self):
        z = gaussian_inverse_cdf(np.random.default_rng(0), 200_000)
        assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01

    def test_true_params_round_trip(self):
        data, truth = gen_ising_synthetic(5, 1.0, 10, 0)
        np.testing.assert_array_equal(true_params(data).theta, truth.theta)


class TestSpec:
    def test_labels(self):
        assert DatasetSpec("bas", 450, n=2).label == "bas2x2"
        assert DatasetSpec(seed=0, jc=1.0, **SYNTH).label == "ising_d10_jc1"
        assert DatasetSpec("ising", 5, d=3, jc=0.5).dim == 3

    def test_kind_parse(self):
        assert DatasetKind.parse("ising") is DatasetKind.ISING_SYNTH
        assert DatasetKind.parse(DatasetKind.BAS) is DatasetKind.BAS

    @pytest.mark.parametrize(
        "kw", [dict(kind="bas", count=10), dict(kind="ising", count=10, d=3), dict(kind="bas", count=0, n=2),
               dict(kind="ising", count=5, d=30, jc=1.0)]
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            DatasetSpec(**kw)


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        data = gen_bas(2, 450, 7)
        path = tmp_path / "bas.txt"
        digest = write_dataset(data, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "BAS 4 450 7" and len(lines) == 451
        back = read_dataset(path)
        assert back.digest() == digest == data.digest()
        assert digest == "445c3b11d03b4d449295acdbbad152a6bc2501377613048630669fbceacedfb7"
        assert json.loads(meta_path(path).read_text())["digest"] == digest

    def test_without_sidecar(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("BAS 2 2 0\n01\n11\n")
        data = read_dataset(path)
        np.testing.assert_array_equal(data.samples, [2, 3])

    @pytest.mark.parametrize(
        "text", ["", "BAS 2 3 0\n01\n11\n", "BAS 2 1 0\n012\n", "BAS 2 1 0\n02\n"]
    )
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(ValueError):
            read_dataset(path)
