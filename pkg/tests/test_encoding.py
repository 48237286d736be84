"""Tests for configurations, parameter layout, energies and the encoding maps."""

import numpy as np
import pytest

from bmfisher import oracles
from bmfisher.encoding import (
    AffineConstant,
    BinaryConfig,
    Convention,
    Encoding,
    ModelParams,
    convert_config,
    energy,
    flat_to_term,
    format_params,
    ising_energy,
    ising_to_qubo,
    n_params,
    pair_index,
    pair_list,
    parse_params,
    qubo_energy,
    qubo_to_ising,
    read_params,
    term_to_flat,
    write_params,
)


def spin(*v):
    return BinaryConfig(v, Convention.SPIN)


def bit(*v):
    return BinaryConfig(v, Convention.BIT)


class TestBinaryConfig:
    def test_rejects_wrong_alphabet(self):
        with pytest.raises(ValueError):
            BinaryConfig([0, 1], Convention.SPIN)
        with pytest.raises(ValueError):
            BinaryConfig([-1, 1], Convention.BIT)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            BinaryConfig([], Convention.BIT)

    def test_convert_examples(self):
        assert convert_config(bit(0, 1, 0)) == spin(-1, 1, -1)
        assert convert_config(bit(1, 1, 1, 1)) == spin(1, 1, 1, 1)

    def test_convert_is_involution(self):
        for x in oracles.all_configs(4, spin=False):
            c = bit(*x)
            assert convert_config(convert_config(c)) == c


class TestLayout:
    def test_n_params(self):
        assert [n_params(d) for d in (1, 2, 4, 10)] == [1, 3, 10, 55]

    def test_pairs_lexicographic(self):
        assert pair_list(3) == ((0, 1), (0, 2), (1, 2))
        assert pair_index(0, 1, 3) == 3
        assert pair_index(1, 2, 3) == 5
        with pytest.raises(ValueError):
            pair_index(2, 1, 3)

    def test_flat_roundtrip(self):
        d = 6
        for k in range(n_params(d)):
            assert term_to_flat(flat_to_term(k, d), d) == k

    def test_pair_index_rejects_diagonal(self):
        with pytest.raises(ValueError):
            pair_index(1, 1, 3)


class TestModelParams:
    def test_length_checked(self):
        with pytest.raises(ValueError):
            ModelParams(Encoding.ISING, 3, np.zeros(5))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            ModelParams(Encoding.ISING, 1, [np.nan])

    def test_from_ising_and_qubo(self):
        J = np.array([[0, 2.0], [0, 0]])
        p = ModelParams.from_ising([1.0, -1.0], J)
        np.testing.assert_array_equal(p.theta, [1, -1, 2])
        q = ModelParams.from_qubo([[3.0, 5.0], [0.0, 0.0]])
        np.testing.assert_array_equal(q.theta, [3, 0, 5])
        np.testing.assert_array_equal(q.coupling_matrix(), [[0, 5], [0, 0]])


class TestEnergies:
    def test_zero_parameters(self):
        zi, zq = ModelParams.zeros("ISING", 3), ModelParams.zeros("QUBO", 3)
        for x in oracles.all_configs(3, spin=False):
            assert qubo_energy(bit(*x), zq) == 0.0
            assert ising_energy(convert_config(bit(*x)), zi) == 0.0

    def test_hand_sums(self):
        p = ModelParams.from_ising([1.0, -1.0], [[0, 2.0], [0, 0]])
        assert ising_energy(spin(1, 1), p) == 2.0
        q = ModelParams.from_qubo([[3.0, 5.0], [0.0, 0.0]])
        assert qubo_energy(bit(1, 1), q) == 8.0

    @pytest.mark.parametrize("enc", ["ISING", "QUBO"])
    def test_matches_brute_force(self, enc):
        rng = np.random.default_rng(3)
        p = ModelParams(enc, 3, rng.normal(size=6))
        is_spin = enc == "ISING"
        for z in oracles.all_configs(3, is_spin):
            conf = BinaryConfig(z, Convention.SPIN if is_spin else Convention.BIT)
            expected = oracles.brute_energy(z, p.linear, p.coupling_matrix())
            assert energy(conf, p) == pytest.approx(expected, abs=1e-13)

    def test_convention_mismatch(self):
        with pytest.raises(ValueError):
            ising_energy(bit(0, 1), ModelParams.zeros("ISING", 2))
        with pytest.raises(ValueError):
            qubo_energy(bit(0, 1, 1), ModelParams.zeros("QUBO", 2))


class TestEncodingMaps:
    def test_zero_maps_to_zero(self):
        ising, c = qubo_to_ising(ModelParams.zeros("QUBO", 4))
        assert not np.any(ising.theta) and c.c == 0.0
        qubo, c = ising_to_qubo(ModelParams.zeros("ISING", 4))
        assert not np.any(qubo.theta) and c.c == 0.0

    def test_single_variable(self):
        ising, c = qubo_to_ising(ModelParams.from_qubo([[4.0]]))
        assert ising.theta[0] == 2.0 and c.c == 2.0
        assert qubo_energy(bit(1), ModelParams.from_qubo([[4.0]])) == ising_energy(spin(1), ising) + c.c

    @pytest.mark.parametrize("d", [5, 6])
    def test_exhaustive_energy_identity(self, d):
        rng = np.random.default_rng(d)
        q = ModelParams("QUBO", d, rng.normal(size=n_params(d)))
        i, c = qubo_to_ising(q)
        for x in oracles.all_configs(d, spin=False):
            s = [2 * v - 1 for v in x]
            eq = oracles.brute_energy(x, q.linear, q.coupling_matrix())
            ei = oracles.brute_energy(s, i.linear, i.coupling_matrix())
            assert abs(eq - ei - c.c) <= 1e-12

    def test_inverse_energy_identity(self):
        rng = np.random.default_rng(11)
        i = ModelParams("ISING", 5, rng.normal(size=15))
        q, c = ising_to_qubo(i)
        for x in oracles.all_configs(5, spin=False):
            s = [2 * v - 1 for v in x]
            ei = oracles.brute_energy(s, i.linear, i.coupling_matrix())
            eq = oracles.brute_energy(x, q.linear, q.coupling_matrix())
            assert abs(ei - eq - c.c) <= 1e-12

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        i = ModelParams("ISING", 6, rng.normal(size=21))
        back, _ = qubo_to_ising(ising_to_qubo(i)[0])
        np.testing.assert_allclose(back.theta, i.theta, atol=1e-14, rtol=0)

    def test_wrong_direction(self):
        with pytest.raises(ValueError):
            qubo_to_ising(ModelParams.zeros("ISING", 2))
        with pytest.raises(ValueError):
            ising_to_qubo(ModelParams.zeros("QUBO", 2))

    def test_constant_must_be_finite(self):
        with pytest.raises(ValueError):
            AffineConstant(float("inf"))


class TestParamsFile:
    @pytest.mark.parametrize("enc", ["ISING", "QUBO"])
    def test_round_trip_exact(self, enc, tmp_path):
        rng = np.random.default_rng(2)
        p = ModelParams(enc, 5, rng.normal(size=15))
        write_params(p, tmp_path / "p.txt")
        back = read_params(tmp_path / "p.txt")
        assert back.encoding is p.encoding
        np.testing.assert_array_equal(back.theta, p.theta)

    def test_missing_entries_default_to_zero(self):
        p = parse_params("# comment\nencoding ISING\nd 3\n\nh 1 0.5\nJ 0 2 -1\n")
        np.testing.assert_array_equal(p.theta, [0, 0.5, 0, 0, -1, 0])

    def test_format_header(self):
        text = format_params(ModelParams.zeros("QUBO", 2))
        assert text.splitlines()[:2] == ["encoding QUBO", "d 2"]

    @pytest.mark.parametrize(
        "text",
        [
            "d 2\nh 0 1\n",
            "encoding ISING\nh 0 1\n",
            "encoding ISING\nd 2\nQ 0 0 1\n",
            "encoding ISING\nd 2\nh 5 1\n",
            "encoding ISING\nd 2\nJ 1 1 1\n",
            "encoding ISING\nd 2\nh 0 abc\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            parse_params(text)
