from math import comb

import numpy as np
import pytest

from app import codes, fidelity_engine
from app.bipoly import BiPoly
from app.errors import ChannelError, ParameterRangeError
from app.fidelity_engine import (
    fidelity_polynomial, make_plan, oracle_fidelity, unencoded_baseline, weight_histogram,
)

p, q = BiPoly.p(), BiPoly.q()


def q_coeffs(poly, k, upto):
    c_k = poly.coefficient_in_p(k)
    return [c_k.coeff(0, j) for j in range(upto + 1)]


def at_pure_ancillas(poly):
    return BiPoly({(i, j): c for (i, j), c in poly.terms.items() if j == 0})


class TestEnumeration:

    def test_rep_codes_take_the_permutation_path(self, rep3):
        assert make_plan(rep3).fast
        assert not make_plan(rep3, fast_path=False).fast

    def test_depolarizing_codes_take_the_generic_path(self, perfect5):
        plan = make_plan(perfect5)
        assert not plan.fast
        assert plan.n_patterns == 16 * 4 ** 5

    @pytest.mark.parametrize('label', ['rep3', 'rep3+aug', 'rep5'])
    def test_permutation_path_matches_generic_path(self, label):
        code = codes.build_code(label)
        fast = fidelity_polynomial(code)
        generic = fidelity_polynomial(code, fast_path=False)
        assert fast.allclose(generic, atol=1e-12)

    def test_histogram_independent_of_workers(self):
        code = codes.build_code('rep5')
        serial = weight_histogram(code, workers=1, chunk_size=64)
        parallel = weight_histogram(code, workers=2, chunk_size=64)
        np.testing.assert_array_equal(serial, parallel)

    def test_histogram_independent_of_chunk_size(self, perfect5):
        np.testing.assert_allclose(weight_histogram(perfect5, chunk_size=1000),
                                   weight_histogram(perfect5), atol=1e-12)

    def test_cell_bounds(self, perfect5):
        histogram = weight_histogram(perfect5)
        for j in range(5):
            for k in range(6):
                cell = comb(4, j) * comb(5, k) * 3 ** k
                assert -1e-12 <= histogram[j, k] <= cell + 1e-9

    def test_trivial_main_error_is_identity_when_augmented(self):
        for label in ('rep5+aug', 'perfect5+aug', 'concat3-full'):
            code = codes.build_code(label)
            histogram = weight_histogram(code, main_errors=0)
            expected = [comb(code.n_ancillas, j) for j in range(code.n_ancillas + 1)]
            np.testing.assert_allclose(histogram[:, 0], expected, atol=1e-12)

    def test_unsupported_family(self, rep3):
        broken = rep3.model_copy(update={'channel_family': 'amplitude-damping'})
        with pytest.raises(ChannelError):
            fidelity_polynomial(broken)


class TestRepetitionTables:

    def test_rep3_unaugmented(self, poly_of):
        poly = poly_of('rep3')
        np.testing.assert_allclose(q_coeffs(poly, 0, 2), [1.0, 0.0, -0.25], atol=1e-9)
        np.testing.assert_allclose(q_coeffs(poly, 1, 2), [0.0, -2.0, 1.5], atol=1e-9)

    def test_rep3_augmented(self, poly_of):
        poly = poly_of('rep3+aug')
        assert poly.coefficient_in_p(0).allclose(BiPoly.constant(1.0))
        np.testing.assert_allclose(q_coeffs(poly, 1, 2), [0.0, -2.0, 0.5], atol=1e-9)

    def test_rep3_with_pure_ancillas(self, poly_of):
        expected = 1 - 3 * p ** 2 + 2 * p ** 3
        assert at_pure_ancillas(poly_of('rep3')).allclose(expected)
        assert at_pure_ancillas(poly_of('rep3+aug')).allclose(expected)

    def test_rep5_constant_term(self, poly_of):
        expected = 1 - 0.5 * q ** 3 + 0.1875 * q ** 4
        assert poly_of('rep5').coefficient_in_p(0).allclose(expected)

    @pytest.mark.parametrize('label, t, leading', [
        ('rep5', 2, -4.5), ('rep7', 3, -10.0), ('rep9', 4, -21.875),
    ])
    def test_leading_linear_term(self, poly_of, label, t, leading):
        coeffs = q_coeffs(poly_of(label), 1, t)
        np.testing.assert_allclose(coeffs, [0.0] * t + [leading], atol=1e-9)

    @pytest.mark.parametrize('label, k, j, value', [
        ('rep7', 0, 4, -15 / 16), ('rep9', 0, 5, -7 / 4), ('rep5', 1, 3, 6.0),
        ('rep5+aug', 1, 2, -9 / 2), ('rep5+aug', 1, 3, 3.0), ('rep9+aug', 1, 4, -175 / 8),
    ])
    def test_table_monomials(self, poly_of, label, k, j, value):
        assert poly_of(label).coefficient_in_p(k).coeff(0, j) == pytest.approx(value, abs=1e-9)

    def test_rep7_augmented_linear_term(self, poly_of):
        c_1 = poly_of('rep7+aug').coefficient_in_p(1)
        expected = -10 * q ** 3 + 45 / 4 * q ** 4 - 15 / 4 * q ** 5 + 5 / 16 * q ** 6
        assert c_1.allclose(expected, atol=1e-9)

    @pytest.mark.parametrize('label', ['rep5+aug', 'rep7+aug', 'rep9+aug'])
    def test_augmented_constant_term_is_one(self, poly_of, label):
        assert poly_of(label).coefficient_in_p(0).allclose(BiPoly.constant(1.0))

    @pytest.mark.parametrize('label', ['rep3', 'rep5', 'rep7', 'rep9'])
    def test_degree_bounds(self, poly_of, label):
        code = codes.build_code(label)
        poly = poly_of(label)
        assert poly.degree_p() <= code.n_qubits
        assert poly.degree_q() <= code.n_ancillas


class TestPerfectCodeTable:

    def test_unaugmented(self, poly_of):
        poly = poly_of('perfect5')
        assert poly.coefficient_in_p(0).allclose(1 - 1.5 * q ** 2 + q ** 3 - 0.1875 * q ** 4)
        np.testing.assert_allclose(q_coeffs(poly, 1, 3), [0.0, -6.0, 10.5, -5.5], atol=1e-9)

    def test_augmented(self, poly_of):
        poly = poly_of('perfect5+aug')
        assert poly.coefficient_in_p(0).allclose(BiPoly.constant(1.0))
        np.testing.assert_allclose(q_coeffs(poly, 1, 3), [0.0, -6.0, 4.5, -1.5], atol=1e-9)

    def test_pure_ancillas_collapse(self, poly_of):
        assert at_pure_ancillas(poly_of('perfect5')).allclose(at_pure_ancillas(poly_of('perfect5+aug')))


class TestConcatenatedTable:

    def test_unaugmented(self, poly_of):
        poly = poly_of('concat3-unaug')
        # q^3 of c_0 comes out negative; c_1 below only balances with this sign
        np.testing.assert_allclose(q_coeffs(poly, 0, 3), [1.0, 0.0, -0.25, -0.5], atol=1e-9)
        np.testing.assert_allclose(q_coeffs(poly, 1, 3), [0.0, 0.0, -4.0, 3.0], atol=1e-9)

    def test_top_level(self, poly_of):
        poly = poly_of('concat3-top')
        np.testing.assert_allclose(q_coeffs(poly, 0, 3), [1.0, 0.0, 0.0, -0.5], atol=1e-9)
        np.testing.assert_allclose(q_coeffs(poly, 1, 3), [0.0, 0.0, -4.0, 1.0], atol=1e-9)

    def test_fully_augmented(self, poly_of):
        poly = poly_of('concat3-full')
        assert poly.coefficient_in_p(0).allclose(BiPoly.constant(1.0))
        np.testing.assert_allclose(q_coeffs(poly, 1, 3), [0.0, 0.0, -4.0, 2.0], atol=1e-9)

    def test_pure_ancillas_compose_rep3(self, poly_of):
        block = 3 * p ** 2 - 2 * p ** 3
        expected = 1 - 3 * block ** 2 + 2 * block ** 3
        for label in ('concat3-unaug', 'concat3-top', 'concat3-full'):
            assert at_pure_ancillas(poly_of(label)).allclose(expected, atol=1e-10)


class TestOracle:

    @pytest.mark.parametrize('label', ['rep3', 'perfect5'])
    def test_noiseless(self, label):
        assert oracle_fidelity(codes.build_code(label), 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_rep3_constant_term(self, rep3):
        for value in (0.2, 0.7, 1.0):
            assert oracle_fidelity(rep3, 0.0, value) == pytest.approx(1 - value ** 2 / 4, abs=1e-12)

    @pytest.mark.parametrize('label', ['rep3', 'rep3+aug', 'rep5+aug', 'rep7+aug', 'perfect5', 'perfect5+aug'])
    def test_matches_polynomial(self, poly_of, label):
        code = codes.build_code(label)
        poly = poly_of(label)
        rng = np.random.default_rng(11)
        for p_value, q_value in rng.uniform(0, 1, size=(6, 2)):
            assert poly.eval(p_value, q_value) == pytest.approx(oracle_fidelity(code, p_value, q_value), abs=1e-10)

    @pytest.mark.parametrize('label', ['concat3-top', 'rep9+aug'])
    def test_matches_polynomial_on_nine_qubits(self, poly_of, label):
        code = codes.build_code(label)
        poly = poly_of(label)
        for p_value, q_value in [(0.13, 0.61), (0.4, 0.2)]:
            assert poly.eval(p_value, q_value) == pytest.approx(oracle_fidelity(code, p_value, q_value), abs=1e-10)

    def test_other_channel_family(self, rep3):
        code = codes.with_channel(rep3, 'depolarizing')
        poly = fidelity_polynomial(code)
        assert poly.eval(0.3, 0.4) == pytest.approx(oracle_fidelity(code, 0.3, 0.4), abs=1e-10)

    def test_rejects_out_of_range(self, rep3):
        with pytest.raises(ParameterRangeError):
            oracle_fidelity(rep3, 1.2, 0.0)


class TestProperties:

    @pytest.mark.parametrize('plain, augmented', [
        ('rep3', 'rep3+aug'), ('perfect5', 'perfect5+aug'), ('concat3-unaug', 'concat3-top'),
    ])
    def test_augmentation_dominates(self, poly_of, plain, augmented):
        grid = np.linspace(0, 1, 21)
        for p_value in np.linspace(0, 0.2, 21):
            gap = poly_of(augmented).eval(p_value, grid) - poly_of(plain).eval(p_value, grid)
            assert np.min(gap) >= -1e-12

    @pytest.mark.parametrize('label', ['rep3', 'rep3+aug', 'perfect5', 'perfect5+aug'])
    def test_maximally_mixed_ancillas_are_not_useful(self, poly_of, label):
        family = codes.build_code(label).channel_family
        for p_value in np.linspace(0.01, 0.3, 30):
            assert poly_of(label).eval(p_value, 1.0) <= unencoded_baseline(family, p_value) + 1e-12

    def test_values_stay_in_unit_interval(self, poly_of):
        grid = np.linspace(0, 1, 21)
        for label in ('rep3', 'perfect5+aug', 'concat3-full'):
            for p_value in grid:
                values = poly_of(label).eval(p_value, grid)
                assert np.all(values >= -1e-10) and np.all(values <= 1 + 1e-10)

    def test_baselines(self):
        assert unencoded_baseline('bitflip', 0.1) == pytest.approx(0.9)
        assert unencoded_baseline('depolarizing', 0.1) == pytest.approx(0.925)
        assert unencoded_baseline('bitflip', 0.0) == 1.0
        with pytest.raises(ChannelError):
            unencoded_baseline('amplitude-damping', 0.1)

    def test_main_error_polynomials_sum_to_one(self):
        for family, paulis in fidelity_engine.PAULI_COUNT.items():
            total = sum((fidelity_engine.main_error_polynomial(family, k, 3) * (comb(3, k) * (paulis - 1) ** k)
                         for k in range(4)), BiPoly())
            assert total.allclose(BiPoly.constant(1.0))
