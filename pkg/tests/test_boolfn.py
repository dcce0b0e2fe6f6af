import itertools
import math

import numpy as np
import pytest

from csplab.boolfn import MultilinearPoly, all_boolean_tables, fourier_transform


def brute_coeffs(table):
    """Independent O(4^k) transform: c(K) = mean of f(z) * prod_{j in K} x_j(z)."""
    size = len(table)
    k = size.bit_length() - 1
    out = np.zeros(size)
    for mask in range(size):
        acc = 0.0
        for idx in range(size):
            sign = (-1) ** bin(idx & mask).count("1")
            acc += table[idx] * sign
        out[mask] = acc / size
    return out


def spin_input(idx, k):
    return tuple(1.0 if not (idx >> j) & 1 else -1.0 for j in range(k))


XOR2 = MultilinearPoly.from_dict(2, {0: 0.5, 0b11: 0.5})
# OR clause over three inputs, violated exactly at index 0 (all coordinates +1).
SAT3_TABLE = [0.0, 1, 1, 1, 1, 1, 1, 1]


class TestFourierTransform:
    def test_xor_clause_table(self):
        poly = fourier_transform([1, 0, 0, 1])
        assert poly == XOR2

    def test_constant_table(self):
        poly = fourier_transform([1, 1, 1, 1])
        assert poly.coeff(0) == 1.0
        assert np.all(poly.coeffs[1:] == 0.0)

    def test_sat_clause_table(self):
        poly = fourier_transform(SAT3_TABLE)
        assert poly.coeff(0) == pytest.approx(7 / 8, abs=1e-15)
        assert np.allclose(poly.coeffs[1:], -1 / 8)

    @pytest.mark.parametrize("bad", [[], [1, 2, 3], list(range(5))])
    def test_rejects_non_power_of_two(self, bad):
        with pytest.raises(ValueError):
            fourier_transform(bad)

    def test_matches_brute_force_transform(self):
        rng = np.random.default_rng(11)
        for k in range(4):
            table = rng.normal(size=1 << k)
            assert np.allclose(fourier_transform(table).coeffs, brute_coeffs(table), atol=1e-12)

    def test_roundtrip_exhaustive_boolean_k_le_3(self):
        for k in range(4):
            for table in all_boolean_tables(k):
                poly = fourier_transform(table)
                assert np.max(np.abs(poly.truth_table() - table)) < 1e-12
                # {0,1}-valued tables force coefficients onto the 2^-k grid
                assert np.allclose(poly.coeffs * (1 << k), np.round(poly.coeffs * (1 << k)), atol=1e-9)

    def test_roundtrip_random_real_k_le_6(self):
        rng = np.random.default_rng(5)
        for k in range(7):
            for _ in range(20):
                table = rng.normal(size=1 << k)
                assert np.max(np.abs(fourier_transform(table).truth_table() - table)) < 1e-12

    def test_parseval(self):
        rng = np.random.default_rng(17)
        for k in range(1, 7):
            table = rng.normal(size=1 << k)
            poly = fourier_transform(table)
            assert np.sum(poly.coeffs**2) == pytest.approx(np.mean(table**2), abs=1e-12)


class TestEvaluate:
    def test_xor_satisfied(self):
        assert XOR2.evaluate((1, 1)) == pytest.approx(1.0)

    def test_xor_violated(self):
        assert XOR2.evaluate((1, -1)) == pytest.approx(0.0)

    def test_sat_clause_lookup_equivalence(self):
        poly = fourier_transform(SAT3_TABLE)
        for idx, want in enumerate(SAT3_TABLE):
            assert poly.evaluate(spin_input(idx, 3)) == pytest.approx(want, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            XOR2.evaluate((1, 1, 1))


class TestDerivative:
    def test_cross_term(self):
        d = XOR2.derivative(1)
        assert d == MultilinearPoly.from_dict(2, {0b01: 0.5})

    def test_constant_derivative_is_zero(self):
        const = MultilinearPoly.from_dict(2, {0: 1.0})
        assert const.derivative(0) == MultilinearPoly.zero(2)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            XOR2.derivative(2)

    def test_sat_clause_derivative_variance(self):
        poly = fourier_transform(SAT3_TABLE)
        assert poly.derivative(0).variance() >= 2 ** (-5) - 1e-12

    def test_identity_f_equals_xj_dj_plus_rest(self):
        rng = np.random.default_rng(23)
        for k in (2, 3, 4):
            poly = fourier_transform(rng.normal(size=1 << k))
            for j in range(k):
                d = poly.derivative(j)
                assert not d.depends_on(j)
                for idx in range(1 << k):
                    x = spin_input(idx, k)
                    rest = poly.evaluate(x) - x[j] * d.evaluate(x)
                    x_flip = tuple(-v if i == j else v for i, v in enumerate(x))
                    rest_flip = poly.evaluate(x_flip) - x_flip[j] * d.evaluate(x_flip)
                    assert rest == pytest.approx(rest_flip, abs=1e-12)


class TestDecompose:
    def test_xor_at_second_coordinate(self):
        q, r, c = XOR2.decompose_at(1)
        assert q == MultilinearPoly.from_dict(2, {0b01: 0.5})
        assert r == MultilinearPoly.zero(2)
        assert c == 0.5

    def test_independent_coordinate(self):
        poly = MultilinearPoly.from_dict(2, {0: 0.25, 0b01: 0.5})
        q, r, c = poly.decompose_at(1)
        assert q == MultilinearPoly.zero(2)
        assert r == MultilinearPoly.from_dict(2, {0b01: 0.5})
        assert c == 0.25

    def test_recomposition_exhaustive(self):
        rng = np.random.default_rng(3)
        polys = [fourier_transform(SAT3_TABLE)]
        polys += [fourier_transform(rng.normal(size=8)) for _ in range(5)]
        for poly in polys:
            for j in range(poly.arity):
                q, r, c = poly.decompose_at(j)
                assert r.mean() == 0.0
                for idx in range(1 << poly.arity):
                    x = spin_input(idx, poly.arity)
                    got = x[j] * q.evaluate(x) + r.evaluate(x) + c
                    assert got == pytest.approx(poly.evaluate(x), abs=1e-12)


class TestStatistics:
    def test_xor_mean_variance(self):
        assert XOR2.mean() == 0.5
        assert XOR2.variance() == 0.25

    def test_sat_clause_mean(self):
        assert fourier_transform(SAT3_TABLE).mean() == pytest.approx(7 / 8)

    def test_fraction_above_mean_bound(self):
        # holds for every nonconstant predicate of each arity
        for k in (1, 2, 3):
            bound = 0.25 * math.exp(-2 * k)
            for table in all_boolean_tables(k):
                if np.all(table == table[0]):
                    continue
                assert fourier_transform(table).fraction_above_mean() >= bound


def relevant_boolean_polys(k):
    for table in all_boolean_tables(k):
        poly = fourier_transform(table)
        if all(poly.depends_on(j) for j in range(k)):
            yield poly


@pytest.mark.parametrize("k", [2, 3])
def test_derivative_variance_lower_bound_exhaustive(k):
    # Any {0,1} predicate that genuinely uses coordinate j keeps a
    # quarter-of-a-point of variance in its j-derivative.
    bound = 2.0 ** (-k - 2)
    checked = 0
    for poly in relevant_boolean_polys(k):
        for j in range(k):
            assert poly.derivative(j).variance() >= bound - 1e-12
        checked += 1
    assert checked > 0


def test_items_and_coeff_access():
    poly = MultilinearPoly.from_dict(3, {0: 0.5, 0b111: -0.5})
    assert dict(poly.items()) == {0: 0.5, 0b111: -0.5}
    assert poly.coeff(0b101) == 0.0


def test_immutability():
    with pytest.raises(ValueError):
        XOR2.coeffs[0] = 9.0
