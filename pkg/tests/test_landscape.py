import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsbec.errors import InvalidArgument
from lsbec.landscape import (EmpiricalCdf, IntervalDecomposition, chernoff_exponent, counting_tail_probability,
                             decomposition_from_points, dkw_epsilon, empirical_gap_cdf, exponential_cdf,
                             exponentiality_pvalue, gap_constant_c1, interval_gap_statistic, ordered_lengths,
                             realization_rng, sample_decomposition, symmetric_gaps)


def test_fixed_points_example():
    d = decomposition_from_points([-2.0, 1.0, 3.0], 10.0)
    assert np.allclose(d.lengths, [3.0, 3.0, 2.0, 2.0])
    assert d.count == 4
    assert d.lengths.sum() == pytest.approx(d.L)
    assert d.origin_index == 1  # (-2, 1) covers 0
    assert sorted(d.ordered.tolist(), reverse=True) == [3.0, 3.0, 2.0, 2.0]
    assert ordered_lengths(d, 1) == 3.0 and ordered_lengths(d, 3) == 2.0
    assert ordered_lengths(d, 9) == 0.0
    assert d.excluded_mask.tolist() == [True, True, False, True]


def test_empty_landscape_is_whole_window():
    d = decomposition_from_points([], 7.0)
    assert d.count == 1 and d.lengths.tolist() == [7.0]


def test_bad_points_rejected():
    with pytest.raises(InvalidArgument):
        decomposition_from_points([1.0, 0.5], 4.0)
    with pytest.raises(InvalidArgument):
        decomposition_from_points([2.0], 4.0)
    with pytest.raises(InvalidArgument):
        ordered_lengths(decomposition_from_points([], 1.0), 0)


@pytest.mark.parametrize("args", [(0, 1, 10), (1, 0, 10), (1, 1, 0), (1, 1, 10, 1.5), (1, 1, 10, 0.0)])
def test_invalid_sampling(args):
    with pytest.raises(InvalidArgument):
        sample_decomposition(*args)


def test_zero_atom_probability():
    # nu L = 2: no impurity with probability e^-2
    hits = sum(sample_decomposition(1.0, 1.0, 2, seed=(5, i)).n_points == 0 for i in range(20000))
    p = hits / 20000
    assert abs(p - math.exp(-2)) < 4 * math.sqrt(math.exp(-2) * (1 - math.exp(-2)) / 20000)


def test_empirical_cdf_example():
    F = EmpiricalCdf([1.0, 2.0])
    assert F(1.5) == 0.5 and F(0.5) == 0.0 and F(2.0) == 1.0
    with pytest.raises(InvalidArgument):
        EmpiricalCdf([])


def test_sup_distance_matches_brute():
    rng = np.random.default_rng(0)
    x = rng.exponential(size=300)
    F = EmpiricalCdf(x)
    cdf = exponential_cdf(1.0)
    grid = np.sort(np.concatenate((x, x - 1e-12)))
    brute = np.max(np.abs(F(grid) - cdf(grid)))
    assert F.sup_distance(cdf) == pytest.approx(brute, abs=1e-9)


def test_c1_example():
    assert gap_constant_c1(1.0, 1.0) == pytest.approx(1.0 / (4.0 * math.log(2.0)))
    with pytest.raises(InvalidArgument):
        gap_constant_c1(1.0, 2.0)


def test_chernoff_exponent():
    assert chernoff_exponent(1.0) == 0.0
    assert chernoff_exponent(2.0) == pytest.approx(2 * math.log(2) - 1)
    assert chernoff_exponent(0.0) == 1.0


def test_dkw_radius():
    assert dkw_epsilon(1000, 0.05) == pytest.approx(math.sqrt(math.log(40) / 2000))


def test_text_roundtrip(tmp_path):
    d = sample_decomposition(1.3, 0.7, 500, 0.4, seed=(3, 500, 2))
    path = tmp_path / "d.txt"
    d.save(path)
    back = IntervalDecomposition.load(path)
    assert np.array_equal(back.lengths, d.lengths)
    assert (back.nu, back.rho, back.N, back.s, back.seed) == (d.nu, d.rho, d.N, d.s, d.seed)
    assert back.origin_index == d.origin_index
    assert np.allclose(back.points, d.points, rtol=0, atol=1e-9 * d.L)
    assert back.to_text() == d.to_text()


def test_header_required():
    with pytest.raises(InvalidArgument):
        IntervalDecomposition.from_text("1.0\n2.0\n")


def test_determinism_and_independence():
    a = sample_decomposition(1.0, 1.0, 1000, seed=(9, 1000, 0))
    b = sample_decomposition(1.0, 1.0, 1000, seed=(9, 1000, 0))
    c = sample_decomposition(1.0, 1.0, 1000, seed=(9, 1000, 1))
    assert np.array_equal(a.lengths, b.lengths)
    assert not np.array_equal(a.lengths[:5], c.lengths[:5])
    x = realization_rng(1, 2, 3).random(4)
    assert np.array_equal(x, realization_rng(1, 2, 3).random(4))


def test_gap_exponentiality_dkw():
    d = sample_decomposition(1.0, 1.0, 100_000, seed=(1, 100_000, 0))
    gaps = symmetric_gaps(d)
    F = empirical_gap_cdf(d)
    assert F.sup_distance(exponential_cdf(d.nu_eff)) <= dkw_epsilon(len(gaps), 0.001)
    assert exponentiality_pvalue(d) > 1e-3


def test_scaled_intensity():
    d = sample_decomposition(2.0, 1.0, 50_000, s=0.1, seed=(2, 0))
    assert d.nu_eff == pytest.approx(0.2)
    # interior gaps are Exp(nu s) in scaled units
    assert np.mean(d.interior_lengths) == pytest.approx(1 / d.nu_eff, rel=0.05)


def test_counting_tail_below_chernoff():
    ens = [sample_decomposition(1.0, 1.0, 50, seed=(4, i)) for i in range(4000)]
    for theta in (0.6, 1.4):
        est = counting_tail_probability(ens, theta)
        assert est.ok, est


def test_gap_statistic_runs():
    ens = [sample_decomposition(1.0, 1.0, 5000, seed=(6, i)) for i in range(200)]
    stat = interval_gap_statistic(ens, 1.0, 2 * math.e + 1)
    assert 0.0 <= stat.probability <= 1.0 and stat.rank >= 2
    with pytest.raises(InvalidArgument):
        interval_gap_statistic(ens, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.2, 5.0), st.integers(1, 5000), st.floats(0.05, 1.0),
       st.integers(0, 2**31))
def test_length_conservation(nu, rho, N, s, seed):
    d = sample_decomposition(nu, rho, N, s, seed=seed)
    assert np.all(d.lengths > 0)
    assert d.lengths.sum() == pytest.approx(N / rho, rel=1e-12)
    assert d.count == d.n_points + 1
    assert 0 <= d.origin_index < len(d.lengths)
    edges = np.concatenate(([-d.L / 2], d.points))
    o = d.origin_index
    assert edges[o] <= 0.0 <= edges[o] + d.lengths[o]
