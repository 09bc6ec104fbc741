import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import exp1

from lsbec.allocation import (HEAP_ONLY_MAX, Allocation, LegendreMap, _greedy_heap, _threshold_greedy,
                              activity, allocate_bruteforce, allocate_legendre, allocate_optimal, allocation_energy,
                              calibrate_mu, energies_match, expected_occupation, legendre_objective, marginal_cost,
                              rescaled_total, xi_factor)
from lsbec.egp import egp_scaled
from lsbec.errors import CalibrationFailure, InvalidArgument
from lsbec.gp import PI2
from lsbec.landscape import decomposition_from_points, sample_decomposition

from oracles import brute_min


def test_legendre_value_against_dense_search():
    # independent route: minimize E(n,1,1) - 4 pi^2 n on a 1e-3 grid
    n = np.arange(0.0, 40.0, 1e-3)
    obj = legendre_objective(n, 1.0, 1.0, 4 * PI2)
    n_grid = n[np.argmin(obj)]
    val = LegendreMap(1.0, 4 * PI2)(1.0)
    assert abs(val - n_grid) <= 2e-3
    assert 2 * PI2 <= val <= 3 * PI2


def test_legendre_zero_below_support():
    m = LegendreMap(0.5, 4.0)
    assert m(math.pi / 2 * 0.999) == 0.0
    assert m(0.0) == 0.0
    assert m.support_length == pytest.approx(math.pi / 2)
    assert LegendreMap(0.0, 4.0)(2.0) == math.inf
    with pytest.raises(InvalidArgument):
        LegendreMap(-1.0, 1.0)
    with pytest.raises(InvalidArgument):
        m(-1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 30.0), st.floats(0.01, 100.0), st.floats(1e-4, 1e2))
def test_legendre_bounds(l, mu, g):
    m = LegendreMap(g, mu)
    lo, hi = m.bounds(l)
    v = m(l)
    assert lo * (1 - 1e-9) <= v <= hi * (1 + 1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(1.001, 2.0), st.floats(0.1, 50.0), st.floats(1e-3, 10.0))
def test_legendre_monotone(l, f, mu, g):
    m = LegendreMap(g, mu)
    assert m(l * f) >= m(l)
    assert LegendreMap(g, mu * f)(l) >= m(l)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 5.0), st.floats(5.0, 60.0), st.floats(0.01, 5.0))
def test_legendre_is_a_minimizer(l, mu, g):
    n = LegendreMap(g, mu)(l)
    f0 = legendre_objective(n, l, g, mu)
    for dn in (-1e-2, 1e-2, 0.5):
        if n + dn >= 0:
            assert legendre_objective(n + dn, l, g, mu) >= f0 - 1e-9 * abs(f0) - 1e-12


def test_greedy_examples():
    a = allocate_optimal([1.0, 2.0], 3, 0.0)
    assert a.occupations.tolist() == [0, 3]
    assert a.energy == pytest.approx(3 * PI2 / 4)
    b = allocate_optimal([1.0, 1.0], 2, 10.0)
    assert b.occupations.tolist() == [1, 1]
    assert b.energy == pytest.approx(2 * egp_scaled(1, 1, 10), rel=1e-14)
    assert allocate_optimal([1.0, 1.0], 3, 10.0).occupations.tolist() == [2, 1]  # tie to the lower index


def test_allocation_edge_cases():
    assert allocate_optimal([1.0, 2.0], 0, 1.0).total == 0
    with pytest.raises(InvalidArgument):
        allocate_optimal([1.0], -1, 1.0)
    with pytest.raises(InvalidArgument):
        allocate_optimal([0.0], 3, 1.0)
    with pytest.raises(InvalidArgument):
        allocate_bruteforce(np.ones(7), 3, 1.0)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=5), st.integers(0, 12),
       st.sampled_from([0.0, 1e-3, 0.1, 1.0, 10.0, 100.0]))
def test_greedy_equals_bruteforce(lengths, N, g):
    a = allocate_optimal(lengths, N, g)
    b = allocate_bruteforce(lengths, N, g)
    assert a.total == N == b.total
    assert energies_match(a.energy, b.energy)
    if len(lengths) <= 3:
        oracle = brute_min(lengths, N, lambda n, l: float(egp_scaled(n, l, g)) if n else 0.0)
        assert energies_match(b.energy, oracle)


@pytest.mark.parametrize("seed", range(4))
def test_threshold_greedy_equals_heap(seed):
    rng = np.random.default_rng(seed)
    lengths = rng.exponential(size=3000) * rng.uniform(0.5, 3)
    g = float(10 ** rng.uniform(-3, 0))
    N = int(rng.integers(HEAP_ONLY_MAX + 1, 20000))
    assert np.array_equal(_threshold_greedy(lengths, N, g), _greedy_heap(lengths, N, g))


def test_optimal_marginals_are_balanced():
    d = sample_decomposition(1.0, 1.0, 20000, seed=(1, 2))
    g = 20000**-0.5
    a = allocate_optimal(d, 20000, g)
    occ, l = a.occupations, d.lengths
    used = occ > 0
    last = marginal_cost(occ[used] - 1, l[used], g)
    nxt = marginal_cost(occ, l, g)
    assert last.max() <= nxt.min() * (1 + 1e-12)


def test_activity_and_xi():
    assert activity(1.0, PI2) == pytest.approx(math.exp(-1))
    assert xi_factor(0.0) == 1.0
    for a in (0.01, 0.5, 1.0, 3.0, 20.0):
        closed = 1 + a - a * a * math.exp(a) * exp1(a)
        assert xi_factor(a) == pytest.approx(closed, rel=1e-9)
        assert 1.0 <= xi_factor(a) <= 2.0
    with pytest.raises(InvalidArgument):
        xi_factor(-1.0)


@pytest.mark.parametrize("g,nu,rho", [(1e-4, 1.0, 1.0), (1e-2, 0.5, 2.0), (0.3, 1.7, 0.8), (1.0, 1.0, 1.0)])
def test_calibration(g, nu, rho):
    cal = calibrate_mu(g, nu, rho)
    assert cal.g_reconstructed == pytest.approx(g, rel=1e-12)
    assert cal.residual < 1e-12
    assert cal.bounds_ok
    assert cal.tail_bound < 1e-12 * cal.expected
    # xi zeta rho / nu equals the quadrature by construction of zeta
    assert cal.zeta * cal.xi * cal.target == pytest.approx(cal.expected, rel=1e-12)
    rec = cal.to_record()
    assert rec["bounds_ok"] and set(rec) >= {"mu", "lam", "xi", "zeta", "residual"}


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_expected_occupation_against_direct_quadrature():
    from scipy import integrate

    g, nu = 0.05, 1.0
    mu = calibrate_mu(g, nu, 1.0).mu
    m = LegendreMap(g, mu)
    l0 = math.pi / math.sqrt(mu)
    direct, _ = integrate.quad(lambda l: float(m(l)) * nu * math.exp(-nu * l), l0, l0 + 60, limit=400)
    assert expected_occupation(g, nu, mu)[0] == pytest.approx(direct, rel=1e-7)


def test_calibration_errors():
    with pytest.raises(InvalidArgument):
        calibrate_mu(0.0, 1.0, 1.0)
    with pytest.raises(CalibrationFailure):
        calibrate_mu(1e-30, 1.0, 1.0, bracket=(1.0, 2.0))


def test_legendre_allocation_ceil_and_exclusions():
    d = decomposition_from_points([-6.0, -2.5, 0.5, 4.0, 9.0], 20.0)
    cal = calibrate_mu(0.2, 1.0, 1.0)
    a = allocate_legendre(d, cal)
    assert np.all(a.occupations[d.excluded_mask] == 0)
    keep = ~d.excluded_mask
    real = cal.legendre_map(d.lengths[keep])
    assert np.array_equal(a.occupations[keep], np.ceil(real).astype(int))
    assert a.energy == pytest.approx(allocation_energy(d.lengths, a.occupations, 0.2))
    assert rescaled_total(a, 40) == (40 / a.total if a.total else math.inf)


def test_triplet_roundtrip(tmp_path):
    d = sample_decomposition(1.0, 1.0, 300, seed=3)
    cal = calibrate_mu(0.1, 1.0, 1.0)
    for a in (allocate_optimal(d, 300, 0.1), allocate_legendre(d, cal)):
        path = tmp_path / "a.txt"
        a.save(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# lsbec allocation v1") and lines[1] == "index length occupation"
        assert all(len(x.split()) == 3 for x in lines[2:])
        b = Allocation.load(path)
        assert np.array_equal(b.lengths, a.lengths) and np.array_equal(b.occupations, a.occupations)
        assert (b.method, b.g, b.energy, b.mu, b.lam) == (a.method, a.g, a.energy, a.mu, a.lam)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 3000), st.floats(1e-4, 1.0), st.integers(0, 2**31))
def test_optimal_total_is_exact(N, g, seed):
    d = sample_decomposition(1.0, 1.0, N, seed=seed)
    a = allocate_optimal(d, N, g)
    assert a.total == N and np.all(a.occupations >= 0)
    assert np.all(a.occupations[d.lengths <= 0] == 0)
