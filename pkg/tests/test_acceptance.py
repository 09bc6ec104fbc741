"""End-to-end acceptance checks; each prints one PASS/FAIL line with its numbers."""
import itertools
import math
import time

import numpy as np
import pytest

from lsbec.allocation import allocate_bruteforce, allocate_legendre, allocate_optimal, calibrate_mu, energies_match
from lsbec.diagnostics import ids_compare
from lsbec.experiment import RunConfig, run_experiment
from lsbec.fewbody import FewBodyProblem, sandwich_check
from lsbec.gp import PI2, GpProblem, minimize_gp, richardson_energy
from lsbec.landscape import (EmpiricalCdf, exponential_cdf, realization_rng, sample_decomposition,
                             symmetric_gaps)

SEED = 0


def test_criterion_01_gp_baseline_and_scaling(report):
    t0 = time.time()
    e0 = richardson_energy(1.0, 1.0, 0.0)
    base = abs(e0 / PI2 - 1)
    worst = 0.0
    for n, l, g in itertools.product((0.5, 1.0, 2.0), (0.5, 1.0, 2.0), (0.1, 1.0, 10.0)):
        e = richardson_energy(n, l, g, 512)
        a = n * richardson_energy(1.0, l, n * g, 512)
        b = richardson_energy(n, 1.0, l * g, 512) / l**2
        worst = max(worst, abs(a / e - 1), abs(b / e - 1))
    dt = time.time() - t0
    ok = base < 1e-6 and worst < 1e-6 and dt < 60
    report(1, ok, f"|e(0)/pi^2-1|={base:.1e} scaling max rel dev={worst:.1e} (27 points) {dt:.1f}s")
    assert ok


def test_criterion_02_egp_bounds(report):
    t0 = time.time()
    kap = np.geomspace(1e-3, 1e4, 50)
    e = np.array([richardson_energy(1.0, 1.0, float(k), 1024) for k in kap])
    q = np.array([minimize_gp(GpProblem(1.0, 1.0, float(k), 1024)).quartic for k in kap])
    m1 = float(np.min(e - PI2))
    m2 = float(np.min(e - kap / 2))
    m3 = float(np.min(0.75 - (e - PI2) / kap))
    m4 = float(np.min(q - 1.0))
    dt = time.time() - t0
    ok = min(m1, m2, m3, m4) >= 0 and dt < 120
    report(2, ok, f"min margins: e-pi^2={m1:.3g} e-k/2={m2:.3g} 3/4-slope={m3:.3g} quartic-1={m4:.3g} {dt:.1f}s")
    assert ok


def test_criterion_03_energy_sandwich(report):
    t0 = time.time()
    rows = [sandwich_check(FewBodyProblem(2, 1.0, g, 127), eps=0.5) for g in (0.01, 0.1, 1.0)]
    dt = time.time() - t0
    ok = all(r.upper_margin >= 0 and r.lower_margin >= 0 and r.product_margin >= 1e-6 for r in rows) and dt < 300
    detail = "; ".join(f"g={r.g}: E_QM={r.e_qm:.6f} E_GP={r.e_gp:.6f} up={r.upper_margin:.3g} "
                       f"low={r.lower_margin:.3g} prod={r.product_margin:.3g} hyp={r.hypothesis}" for r in rows)
    report(3, ok, f"{detail} {dt:.1f}s")
    assert ok


def test_criterion_04_depletion(report):
    t0 = time.time()
    rows = [sandwich_check(FewBodyProblem(2, 1.0, g, 127), eps=0.5, c=1.0) for g in (0.1, 1.0)]
    dt = time.time() - t0
    ok = all(r.depletion_margin >= 0 for r in rows) and dt < 300
    detail = "; ".join(f"g={r.g}: 1-n0/n={r.depletion:.3e} rhs={r.depletion_rhs:.4g} margin={r.depletion_margin:.4g}"
                       for r in rows)
    report(4, ok, f"{detail} {dt:.1f}s")
    assert ok


def test_criterion_05_greedy_vs_bruteforce(report):
    t0 = time.time()
    rng = realization_rng(SEED, 5)
    mism = 0
    for _ in range(500):
        k = int(rng.integers(1, 5))
        lengths = rng.uniform(0.1, 5.0, k)
        N = int(rng.integers(0, 13))
        g = float(rng.choice([0.0, 0.1, 1.0, 10.0]))
        mism += not energies_match(allocate_optimal(lengths, N, g).energy, allocate_bruteforce(lengths, N, g).energy)
    dt = time.time() - t0
    ok = mism == 0 and dt < 120
    report(5, ok, f"{mism} mismatches / 500 {dt:.1f}s")
    assert ok


def test_criterion_06_calibration(report):
    t0 = time.time()
    rng = realization_rng(SEED, 6)
    worst, in_window = 0.0, 0
    for _ in range(20):
        g = float(10 ** rng.uniform(-6, 0))
        nu = float(rng.uniform(0.2, 3.0))
        rho = float(rng.uniform(0.2, 3.0))
        cal = calibrate_mu(g, nu, rho)
        worst = max(worst, abs(cal.mu * cal.lam / rho / g - 1))
        in_window += 2 * rho / (3 * nu) <= cal.expected <= 2 * rho / nu
    dt = time.time() - t0
    ok = worst < 1e-6 and in_window == 20 and dt < 60
    report(6, ok, f"max rel dev of reconstructed g={worst:.1e}; E[N] in window {in_window}/20 {dt:.1f}s")
    assert ok


def test_criterion_07_poisson_statistics(report):
    t0 = time.time()
    counts = np.array([sample_decomposition(1.0, 1.0, 1000, seed=(SEED, 71, i)).count for i in range(10_000)])
    mean_ratio = counts.mean() / 1000.0
    # DKW: 2k symmetric gaps with k = 10^4, threshold 1.36 / sqrt(2k), 200 realizations
    k = 10_000
    thr = 1.36 / math.sqrt(2 * k)
    cdf = exponential_cdf(1.0)
    hits = 0
    for i in range(200):
        d = sample_decomposition(1.0, 1.0, 25_000, seed=(SEED, 72, i))
        hits += EmpiricalCdf(symmetric_gaps(d, k)).sup_distance(cdf) <= thr
    dkw_freq = hits / 200
    N = 100_000
    viol = sum(sample_decomposition(1.0, 1.0, N, seed=(SEED, 73, i)).largest > 5.0 * math.log(N)
               for i in range(1000)) / 1000
    dt = time.time() - t0
    ok = 0.99 <= mean_ratio <= 1.01 and dkw_freq >= 0.95 and viol < 0.01 and dt < 300
    report(7, ok, f"mean k/(nu L)={mean_ratio:.4f}; DKW pass frequency={dkw_freq:.3f} (200 x 2k=2e4 gaps); "
                  f"largest > 5 ln N in {viol:.3%} at N=1e5 {dt:.1f}s")
    assert ok


def test_criterion_08_legendre_particle_window(report):
    t0 = time.time()
    parts = []
    ok = True
    for N in (10**4, 10**5, 10**6):
        lam = N ** -0.25
        g = PI2 * lam / math.log(lam) ** 2
        cal = calibrate_mu(g, 1.0, 1.0)
        ratios = [allocate_legendre(sample_decomposition(1.0, 1.0, N, seed=(SEED, 8, N, r)), cal).total / N
                  for r in range(20)]
        med = float(np.median(ratios))
        ok &= 2 / 9 <= med <= 6
        parts.append(f"N={N:.0e}: lambda={cal.lam:.4g} median={med:.4f}")
    dt = time.time() - t0
    ok &= dt < 600
    report(8, ok, "; ".join(parts) + f" {dt:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def type_sweep(tmp_path_factory):
    cfg = RunConfig.from_dict({
        "name": "acceptance-types",
        "N_list": [10**4, 10**5, 10**6, 10**7],
        "realizations": 100,
        "master_seed": SEED,
        "legendre": False,
        "regimes": [
            {"tag": "noninteracting", "eta": 0.25},
            {"tag": "strong", "eta": 0.1, "delta": 0.05, "g": {"a": 1.0, "p": 0.13, "q": -2.0}},
            {"tag": "weak", "eta": 0.25, "g": {"a": 1.0, "p": 1.5, "q": 0.0}},
        ],
    })
    t0 = time.time()
    out = tmp_path_factory.mktemp("types")
    man = run_experiment(cfg, out_dir=out)
    import json

    records = [json.loads(x) for x in (out / "records.jsonl").read_text().splitlines()]
    return cfg, man, records, time.time() - t0


def test_criterion_09_type_transition(report, type_sweep):
    cfg, man, records, dt = type_sweep

    def medians(tag):
        return [float(np.median([r["max_fraction"] for r in records if r["tag"] == tag and r["N"] == N]))
                for N in cfg.N_list]

    free_ok = all(r["max_fraction"] == 1.0 for r in records if r["tag"] == "noninteracting")
    strong = medians("strong")
    weak = medians("weak")
    strong_ok = all(b < a for a, b in zip(strong, strong[1:]))
    weak_ok = min(weak) > 0.1
    ok = free_ok and strong_ok and weak_ok and not man["hard_failures"] and dt < 1800
    report(9, ok, f"g=0 all max-fraction 1: {free_ok}; strong medians {['%.4g' % x for x in strong]}; "
                  f"weak medians {['%.4g' % x for x in weak]}; sweep {dt:.0f}s")
    assert ok


def test_criterion_10_largest_interval_density(report, type_sweep):
    cfg, man, records, _ = type_sweep
    strong = [r for r in records if r["tag"] == "strong"]
    ratios = np.array([r["largest_density"] / r["density_bound_2"] for r in strong])
    ok = len(strong) == 400 and bool(np.all(ratios < 1.0))
    report(10, ok, f"max (N>/l>) / bound over {len(strong)} strong-regime records = {ratios.max():.3e}")
    assert ok


def test_criterion_11_ids(report):
    t0 = time.time()
    ens = [sample_decomposition(1.0, 1.0, 10_000, seed=(SEED, 11, i)) for i in range(100)]
    E = np.linspace(0.25, 60.0, 240)
    cmp = ids_compare(ens, E)
    dt = time.time() - t0
    ok = cmp.below_limit and cmp.sup_distance < 0.02 * cmp.nu and dt < 180
    excess = float(np.max((cmp.mean - cmp.limit) / np.maximum(cmp.stderr, 1e-300)))
    report(11, ok, f"sup|E N_L - N_inf|={cmp.sup_distance:.2e} (< {0.02 * cmp.nu}); "
                   f"max (mean - limit)/se={excess:.2f} {dt:.1f}s")
    assert ok
