"""Quick self-check of every module's core invariants, printed as a table."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import egp as egp_mod
from .allocation import LegendreMap, allocate_bruteforce, allocate_optimal, calibrate_mu, energies_match
from .errors import TableLoadError
from .fewbody import FewBodyProblem, sandwich_check, smallness
from .gp import PI2, GpProblem, minimize_gp, richardson_energy
from .landscape import exponentiality_pvalue, realization_rng, sample_decomposition

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"


@dataclass
class VerifyReport:
    rows: list = field(default_factory=list)  # (name, status, detail)

    def add(self, name, status, detail=""):
        self.rows.append((name, status, detail))

    @property
    def ok(self) -> bool:
        return all(s != FAIL for _, s, _ in self.rows)

    def table(self) -> str:
        w = max(len(n) for n, _, _ in self.rows) if self.rows else 10
        lines = [f"{'invariant':<{w}}  status  detail", "-" * (w + 30)]
        lines += [f"{n:<{w}}  {s:<6}  {d}" for n, s, d in self.rows]
        return "\n".join(lines)


def _check_table(rep: VerifyReport, table_path):
    path = Path(table_path) if table_path else egp_mod.default_table_path()
    try:
        tab = egp_mod.EgpTable.load(path)
        rep.add("egp table checksum", PASS, f"{path.name}: {tab.checksum()[:12]}")
    except (OSError, TableLoadError) as exc:
        tab = egp_mod.EgpTable.build()
        rep.add("egp table checksum", PASS, f"load error ({exc}); table recomputed")
    egp_mod.set_table(tab)


def verify_suite(c: float = 1.0, c_tilde: float = 1.0, table_path=None, seed: int = 0,
                 quick: bool = True) -> VerifyReport:
    rep = VerifyReport()
    rng = realization_rng(seed, 7)
    _check_table(rep, table_path)

    e0 = richardson_energy(1.0, 1.0, 0.0, 512)
    rep.add("gp baseline e(0) = pi^2", PASS if abs(e0 / PI2 - 1) < 1e-6 else FAIL, f"rel err {abs(e0 / PI2 - 1):.1e}")

    worst = 0.0
    for n, l, g in [(2.0, 0.5, 1.0), (3.0, 2.0, 0.3), (0.5, 1.5, 4.0)]:
        a = n * richardson_energy(1.0, l, n * g, 512)
        b = richardson_energy(n, l, g, 512)
        cc = richardson_energy(n, 1.0, l * g, 512) / l**2
        worst = max(worst, abs(a / b - 1), abs(cc / b - 1))
    rep.add("gp scaling identities", PASS if worst < 1e-6 else FAIL, f"max rel dev {worst:.1e}")

    kap = np.geomspace(1e-3, 1e4, 30)
    e = egp_mod.egp(kap)
    ok = np.all(e >= PI2) and np.all(e >= kap / 2) and np.all((e - PI2) / kap <= 0.75 + 1e-12)
    q_ok = all(minimize_gp(GpProblem(1.0, 1.0, float(k), 1024)).quartic >= 1.0 for k in kap[::6])
    rep.add("egp bounds and quartic >= 1", PASS if ok and q_ok else FAIL, f"{len(kap)} kappa values")

    l = rng.uniform(0.05, 20, 2000)
    mu = rng.uniform(0.01, 50, 2000)
    g = 10 ** rng.uniform(-4, 2, 2000)
    vals = np.array([LegendreMap(gg, mm)(ll) for ll, mm, gg in zip(l, mu, g)])
    lo, hi = np.array([LegendreMap(gg, mm).bounds(ll) for ll, mm, gg in zip(l, mu, g)]).T
    bad = int(np.sum((vals < lo) | (vals > hi)))
    rep.add("legendre bounds", PASS if bad == 0 else FAIL, f"{bad} violations / {len(l)}")

    mism = 0
    for _ in range(100 if quick else 500):
        k = int(rng.integers(1, 5))
        lengths = rng.uniform(0.2, 3.0, k)
        N = int(rng.integers(0, 13))
        gg = float(rng.choice([0.0, 0.1, 1.0, 10.0]))
        a = allocate_optimal(lengths, N, gg).energy
        b = allocate_bruteforce(lengths, N, gg).energy
        mism += not energies_match(a, b)
    rep.add("greedy = brute force", PASS if mism == 0 else FAIL, f"{mism} mismatches")

    worst, in_range = 0.0, True
    for _ in range(5):
        cal = calibrate_mu(float(10 ** rng.uniform(-4, 0)), float(rng.uniform(0.3, 2)), float(rng.uniform(0.5, 2)))
        worst = max(worst, abs(cal.g_reconstructed / cal.g - 1))
        in_range &= cal.bounds_ok
    rep.add("calibration consistency", PASS if worst < 1e-6 and in_range else FAIL, f"max rel dev {worst:.1e}")

    eps = 0.5
    for gg in (0.01, 0.1, 1.0):
        if smallness(2, 1.0, gg) >= eps / max(math.sqrt(2) * c, c_tilde):
            rep.add(f"sandwich n=2 g={gg}", SKIP, "smallness hypothesis not met")
            continue
        r = sandwich_check(FewBodyProblem(2, 1.0, gg, 63), eps, c, c_tilde)
        rep.add(f"sandwich n=2 g={gg}", PASS if r.passed and r.depletion_margin >= 0 else FAIL,
                f"margins {r.upper_margin:.3g} / {r.lower_margin:.3g}")

    counts, pvals = [], []
    for i in range(200):
        d = sample_decomposition(1.0, 1.0, 1000, 1.0, seed=(seed, 1000, i))
        counts.append(d.count)
        pvals.append(exponentiality_pvalue(d))
    rep.add("poisson count mean", PASS if abs(np.mean(counts) / 1000.0 - 1) < 0.01 else FAIL,
            f"mean count / (nu L) = {np.mean(counts) / 1000.0:.4f}")
    frac = float(np.mean(np.array(pvals) > 0.01))
    rep.add("gap exponentiality (KS 1%)", PASS if frac >= 0.95 else FAIL, f"pass rate {frac:.3f}")
    return rep
