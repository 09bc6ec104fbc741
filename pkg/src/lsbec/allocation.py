"""Particle allocation over the intervals of a landscape.

Two constructions live here:

* the Legendre recipe: N_{g,mu}(l) minimizes E^GP(n, l, g) - mu n over n >= 0,
  mu is calibrated against the mean density, and M_j = ceil(N_{g,mu}(l_j));
* the optimal integer allocation minimizing sum_j E^GP(N_j, l_j, g) subject to
  sum_j N_j = N, found greedily (the cost is convex and separable).
"""
from __future__ import annotations

import heapq
import io
import itertools
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, optimize

from .egp import egp, egp_scaled, get_table, kappa_star
from .errors import CalibrationFailure, InvalidArgument
from .gp import PI2
from .landscape import IntervalDecomposition

# relative tolerance used when comparing allocation energies
ENERGY_RTOL = 1e-9


# -- Legendre map -------------------------------------------------------------


@dataclass(frozen=True)
class LegendreMap:
    g: float
    mu: float

    def __post_init__(self):
        if self.g < 0 or not np.isfinite(self.mu):
            raise InvalidArgument("need g >= 0 and finite mu")

    def __call__(self, l):
        """Real occupation N_{g,mu}(l); vectorized over ``l``."""
        la = np.asarray(l, dtype=float)
        if np.any(la < 0):
            raise InvalidArgument("lengths must be >= 0")
        x = self.mu * la * la - PI2
        out = np.zeros_like(la, dtype=float)
        pos = (x > 0) & (la > 0)
        if self.g == 0:
            out[pos] = np.inf
        elif np.any(pos):
            out[pos] = kappa_star(x[pos]) / (la[pos] * self.g)
        return out if out.ndim else float(out)

    def bounds(self, l):
        """((2/3) [x]_+ / (l g), [x]_+ / (l g)) with x = mu l^2 - pi^2."""
        la = np.asarray(l, dtype=float)
        xp = np.maximum(self.mu * la * la - PI2, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            upper = np.where(xp > 0, xp / (la * self.g), 0.0)
        return 2.0 * upper / 3.0, upper

    @property
    def support_length(self) -> float:
        """Smallest length with a positive occupation, pi / sqrt(mu)."""
        return math.pi / math.sqrt(self.mu) if self.mu > 0 else math.inf


def legendre_N(lmap: LegendreMap, l):
    return lmap(l)


def legendre_objective(n, l, g, mu):
    """E^GP(n, l, g) - mu n, the function N_{g,mu}(l) minimizes."""
    return egp_scaled(n, l, g) - mu * np.asarray(n, dtype=float)


# -- calibration ----------------------------------------------------------------


def activity(nu: float, mu: float) -> float:
    """lambda = exp(-pi nu / sqrt(mu))."""
    return math.exp(-math.pi * nu / math.sqrt(mu))


def xi_factor(a: float) -> float:
    """int_0^inf u (2a + u) / (a + u) e^{-u} du, which equals 1 + a - a^2 e^a E_1(a).

    Written without cancellation; increases from 1 (a = 0) to 2 (a -> inf).
    """
    if a < 0:
        raise InvalidArgument("a must be >= 0")
    if a == 0:
        return 1.0
    val, _ = integrate.quad(lambda u: u * (2 * a + u) / (a + u) * math.exp(-u), 0.0, np.inf,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return val


@dataclass(frozen=True)
class Calibration:
    g: float
    nu: float  # nu_N, intensity of the scaled lengths
    rho: float
    s: float
    mu: float
    lam: float
    xi: float
    zeta: float
    expected: float  # E[N_{g,mu}] per interval
    residual: float
    tail_bound: float

    @property
    def target(self) -> float:
        return self.rho / self.nu

    @property
    def g_reconstructed(self) -> float:
        return self.mu * self.lam / self.rho

    @property
    def bounds_ok(self) -> bool:
        lo, hi = 2.0 * self.target / 3.0, 2.0 * self.target
        return (lo * (1 - 1e-10) <= self.expected <= hi * (1 + 1e-10)
                and 2 / 3 - 1e-10 <= self.zeta <= 1 + 1e-10 and 1 - 1e-10 <= self.xi <= 2 + 1e-10)

    @property
    def legendre_map(self) -> LegendreMap:
        return LegendreMap(self.g, self.mu)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["g_reconstructed"] = self.g_reconstructed
        rec["bounds_ok"] = self.bounds_ok
        return rec


def expected_occupation(g: float, nu: float, mu: float) -> tuple[float, float]:
    """(E[N_{g,mu}(l)], tail bound) for l ~ Exponential(nu).

    After l = pi/sqrt(mu) + v/nu the weight is lambda e^{-v}; the integral is
    cut at v = 50 and the dropped tail is bounded with N <= mu l / g.
    """
    lmap = LegendreMap(g, mu)
    l0 = math.pi / math.sqrt(mu)
    lam = activity(nu, mu)
    f = lambda v: float(lmap(l0 + v / nu)) * math.exp(-v)
    with warnings.catch_warnings():
        # the integrand carries ~1e-16 interpolation noise; quad may flag it
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, 0.0, 50.0, epsabs=0.0, epsrel=1e-11, limit=400)
    upper = l0 + 50.0 / nu
    tail = mu / g * (upper + 1.0 / nu) * math.exp(-nu * upper)
    return lam * val, tail


def calibrate_mu(g: float, nu: float, rho: float, s: float = 1.0,
                 bracket=(1e-12, 1e12)) -> Calibration:
    """Chemical potential mu_N for coupling ``g`` and scaled intensity ``nu``.

    The density constraint E[N] = zeta xi rho / nu reduces to
    mu lambda(mu) = g rho, strictly increasing in mu, and is solved by
    bracketed root finding in log mu. zeta and xi are then read off from
    the quadrature.
    """
    for name, val in (("g", g), ("nu", nu), ("rho", rho), ("s", s)):
        if not (val > 0 and np.isfinite(val)):
            raise InvalidArgument(f"{name} must be positive, got {val}")
    target = math.log(g * rho)

    def f(logmu):
        return logmu - math.pi * nu * math.exp(-0.5 * logmu) - target

    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    if f(lo) > 0 or f(hi) < 0:
        raise CalibrationFailure(f"no root of mu lambda = g rho in {bracket} for g={g}, nu={nu}, rho={rho}")
    logmu = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    mu = math.exp(logmu)
    lam = activity(nu, mu)
    expected, tail = expected_occupation(g, nu, mu)
    a = math.pi * nu / math.sqrt(mu)
    xi = xi_factor(a)
    zeta = expected * g * nu / (mu * xi * lam)
    # E = zeta xi rho / nu by construction of zeta; the root error enters via mu lambda
    residual = abs(mu * lam / (g * rho) - 1.0)
    return Calibration(g, nu, rho, s, mu, lam, xi, zeta, expected, residual, tail)


# -- allocations ------------------------------------------------------------------


@dataclass
class Allocation:
    lengths: np.ndarray = field(repr=False)
    occupations: np.ndarray
    method: str
    g: float
    energy: float
    mu: float | None = None
    lam: float | None = None

    @property
    def total(self) -> int:
        return int(self.occupations.sum())

    @property
    def max_occupation(self) -> int:
        return int(self.occupations.max()) if len(self.occupations) else 0

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# lsbec allocation v1 method={self.method} g={float(self.g)!r} "
                  f"total={self.total} energy={float(self.energy)!r}"
                  + (f" mu={float(self.mu)!r} lambda={float(self.lam)!r}" if self.mu is not None else "") + "\n")
        buf.write("index length occupation\n")
        for j, (l, n) in enumerate(zip(self.lengths, self.occupations)):
            buf.write(f"{j} {float(l)!r} {int(n)}\n")
        return buf.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "Allocation":
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                meta.update(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
            elif line.strip() and not line.startswith("index"):
                rows.append(line.split())
        lengths = np.array([float(r[1]) for r in rows])
        occ = np.array([int(r[2]) for r in rows], dtype=np.int64)
        mu = float(meta["mu"]) if "mu" in meta else None
        lam = float(meta["lambda"]) if "lambda" in meta else None
        return cls(lengths, occ, meta.get("method", "unknown"), float(meta["g"]),
                   float(meta["energy"]), mu, lam)

    @classmethod
    def load(cls, path) -> "Allocation":
        return cls.from_text(Path(path).read_text())


def allocation_energy(lengths, occupations, g) -> float:
    occ = np.asarray(occupations, dtype=float)
    pos = occ > 0
    if not np.any(pos):
        return 0.0
    return float(np.sum(egp_scaled(occ[pos], np.asarray(lengths, float)[pos], g)))


def _lengths_of(d) -> np.ndarray:
    if isinstance(d, IntervalDecomposition):
        return d.lengths
    return np.asarray(d, dtype=float)


def allocate_legendre(d: IntervalDecomposition, cal: Calibration) -> Allocation:
    """M_j = ceil(N_{g,mu}(l_j)) on interior intervals other than W_0; 0 elsewhere."""
    occ = np.zeros(len(d.lengths), dtype=np.int64)
    keep = ~d.excluded_mask & (d.lengths > cal.legendre_map.support_length)
    if np.any(keep):
        occ[keep] = np.ceil(cal.legendre_map(d.lengths[keep])).astype(np.int64)
    return Allocation(d.lengths, occ, "legendre-ceil", cal.g,
                      allocation_energy(d.lengths, occ, cal.g), cal.mu, cal.lam)


def marginal_cost(k, l, g):
    """E^GP(k+1, l, g) - E^GP(k, l, g), vectorized."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    e1 = (k + 1.0) * egp((k + 1.0) * l * g)
    e0 = k * egp(k * l * g)
    return (e1 - e0) / (l * l)


def _greedy_heap(lengths, N, g, start=None, limit=None):
    """Place particles one at a time at the least marginal cost.

    Ties go to the lower index. ``start`` gives initial occupations and
    ``limit`` restricts the candidate intervals.
    """
    occ = np.zeros(len(lengths), dtype=np.int64) if start is None else start.copy()
    idx = np.flatnonzero(lengths > 0) if limit is None else limit
    if len(idx) == 0:
        return occ
    cost = marginal_cost(occ[idx], lengths[idx], g)
    heap = list(zip(cost.tolist(), idx.tolist()))
    heapq.heapify(heap)
    for _ in range(N - int(occ.sum()) if start is not None else N):
        c, j = heapq.heappop(heap)
        occ[j] += 1
        heapq.heappush(heap, (float(marginal_cost(occ[j], lengths[j], g)), j))
    return occ


def _counts_below(t, lengths, g):
    """c_j(t) = #{k >= 0 : marginal_cost(k, l_j) < t} for every j (vectorized).

    Starts from the continuous Legendre occupation at chemical potential t
    and corrects by whole steps, so the result is exact for the discrete costs.
    """
    n_real = LegendreMap(g, t)(lengths)
    c = np.ceil(n_real)
    c = np.maximum(c, 0.0)
    for _ in range(64):
        down = (c > 0) & (marginal_cost(np.maximum(c - 1, 0), lengths, g) >= t)
        up = marginal_cost(c, lengths, g) < t
        if not (np.any(down) or np.any(up)):
            break
        c = c - down + (up & ~down)
    return c.astype(np.int64)


HEAP_ONLY_MAX = 2000


def allocate_optimal(d, N: int, g: float) -> Allocation:
    """Energy-minimizing integer allocation of ``N`` particles (greedy order)."""
    lengths = _lengths_of(d)
    N = int(N)
    if N < 0:
        raise InvalidArgument("N must be >= 0")
    pos = np.flatnonzero(lengths > 0)
    if N > 0 and len(pos) == 0:
        raise InvalidArgument("no positive length to place particles in")
    occ = np.zeros(len(lengths), dtype=np.int64)
    if N == 0:
        return Allocation(lengths, occ, "greedy-optimal", g, 0.0)
    if g == 0:
        # every marginal is pi^2/l^2: the first largest interval takes all
        occ[int(np.argmax(lengths))] = N
    elif N <= HEAP_ONLY_MAX:
        occ = _greedy_heap(lengths, N, g)
    else:
        occ = _threshold_greedy(lengths, N, g)
    return Allocation(lengths, occ, "greedy-optimal", g, allocation_energy(lengths, occ, g))


def _threshold_greedy(lengths, N, g, slack=256):
    """Greedy result via bisection on the marginal-cost threshold.

    The greedy takes marginals in increasing (cost, index) order, so after the
    first sum_j c_j(t) picks the occupation is exactly c(t). Bisection finds t
    with sum c(t) <= N close below N; the heap places the rest.
    """
    l_max = float(lengths.max())
    t_lo = PI2 / l_max**2  # nothing is cheaper than this
    t_cap = float(marginal_cost(N, l_max, g))  # largest interval alone already gives N

    def count(t):
        # only intervals with pi^2 / l^2 < t can have a marginal below t
        idx = np.flatnonzero(lengths > math.pi / math.sqrt(t))
        return idx, _counts_below(t, lengths[idx], g)

    lo = count(t_lo)
    # grow t from below: counts at small t touch few intervals
    t_hi = t_lo
    for _ in range(200):
        t_hi = min(2.0 * t_hi, t_cap)
        hi = count(t_hi)
        tot_hi = int(hi[1].sum())
        if tot_hi > N or t_hi >= t_cap:
            break
        t_lo, lo = t_hi, hi
    for _ in range(200):
        if tot_hi - int(lo[1].sum()) <= slack or t_hi <= t_lo * (1 + 1e-15):
            break
        t = math.sqrt(t_lo * t_hi)
        cur = count(t)
        tot = int(cur[1].sum())
        if tot <= N:
            t_lo, lo = t, cur
        else:
            t_hi, tot_hi = t, tot
    occ = np.zeros(len(lengths), dtype=np.int64)
    occ[lo[0]] = lo[1]
    cand = np.flatnonzero(lengths > math.pi / math.sqrt(t_hi))
    if len(cand) == 0:
        cand = np.array([int(np.argmax(lengths))])
    return _greedy_heap(lengths, N, g, start=occ, limit=cand)


def allocate_bruteforce(d, N: int, g: float) -> Allocation:
    """Exhaustive minimum over all compositions of N into the positive intervals."""
    lengths = _lengths_of(d)
    pos = np.flatnonzero(lengths > 0)
    if len(pos) > 6 or N > 14:
        raise InvalidArgument("brute force limited to 6 intervals and N <= 14")
    if N > 0 and len(pos) == 0:
        raise InvalidArgument("no positive length to place particles in")
    occ = np.zeros(len(lengths), dtype=np.int64)
    if N == 0:
        return Allocation(lengths, occ, "brute-force", g, 0.0)
    k = len(pos)
    # per-interval energy table E(n, l_j) for n = 0..N
    table = np.array([[0.0] + list(np.atleast_1d(egp_scaled(np.arange(1, N + 1), lengths[j], g)))
                      for j in pos])
    best, best_e = None, np.inf
    # stars and bars: bar positions among N + k - 1 slots
    for bars in itertools.combinations(range(N + k - 1), k - 1):
        edges = (-1,) + bars + (N + k - 1,)
        comp = [edges[i + 1] - edges[i] - 1 for i in range(k)]
        e = sum(table[i, n] for i, n in enumerate(comp))
        if e < best_e * (1 - 1e-14):
            best, best_e = comp, e
    occ[pos] = best
    return Allocation(lengths, occ, "brute-force", g, allocation_energy(lengths, occ, g))


def energies_match(a: float, b: float, rtol: float = ENERGY_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def rescaled_total(alloc: Allocation, N: int) -> float:
    """n_hat = N / sum_j M_j, the optional rescaling of a Legendre allocation."""
    tot = alloc.total
    return math.inf if tot == 0 else N / tot
