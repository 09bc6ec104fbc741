"""Poisson impurity landscapes on the window (-L/2, L/2) and their interval statistics.

Impurities of intensity ``nu`` are drawn on the unscaled window s * Lambda_N
(Poisson count, then uniform order statistics) and mapped back by x -> x / s,
so the scaled sub-interval lengths have effective intensity nu_N = nu * s.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import InvalidArgument


def realization_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 stream for ``(master_seed, *key)``.

    SeedSequence hashes the spawn key, so streams for different realizations
    are statistically independent and reproducible regardless of run order.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class IntervalDecomposition:
    nu: float
    rho: float
    N: int
    s: float
    seed: object
    points: np.ndarray  # scaled impurity positions inside the window, increasing
    lengths: np.ndarray = field(repr=False)  # scaled lengths, left to right
    origin_index: int = 0  # index of the interval covering 0

    @property
    def L(self) -> float:
        return self.N / self.rho

    @property
    def nu_eff(self) -> float:
        return self.nu * self.s

    @property
    def count(self) -> int:
        """Number of non-empty sub-intervals (k~_N)."""
        return int(np.count_nonzero(self.lengths > 0))

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.lengths), dtype=bool)
        mask[0] = mask[-1] = True
        return mask

    @property
    def excluded_mask(self) -> np.ndarray:
        """Boundary intervals and the one covering the origin."""
        mask = self.boundary_mask
        mask[self.origin_index] = True
        return mask

    @property
    def interior_lengths(self) -> np.ndarray:
        """Lengths that are exact exponential gaps (boundary and W_0 dropped)."""
        return self.lengths[~self.excluded_mask]

    @property
    def ordered(self) -> np.ndarray:
        pos = self.lengths[self.lengths > 0]
        return np.sort(pos)[::-1]

    @property
    def largest(self) -> float:
        return float(self.lengths.max())

    # -- text record ------------------------------------------------------

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write("# lsbec interval decomposition v1\n")
        buf.write(
            f"# nu={float(self.nu)!r} rho={float(self.rho)!r} N={self.N} s={float(self.s)!r} "
            f"seed={_seed_str(self.seed)}\n"
        )
        last = len(self.lengths) - 1
        for j, length in enumerate(self.lengths):
            flags = ""
            if j in (0, last):
                flags += "B"
            if j == self.origin_index:
                flags += "0"
            buf.write(f"{float(length)!r}" + (f" {flags}" if flags else "") + "\n")
        return buf.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "IntervalDecomposition":
        meta, lengths, origin = {}, [], None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
                continue
            parts = line.split()
            if len(parts) > 1 and "0" in parts[1]:
                origin = len(lengths)
            try:
                lengths.append(float(parts[0]))
            except ValueError:
                raise InvalidArgument(f"bad length line {line!r}") from None
        try:
            nu, rho, N, s = float(meta["nu"]), float(meta["rho"]), int(meta["N"]), float(meta["s"])
        except KeyError as exc:
            raise InvalidArgument(f"decomposition header missing {exc}") from None
        lengths = np.array(lengths)
        edges = -N / rho / 2.0 + np.cumsum(lengths)[:-1]
        return cls(nu, rho, N, s, _parse_seed(meta.get("seed", "None")), edges, lengths,
                   0 if origin is None else origin)

    @classmethod
    def load(cls, path) -> "IntervalDecomposition":
        return cls.from_text(Path(path).read_text())


def _seed_str(seed) -> str:
    if isinstance(seed, (tuple, list)):
        return ",".join(str(int(x)) for x in seed)
    return str(seed)


def _parse_seed(text: str):
    if text == "None":
        return None
    parts = [int(x) for x in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def decomposition_from_points(points, L, nu=1.0, rho=None, N=None, s=1.0, seed=None):
    """Decompose (-L/2, L/2) by explicit (already scaled) impurity positions."""
    pts = np.asarray(points, dtype=float)
    if pts.size and (np.any(np.diff(pts) <= 0) or pts[0] <= -L / 2 or pts[-1] >= L / 2):
        raise InvalidArgument("points must be strictly increasing and inside the window")
    if rho is None:
        rho = 1.0 if N is None else N / L
    if N is None:
        N = int(round(L * rho))
    edges = np.concatenate(([-L / 2.0], pts, [L / 2.0]))
    lengths = np.diff(edges)
    origin = int(np.searchsorted(pts, 0.0, side="right"))
    return IntervalDecomposition(nu, rho, N, s, seed, pts, lengths, origin)


def sample_decomposition(nu: float, rho: float, N: int, s: float = 1.0, seed=0,
                         rng: np.random.Generator | None = None) -> IntervalDecomposition:
    """One Poisson landscape on Lambda_N = (-N/(2 rho), N/(2 rho)).

    ``seed`` is an int or a tuple ``(master, *key)`` fed to
    :func:`realization_rng`; an explicit ``rng`` overrides it.
    """
    if not (nu > 0 and rho > 0 and 0 < s <= 1):
        raise InvalidArgument(f"need nu > 0, rho > 0, 0 < s <= 1 (got {nu}, {rho}, {s})")
    if N < 1:
        raise InvalidArgument(f"need N >= 1, got {N}")
    if rng is None:
        key = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
        rng = realization_rng(key[0], *key[1:])
    L = N / rho
    width = s * L  # unscaled window
    k = rng.poisson(nu * width)
    # uniform order statistics from normalized exponential spacings
    gaps = rng.standard_exponential(k + 1)
    cum = np.cumsum(gaps)
    u = cum[:-1] / cum[-1]
    pts = (u - 0.5) * width / s
    # guard against coincident points from rounding at huge k
    pts = pts[np.concatenate(([True], np.diff(pts) > 0))] if k else pts
    edges = np.concatenate(([-L / 2.0], pts, [L / 2.0]))
    lengths = np.diff(edges)
    origin = int(np.searchsorted(pts, 0.0, side="right"))
    return IntervalDecomposition(nu, rho, int(N), s, seed, pts, lengths, origin)


def ordered_lengths(d: IntervalDecomposition, k: int) -> float:
    """k-th largest positive length, 0 when fewer than k exist."""
    if k < 1:
        raise InvalidArgument("rank must be >= 1")
    pos = d.lengths[d.lengths > 0]
    if len(pos) < k:
        return 0.0
    # partition is O(n); avoids a full sort for small k
    return float(-np.partition(-pos, k - 1)[k - 1])


# -- ensemble statistics ----------------------------------------------------


@dataclass(frozen=True)
class TailEstimate:
    theta: float
    probability: float
    bound: float
    stderr: float
    size: int

    @property
    def ok(self) -> bool:
        return self.probability <= self.bound + 3.0 * self.stderr


def chernoff_exponent(theta: float) -> float:
    """1 - theta + theta ln theta (zero at theta = 1)."""
    return 1.0 - theta + (theta * math.log(theta) if theta > 0 else 0.0)


def counting_tail_probability(ensemble, theta: float) -> TailEstimate:
    """Empirical P(kappa >= theta nu L) (theta >= 1) or P(kappa <= theta nu L).

    ``kappa`` is the number of atoms in the (unscaled) window, so the mean is
    nu_N * L_N for every member of the ensemble.
    """
    ens = list(ensemble)
    if not ens:
        raise InvalidArgument("empty ensemble")
    if theta <= 0:
        raise InvalidArgument("theta must be positive")
    mean = ens[0].nu_eff * ens[0].L
    counts = np.array([d.n_points for d in ens])
    hits = counts >= theta * mean if theta >= 1 else counts <= theta * mean
    p = float(hits.mean())
    se = math.sqrt(p * (1 - p) / len(ens))
    return TailEstimate(theta, p, math.exp(-mean * chernoff_exponent(theta)), se, len(ens))


class EmpiricalCdf:
    """Right-continuous step function (1/n) #{x_i <= l}."""

    def __init__(self, sample):
        self.x = np.sort(np.asarray(sample, dtype=float))
        if self.x.size == 0:
            raise InvalidArgument("empty sample")

    def __call__(self, l):
        return np.searchsorted(self.x, l, side="right") / self.x.size

    def sup_distance(self, cdf) -> float:
        """sup_l |F_n(l) - F(l)| for a continuous ``cdf``, evaluated at the jumps."""
        n = self.x.size
        f = cdf(self.x)
        upper = np.arange(1, n + 1) / n - f
        lower = f - np.arange(0, n) / n
        return float(max(upper.max(), lower.max()))


def symmetric_gaps(d: IntervalDecomposition, k: int | None = None) -> np.ndarray:
    """Interior lengths with index in J_k = {-k..k} minus the origin interval.

    Without ``k`` the largest symmetric set that avoids the boundary is used.
    """
    o = d.origin_index
    kmax = min(o - 1, len(d.lengths) - 2 - o)
    if kmax < 1:
        raise InvalidArgument("no interior gap on both sides of the origin")
    if k is None:
        k = kmax
    if k > kmax:
        raise InvalidArgument(f"k={k} exceeds available symmetric range {kmax}")
    idx = np.concatenate((np.arange(o - k, o), np.arange(o + 1, o + k + 1)))
    return d.lengths[idx]


def empirical_gap_cdf(d: IntervalDecomposition, k: int | None = None) -> EmpiricalCdf:
    """F_k(l) = (2k)^{-1} sum_{j in J_k} 1{l_j <= l} over scaled interior gaps."""
    return EmpiricalCdf(symmetric_gaps(d, k))


def exponential_cdf(nu: float):
    return lambda l: -np.expm1(-nu * np.maximum(l, 0.0))


def dkw_epsilon(n: int, alpha: float = 0.05) -> float:
    """Massart's DKW radius: P(sup|F_n - F| > eps) <= alpha."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def exponentiality_pvalue(d: IntervalDecomposition) -> float:
    """KS p-value of interior gaps against Exponential(nu_N)."""
    gaps = d.interior_lengths
    return float(stats.kstest(gaps, "expon", args=(0.0, 1.0 / d.nu_eff)).pvalue)


@dataclass(frozen=True)
class GapStatistic:
    probability: float
    stderr: float
    size: int
    eta_prime: float
    rank: int
    c1: float

    @property
    def target(self) -> float:
        return 1.0 - self.eta_prime

    @property
    def ok(self) -> bool:
        return self.probability > self.target - 3.0 * self.stderr


def gap_constant_c1(nu: float, eta_prime: float) -> float:
    """C_1 = -nu / (4 ln(eta'/2))."""
    if not 0 < eta_prime < 2:
        raise InvalidArgument("need 0 < eta' < 2")
    return -nu / (4.0 * math.log(eta_prime / 2.0))


def interval_gap_event(d: IntervalDecomposition, eta_prime: float, c3: float) -> bool:
    """Largest-interval lower bound together with the gap to rank r = ceil(2 nu C3/(C1 eta')) + 1."""
    nu, rho = d.nu, d.rho
    c1 = gap_constant_c1(nu, eta_prime)
    rank = math.ceil(2.0 * nu * c3 / (c1 * eta_prime)) + 1
    nu_n = d.nu_eff
    l_floor = math.floor(d.s * d.N) / rho
    top = d.largest
    lower_ok = top > math.log(c1 * l_floor) / nu_n
    gap_ok = top - ordered_lengths(d, rank) > math.log(c3 / (2.0 * math.exp(nu / rho))) / nu_n
    return bool(lower_ok and gap_ok)


def interval_gap_statistic(ensemble, eta_prime: float, c3: float) -> GapStatistic:
    ens = list(ensemble)
    if not ens:
        raise InvalidArgument("empty ensemble")
    nu, rho = ens[0].nu, ens[0].rho
    if not 0 < eta_prime < 2:
        raise InvalidArgument("need 0 < eta' < 2")
    if c3 <= 2.0 * math.exp(nu / rho):
        raise InvalidArgument("need C3 > 2 exp(nu/rho)")
    c1 = gap_constant_c1(nu, eta_prime)
    rank = math.ceil(2.0 * nu * c3 / (c1 * eta_prime)) + 1
    hits = np.array([interval_gap_event(d, eta_prime, c3) for d in ens])
    p = float(hits.mean())
    return GapStatistic(p, math.sqrt(p * (1 - p) / len(ens)), len(ens), eta_prime, rank, c1)
