"""Observables of an allocated landscape and the scaling regimes they are tested in."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .egp import egp, egp_scaled
from .errors import InvalidArgument
from .gp import PI2
from .landscape import IntervalDecomposition


# -- schedules and regimes ------------------------------------------------------


@dataclass(frozen=True)
class PowerLog:
    """a * N^(-p) * (ln N)^q; a = 0 is the zero schedule."""

    a: float = 1.0
    p: float = 0.0
    q: float = 0.0

    def __call__(self, N):
        N = np.asarray(N, dtype=float)
        out = self.a * N ** (-self.p) * np.log(N) ** self.q
        return float(out) if out.ndim == 0 else out

    @property
    def is_zero(self) -> bool:
        return self.a == 0

    @property
    def order(self) -> tuple[float, float]:
        """Growth order (exponent of N, exponent of ln N)."""
        return (-self.p, self.q)


def _order_add(*orders):
    return (sum(o[0] for o in orders), sum(o[1] for o in orders))


def _scale(order, k):
    return (k * order[0], k * order[1])


def much_less(f, h) -> bool:
    """f << h for power-log orders (lexicographic on exponents)."""
    return f[0] < h[0] or (f[0] == h[0] and f[1] < h[1])


def at_most(f, h) -> bool:
    return f == h or much_less(f, h)


REGIME_TAGS = ("noninteracting", "weak", "strong", "density")


@dataclass(frozen=True)
class ScalingRegime:
    tag: str
    eta: float
    nu: PowerLog = field(default_factory=PowerLog)
    g: PowerLog = field(default_factory=lambda: PowerLog(0.0))
    rho: float = 1.0
    delta: float = 0.05

    def __post_init__(self):
        if self.tag not in REGIME_TAGS:
            raise InvalidArgument(f"unknown regime tag {self.tag!r}")
        if not 0 < self.eta <= 1 / 3:
            raise InvalidArgument("eta must lie in (0, 1/3]")
        if self.delta < 0 or self.rho <= 0:
            raise InvalidArgument("need delta >= 0 and rho > 0")

    def nu_at(self, N) -> float:
        return self.nu(N)

    def g_at(self, N) -> float:
        return 0.0 if self.g.is_zero else self.g(N)

    def conditions(self) -> dict:
        """Each scaling hypothesis of the tagged regime, checked on the exponents."""
        nu, g = self.nu.order, self.g.order
        out = {
            "nu_lower": much_less((-(1.0 - 2.0 * self.eta), 4.0), nu),
            "nu_upper": at_most(nu, (0.0, 0.0)),
        }
        upper_g = _order_add(_scale(nu, 2), (-self.eta, -2.0))
        if self.tag == "noninteracting":
            out["g_zero"] = self.g.is_zero
        elif self.tag == "weak":
            out["g_small"] = self.g.is_zero or much_less(g, _order_add(nu, (-1.0, -2.0)))
        elif self.tag == "strong":
            out["g_lower"] = not self.g.is_zero and much_less(_order_add(nu, (-1.0, -1.0)), g)
            out["g_upper"] = not self.g.is_zero and much_less(g, upper_g)
        else:
            out["g_upper"] = self.g.is_zero or much_less(g, upper_g)
        return out

    @property
    def valid(self) -> bool:
        return all(self.conditions().values())

    @property
    def second_density_bound_applies(self) -> bool:
        """eta < 1/6 and g >> nu N^{-1/6} (ln N)^{-2}."""
        return (self.eta < 1 / 6 and not self.g.is_zero
                and much_less(_order_add(self.nu.order, (-1 / 6, -2.0)), self.g.order))

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["conditions"] = self.conditions()
        return rec

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingRegime":
        d = dict(d)
        nu = PowerLog(**d.pop("nu", {}))
        g = PowerLog(**d.pop("g", {"a": 0.0}))
        return cls(nu=nu, g=g, **d)


# -- regime constants -------------------------------------------------------------


def K_eta(eta: float) -> float:
    """K(eta) = 10 * 5^2 * pi^2 / eta^2 + 1."""
    return 250.0 * PI2 / eta**2 + 1.0


def c1_eta(eta: float) -> float:
    """c_1(eta) = 90 e(K(eta)) / eta^2."""
    return 90.0 * float(egp(K_eta(eta))) / eta**2


# -- per-interval quantities ------------------------------------------------------------


def depletion_bounds(occ, lengths, g, c: float = 1.0):
    """Upper bound on 1 - n_j / N_j for each interval (vectorized)."""
    occ = np.asarray(occ, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    gamma = occ * lengths * g
    with np.errstate(divide="ignore"):
        inv = 1.0 / np.log1p(np.exp(-2.0 * np.sqrt(PI2 + 3.0 * gamma)))
    return math.sqrt(7.0) * c * inv * np.cbrt(occ) ** 2 * lengths * g


def bound_applies(occ, lengths, g, c_tilde: float = 1.0):
    """c~ [N_j^{1/3} l_j g]^{1/2} < 1/2, where the depletion bound is proven."""
    return c_tilde * np.sqrt(np.cbrt(np.asarray(occ, float)) * lengths * g) < 0.5


def certified_occupations(occ, lengths, g, c: float = 1.0, c_tilde: float = 1.0):
    """Lower bounds n_j >= N_j (1 - bound); NaN where the bound is not proven."""
    occ = np.asarray(occ, dtype=float)
    if g == 0:
        return occ.copy()
    out = np.full(occ.shape, np.nan)
    empty = occ == 0
    out[empty] = 0.0
    ok = ~empty & bound_applies(occ, lengths, g, c_tilde)
    dep = depletion_bounds(occ[ok], lengths[ok], g, c)
    out[ok] = np.clip(occ[ok] * (1.0 - dep), 0.0, occ[ok])
    return out


def interval_energies(occ, lengths, g):
    """E_j = E^GP(1, l_j, N_j g) = e(N_j l_j g) / l_j^2 over positive lengths (inf for l = 0)."""
    occ = np.asarray(occ, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    out = np.full(lengths.shape, np.inf)
    pos = lengths > 0
    out[pos] = egp(occ[pos] * lengths[pos] * g) / lengths[pos] ** 2
    return out


def condensate_fraction(occ, lengths, g, eps, c: float = 1.0, c_tilde: float = 1.0,
                        certified=None, energies=None):
    """N^{-1} sum_{E_j <= eps} n_j with certified n_j; unknown n_j contribute 0.

    ``eps`` may be an array; returns (fractions, number of intervals with
    E_j <= eps whose n_j is unknown).
    """
    occ = np.asarray(occ)
    N = occ.sum()
    if N == 0:
        z = np.zeros(np.shape(eps))
        return (z, z.astype(int)) if z.ndim else (0.0, 0)
    cert = certified_occupations(occ, lengths, g, c, c_tilde) if certified is None else certified
    e = interval_energies(occ, lengths, g) if energies is None else energies
    occupied = occ > 0
    e_occ, n_occ = e[occupied], cert[occupied]
    eps_a = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps_a <= 0):
        raise InvalidArgument("eps must be positive")
    known = np.where(np.isnan(n_occ), 0.0, n_occ)
    order = np.argsort(e_occ)
    cum = np.concatenate(([0.0], np.cumsum(known[order])))
    cum_unknown = np.concatenate(([0], np.cumsum(np.isnan(n_occ[order]))))
    k = np.searchsorted(e_occ[order], eps_a, side="right")
    frac, unknown = cum[k] / N, cum_unknown[k]
    if np.ndim(eps) == 0:
        return float(frac[0]), int(unknown[0])
    return frac, unknown


def energy_per_particle(occ, lengths, g) -> float:
    occ = np.asarray(occ, dtype=float)
    N = occ.sum()
    if N == 0:
        return 0.0
    pos = occ > 0
    return float(np.sum(egp_scaled(occ[pos], np.asarray(lengths, float)[pos], g)) / N)


def density_bounds(N, nu, g, eta, delta):
    """The two upper bounds on the largest-interval density."""
    pref = math.sqrt(8.0 * c1_eta(eta))
    lnN = math.log(N)
    lnnuN = math.log(nu * N)
    cap = nu / (N ** (1 / 3) * lnN**2)
    first = pref * nu**1.5 / lnN / math.sqrt(lnnuN) * min(g, cap) ** -0.5 * math.sqrt(N) if g > 0 else math.inf
    second = pref * nu / math.sqrt(lnnuN) * N ** (0.6 + delta)
    return first, second


def gamma_split(occ, lengths, g, N):
    """Particles in intervals with gamma_j < (ln N)^{1/2} and in the rest."""
    occ = np.asarray(occ, dtype=float)
    gamma = occ * np.asarray(lengths, float) * g
    small = gamma < math.sqrt(math.log(N))
    return float(occ[small].sum()), float(occ[~small].sum())


# -- reports ------------------------------------------------------------------------------


REPORT_FIELDS = (
    "N", "realization", "nu_N", "g_N", "n_intervals", "largest_length", "max_occupation",
    "occupation_in_largest", "max_fraction", "max_certified_fraction", "condensate_fraction",
    "unknown_in_band", "eps", "energy_per_particle", "energy_bound", "largest_density",
    "density_bound_1", "density_bound_2", "gamma_small", "gamma_large", "legendre_total_ratio",
)


@dataclass
class DiagnosticsReport:
    N: int
    realization: int
    nu_N: float
    g_N: float
    n_intervals: int
    largest_length: float
    max_occupation: int
    occupation_in_largest: int
    max_fraction: float
    max_certified_fraction: float
    condensate_fraction: float
    unknown_in_band: int
    eps: float
    energy_per_particle: float
    energy_bound: float
    largest_density: float
    density_bound_1: float
    density_bound_2: float
    gamma_small: float
    gamma_large: float
    legendre_total_ratio: float = float("nan")
    eps_grid: list = field(default_factory=list, repr=False)
    fraction_grid: list = field(default_factory=list, repr=False)

    def to_record(self) -> dict:
        rec = {k: getattr(self, k) for k in REPORT_FIELDS}
        rec["eps_grid"] = list(self.eps_grid)
        rec["fraction_grid"] = list(self.fraction_grid)
        return {k: (v.item() if hasattr(v, "item") else v) for k, v in rec.items()}


def default_eps(N: int, nu: float) -> float:
    """Band edge 10 pi^2 nu^2 / (ln N)^2."""
    return 10.0 * PI2 * nu**2 / math.log(N) ** 2


def diagnose(occ, d: IntervalDecomposition, g: float, eta: float, delta: float = 0.05,
             realization: int = 0, eps=None, eps_grid=None, c: float = 1.0,
             c_tilde: float = 1.0) -> DiagnosticsReport:
    occ = np.asarray(occ)
    lengths = d.lengths
    N = int(occ.sum())
    if N == 0:
        raise InvalidArgument("allocation is empty")
    nu = d.nu_eff
    eps = default_eps(max(N, 3), nu) if eps is None else eps
    grid = np.asarray(eps_grid if eps_grid is not None else eps * np.geomspace(0.1, 10.0, 9))
    cert = certified_occupations(occ, lengths, g, c, c_tilde)
    energies = interval_energies(occ, lengths, g)
    frac, unknown = condensate_fraction(occ, lengths, g, eps, c, c_tilde, cert, energies)
    fgrid, _ = condensate_fraction(occ, lengths, g, grid, c, c_tilde, cert, energies)
    j_big = int(np.argmax(lengths))
    max_occ = int(occ.max())
    epp = energy_per_particle(occ, lengths, g)
    b1, b2 = density_bounds(max(N, 3), nu, g, eta, delta)
    gs, gl = gamma_split(occ, lengths, g, max(N, 3))
    cert_known = np.where(np.isnan(cert), 0.0, cert)
    return DiagnosticsReport(
        N=N, realization=realization, nu_N=nu, g_N=g, n_intervals=d.count,
        largest_length=float(lengths[j_big]), max_occupation=max_occ,
        occupation_in_largest=int(occ[j_big]), max_fraction=max_occ / N,
        max_certified_fraction=float(cert_known.max()) / N, condensate_fraction=frac,
        unknown_in_band=unknown, eps=float(eps), energy_per_particle=epp,
        energy_bound=c1_eta(eta) * nu**2 / math.log(max(N, 3)) ** 2,
        largest_density=max_occ / float(lengths[j_big]), density_bound_1=b1, density_bound_2=b2,
        gamma_small=gs, gamma_large=gl, eps_grid=grid.tolist(), fraction_grid=list(map(float, fgrid)),
    )


# -- type classification -----------------------------------------------------------------------


@dataclass(frozen=True)
class TypeFit:
    label: str
    slope: float
    Ns: tuple
    fractions: tuple


def classify_type(Ns, max_fractions, decay: float = -0.05, flat: float = 0.02) -> TypeFit:
    """Label the trend of max_j N_j / N against N.

    Least-squares slope of log(fraction) on log N: below ``decay`` -> III,
    within +-``flat`` -> I/II, otherwise inconclusive.
    """
    Ns = np.asarray(Ns, dtype=float)
    fr = np.asarray(max_fractions, dtype=float)
    if len(Ns) < 3 or len(Ns) != len(fr):
        raise InvalidArgument("need at least 3 matching N values")
    if np.log10(Ns.max() / Ns.min()) < 2 - 1e-12:
        raise InvalidArgument("N values must span at least two decades")
    if np.any(fr <= 0):
        raise InvalidArgument("fractions must be positive")
    slope = float(np.polyfit(np.log(Ns), np.log(fr), 1)[0])
    if slope < decay:
        label = "III"
    elif abs(slope) <= flat:
        label = "I/II"
    else:
        label = "inconclusive"
    return TypeFit(label, slope, tuple(Ns.tolist()), tuple(fr.tolist()))


# -- integrated density of states -------------------------------------------------------------


def ids_limit(E, nu):
    """nu e^{-a} / (1 - e^{-a}) with a = nu pi / sqrt(E); 0 for E <= 0."""
    E = np.asarray(E, dtype=float)
    out = np.zeros_like(E)
    pos = E > 0
    a = nu * math.pi / np.sqrt(E[pos])
    out[pos] = nu / np.expm1(a)
    return out


def ids_finite(d: IntervalDecomposition, E):
    """L^{-1} #{(j, k >= 1) : pi^2 k^2 / l_j^2 <= E}."""
    E = np.asarray(E, dtype=float)
    root = np.sqrt(np.maximum(E, 0.0)) / math.pi
    counts = np.floor(np.multiply.outer(root, d.lengths)).sum(axis=-1)
    return counts / d.L


@dataclass(frozen=True)
class IdsComparison:
    E: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    limit: np.ndarray
    nu: float

    @property
    def sup_distance(self) -> float:
        return float(np.max(np.abs(self.mean - self.limit)))

    @property
    def below_limit(self) -> bool:
        return bool(np.all(self.mean <= self.limit + 2.0 * self.stderr))


def ids_compare(ensemble, E) -> IdsComparison:
    ens = list(ensemble)
    if not ens:
        raise InvalidArgument("empty ensemble")
    E = np.asarray(E, dtype=float)
    vals = np.array([ids_finite(d, E) for d in ens])
    se = vals.std(axis=0, ddof=1) / math.sqrt(len(ens)) if len(ens) > 1 else np.zeros(len(E))
    nu = ens[0].nu_eff
    return IdsComparison(E, vals.mean(axis=0), se, ids_limit(E, nu), nu)
