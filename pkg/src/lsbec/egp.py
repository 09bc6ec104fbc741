"""Memoized unit GP energy e(kappa) = E^GP(1, 1, kappa) and its scaled forms.

Nodes sit on a geometric kappa grid (plus kappa = 0). Between nodes the slope
function s(kappa) = (e(kappa) - pi^2) / kappa is interpolated with a monotone
cubic (PCHIP) in t = asinh(kappa / kappa_min); s is smooth, decreasing, equal
to 3/4 at zero and tends to 1/2, so the interpolant inherits those shape
properties. Outside the grid, values come from direct extrapolated solves.
"""
from __future__ import annotations

import hashlib
import logging
import threading
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidArgument, TableLoadError
from .gp import PI2, GpProblem, minimize_gp

log = logging.getLogger(__name__)

# d e / d kappa at 0 equals (1/2) int_0^1 (sqrt2 sin pi z)^4 dz = 3/4
SLOPE_AT_ZERO = 0.75


def grid_size(kappa: float) -> int:
    """Interior points so that the healing length ~ kappa^{-1/2} is resolved."""
    m = 2048
    while m < 4.0 * np.sqrt(kappa):
        m = 2 * m
    return m


def _extrapolated(kappa: float, seed=None):
    """(e, mu_gp, phi_coarse) from Richardson over grids m and 2m+1."""
    m = grid_size(kappa)
    coarse = minimize_gp(GpProblem(1.0, 1.0, kappa, m), phi0=seed)
    fine_p = GpProblem(1.0, 1.0, kappa, 2 * m + 1)
    fine = minimize_gp(fine_p, phi0=np.interp(fine_p.grid[1:-1], coarse.z, coarse.phi))
    e = (4.0 * fine.energy - coarse.energy) / 3.0
    mu = (4.0 * fine.mu - coarse.mu) / 3.0
    return e, mu, coarse


@lru_cache(maxsize=4096)
def direct_egp(kappa: float) -> tuple[float, float]:
    """Uncached-grid fallback: extrapolated (e(kappa), mu_GP(kappa))."""
    e, mu, _ = _extrapolated(float(kappa))
    return e, mu


@dataclass
class EgpTable:
    kappa: np.ndarray  # first node is 0
    egp: np.ndarray
    kappa_min: float = 1e-3
    kappa_max: float = 1e6
    per_decade: int = 25

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=float)
        self.egp = np.asarray(self.egp, dtype=float)
        if self.kappa[0] != 0.0 or np.any(np.diff(self.kappa) <= 0):
            raise TableLoadError("table nodes must start at 0 and increase")
        slope = np.empty_like(self.egp)
        slope[0] = SLOPE_AT_ZERO
        slope[1:] = (self.egp[1:] - PI2) / self.kappa[1:]
        self._t_nodes = np.arcsinh(self.kappa / self.kappa_min)
        self._slope = PchipInterpolator(self._t_nodes, slope, extrapolate=False)
        self._dslope = self._slope.derivative()
        self._d2slope = self._slope.derivative(2)
        self._inverse = None

    # -- construction / persistence ---------------------------------------

    @staticmethod
    def nodes(kappa_min=1e-3, kappa_max=1e6, per_decade=25) -> np.ndarray:
        decades = np.log10(kappa_max / kappa_min)
        count = int(round(decades * per_decade)) + 1
        return np.concatenate(([0.0], np.geomspace(kappa_min, kappa_max, count)))

    @classmethod
    def build(cls, kappa_min=1e-3, kappa_max=1e6, per_decade=25, progress=None):
        kap = cls.nodes(kappa_min, kappa_max, per_decade)
        vals = np.empty_like(kap)
        vals[0] = PI2
        seed = None
        for i, k in enumerate(kap[1:], start=1):
            e, _, coarse = _extrapolated(k, seed)
            vals[i] = e
            nxt = kap[min(i + 1, len(kap) - 1)]
            # continuation seed only when the next grid has the same size
            seed = coarse.phi[1:-1] if grid_size(nxt) == coarse.problem.m else None
            if progress is not None:
                progress(i, len(kap) - 1)
        return cls(kap, vals, kappa_min, kappa_max, per_decade)

    def _data_lines(self):
        return [f"{k:.17e} {e:.17e}" for k, e in zip(self.kappa, self.egp)]

    def checksum(self) -> str:
        return hashlib.sha256("\n".join(self._data_lines()).encode()).hexdigest()

    def save(self, path):
        header = [
            "# lsbec e^GP table: kappa  e(kappa) = E^GP(1,1,kappa)",
            f"# kappa_min={float(self.kappa_min)!r} kappa_max={float(self.kappa_max)!r} "
            f"per_decade={self.per_decade} method=richardson-fd2",
            f"# sha256={self.checksum()}",
        ]
        Path(path).write_text("\n".join(header + self._data_lines()) + "\n")

    @classmethod
    def load(cls, path) -> "EgpTable":
        text = Path(path).read_text()
        return cls.loads(text, source=str(path))

    @classmethod
    def loads(cls, text: str, source: str = "<string>") -> "EgpTable":
        meta, rows, digest = {}, [], None
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        meta[key] = val
                continue
            rows.append(line.strip())
        digest = meta.get("sha256")
        if digest is None:
            raise TableLoadError(f"{source}: missing checksum")
        if hashlib.sha256("\n".join(rows).encode()).hexdigest() != digest:
            raise TableLoadError(f"{source}: checksum mismatch")
        try:
            data = np.array([[float(x) for x in r.split()] for r in rows])
            table = cls(
                data[:, 0],
                data[:, 1],
                float(meta["kappa_min"]),
                float(meta["kappa_max"]),
                int(meta["per_decade"]),
            )
        except (KeyError, ValueError, IndexError) as exc:
            raise TableLoadError(f"{source}: malformed table ({exc})") from exc
        return table

    # -- evaluation --------------------------------------------------------

    def slope(self, kappa):
        """(e(kappa) - pi^2) / kappa inside the table range."""
        return self._slope(np.arcsinh(np.asarray(kappa, float) / self.kappa_min))

    def __call__(self, kappa):
        return self.egp_at(kappa)

    def egp_at(self, kappa):
        k = np.asarray(kappa, dtype=float)
        if np.any(k < 0) or np.any(np.isnan(k)):
            raise InvalidArgument("e^GP needs kappa >= 0")
        flat = k.ravel()
        out = np.empty_like(flat)
        inside = flat <= self.kappa_max
        out[inside] = PI2 + flat[inside] * self.slope(flat[inside])
        for i in np.flatnonzero(~inside):
            out[i] = direct_egp(float(flat[i]))[0]
        return out.reshape(k.shape) if k.ndim else float(out[0])

    def mu_at(self, kappa):
        """GP chemical potential d(kappa e)/d kappa = e + (kappa/2) int phi^4."""
        k = np.asarray(kappa, dtype=float)
        flat = k.ravel()
        out = np.empty_like(flat)
        inside = flat <= self.kappa_max
        ki = flat[inside]
        t = np.arcsinh(ki / self.kappa_min)
        ds = self._dslope(t) / np.sqrt(ki * ki + self.kappa_min**2)
        out[inside] = PI2 + 2.0 * ki * self._slope(t) + ki * ki * ds
        for i in np.flatnonzero(~inside):
            out[i] = direct_egp(float(flat[i]))[1]
        return out.reshape(k.shape) if k.ndim else float(out[0])

    def dmu_at(self, kappa):
        """d mu_GP / d kappa inside the table range."""
        k = np.asarray(kappa, dtype=float)
        a = self.kappa_min
        t = np.arcsinh(k / a)
        r = np.sqrt(k * k + a * a)
        dt, d2t = 1.0 / r, -k / r**3
        s1 = self._dslope(t) * dt
        s2 = self._d2slope(t) * dt * dt + self._dslope(t) * d2t
        return 2.0 * self._slope(t) + 4.0 * k * s1 + k * k * s2

    def mu_excess(self, kappa):
        """mu_GP(kappa) - pi^2 inside the table range, without cancellation."""
        k = np.asarray(kappa, dtype=float)
        t = np.arcsinh(k / self.kappa_min)
        ds = self._dslope(t) / np.sqrt(k * k + self.kappa_min**2)
        return 2.0 * k * self._slope(t) + k * k * ds

    @property
    def x_max(self) -> float:
        return float(self.mu_excess(self.kappa_max))

    def _inverse_grid(self):
        if self._inverse is None:
            kf = np.concatenate(([0.0], np.geomspace(1e-9, self.kappa_max, 20001)))
            xf = self.mu_excess(kf)
            a = self.kappa_min
            self._inverse = (np.arcsinh(xf / a), np.arcsinh(kf / a))
        return self._inverse

    def kappa_star(self, x):
        """Root kappa of mu_GP(kappa) - pi^2 = x (0 for x <= 0).

        Uses mu_GP - pi^2 in [kappa, 3 kappa / 2]: the root lies in
        [2x/3, x] and results are clamped there.
        """
        xa = np.asarray(x, dtype=float)
        flat = xa.ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        big = flat > self.x_max
        mid = pos & ~big
        if np.any(mid):
            xm = flat[mid]
            u, v = self._inverse_grid()
            a = self.kappa_min
            k = a * np.sinh(np.interp(np.arcsinh(xm / a), u, v))
            for _ in range(4):
                f = self.mu_excess(k) - xm
                k = k - f / self.dmu_at(k)
                k = np.clip(k, 2.0 * xm / 3.0, np.minimum(xm, self.kappa_max))
            out[mid] = k
        for i in np.flatnonzero(big):
            out[i] = _direct_kappa_star(float(flat[i]), self.kappa_max)
        return out.reshape(xa.shape) if xa.ndim else float(out[0])


def _direct_kappa_star(x: float, kappa_lo: float) -> float:
    from scipy.optimize import brentq

    f = lambda k: direct_egp(k)[1] - PI2 - x
    lo, hi = max(2.0 * x / 3.0, kappa_lo), x
    if f(lo) >= 0:
        return lo
    return brentq(f, lo, hi, xtol=1e-12 * x, rtol=1e-14)


def kappa_star(x):
    """Coupling at which the unit GP chemical potential equals pi^2 + x."""
    return get_table().kappa_star(x)


_DATA_FILE = "egp_table.txt"
_lock = threading.Lock()
_table: EgpTable | None = None


def default_table_path() -> Path:
    return Path(str(resources.files("lsbec") / "data" / _DATA_FILE))


def get_table() -> EgpTable:
    """Shared table; loaded from package data, rebuilt if missing or corrupt."""
    global _table
    tab = _table
    if tab is not None:
        return tab
    with _lock:
        if _table is None:
            path = default_table_path()
            try:
                _table = EgpTable.load(path)
            except (OSError, TableLoadError) as exc:
                log.warning("e^GP table unavailable (%s); recomputing", exc)
                _table = EgpTable.build()
        return _table


def set_table(table: EgpTable | None):
    global _table
    with _lock:
        _table = table


def egp(kappa):
    """e(kappa) = E^GP(1, 1, kappa); vectorized, kappa >= 0."""
    k = np.asarray(kappa, dtype=float)
    if np.any(k < 0) or np.any(np.isnan(k)):
        raise InvalidArgument("e^GP needs kappa >= 0")
    return get_table().egp_at(kappa)


def gp_mu(kappa):
    """GP chemical potential of the unit problem at coupling kappa."""
    k = np.asarray(kappa, dtype=float)
    if np.any(k < 0):
        raise InvalidArgument("kappa must be >= 0")
    return get_table().mu_at(kappa)


def egp_scaled(n, l, g):
    """E^GP(n, l, g) = (n / l^2) e(n l g); zero where n == 0."""
    n_, l_, g_ = np.broadcast_arrays(
        np.asarray(n, float), np.asarray(l, float), np.asarray(g, float)
    )
    if np.any(n_ < 0) or np.any(g_ < 0):
        raise InvalidArgument("need n >= 0 and g >= 0")
    if np.any(l_[n_ > 0] <= 0):
        raise InvalidArgument("need l > 0 where n > 0")
    out = np.zeros(n_.shape)
    pos = n_ > 0
    out[pos] = n_[pos] / l_[pos] ** 2 * egp(n_[pos] * l_[pos] * g_[pos])
    return out if out.ndim else float(out)
