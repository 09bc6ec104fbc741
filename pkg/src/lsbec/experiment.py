"""Regime sweeps: sample, calibrate, allocate and diagnose over (N, realization)."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .allocation import Calibration, allocate_legendre, allocate_optimal, calibrate_mu, rescaled_total
from .diagnostics import ScalingRegime, classify_type, diagnose
from .errors import CalibrationFailure, InvalidArgument
from .landscape import sample_decomposition

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    regimes: list  # ScalingRegime instances
    N_list: list
    realizations: int = 10
    master_seed: int = 0
    nu: float = 1.0  # unscaled impurity intensity; s_N = nu_N / nu
    c: float = 1.0
    c_tilde: float = 1.0
    eps_grid: list = field(default_factory=lambda: [0.1, 0.3, 1.0, 3.0, 10.0])  # in units of the default band edge
    legendre: bool = True
    legendre_rescale: bool = False  # also record n_hat = N / sum_j M_j
    output_dir: str = "runs/out"
    workers: int = 1
    name: str = "run"

    def __post_init__(self):
        self.N_list = [int(n) for n in self.N_list]
        if not self.N_list or any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise InvalidArgument("N_list must be non-empty and strictly increasing")
        if self.N_list[0] < 3:
            raise InvalidArgument("N values must be >= 3")
        if self.realizations < 1:
            raise InvalidArgument("realizations must be >= 1")
        if self.workers < 1:
            raise InvalidArgument("workers must be >= 1")
        self.regimes = [r if isinstance(r, ScalingRegime) else ScalingRegime.from_dict(r)
                        for r in self.regimes]
        if not self.regimes:
            raise InvalidArgument("at least one regime is required")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "regime" in d:
            d["regimes"] = [d.pop("regime")]
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidArgument(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise InvalidArgument(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidArgument(f"{path}: config must be a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["regimes"] = [dataclasses.asdict(r) for r in self.regimes]
        return d


def _task(args):
    """One (N, realization): a landscape analysed under every regime."""
    cfg_dict, N, r, cal_mus = args
    cfg = RunConfig.from_dict(cfg_dict)
    records = []
    cache = {}
    for k, regime in enumerate(cfg.regimes):
        nu_N = regime.nu_at(N)
        s = nu_N / cfg.nu
        key = (s, regime.rho)
        if key not in cache:
            cache[key] = sample_decomposition(cfg.nu, regime.rho, N, s, seed=(cfg.master_seed, N, r))
        d = cache[key]
        g = regime.g_at(N)
        alloc = allocate_optimal(d, N, g)
        eps0 = 10.0 * math.pi**2 * nu_N**2 / math.log(N) ** 2
        rep = diagnose(alloc.occupations, d, g, regime.eta, regime.delta, realization=r,
                       eps=eps0, eps_grid=[eps0 * f for f in cfg.eps_grid], c=cfg.c, c_tilde=cfg.c_tilde)
        rec = {"regime": k, "tag": regime.tag}
        rec.update(rep.to_record())
        checks = {
            "length_sum": abs(d.lengths.sum() - d.L) <= 1e-9 * d.L,
            "optimal_total": alloc.total == N,
            "fraction_range": 0.0 <= rep.condensate_fraction <= 1.0 + 1e-12,
            "fraction_monotone": bool(np.all(np.diff(rep.fraction_grid) >= -1e-12)),
        }
        cal = cal_mus.get((k, N))
        if cfg.legendre and cal is not None:
            leg = allocate_legendre(d, Calibration(**cal))
            rec["legendre_total_ratio"] = leg.total / N
            if cfg.legendre_rescale:
                rec["legendre_n_hat"] = rescaled_total(leg, N)
            checks["legendre_exclusions"] = bool(np.all(leg.occupations[d.excluded_mask] == 0))
        rec["optimal_energy"] = alloc.energy
        rec["checks"] = checks
        records.append(_clean(rec))
    return records


def _clean(obj):
    """JSON-safe copy: non-finite floats become None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _summaries(cfg: RunConfig, records) -> tuple[str, list]:
    cols = ["regime", "tag", "N", "count", "max_fraction_median", "max_fraction_mean",
            "condensate_fraction_median", "largest_density_max", "density_bound_2",
            "density_ratio_max", "energy_per_particle_median", "energy_bound",
            "legendre_ratio_median"]
    buf = io.StringIO()
    for k, r in enumerate(cfg.regimes):
        buf.write(f"# regime {k}: tag={r.tag} eta={r.eta} delta={r.delta} rho={r.rho} "
                  f"nu=({r.nu.a},{r.nu.p},{r.nu.q}) g=({r.g.a},{r.g.p},{r.g.q})\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    types = []
    for k, regime in enumerate(cfg.regimes):
        medians = []
        for N in cfg.N_list:
            rs = [x for x in records if x["regime"] == k and x["N"] == N]
            mf = np.array([x["max_fraction"] for x in rs])
            dens = np.array([x["largest_density"] for x in rs])
            bound2 = rs[0]["density_bound_2"]
            leg = np.array([math.nan if x.get("legendre_total_ratio") is None else x["legendre_total_ratio"]
                            for x in rs])
            medians.append(float(np.median(mf)))
            writer.writerow([
                k, regime.tag, N, len(rs), repr(float(np.median(mf))), repr(float(mf.mean())),
                repr(float(np.median([x["condensate_fraction"] for x in rs]))),
                repr(float(dens.max())), repr(bound2),
                repr(float((dens / bound2).max())),
                repr(float(np.median([x["energy_per_particle"] for x in rs]))),
                repr(rs[0]["energy_bound"]),
                repr(float(np.median(leg))) if np.all(np.isfinite(leg)) else "nan",
            ])
        try:
            fit = classify_type(cfg.N_list, medians)
            types.append({"regime": k, "tag": regime.tag, "label": fit.label, "slope": fit.slope,
                          "medians": medians})
        except InvalidArgument as exc:
            types.append({"regime": k, "tag": regime.tag, "label": None, "reason": str(exc),
                          "medians": medians})
    return buf.getvalue(), types


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def run_experiment(cfg: RunConfig, out_dir=None, workers=None) -> dict:
    """Run the sweep, write records/summary/manifest, and return the manifest."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or cfg.workers
    started = time.time()

    calibrations, cal_mus = [], {}
    for k, regime in enumerate(cfg.regimes):
        for N in cfg.N_list:
            g, nu_N = regime.g_at(N), regime.nu_at(N)
            if g > 0 and cfg.legendre:
                try:
                    cal = calibrate_mu(g, nu_N, regime.rho, nu_N / cfg.nu)
                except CalibrationFailure as exc:
                    calibrations.append({"regime": k, "N": N, "error": str(exc)})
                    continue
                cal_mus[(k, N)] = dataclasses.asdict(cal)
                rec = {"regime": k, "N": N}
                rec.update(cal.to_record())
                calibrations.append(rec)

    cfg_dict = cfg.to_dict()
    tasks = [(cfg_dict, N, r, cal_mus) for N in cfg.N_list for r in range(cfg.realizations)]
    if workers == 1:
        results = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=1))
    records = sorted((rec for group in results for rec in group),
                     key=lambda x: (x["regime"], x["N"], x["realization"]))

    lines = "".join(json.dumps(rec, sort_keys=False) + "\n" for rec in records)
    (out / "records.jsonl").write_text(lines)
    summary, types = _summaries(cfg, records)
    (out / "summary.csv").write_text(summary)

    failures = [
        {"regime": r["regime"], "N": r["N"], "realization": r["realization"], "check": name}
        for r in records for name, ok in r["checks"].items() if not ok
    ]
    failures += [{"calibration": c} for c in calibrations
                 if "error" in c or not c.get("bounds_ok", True)]
    manifest = {
        "name": cfg.name,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "elapsed_s": round(time.time() - started, 3),
        "workers": workers,
        "config": cfg_dict,
        "regime_conditions": [r.conditions() for r in cfg.regimes],
        "regime_valid": [r.valid for r in cfg.regimes],
        "calibrations": _clean(calibrations),
        "types": types,
        "checksums": {"records.jsonl": _sha256(lines), "summary.csv": _sha256(summary)},
        "n_records": len(records),
        "hard_failures": failures,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def append_to_manifest(path, key: str, record: dict):
    """Append ``record`` to list ``key`` of a JSON manifest (created if absent)."""
    p = Path(path)
    data = json.loads(p.read_text()) if p.exists() else {}
    data.setdefault(key, []).append(record)
    p.write_text(json.dumps(data, indent=2) + "\n")
