"""Command line entry point: ``lsbec <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import CalibrationFailure, ConvergenceFailure, InvalidArgument, TableLoadError


def _emit(text: str, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sample(a):
    from .landscape import sample_decomposition

    d = sample_decomposition(a.nu, a.rho, a.N, a.s, seed=a.seed)
    _emit(d.to_text(), a.out)


def cmd_gp(a):
    from . import egp as egp_mod
    from .gp import GpProblem, minimize_gp, richardson_energy

    if a.import_table:
        egp_mod.set_table(egp_mod.EgpTable.load(a.import_table))
    if a.export_table:
        egp_mod.get_table().save(a.export_table)
    sol = minimize_gp(GpProblem(a.n, a.l, a.g, a.m))
    rec = {
        "n": a.n, "l": a.l, "g": a.g, "m": a.m,
        "energy_grid": sol.energy, "energy_extrapolated": richardson_energy(a.n, a.l, a.g, a.m),
        "energy_table": float(egp_mod.egp_scaled(a.n, a.l, a.g)),
        "mu": sol.mu, "quartic": sol.quartic, "residual": sol.residual,
    }
    _emit(json.dumps(rec, indent=2) + "\n", a.out)


def cmd_calibrate(a):
    from .allocation import calibrate_mu
    from .experiment import append_to_manifest

    cal = calibrate_mu(a.g, a.nu, a.rho, a.s)
    rec = cal.to_record()
    if a.manifest:
        append_to_manifest(a.manifest, "calibrations", rec)
    _emit(json.dumps(rec, indent=2) + "\n", a.out)


def cmd_allocate(a):
    from .allocation import allocate_bruteforce, allocate_legendre, allocate_optimal, calibrate_mu
    from .landscape import IntervalDecomposition

    d = IntervalDecomposition.load(a.decomposition)
    N = d.N if a.N is None else a.N
    if a.method == "optimal":
        alloc = allocate_optimal(d, N, a.g)
    elif a.method == "bruteforce":
        alloc = allocate_bruteforce(d, N, a.g)
    else:
        alloc = allocate_legendre(d, calibrate_mu(a.g, d.nu_eff, d.rho, d.s))
    _emit(alloc.to_text(), a.out)


def cmd_diagnose(a):
    from .allocation import Allocation
    from .diagnostics import diagnose
    from .landscape import IntervalDecomposition

    d = IntervalDecomposition.load(a.decomposition)
    alloc = Allocation.load(a.allocation)
    rep = diagnose(alloc.occupations, d, alloc.g, a.eta, a.delta, eps=a.eps, c=a.c, c_tilde=a.c_tilde)
    _emit(json.dumps(rep.to_record(), indent=2) + "\n", a.out)


def cmd_experiment(a):
    from .experiment import RunConfig, run_experiment

    if not a.config:
        raise InvalidArgument("experiment needs --config")
    cfg = RunConfig.load(a.config)
    if a.seed is not None:
        cfg.master_seed = a.seed
    man = run_experiment(cfg, out_dir=a.out, workers=a.threads)
    print(json.dumps({"records": man["n_records"], "types": man["types"],
                      "hard_failures": len(man["hard_failures"])}, indent=2))
    return 1 if man["hard_failures"] else 0


def cmd_verify(a):
    from .verify import verify_suite

    c, c_tilde = a.c, a.c_tilde
    if a.config:
        import yaml

        conf = yaml.safe_load(Path(a.config).read_text()) or {}
        c, c_tilde = conf.get("c", c), conf.get("c_tilde", c_tilde)
    rep = verify_suite(c=c, c_tilde=c_tilde, table_path=a.table, seed=a.seed or 0)
    print(rep.table())
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--config", default=None, help="YAML run config")
    common.add_argument("--threads", type=int, default=None, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lsbec", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sample", parents=[common], help="sample an interval decomposition")
    s.add_argument("--nu", type=float, default=1.0)
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--s", type=float, default=1.0)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("gp", parents=[common], help="GP ground state energy")
    s.add_argument("--n", type=float, default=1.0)
    s.add_argument("--l", type=float, default=1.0)
    s.add_argument("--g", type=float, default=0.0)
    s.add_argument("--m", type=int, default=2048)
    s.add_argument("--export-table", default=None)
    s.add_argument("--import-table", default=None)
    s.set_defaults(func=cmd_gp)

    s = sub.add_parser("calibrate", parents=[common], help="calibrate the chemical potential")
    s.add_argument("--g", type=float, required=True)
    s.add_argument("--nu", type=float, default=1.0, help="scaled intensity nu_N")
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--manifest", default=None, help="append the record to this manifest")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("allocate", parents=[common], help="allocate particles to intervals")
    s.add_argument("--decomposition", required=True)
    s.add_argument("--g", type=float, required=True)
    s.add_argument("--N", type=int, default=None)
    s.add_argument("--method", choices=["optimal", "legendre", "bruteforce"], default="optimal")
    s.set_defaults(func=cmd_allocate)

    s = sub.add_parser("diagnose", parents=[common], help="diagnostics of an allocation")
    s.add_argument("--decomposition", required=True)
    s.add_argument("--allocation", required=True)
    s.add_argument("--eta", type=float, default=0.25)
    s.add_argument("--delta", type=float, default=0.05)
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--c-tilde", type=float, default=1.0)
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("experiment", parents=[common], help="run a regime sweep")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    s.add_argument("--table", default=None, help="e^GP table file to check")
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--c-tilde", type=float, default=1.0)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.cmd == "sample" and args.seed is None:
        args.seed = 0
    try:
        rc = args.func(args)
    except (InvalidArgument, CalibrationFailure, ConvergenceFailure, TableLoadError, OSError) as exc:
        print(f"lsbec {args.cmd}: error: {exc}", file=sys.stderr)
        return 2
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
