"""Run a regime sweep from a YAML config and print the median max-fraction table."""
import argparse
import json

from lsbec.experiment import RunConfig, run_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/types.yaml")
    ap.add_argument("--out", default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)

    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    man = run_experiment(cfg, out_dir=args.out, workers=args.threads)
    print(f"{'regime':<16}{'label':<14}{'slope':>9}  medians of max_j N_j / N")
    for t in man["types"]:
        med = " ".join(f"{x:.4g}" for x in t["medians"])
        print(f"{t['tag']:<16}{str(t['label']):<14}{t.get('slope', float('nan')):>9.3f}  {med}")
    if man["hard_failures"]:
        print(json.dumps(man["hard_failures"][:10], indent=2))
    return 1 if man["hard_failures"] else 0


if __name__ == "__main__":
    raise SystemExit(main())
