#!/usr/bin/env python3
"""Mean sum throughput of every scheme as the power budget grows
(short codewords, rate-heavy weighting).

Example:
    python scripts/run_throughput_vs_pmax.py --trials 1000 --out vs_pmax.csv
"""

import argparse

from fblopt.harness import default_config, emit_csv, run_scenario, write_manifest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--pmax-db", type=float, nargs="+", default=[0, 2, 4, 6, 8, 10])
    ap.add_argument("--length", type=int, default=100)
    ap.add_argument("--omega", type=float, default=0.9)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="vs_pmax.csv")
    args = ap.parse_args()

    cfg = default_config(
        omega_grid=(args.omega,),
        l_grid=(args.length,),
        p_max_grid=tuple(args.pmax_db),
        n_trials=args.trials,
        master_seed=args.seed,
        n_jobs=args.jobs,
    )
    rows = run_scenario(cfg)
    emit_csv(rows, args.out)
    write_manifest(cfg, args.out)
    print(f"{len(rows)} rows -> {args.out}")


if __name__ == "__main__":
    main()
