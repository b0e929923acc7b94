#!/usr/bin/env python3
"""Sweep the objective weight to trace the sum-rate / max-error tradeoff
curve for all schemes (fixed budget and block length).

Example:
    python scripts/run_tradeoff.py --trials 1000 --out tradeoff.csv
"""

import argparse

from fblopt.harness import default_config, emit_csv, run_scenario, write_manifest

OMEGA_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--pmax-db", type=float, default=6.0)
    ap.add_argument("--length", type=int, default=200)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="tradeoff.csv")
    args = ap.parse_args()

    cfg = default_config(
        omega_grid=OMEGA_SWEEP,
        l_grid=(args.length,),
        p_max_grid=(args.pmax_db,),
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
