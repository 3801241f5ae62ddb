#!/usr/bin/env python3
"""Sweep the RSS quantization step and report raw GP heading RMSE.

Coarser quantization discards orientation information carried by the
antenna gain, so RMSE should trend upward with the step size. Runs a few
seeds per step and prints a small table.
"""

import argparse
import math

import numpy as np

from uwbheading import gp, heading, pipeline, so2, world


def gp_rmse_deg(pair, records) -> float:
    feats = np.array([r.feature_vector() for r in records])
    errs = []
    for pt, rec in zip(heading.predict_pseudo_trig_many(pair, feats), records):
        try:
            m = heading.normalize(pt)
        except heading.DegeneratePredictionError:
            continue
        errs.append(so2.wrap_angle(so2.log_so2(m.rot) - rec.gt_heading))
    return math.degrees(float(np.sqrt(np.mean(np.square(errs)))))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quanta", type=float, nargs="+", default=[0.1, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--train-s", type=float, default=400.0)
    ap.add_argument("--test-s", type=float, default=60.0)
    args = ap.parse_args()

    search = gp.HyperparamSearchConfig(grid_size=3, descent_rounds=30, max_points=400)
    print(f"{'quantum_dBi':>12} {'rmse_deg (per seed)':>30} {'mean':>8}")
    for quantum in args.quanta:
        rmses = []
        for seed in range(args.seeds):
            cfg = pipeline.GenerateConfig(
                seed=seed, rate_hz=5.0, rss_std=0.1, rss_quantum=quantum
            )
            area = cfg.area()
            anchors = world.default_anchors(area)
            splits = []
            for duration, tseed, nseed in (
                (args.train_s, seed, seed + 1_000_003),
                (args.test_s, seed + 1, seed + 2_000_003),
            ):
                traj = world.generate_trajectory(
                    area, duration, cfg.rate_hz, "smooth-random", tseed
                )
                splits.append(
                    world.build_dataset(
                        traj, anchors, cfg.pattern(), cfg.noise(nseed), cfg.path_loss()
                    )
                )
            train, test = splits
            feats = np.array([r.feature_vector() for r in train])
            gts = np.array([r.gt_heading for r in train])
            pair = heading.train_heading_gps(feats, gts, search)
            rmses.append(gp_rmse_deg(pair, test))
        per_seed = " ".join(f"{r:6.2f}" for r in rmses)
        print(f"{quantum:>12.2f} {per_seed:>30} {np.mean(rmses):8.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
