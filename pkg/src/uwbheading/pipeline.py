"""Command-line orchestration: dataset generation, GP training, filter
execution (gp-iekf / mag-iekf / deadreckon), Monte-Carlo evaluation, and
plot-data export.

Subcommands: generate, train, run, report. Exit codes: 0 success,
1 usage/config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gp, heading, iekf, so2, world

ESTIMATORS = ("gp-iekf", "mag-iekf", "deadreckon")
MAHALANOBIS_BOUND_997 = 8.807  # chi-square 99.7% quantile, 1 DOF


class DataError(RuntimeError):
    """Missing or malformed input data."""


class NumericalError(RuntimeError):
    """Numerical failure (factorization breakdown, NaN propagation)."""


# ---------------------------------------------------------------------------
# configs


@dataclass
class GenerateConfig:
    area_width: float = 4.0
    area_height: float = 2.0
    rate_hz: float = 10.0
    train_duration_s: float = 1800.0
    test_duration_s: float = 300.0
    train_profile: str = "smooth-random"
    test_profile: str = "smooth-random"
    seed: int = 0
    range_std: float = 0.10
    rss_std: float = 0.5
    gyro_psd: float = 3e-3
    mag_std: float = 0.05
    rss_quantum: float = 1.0
    pattern_g0: float = 0.0
    pattern_a2: float = 4.0
    pattern_phi2: float = 0.0
    pattern_a1: float = 2.0
    pattern_phi1: float = 0.0
    pathloss_p0: float = -75.0
    pathloss_d0: float = 1.0
    pathloss_gamma: float = 1.8

    def area(self) -> world.Rectangle:
        return world.Rectangle.centered(self.area_width, self.area_height)

    def pattern(self) -> world.AntennaPattern:
        return world.AntennaPattern(
            g0=self.pattern_g0,
            a2=self.pattern_a2,
            phi2=self.pattern_phi2,
            a1=self.pattern_a1,
            phi1=self.pattern_phi1,
        )

    def path_loss(self) -> world.PathLossModel:
        return world.PathLossModel(
            p0=self.pathloss_p0, d0=self.pathloss_d0, gamma=self.pathloss_gamma
        )

    def noise(self, seed: int) -> world.SensorNoiseConfig:
        return world.SensorNoiseConfig(
            range_std=self.range_std,
            rss_std=self.rss_std,
            gyro_psd=self.gyro_psd,
            mag_std=self.mag_std,
            rss_quantum=self.rss_quantum,
            seed=seed,
        )


@dataclass
class TrainConfig:
    grid_size: int = 5
    decades: float = 1.0
    descent_rounds: int = 60
    max_points: int = 1000
    seed: int = 0  # recorded for reproducibility; the search itself is deterministic

    def search(self) -> gp.HyperparamSearchConfig:
        return gp.HyperparamSearchConfig(
            grid_size=self.grid_size,
            decades=self.decades,
            descent_rounds=self.descent_rounds,
            max_points=self.max_points,
        )


@dataclass
class RunConfig:
    estimator: str = "gp-iekf"
    monte_carlo_runs: int = 100
    init_error_var: float = 1.0  # rad^2, per the 100-run Monte-Carlo protocol
    q_c: float | None = None  # rad^2/s; None -> dataset metadata gyro_psd
    seed: int = 0
    steady_fraction: float = 0.5  # trailing window for the steady +-3sigma
    gate: bool = False  # reject corrections above the 99.7% bound

    def __post_init__(self):
        if self.monte_carlo_runs < 1 or self.init_error_var <= 0:
            raise ValueError("runs >= 1 and init_error_var > 0 required")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")


# ---------------------------------------------------------------------------
# commands


def cmd_generate(cfg: GenerateConfig, out_dir) -> dict:
    """Write train/test datasets with disjoint trajectories in one world."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    area = cfg.area()
    anchors = world.default_anchors(area)
    pattern = cfg.pattern()
    path_loss = cfg.path_loss()
    paths = {}
    for split, duration, profile, traj_seed, noise_seed in (
        ("train", cfg.train_duration_s, cfg.train_profile, cfg.seed, cfg.seed + 1_000_003),
        ("test", cfg.test_duration_s, cfg.test_profile, cfg.seed + 1, cfg.seed + 2_000_003),
    ):
        traj = world.generate_trajectory(
            area, duration, cfg.rate_hz, profile=profile, seed=traj_seed
        )
        records = world.build_dataset(
            traj, anchors, pattern, cfg.noise(noise_seed), path_loss
        )
        meta = world.world_metadata(
            area, anchors, pattern, cfg.noise(noise_seed), path_loss,
            seed=traj_seed, duration=duration, rate_hz=cfg.rate_hz, profile=profile,
        )
        path = out_dir / f"{split}.csv"
        world.write_dataset(path, records, meta)
        paths[split] = path
    return paths


def _dataset_features(records) -> tuple[np.ndarray, np.ndarray]:
    feats = np.array([r.feature_vector() for r in records])
    headings = np.array([r.gt_heading for r in records])
    return feats, headings


def cmd_train(dataset_path, cfg: TrainConfig, out_dir) -> heading.HeadingGpPair:
    """Train the sin/cos GP pair and serialize it with a training summary."""
    out_dir = Path(out_dir)
    records = world.read_dataset(dataset_path)
    if len(records) < 2:
        raise DataError(f"training dataset {dataset_path} has fewer than 2 rows")
    feats, gts = _dataset_features(records)
    try:
        pair = heading.train_heading_gps(feats, gts, cfg.search())
    except gp.UnfittableDataError as exc:
        raise NumericalError(str(exc)) from exc
    pair.save(out_dir)
    summary = {
        "n_records": len(records),
        "n_used": int(pair.gp_sin.train.n),
        "max_points": cfg.max_points,
        "capped": len(records) > cfg.max_points,
        "sin": _gp_summary(pair.gp_sin),
        "cos": _gp_summary(pair.gp_cos),
    }
    (out_dir / "training_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return pair


def _gp_summary(model: gp.GpModel) -> dict:
    return {
        "sigma_f": model.params.sigma_f,
        "sigma_l": model.params.sigma_l,
        "sigma_n": model.params.sigma_n,
        "log_marginal_likelihood": model.lml,
    }


def _measurements_for(estimator, records, pair, mag_var):
    """Per-epoch HeadingMeasurement list (None -> no correction that epoch)."""
    if estimator == "deadreckon":
        return [None] * len(records)
    if estimator == "mag-iekf":
        return [
            heading.HeadingMeasurement(
                rot=so2.exp_so2(r.mag), var_theta=max(mag_var, heading.VAR_FLOOR)
            )
            for r in records
        ]
    vectors = np.array([r.feature_vector() for r in records])
    out = []
    for pt in heading.predict_pseudo_trig_many(pair, vectors):
        try:
            out.append(heading.normalize(pt))
        except heading.DegeneratePredictionError:
            out.append(None)
    return out


def run_filter(
    records,
    measurements,
    q_c: float,
    init_theta: float,
    init_var: float,
    gate: bool = False,
):
    """One filter pass; returns (error, three_sigma, mahalanobis) arrays.

    The error is the left-invariant group error log(gt^-1 est), wrapped into
    the principal branch; Mahalanobis entries are NaN where no correction ran.
    """
    n = len(records)
    noise = iekf.ProcessNoise(psd=q_c)
    state = iekf.FilterState.from_angle(init_theta, init_var)
    err = np.empty(n)
    sig3 = np.empty(n)
    mahal = np.full(n, math.nan)
    for k in range(n):
        if k > 0:
            dt = records[k].t - records[k - 1].t
            state = iekf.predict(
                state, iekf.GyroSample(rate=records[k - 1].gyro, dt=dt), noise
            )
        meas = measurements[k]
        if meas is not None:
            updated, stats = iekf.correct(state, meas)
            if not (gate and stats.mahalanobis > MAHALANOBIS_BOUND_997):
                state = updated
            mahal[k] = stats.mahalanobis
        err[k] = so2.wrap_angle(state.angle - records[k].gt_heading)
        sig3[k] = 3.0 * math.sqrt(state.cov)
        if not (math.isfinite(err[k]) and math.isfinite(sig3[k])):
            raise NumericalError(f"NaN propagation at epoch {k}")
    return err, sig3, mahal


def cmd_run(dataset_path, model_dir, cfg: RunConfig, out_dir) -> dict:
    """Monte-Carlo filter evaluation; writes traces.csv and metrics.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = world.read_dataset(dataset_path)
    if not records:
        raise DataError(f"empty dataset: {dataset_path}")
    try:
        meta = world.read_metadata(dataset_path)
    except FileNotFoundError:
        meta = {}
    noise_meta = meta.get("noise", {})
    q_c = cfg.q_c if cfg.q_c is not None else noise_meta.get("gyro_psd")
    if q_c is None:
        raise DataError("q_c not given and dataset metadata lacks gyro_psd")

    pair = None
    mag_var = noise_meta.get("mag_std", 0.05) ** 2
    if cfg.estimator == "gp-iekf":
        if model_dir is None:
            raise DataError("gp-iekf requires --models")
        pair = heading.HeadingGpPair.load(model_dir)
    measurements = _measurements_for(cfg.estimator, records, pair, mag_var)

    t = np.array([r.t for r in records])
    n = len(records)
    steady_start = int(n * (1.0 - cfg.steady_fraction))
    errs, sigs, mahals = [], [], []
    for r in range(cfg.monte_carlo_runs):
        rng = np.random.default_rng([cfg.seed, r])
        theta0 = so2.wrap_angle(
            records[0].gt_heading + math.sqrt(cfg.init_error_var) * rng.standard_normal()
        )
        e, s3, mh = run_filter(
            records, measurements, q_c, theta0, cfg.init_error_var, gate=cfg.gate
        )
        errs.append(e)
        sigs.append(s3)
        mahals.append(mh)
    errs = np.array(errs)
    sigs = np.array(sigs)
    mahals = np.array(mahals)

    rmse_deg = float(np.degrees(np.sqrt(np.mean(errs**2, axis=1))).mean())
    mean_3sigma_deg = float(np.degrees(sigs[:, steady_start:]).mean())
    finite = np.isfinite(mahals)
    nees_frac = (
        float(np.mean(mahals[finite] <= MAHALANOBIS_BOUND_997)) if finite.any() else math.nan
    )
    metrics = {
        "estimator": cfg.estimator,
        "monte_carlo_runs": cfg.monte_carlo_runs,
        "rmse_deg": rmse_deg,
        "mean_3sigma_deg": mean_3sigma_deg,
        "nees_within_bound_frac": nees_frac,
        "mahalanobis_bound": MAHALANOBIS_BOUND_997,
        "steady_fraction": cfg.steady_fraction,
        "q_c": q_c,
        "init_error_var": cfg.init_error_var,
        "seed": cfg.seed,
        "dataset_duration_s": float(t[-1] - t[0]) if n > 1 else 0.0,
        "n_epochs": n,
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")

    lines = ["t,run,error,three_sigma,mahalanobis"]
    for r in range(cfg.monte_carlo_runs):
        for k in range(n):
            lines.append(
                f"{float(t[k])!r},{r},{float(errs[r, k])!r},"
                f"{float(sigs[r, k])!r},{float(mahals[r, k])!r}"
            )
    (out_dir / "traces.csv").write_text("\n".join(lines) + "\n")
    return metrics


def _load_traces(run_dir):
    run_dir = Path(run_dir)
    metrics = json.loads((run_dir / "metrics.json").read_text())
    raw = np.genfromtxt(run_dir / "traces.csv", delimiter=",", skip_header=1)
    raw = np.atleast_2d(raw)
    t = np.unique(raw[:, 0])
    runs = int(raw[:, 1].max()) + 1
    n = t.size
    err = raw[:, 2].reshape(runs, n)
    sig = raw[:, 3].reshape(runs, n)
    mahal = raw[:, 4].reshape(runs, n)
    return metrics["estimator"], t, err, sig, mahal


def cmd_report(run_dirs, out_dir) -> list[Path]:
    """Aggregate run traces into plot-data files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = []
    for d in run_dirs:
        if not (Path(d) / "traces.csv").exists():
            raise DataError(f"missing traces in {d}")
        loaded.append(_load_traces(d))
    written = []

    for est, t, err, sig, _ in loaded:
        lines = ["t,mean_error,mean_three_sigma,minus_three_sigma"]
        me = err.mean(axis=0)
        ms = sig.mean(axis=0)
        for k in range(t.size):
            lines.append(
                f"{float(t[k])!r},{float(me[k])!r},{float(ms[k])!r},{float(-ms[k])!r}"
            )
        p = out_dir / f"error_bounds_{est}.csv"
        p.write_text("\n".join(lines) + "\n")
        written.append(p)

    with_mahal = [
        (est, t, mh) for est, t, _, _, mh in loaded if np.isfinite(mh).any()
    ]
    if with_mahal:
        t = with_mahal[0][1]
        header = ["t"] + [f"mean_mahalanobis_{est}" for est, _, _ in with_mahal] + ["bound"]
        lines = [",".join(header)]
        cols = [np.nanmean(mh, axis=0) for _, _, mh in with_mahal]
        for k in range(t.size):
            vals = [repr(float(t[k]))] + [repr(float(c[k])) for c in cols]
            vals.append(repr(MAHALANOBIS_BOUND_997))
            lines.append(",".join(vals))
        p = out_dir / "mahalanobis.csv"
        p.write_text("\n".join(lines) + "\n")
        written.append(p)

    t = loaded[0][1]
    header = ["t"] + [f"abs_error_{est}" for est, *_ in loaded]
    lines = [",".join(header)]
    cols = [np.abs(err).mean(axis=0) for _, _, err, _, _ in loaded]
    for k in range(t.size):
        vals = [repr(float(t[k]))] + [repr(float(c[k])) for c in cols]
        lines.append(",".join(vals))
    p = out_dir / "abs_error.csv"
    p.write_text("\n".join(lines) + "\n")
    written.append(p)
    return written


# ---------------------------------------------------------------------------
# CLI


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _config_section(path, section) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from exc
    return data.get(section, {})


class ConfigError(RuntimeError):
    pass


def _build(cls, file_values: dict, overrides: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(file_values) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uwb-heading", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate synthetic train/test datasets")
    p_gen.add_argument("--config", help="JSON config file (section: generate)")
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--out", required=True, help="output directory")

    p_train = sub.add_parser("train", help="train the sin/cos heading GPs")
    p_train.add_argument("--config", help="JSON config file (section: train)")
    p_train.add_argument("--dataset", required=True)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--out", required=True, help="model output directory")

    p_run = sub.add_parser("run", help="Monte-Carlo filter evaluation")
    p_run.add_argument("--config", help="JSON config file (section: run)")
    p_run.add_argument("--dataset", required=True)
    p_run.add_argument("--models", help="model directory (gp-iekf only)")
    p_run.add_argument("--estimator", choices=ESTIMATORS)
    p_run.add_argument("--runs", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", required=True)

    p_rep = sub.add_parser("report", help="aggregate run traces into plot data")
    p_rep.add_argument("--runs-dirs", nargs="+", required=True,
                       help="one or more cmd-run output directories")
    p_rep.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            cfg = _build(
                GenerateConfig, _config_section(args.config, "generate"),
                {"seed": args.seed},
            )
            paths = cmd_generate(cfg, args.out)
            for split, p in paths.items():
                print(f"{split}: {p}")
        elif args.command == "train":
            cfg = _build(
                TrainConfig, _config_section(args.config, "train"),
                {"seed": args.seed},
            )
            pair = cmd_train(args.dataset, cfg, args.out)
            print(
                f"trained: sin lml={pair.gp_sin.lml:.2f} cos lml={pair.gp_cos.lml:.2f}"
                f" -> {args.out}"
            )
        elif args.command == "run":
            cfg = _build(
                RunConfig, _config_section(args.config, "run"),
                {
                    "estimator": args.estimator,
                    "monte_carlo_runs": args.runs,
                    "seed": args.seed,
                },
            )
            metrics = cmd_run(args.dataset, args.models, cfg, args.out)
            print(
                f"{metrics['estimator']}: RMSE {metrics['rmse_deg']:.2f} deg, "
                f"steady 3sigma {metrics['mean_3sigma_deg']:.2f} deg, "
                f"NEES-in-bound {metrics['nees_within_bound_frac']:.3f}"
            )
        elif args.command == "report":
            for p in cmd_report(args.runs_dirs, args.out):
                print(p)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
