"""Synthetic UWB/gyro/magnetometer world.

Generates planar trajectories in a rectangular area with 5 anchors, then
samples range, RSS, gyroscope, and magnetometer readings against ground
truth. RSS combines log-distance path loss with a heading-dependent antenna
gain pattern and is quantized to a configurable dBi step.

Determinism: one numpy Generator per dataset, draws ordered per epoch as
5 ranges, 5 RSS, gyro, mag.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import so2

__all__ = [
    "Rectangle",
    "Anchor",
    "AntennaPattern",
    "PathLossModel",
    "SensorNoiseConfig",
    "TruePose",
    "SampleRecord",
    "default_anchors",
    "generate_trajectory",
    "measure_range",
    "measure_rss",
    "measure_gyro",
    "measure_mag",
    "quantize",
    "build_dataset",
    "write_dataset",
    "read_dataset",
    "read_metadata",
]

RANGE_FLOOR_M = 0.01

DATASET_COLUMNS = (
    ["t"]
    + [f"range_{i}" for i in range(5)]
    + [f"rss_{i}" for i in range(5)]
    + ["gyro", "mag", "gt_theta"]
)


@dataclass(frozen=True)
class Rectangle:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("degenerate area")

    @classmethod
    def centered(cls, width: float, height: float) -> "Rectangle":
        return cls(-width / 2, width / 2, -height / 2, height / 2)

    @property
    def center(self) -> np.ndarray:
        return np.array(
            [(self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0]
        )

    def contains(self, p: np.ndarray, slack: float = 1e-9) -> bool:
        return bool(
            self.xmin - slack <= p[0] <= self.xmax + slack
            and self.ymin - slack <= p[1] <= self.ymax + slack
        )


# Default experimental area: roughly 4 m x 2 m.
DEFAULT_AREA = Rectangle.centered(4.0, 2.0)


@dataclass(frozen=True)
class Anchor:
    id: int
    position: np.ndarray  # (2,) meters

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).ravel()
        if p.shape != (2,) or not np.all(np.isfinite(p)):
            raise ValueError("anchor position must be a finite 2-vector")
        object.__setattr__(self, "position", p)


def default_anchors(area: Rectangle = DEFAULT_AREA, margin: float = 0.3) -> list[Anchor]:
    """Five anchors: four just outside the corners, one past the mid +x wall."""
    dx, dy = margin, margin
    return [
        Anchor(0, (area.xmin - dx, area.ymin - dy)),
        Anchor(1, (area.xmax + dx, area.ymin - dy)),
        Anchor(2, (area.xmax + dx, area.ymax + dy)),
        Anchor(3, (area.xmin - dx, area.ymax + dy)),
        Anchor(4, (area.center[0], area.ymax + 2 * dy)),
    ]


@dataclass(frozen=True)
class AntennaPattern:
    """Heading-dependent antenna gain in dBi.

    Parametric form: g(phi) = g0 + a2*cos(2(phi - phi2)) + a1*cos(phi - phi1).
    A pure two-lobe pattern (a1 = 0) is pi-symmetric and leaves heading
    observable only mod pi, so the default mixes in a single-lobe term while
    keeping the peak-to-trough spread near 10 dBi. A measured gain table
    (periodic linear interpolation) may be supplied instead.
    """

    g0: float = 0.0
    a2: float = 4.0  # two-lobe amplitude, dBi
    phi2: float = 0.0
    a1: float = 2.0  # single-lobe amplitude, dBi
    phi1: float = 0.0
    table: np.ndarray | None = None  # (k, 2) of (bearing rad, gain dBi)

    def __post_init__(self):
        if self.table is not None:
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[1] != 2 or not np.all(np.isfinite(t)):
                raise ValueError("gain table must be a finite (k, 2) array")
            t = t[np.argsort(t[:, 0])]
            object.__setattr__(self, "table", t)

    def gain(self, phi) -> np.ndarray:
        """Gain at relative bearing(s) phi; 2*pi periodic."""
        phi = np.asarray(phi, dtype=float)
        if self.table is not None:
            xp = self.table[:, 0]
            fp = self.table[:, 1]
            # close the period so interpolation wraps
            xp = np.concatenate([xp, [xp[0] + 2 * math.pi]])
            fp = np.concatenate([fp, [fp[0]]])
            return np.interp(np.mod(phi - xp[0], 2 * math.pi) + xp[0], xp, fp)
        return (
            self.g0
            + self.a2 * np.cos(2.0 * (phi - self.phi2))
            + self.a1 * np.cos(phi - self.phi1)
        )


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss: p0 at reference distance d0, exponent gamma."""

    p0: float = -75.0  # dBi at d0
    d0: float = 1.0  # m
    gamma: float = 1.8

    def loss(self, distance) -> np.ndarray:
        d = np.maximum(np.asarray(distance, dtype=float), RANGE_FLOOR_M)
        return self.p0 - 10.0 * self.gamma * np.log10(d / self.d0)


@dataclass(frozen=True)
class SensorNoiseConfig:
    range_std: float = 0.10  # m, decimeter-level ranging
    rss_std: float = 0.5  # dBi
    gyro_psd: float = 3e-3  # rad^2/s, low-cost MEMS class
    mag_std: float = 0.05  # rad
    rss_quantum: float = 1.0  # dBi
    seed: int = 0
    # optional localized magnetic disturbance: constant heading bias inside
    # a disc, emulating proximity to metallic structure
    mag_disturbance_center: tuple[float, float] | None = None
    mag_disturbance_radius: float = 0.5
    mag_disturbance_bias: float = 0.5  # rad

    def __post_init__(self):
        if min(self.range_std, self.rss_std, self.mag_std) < 0 or self.gyro_psd < 0:
            raise ValueError("noise standard deviations must be non-negative")
        if self.rss_quantum <= 0:
            raise ValueError("rss quantum must be positive")


@dataclass(frozen=True)
class TruePose:
    t: float
    position: np.ndarray  # (2,) m
    heading: float  # rad
    rate: float  # rad/s

    def __post_init__(self):
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=float).ravel()
        )


@dataclass(frozen=True)
class SampleRecord:
    t: float
    ranges: np.ndarray  # (5,) m, anchor-id order
    rss: np.ndarray  # (5,) dBi, anchor-id order
    gyro: float  # rad/s
    mag: float  # rad
    gt_heading: float  # rad

    def feature_vector(self) -> np.ndarray:
        return np.concatenate([self.ranges, self.rss])


# ---------------------------------------------------------------------------
# trajectories


def _smooth_random_heading(duration, rate_hz, rng):
    """Heading as slow drift plus low-frequency sinusoids; the analytic rate
    keeps finite-difference consistency below 1e-6 rad/s at 100 Hz."""
    drift = rng.choice([-1.0, 1.0]) * rng.uniform(0.15, 0.25)
    amps = rng.uniform(0.2, 0.5, size=3)
    freqs = rng.uniform(0.05, 0.25, size=3)
    phases = rng.uniform(0.0, 2 * math.pi, size=3)
    theta0 = rng.uniform(-math.pi, math.pi)

    def theta(t):
        return theta0 + drift * t + np.sum(
            amps * np.sin(np.outer(t, freqs) + phases), axis=-1
        )

    def rate(t):
        return drift + np.sum(
            amps * freqs * np.cos(np.outer(t, freqs) + phases), axis=-1
        )

    return theta, rate


def generate_trajectory(
    area: Rectangle,
    duration: float,
    rate_hz: float,
    profile: str = "smooth-random",
    seed: int = 0,
) -> list[TruePose]:
    """Sample a ground-truth trajectory confined to ``area``.

    Profiles: smooth-random (drifting heading, quasi-random position sweep),
    waypoint-loop (elliptic loop with tangent heading), spin-in-place.
    """
    if duration <= 0 or rate_hz <= 0:
        raise ValueError("duration and rate must be positive")
    rng = np.random.default_rng(seed)
    n = int(round(duration * rate_hz))
    t = np.arange(n) / rate_hz
    cx, cy = area.center
    margin = 0.05
    ax = (area.xmax - area.xmin) / 2.0 - margin
    ay = (area.ymax - area.ymin) / 2.0 - margin

    if profile == "spin-in-place":
        omega = 2.5 * 2 * math.pi / duration  # >= 2 full revolutions
        pos = np.tile(area.center, (n, 1))
        heading = omega * t
        rate = np.full(n, omega)
    elif profile == "smooth-random":
        theta_f, rate_f = _smooth_random_heading(duration, rate_hz, rng)
        heading = theta_f(t)
        rate = rate_f(t)
        # quasi-random bounded position sweep: two incommensurate sinusoids
        # per axis with amplitude budget inside the area
        nu = rng.uniform(0.03, 0.12, size=4)
        ph = rng.uniform(0.0, 2 * math.pi, size=4)
        x = cx + ax * (0.6 * np.sin(nu[0] * t + ph[0]) + 0.4 * np.sin(nu[1] * t + ph[1]))
        y = cy + ay * (0.6 * np.sin(nu[2] * t + ph[2]) + 0.4 * np.sin(nu[3] * t + ph[3]))
        pos = np.column_stack([x, y])
    elif profile == "waypoint-loop":
        loops = max(2.0, duration / 60.0)
        psi0 = rng.uniform(0.0, 2 * math.pi)
        psi_rate = loops * 2 * math.pi / duration
        psi = psi0 + psi_rate * t
        rx, ry = 0.9 * ax, 0.9 * ay
        pos = np.column_stack([cx + rx * np.cos(psi), cy + ry * np.sin(psi)])
        vx, vy = -rx * np.sin(psi) * psi_rate, ry * np.cos(psi) * psi_rate
        axx, ayy = -rx * np.cos(psi) * psi_rate**2, -ry * np.sin(psi) * psi_rate**2
        heading = np.unwrap(np.arctan2(vy, vx))
        rate = (vx * ayy - vy * axx) / (vx**2 + vy**2)
    else:
        raise ValueError(f"unknown trajectory profile: {profile}")

    poses = [
        TruePose(t=float(ti), position=p, heading=float(h), rate=float(r))
        for ti, p, h, r in zip(t, pos, heading, rate)
    ]
    for p in poses:
        if not area.contains(p.position):
            raise AssertionError("trajectory escaped the area")
    return poses


# ---------------------------------------------------------------------------
# sensors


def quantize(x, quantum: float):
    return np.round(np.asarray(x, dtype=float) / quantum) * quantum


def measure_range(
    pose: TruePose, anchor: Anchor, cfg: SensorNoiseConfig, rng
) -> float:
    d = float(np.linalg.norm(pose.position - anchor.position))
    d += cfg.range_std * rng.standard_normal() if cfg.range_std > 0 else 0.0
    return max(d, RANGE_FLOOR_M)


def _relative_bearing(pose: TruePose, anchor: Anchor) -> float:
    delta = anchor.position - pose.position
    return math.atan2(delta[1], delta[0]) - pose.heading


def measure_rss(
    pose: TruePose,
    anchor: Anchor,
    pattern: AntennaPattern,
    cfg: SensorNoiseConfig,
    rng,
    path_loss: PathLossModel = PathLossModel(),
) -> float:
    d = float(np.linalg.norm(pose.position - anchor.position))
    rss = float(path_loss.loss(d)) + float(pattern.gain(_relative_bearing(pose, anchor)))
    rss += cfg.rss_std * rng.standard_normal() if cfg.rss_std > 0 else 0.0
    return float(quantize(rss, cfg.rss_quantum))


def measure_gyro(pose: TruePose, cfg: SensorNoiseConfig, dt: float, rng) -> float:
    if dt <= 0:
        raise ValueError("dt must be positive")
    noise = math.sqrt(cfg.gyro_psd / dt) * rng.standard_normal() if cfg.gyro_psd > 0 else 0.0
    return pose.rate + noise


def measure_mag(pose: TruePose, cfg: SensorNoiseConfig, rng) -> float:
    bias = 0.0
    if cfg.mag_disturbance_center is not None:
        center = np.asarray(cfg.mag_disturbance_center, dtype=float)
        if np.linalg.norm(pose.position - center) <= cfg.mag_disturbance_radius:
            bias = cfg.mag_disturbance_bias
    noise = cfg.mag_std * rng.standard_normal() if cfg.mag_std > 0 else 0.0
    return float(so2.wrap_angle(pose.heading + bias + noise))


def build_dataset(
    trajectory: list[TruePose],
    anchors: list[Anchor],
    pattern: AntennaPattern,
    cfg: SensorNoiseConfig,
    path_loss: PathLossModel = PathLossModel(),
) -> list[SampleRecord]:
    """One SampleRecord per pose, all sensors sampled at that epoch."""
    if len({a.id for a in anchors}) != len(anchors):
        raise ValueError("anchor ids must be unique")
    anchors = sorted(anchors, key=lambda a: a.id)
    rng = np.random.default_rng(cfg.seed)
    records = []
    prev_t = None
    for pose in trajectory:
        dt = pose.t - prev_t if prev_t is not None else None
        if dt is None:
            dt = trajectory[1].t - trajectory[0].t if len(trajectory) > 1 else 0.1
        ranges = np.array([measure_range(pose, a, cfg, rng) for a in anchors])
        rss = np.array(
            [measure_rss(pose, a, pattern, cfg, rng, path_loss) for a in anchors]
        )
        gyro = measure_gyro(pose, cfg, dt, rng)
        mag = measure_mag(pose, cfg, rng)
        records.append(
            SampleRecord(
                t=pose.t,
                ranges=ranges,
                rss=rss,
                gyro=gyro,
                mag=mag,
                gt_heading=float(so2.wrap_angle(pose.heading)),
            )
        )
        prev_t = pose.t
    return records


# ---------------------------------------------------------------------------
# dataset files


def write_dataset(path, records: list[SampleRecord], metadata: dict | None = None) -> None:
    """Write CSV (header + repr-precision decimals, round-trips exactly) and,
    if given, a JSON metadata sidecar at <stem>.meta.json."""
    path = Path(path)
    lines = [",".join(DATASET_COLUMNS)]
    for r in records:
        vals = [r.t, *r.ranges, *r.rss, r.gyro, r.mag, r.gt_heading]
        lines.append(",".join(repr(float(v)) for v in vals))
    path.write_text("\n".join(lines) + "\n")
    if metadata is not None:
        metadata_path(path).write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")


def metadata_path(dataset_path) -> Path:
    dataset_path = Path(dataset_path)
    return dataset_path.with_suffix(".meta.json")


def read_dataset(path) -> list[SampleRecord]:
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0].split(",") != DATASET_COLUMNS:
        raise ValueError(f"bad dataset header in {path}")
    records = []
    for ln in lines[1:]:
        v = [float(tok) for tok in ln.split(",")]
        if len(v) != len(DATASET_COLUMNS):
            raise ValueError(f"bad row width in {path}")
        records.append(
            SampleRecord(
                t=v[0],
                ranges=np.array(v[1:6]),
                rss=np.array(v[6:11]),
                gyro=v[11],
                mag=v[12],
                gt_heading=v[13],
            )
        )
    return records


def read_metadata(dataset_path) -> dict:
    return json.loads(metadata_path(dataset_path).read_text())


def world_metadata(
    area: Rectangle,
    anchors: list[Anchor],
    pattern: AntennaPattern,
    cfg: SensorNoiseConfig,
    path_loss: PathLossModel,
    seed: int,
    duration: float,
    rate_hz: float,
    profile: str,
) -> dict:
    return {
        "area": [area.xmin, area.xmax, area.ymin, area.ymax],
        "anchors": [{"id": a.id, "position": a.position.tolist()} for a in anchors],
        "pattern": {
            "g0": pattern.g0,
            "a2": pattern.a2,
            "phi2": pattern.phi2,
            "a1": pattern.a1,
            "phi1": pattern.phi1,
            "table": None if pattern.table is None else pattern.table.tolist(),
        },
        "path_loss": asdict(path_loss),
        "noise": asdict(cfg),
        "seed": seed,
        "duration_s": duration,
        "rate_hz": rate_hz,
        "profile": profile,
        "columns": DATASET_COLUMNS,
    }
