"""Heading prediction from UWB range + RSS features.

Two independent GPs map the 10-dimensional feature vector (5 ranges, 5 RSS)
to pseudo-sine and pseudo-cosine of heading. Their joint output is
normalized onto SO(2) and the scalar heading variance is propagated through
the normalization with a first-order expansion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gp, so2

__all__ = [
    "UwbFeature",
    "PseudoTrig",
    "HeadingMeasurement",
    "HeadingGpPair",
    "DegeneratePredictionError",
    "train_heading_gps",
    "predict_pseudo_trig",
    "predict_pseudo_trig_many",
    "normalize",
    "NORM_EPS",
    "VAR_FLOOR",
]

NORM_EPS = 1e-3  # below this radius the linearization diverges; skip the epoch
VAR_FLOOR = 1e-8

_I2 = np.eye(2)
_OMEGA = np.array([[0.0, -1.0], [1.0, 0.0]])


class DegeneratePredictionError(ValueError):
    """Pseudo-trig prediction too close to the origin to normalize."""


@dataclass(frozen=True)
class UwbFeature:
    """One epoch of UWB observables, in fixed anchor-id order."""

    ranges: np.ndarray  # (5,) meters
    rss: np.ndarray  # (5,) dBi

    def __post_init__(self):
        r = np.asarray(self.ranges, dtype=float).ravel()
        g = np.asarray(self.rss, dtype=float).ravel()
        if not (np.all(np.isfinite(r)) and np.all(r > 0)):
            raise ValueError("ranges must be strictly positive and finite")
        if not np.all(np.isfinite(g)):
            raise ValueError("rss values must be finite")
        object.__setattr__(self, "ranges", r)
        object.__setattr__(self, "rss", g)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.ranges, self.rss])


@dataclass(frozen=True)
class PseudoTrig:
    """Unconstrained GP predictions of sin/cos heading with their variances."""

    s: float
    c: float
    var_s: float
    var_c: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.c)):
            raise ValueError("pseudo-trig values must be finite")
        if self.var_s <= 0 or self.var_c <= 0:
            raise ValueError("pseudo-trig variances must be positive")


@dataclass(frozen=True)
class HeadingMeasurement:
    """A proper SO(2) heading measurement with scalar variance (rad^2)."""

    rot: np.ndarray  # (2, 2)
    var_theta: float

    def __post_init__(self):
        object.__setattr__(self, "rot", so2.check_rotation(self.rot))
        if self.var_theta <= 0:
            raise ValueError("measurement variance must be positive")


@dataclass(frozen=True)
class HeadingGpPair:
    """Independent sin/cos GPs sharing the feature domain."""

    gp_sin: gp.GpModel
    gp_cos: gp.GpModel

    def __post_init__(self):
        if self.gp_sin.train.d != self.gp_cos.train.d:
            raise ValueError("sin/cos GPs disagree on feature dimension")
        if self.gp_sin.train.n != self.gp_cos.train.n:
            raise ValueError("sin/cos GPs disagree on training-set size")

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.gp_sin.save(directory / "gp_sin.npz")
        self.gp_cos.save(directory / "gp_cos.npz")
        manifest = {
            "feature_order": "range_0..4,rss_0..4 by anchor id",
            "feature_dim": int(self.gp_sin.train.d),
            "norm_eps": NORM_EPS,
            "files": {"sin": "gp_sin.npz", "cos": "gp_cos.npz"},
        }
        (directory / "heading_model.json").write_text(
            json.dumps(manifest, indent=2) + "\n"
        )

    @classmethod
    def load(cls, directory) -> "HeadingGpPair":
        directory = Path(directory)
        manifest = json.loads((directory / "heading_model.json").read_text())
        return cls(
            gp_sin=gp.GpModel.load(directory / manifest["files"]["sin"]),
            gp_cos=gp.GpModel.load(directory / manifest["files"]["cos"]),
        )


def train_heading_gps(
    features: np.ndarray,
    headings: np.ndarray,
    search: gp.HyperparamSearchConfig | None = None,
) -> HeadingGpPair:
    """Fit the sin and cos GPs on a common feature matrix.

    ``features`` is (m, 10) raw (unstandardized) vectors; ``headings`` is
    (m,) ground-truth angles in radians.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    headings = np.asarray(headings, dtype=float).ravel()
    if features.shape[0] != headings.shape[0]:
        raise ValueError("feature/heading row counts differ")
    if features.shape[0] < 2:
        raise ValueError("need at least 2 training records")
    if not np.all(np.isfinite(headings)):
        raise ValueError("headings must be finite")
    std = gp.Standardizer.from_data(features)
    xs = std.apply(features)
    gp_sin = gp.fit(
        gp.TrainingSet(x=xs, y=np.sin(headings), standardizer=std), search
    )
    gp_cos = gp.fit(
        gp.TrainingSet(x=xs, y=np.cos(headings), standardizer=std), search
    )
    return HeadingGpPair(gp_sin=gp_sin, gp_cos=gp_cos)


def predict_pseudo_trig(pair: HeadingGpPair, feature: UwbFeature) -> PseudoTrig:
    s, c, vs, vc = (
        float(v[0])
        for v in _predict_arrays(pair, feature.as_vector()[None, :])
    )
    return PseudoTrig(s=s, c=c, var_s=vs, var_c=vc)


def _predict_arrays(pair, vectors):
    s, vs = pair.gp_sin.predict_many(vectors)
    c, vc = pair.gp_cos.predict_many(vectors)
    return s, c, np.maximum(vs, VAR_FLOOR), np.maximum(vc, VAR_FLOOR)


def predict_pseudo_trig_many(
    pair: HeadingGpPair, vectors: np.ndarray
) -> list[PseudoTrig]:
    """Batch pseudo-trig prediction over (m, 10) raw feature vectors."""
    s, c, vs, vc = _predict_arrays(pair, np.atleast_2d(vectors))
    return [
        PseudoTrig(s=float(si), c=float(ci), var_s=float(vi), var_c=float(wi))
        for si, ci, vi, wi in zip(s, c, vs, vc)
    ]


def _vee_skew_part(m: np.ndarray) -> float:
    return 0.5 * (m[1, 0] - m[0, 1])


def normalize(pt: PseudoTrig) -> HeadingMeasurement:
    """Project pseudo-trig onto SO(2) and propagate the variance.

    The heading variance is the first-order push-forward of (var_c, var_s)
    through the normalization, evaluated exactly from the perturbation
    matrices D and E of the scaled rotation.
    """
    s, c = pt.s, pt.c
    norm = math.hypot(s, c)
    if norm < NORM_EPS:
        raise DegeneratePredictionError(
            f"pseudo-trig radius {norm:.3e} below {NORM_EPS}; skip this epoch"
        )
    y = np.array([[c, -s], [s, c]]) / norm
    a1 = 1.0 / norm
    a2 = -c / norm**3
    a3 = -s / norm**3
    d_mat = (a1 + a2 * c) * _I2 + (a2 * s) * _OMEGA
    e_mat = (a1 + a3 * s) * _OMEGA + (a3 * c) * _I2
    # -Y^T D and -Y^T E are exactly skew analytically; extract the
    # antisymmetric part so roundoff near the degenerate disc cannot trip
    # the strict vee tolerance.
    jac_c = _vee_skew_part(-(y.T @ d_mat))
    jac_s = _vee_skew_part(-(y.T @ e_mat))
    var = jac_c**2 * pt.var_c + jac_s**2 * pt.var_s
    return HeadingMeasurement(rot=so2.project_to_so2(y), var_theta=max(var, VAR_FLOOR))
