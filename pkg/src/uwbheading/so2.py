"""Exact SO(2) matrix Lie-group arithmetic.

All functions are pure and operate on plain numpy arrays: a rotation is a
2x2 matrix, an algebra element is a 2x2 skew-symmetric matrix, and angles
are radians. Batch helpers work on stacked arrays of shape (n, 2, 2).
"""

from __future__ import annotations

import math

import numpy as np

# Orthonormality / skewness tolerance for accepting inputs as group or
# algebra elements.
ORTHO_TOL = 1e-9

_OMEGA = np.array([[0.0, -1.0], [1.0, 0.0]])

TWO_PI = 2.0 * math.pi


def identity() -> np.ndarray:
    return np.eye(2)


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into the principal branch (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(theta, dtype=float), TWO_PI)


def wedge(theta: float) -> np.ndarray:
    """Map an angle to its skew-symmetric algebra matrix [[0, -t], [t, 0]]."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"wedge requires a finite angle, got {theta}")
    return np.array([[0.0, -theta], [theta, 0.0]])


def vee(s: np.ndarray) -> float:
    """Extract the angle from a skew-symmetric 2x2 matrix.

    Rejects matrices whose symmetric part exceeds ORTHO_TOL.
    """
    s = np.asarray(s, dtype=float)
    if s.shape != (2, 2):
        raise ValueError(f"vee expects a 2x2 matrix, got shape {s.shape}")
    sym = max(abs(s[0, 0]), abs(s[1, 1]), abs(s[0, 1] + s[1, 0]))
    if not sym <= ORTHO_TOL:
        raise ValueError(f"matrix is not skew-symmetric (symmetric part {sym:.3e})")
    return float(s[1, 0])


def exp_so2(theta: float) -> np.ndarray:
    """Exponential map: angle -> rotation matrix."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"exp_so2 requires a finite angle, got {theta}")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def log_so2(r: np.ndarray) -> float:
    """Logarithm map: rotation matrix -> angle in (-pi, pi].

    atan2 keeps the branch stable near +-pi.
    """
    r = check_rotation(r)
    theta = math.atan2(r[1, 0], r[0, 0])
    if theta <= -math.pi:  # atan2 may return -pi exactly
        theta = math.pi
    return theta


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float) @ np.asarray(b, dtype=float)


def inverse(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float).T.copy()


def is_rotation(m: np.ndarray, tol: float = ORTHO_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2) or not np.all(np.isfinite(m)):
        return False
    err = np.abs(m.T @ m - np.eye(2)).max()
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return bool(err <= tol and abs(det - 1.0) <= tol)


def check_rotation(m: np.ndarray, tol: float = ORTHO_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if not is_rotation(m, tol):
        raise ValueError("matrix is not a valid SO(2) element")
    return m


def project_to_so2(m: np.ndarray) -> np.ndarray:
    """Re-orthonormalize a near-rotation: normalize the first column and
    rotate it by +90 degrees to get the second."""
    m = np.asarray(m, dtype=float)
    col = m[:, 0]
    norm = math.hypot(col[0], col[1])
    if norm == 0.0:
        raise ValueError("cannot project a matrix with a zero first column")
    c, s = col[0] / norm, col[1] / norm
    return np.array([[c, -s], [s, c]])


def exp_so2_many(thetas: np.ndarray) -> np.ndarray:
    """Vectorized exponential map: (n,) angles -> (n, 2, 2) rotations."""
    thetas = np.asarray(thetas, dtype=float)
    if not np.all(np.isfinite(thetas)):
        raise ValueError("exp_so2_many requires finite angles")
    c, s = np.cos(thetas), np.sin(thetas)
    out = np.empty(thetas.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def log_so2_many(rots: np.ndarray) -> np.ndarray:
    """Vectorized logarithm map: (n, 2, 2) rotations -> (n,) angles."""
    rots = np.asarray(rots, dtype=float)
    err = np.abs(np.einsum("...ji,...jk->...ik", rots, rots) - np.eye(2)).max()
    if not err <= ORTHO_TOL:
        raise ValueError("batch contains non-orthonormal matrices")
    thetas = np.arctan2(rots[..., 1, 0], rots[..., 0, 0])
    return np.where(thetas <= -math.pi, math.pi, thetas)
