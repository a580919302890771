"""Trajectory metrics and task losses."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .encoding import decode_material_labels
from .exceptions import DegenerateGeometryError, InvalidArgumentError
from .geometry import frame_moments, rigid_rotation_series

__all__ = [
    "TrajectoryMetrics",
    "LossWeights",
    "PAPER_WEIGHTS",
    "trajectory_metrics",
    "swim_loss",
    "jump_loss",
    "material_match_loss",
    "hard_mismatch_fraction",
    "EMPTY_DESIGN_PENALTY",
]

EMPTY_DESIGN_PENALTY = 1e3


@dataclass(frozen=True)
class TrajectoryMetrics:
    disp: float = 0.0
    drift: float = 0.0
    rot: float = 0.0
    jump: float = 0.0
    muscle_frac: float = 0.0


@dataclass(frozen=True)
class LossWeights:
    alpha: tuple = (6.0, 0.2, 1.0, 1.0)
    beta: tuple = (12.0, 1.0, 1.0)

    def __post_init__(self):
        if len(self.alpha) != 4 or len(self.beta) != 3:
            raise InvalidArgumentError("alpha needs 4 weights and beta 3")
        if any(w < 0 for w in (*self.alpha, *self.beta)):
            raise InvalidArgumentError("loss weights must be non-negative")


PAPER_WEIGHTS = LossWeights()


def _unwrapped_rotation(theta: np.ndarray, period: float = 2 * np.pi) -> float:
    # shortest signed step each frame, modulo the angle period
    d = np.diff(theta)
    d = (d + 0.5 * period) % period - 0.5 * period
    return float(np.abs(d).sum())


def trajectory_metrics(traj, design) -> TrajectoryMetrics:
    """Scale-free motion summary of a trajectory.

    Lengths are normalized by the initial body extent along the
    trajectory's locomotion axis.
    """
    pos = np.asarray(traj.positions)
    if pos.ndim != 3 or pos.shape[0] < 1 or pos.shape[1] < 1:
        raise InvalidArgumentError("trajectory is empty")
    axis = traj.locomotion_axis
    extent = pos[0, :, axis].max() - pos[0, :, axis].min()
    if not extent > 0:
        raise DegenerateGeometryError("body has zero extent along the locomotion axis")
    mom = frame_moments(pos)
    rel = (mom[:, :2] - mom[0, :2]) / extent
    theta = rigid_rotation_series(pos)
    return TrajectoryMetrics(
        disp=float(rel[-1, 0]),
        drift=float(abs(rel[-1, 1])),
        rot=_unwrapped_rotation(theta),
        jump=float(rel[:, 1].max()),
        muscle_frac=float(design.muscle_fraction) if design is not None else 0.0,
    )


def swim_loss(m: TrajectoryMetrics, w: LossWeights = PAPER_WEIGHTS) -> float:
    a1, a2, a3, a4 = w.alpha
    return -a1 * m.disp + a2 * m.drift + a3 * m.rot + a4 * m.muscle_frac


def jump_loss(m: TrajectoryMetrics, w: LossWeights = PAPER_WEIGHTS) -> float:
    b1, b2, b3 = w.beta
    return -b1 * m.jump - b2 * m.rot + b3 * m.muscle_frac


def _check_target(target, n_rows, K) -> np.ndarray:
    t = np.asarray(target).ravel()
    if t.shape[0] != n_rows:
        raise InvalidArgumentError(f"target has {t.shape[0]} cells, basis has {n_rows}")
    if not np.issubdtype(t.dtype, np.integer) or t.min() < 1 or t.max() > K:
        raise InvalidArgumentError(f"target labels must be integers in 1..{K}")
    return t.astype(np.int64)


def material_match_loss(c, target, B, layout, tau: float) -> float:
    """Mean cross-entropy of softmax material weights against target labels."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    t = _check_target(target, B.shape[0], layout.n_materials)
    s = (B @ layout.material_matrix(c)) / tau
    return float(np.mean(logsumexp(s, axis=1) - s[np.arange(t.size), t - 1]))


def hard_mismatch_fraction(c, target, B, layout) -> float:
    t = _check_target(target, B.shape[0], layout.n_materials)
    return float(np.mean(decode_material_labels(c, B, layout) != t))
