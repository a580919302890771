"""Task presets: meshes, encoders, objectives and matching targets.

The physics tasks are 2D analogues of the 3D setups: the jumper is a 7x7
square of side 0.1 m, the swimmer an 18x6 grid masked to a 3:1 ellipse.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baselines import MlpSpec, NeuralFieldEncoder, VoxelEncoder, VoxelEncoderSpec
from .basis import RbfGridSpec, assemble_scalar_basis_matrix
from .encoding import ActuationSpec, BasisDesignEncoder, EncoderConfig, build_layout, decode_material_labels
from .exceptions import EmptyDesignError, InvalidArgumentError, SimulationDivergedError
from .geometry import Mesh, build_grid_mesh
from .objectives import (
    EMPTY_DESIGN_PENALTY,
    PAPER_WEIGHTS,
    LossWeights,
    hard_mismatch_fraction,
    jump_loss,
    material_match_loss,
    swim_loss,
    trajectory_metrics,
)
from .simulators import SimulatorConfig, jumper_config, simulate, swimmer_config

__all__ = [
    "TASKS",
    "ENCODERS",
    "jumper_mesh",
    "swimmer_mesh",
    "swimmer_masks",
    "make_encoder",
    "default_sim_config",
    "TaskObjective",
    "morphology_and_actuation_masks",
    "torus_target",
    "cross_target",
    "make_target",
    "MatchingProblem",
]

TASKS = ("swim", "jump")
ENCODERS = ("basis", "neural", "voxel")

JUMPER_SIDE = 0.1
JUMPER_DIMS = (7, 7)
SWIMMER_DIMS = (18, 6)
SWIMMER_LENGTH = 0.3
BAND_FRACTION = 0.4


def jumper_mesh() -> Mesh:
    return build_grid_mesh(JUMPER_DIMS, JUMPER_SIDE / JUMPER_DIMS[0])


def swimmer_mesh() -> Mesh:
    return build_grid_mesh(SWIMMER_DIMS, SWIMMER_LENGTH / SWIMMER_DIMS[0])


def swimmer_masks(mesh: Mesh):
    """Ellipse body mask and the upper/lower muscle band masks."""
    c = 0.5 * mesh.hi
    a, b = c
    rel = (mesh.element_centers - c) / np.array([a, b])
    body = (rel ** 2).sum(axis=1) <= 1.0
    y_local = rel[:, 1]
    upper = body & (y_local >= BAND_FRACTION)
    lower = body & (y_local <= -BAND_FRACTION)
    return body, upper, lower


def _box_spec(mesh: Mesh, dims) -> RbfGridSpec:
    return RbfGridSpec(tuple(dims), tuple(mesh.lo), tuple(mesh.hi))


def jumper_actuation() -> ActuationSpec:
    return ActuationSpec("gaussian_pulse", groups=1, peak_bounds=(0.02, 0.2),
                         amplitude_bounds=(0.0, 1.0), width_bounds=(0.005, 0.05))


def swimmer_actuation() -> ActuationSpec:
    return ActuationSpec("squared_periodic", groups=2, freq_bounds=(1.0, 8.0), phase_bounds=(0.0, np.pi))


def make_encoder(task: str, encoder: str = "basis", mesh: Optional[Mesh] = None, *,
                 rbf_dims=None, mlp_hidden=None, gamma: float = 0.3):
    """Fitted encoder for a task.

    ``rbf_dims`` defaults to (3, 3) for the jumper and (6, 4) for the swimmer.
    """
    if task not in TASKS:
        raise InvalidArgumentError(f"unknown task {task!r}")
    if encoder not in ENCODERS:
        raise InvalidArgumentError(f"unknown encoder {encoder!r}")
    if task == "jump":
        mesh = mesh or jumper_mesh()
        act = jumper_actuation()
        if encoder == "basis":
            cfg = EncoderConfig(
                n_materials=2,
                material_spec=_box_spec(mesh, rbf_dims or (3, 3)),
                occupancy_mode="sum_of_materials",
                theta=0.0,
                gamma=gamma,
                actuation=act,
            )
            return BasisDesignEncoder(cfg).fit(mesh)
        if encoder == "voxel":
            return VoxelEncoder(VoxelEncoderSpec(), act).fit(mesh)
        raise InvalidArgumentError("the jump task supports the basis and voxel encoders")

    mesh = mesh or swimmer_mesh()
    body, upper, lower = swimmer_masks(mesh)
    act = swimmer_actuation()
    bands = {2: upper, 3: lower}
    if encoder == "basis":
        dims = rbf_dims or (6, 4)
        cfg = EncoderConfig(
            n_materials=3,
            material_spec=_box_spec(mesh, dims),
            morph_spec=_box_spec(mesh, dims),
            gamma=gamma,
            actuation=act,
            muscle_region_masks=bands,
            reference_mask=body,
        )
        return BasisDesignEncoder(cfg).fit(mesh)
    if encoder == "neural":
        mat_h, morph_h = mlp_hidden or (8, 12)
        return NeuralFieldEncoder(
            material_net=MlpSpec((2, mat_h, 3)),
            morph_net=MlpSpec((2, morph_h, 2)),
            n_materials=3,
            gamma=gamma,
            actuation=act,
            reference_mask=body,
            muscle_region_masks=bands,
        ).fit(mesh)
    raise InvalidArgumentError("the swim task supports the basis and neural encoders")


def default_sim_config(task: str, **changes) -> SimulatorConfig:
    if task == "jump":
        return jumper_config(**changes)
    if task == "swim":
        return swimmer_config(**changes)
    raise InvalidArgumentError(f"unknown task {task!r}")


def morphology_and_actuation_masks(encoder):
    """Boolean masks over the design vector: (morphology blocks, actuation block)."""
    act = encoder.mask("actuation")
    return ~act, act


class TaskObjective:
    """``c -> loss`` for a physics task; invalid designs get a flat penalty."""

    def __init__(self, task: str, encoder, sim_config: Optional[SimulatorConfig] = None,
                 weights: LossWeights = PAPER_WEIGHTS, penalty: float = EMPTY_DESIGN_PENALTY):
        if task not in TASKS:
            raise InvalidArgumentError(f"unknown task {task!r}")
        self.task = task
        self.encoder = encoder
        self.sim_config = sim_config or default_sim_config(task)
        self.weights = weights
        self.penalty = penalty

    @property
    def n_params(self) -> int:
        return self.encoder.n_params_

    def rollout(self, c):
        design = self.encoder.decode(c)
        return design, simulate(self.task, design, self.sim_config)

    def metrics(self, c):
        design, traj = self.rollout(c)
        return trajectory_metrics(traj, design)

    def __call__(self, c) -> float:
        try:
            m = self.metrics(c)
        except (EmptyDesignError, SimulationDivergedError):
            return self.penalty
        loss = swim_loss(m, self.weights) if self.task == "swim" else jump_loss(m, self.weights)
        return float(loss) if np.isfinite(loss) else self.penalty


# ---------------------------------------------------------------- matching

GRID_SIZE = 50


def torus_target(n: int = GRID_SIZE, r_in: float = 0.22, r_out: float = 0.38) -> np.ndarray:
    """Annulus labels on an ``n x n`` grid (2 inside the ring, 1 elsewhere).

    Radii are fractions of the grid width, measured from the grid center.
    Returned flat, first axis fastest, matching mesh element order.
    """
    x = (np.arange(n) + 0.5) / n - 0.5
    X, Y = np.meshgrid(x, x, indexing="ij")
    r = np.hypot(X, Y)
    lab = np.where((r >= r_in) & (r <= r_out), 2, 1)
    return lab.ravel(order="F")


def cross_target(n: int = GRID_SIZE, arm_width: float = 0.2, margin: float = 0.1) -> np.ndarray:
    """Plus-shaped labels: two centered bars of width ``arm_width`` spanning
    ``[margin, 1 - margin]`` of the grid width (2 on the cross, 1 elsewhere)."""
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    half = 0.5 * arm_width
    inside = (X >= margin) & (X <= 1 - margin) & (Y >= margin) & (Y <= 1 - margin)
    bars = (np.abs(X - 0.5) <= half) | (np.abs(Y - 0.5) <= half)
    lab = np.where(inside & bars, 2, 1)
    return lab.ravel(order="F")


def make_target(name: str, n: int = GRID_SIZE) -> np.ndarray:
    if name == "torus":
        return torus_target(n)
    if name == "cross":
        return cross_target(n)
    raise InvalidArgumentError(f"unknown target {name!r}")


@dataclass
class MatchingProblem:
    """Fit ``K = 2`` material coefficients to a label grid."""

    target: np.ndarray
    rbf_per_axis: int
    tau: float = 1.0
    grid: int = GRID_SIZE
    coefficient_bound: float = 1.0

    def __post_init__(self):
        self.mesh = build_grid_mesh((self.grid, self.grid), 1.0 / self.grid)
        spec = RbfGridSpec((self.rbf_per_axis,) * 2, (0.0, 0.0), (1.0, 1.0))
        self.config = EncoderConfig(n_materials=2, material_spec=spec, tau=self.tau,
                                    coefficient_bound=self.coefficient_bound)
        self.layout = build_layout(self.config)
        self.B = assemble_scalar_basis_matrix(self.mesh.element_centers, spec)
        self.target = np.asarray(self.target)

    @property
    def n_params(self) -> int:
        return self.layout.total

    def clamp(self, c):
        return np.clip(np.asarray(c, dtype=float), -self.coefficient_bound, self.coefficient_bound)

    def __call__(self, c) -> float:
        return material_match_loss(self.clamp(c), self.target, self.B, self.layout, self.tau)

    def mismatch(self, c) -> float:
        return hard_mismatch_fraction(self.clamp(c), self.target, self.B, self.layout)

    def labels(self, c) -> np.ndarray:
        return decode_material_labels(self.clamp(c), self.B, self.layout)
