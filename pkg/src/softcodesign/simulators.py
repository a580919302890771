"""Deterministic 2D mass-spring simulators for the jumper and swimmer tasks.

Both engines see only a :class:`DecodedDesign` and a :class:`SimulatorConfig`.
Each occupied quad contributes four edge springs and two diagonal springs.
Muscle quads change the rest shape of their springs by contracting the
component along the actuation axis by ``1 - kappa * u(t)``.

Integration is semi-implicit Euler. The jumper's ground penalty (normal
spring-damper) is integrated implicitly per node so a stiff contact stays
stable at the default step; tangential friction is a Coulomb clamp on the
velocity change.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy import ndimage

from .encoding import DecodedDesign
from .exceptions import EmptyDesignError, InvalidArgumentError, SimulationDivergedError

__all__ = [
    "SimulatorConfig",
    "Trajectory",
    "jumper_config",
    "swimmer_config",
    "largest_component",
    "simulate_jumper",
    "simulate_swimmer",
    "simulate",
]


@dataclass(frozen=True)
class SimulatorConfig:
    """Physical constants of a toy simulator (SI units)."""

    dt: float = 1e-3
    n_steps: int = 400
    gravity: float = 9.81
    k_passive: float = 1500.0
    k_muscle: float = 2000.0
    damping: float = 0.3
    node_mass: float = 0.01
    contact_stiffness: float = 1e6
    contact_damping: float = 5.0
    friction: float = 0.8
    drag: float = 0.0
    kappa: float = 0.3

    def __post_init__(self):
        if not self.dt > 0 or self.n_steps < 1:
            raise InvalidArgumentError("dt must be positive and n_steps >= 1")
        if not (self.k_passive > 0 and self.k_muscle > 0):
            raise InvalidArgumentError("spring stiffnesses must be positive")
        if not self.node_mass > 0:
            raise InvalidArgumentError("node_mass must be positive")

    def replace(self, **changes) -> "SimulatorConfig":
        return replace(self, **changes)


def jumper_config(**changes) -> SimulatorConfig:
    return SimulatorConfig(**changes)


def swimmer_config(**changes) -> SimulatorConfig:
    # softer passive tissue lets the muscle bands bend the body enough to swim
    base = dict(n_steps=1000, gravity=0.0, drag=20.0, friction=0.0, contact_stiffness=0.0, k_passive=500.0)
    base.update(changes)
    return SimulatorConfig(**base)


@dataclass
class Trajectory:
    """Node positions over time.

    ``positions`` has shape ``(n_steps + 1, n_nodes, 2)``; ``node_ids`` maps
    columns back to reference mesh node ids.
    """

    positions: np.ndarray
    times: np.ndarray
    node_ids: np.ndarray
    elements: np.ndarray
    locomotion_axis: int = 0

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0] - 1


def largest_component(occupancy: np.ndarray, grid_dims) -> np.ndarray:
    """Keep the largest face-connected component of an element mask."""
    grid = np.asarray(occupancy, dtype=bool).reshape(tuple(grid_dims), order="F")
    lab, n = ndimage.label(grid)
    if n <= 1:
        return grid.ravel(order="F").copy()
    sizes = np.bincount(lab.ravel())[1:]
    # ties go to the lowest component label, which is deterministic
    keep = int(np.argmax(sizes)) + 1
    return (lab == keep).ravel(order="F")


# fast-math without the no-NaN/no-Inf assumptions, so divergence stays detectable
_FASTMATH = {"nsz", "arcp", "contract", "afn", "reassoc"}


@njit(cache=True, nogil=True, fastmath=_FASTMATH)
def _integrate(x0, v0, si, sj, ra, rb, stiff, group, damping, mass, gy, dt, n_steps,
               signals, kappa, k_contact, c_contact, mu, ground, ea, eb, drag, out):
    n = x0.shape[0]
    ns = si.shape[0]
    ne = ea.shape[0]
    px = x0[:, 0].copy()
    py = x0[:, 1].copy()
    vx = v0[:, 0].copy()
    vy = v0[:, 1].copy()
    fx = np.zeros(n)
    fy = np.zeros(n)
    rb2 = rb * rb
    rest = np.sqrt(ra * ra + rb2)
    inv_m = 1.0 / mass
    denom = mass + dt * c_contact + dt * dt * k_contact
    for i in range(n):
        out[0, i, 0] = px[i]
        out[0, i, 1] = py[i]
    for step in range(n_steps):
        fx[:] = 0.0
        fy[:] = -gy * mass
        for s in range(ns):
            i = si[s]
            j = sj[s]
            dx = px[j] - px[i]
            dy = py[j] - py[i]
            length = np.sqrt(dx * dx + dy * dy)
            g = group[s]
            r = rest[s]
            if g >= 0:
                a = ra[s] * (1.0 - kappa * signals[step, g])
                r = np.sqrt(a * a + rb2[s])
            if length > 1e-12:
                inv = 1.0 / length
                nx = dx * inv
                ny = dy * inv
                vrel = (vx[j] - vx[i]) * nx + (vy[j] - vy[i]) * ny
                fs = stiff[s] * (length - r) + damping * vrel
                fx[i] += fs * nx
                fy[i] += fs * ny
                fx[j] -= fs * nx
                fy[j] -= fs * ny
        if drag > 0.0:
            for e in range(ne):
                a_ = ea[e]
                b_ = eb[e]
                # outward normal of a counter-clockwise boundary edge, scaled by its length
                nx = py[b_] - py[a_]
                ny = px[a_] - px[b_]
                fd = -0.25 * drag * ((vx[a_] + vx[b_]) * nx + (vy[a_] + vy[b_]) * ny)
                length = np.sqrt(nx * nx + ny * ny)
                if length > 1e-12:
                    fd /= length
                    fx[a_] += fd * nx
                    fy[a_] += fd * ny
                    fx[b_] += fd * nx
                    fy[b_] += fd * ny
        for i in range(n):
            ux = vx[i] + dt * fx[i] * inv_m
            uy = vy[i] + dt * fy[i] * inv_m
            if ground and py[i] < 0.0:
                uy_c = (mass * vy[i] + dt * (fy[i] - k_contact * py[i])) / denom
                fn = -k_contact * (py[i] + dt * uy_c) - c_contact * uy_c
                if fn > 0.0:
                    uy = uy_c
                    dv_max = dt * mu * fn * inv_m
                    if ux > dv_max:
                        ux -= dv_max
                    elif ux < -dv_max:
                        ux += dv_max
                    else:
                        ux = 0.0
            vx[i] = ux
            vy[i] = uy
            px[i] += dt * ux
            py[i] += dt * uy
            out[step + 1, i, 0] = px[i]
            out[step + 1, i, 1] = py[i]
    # NaN and Inf persist once produced, so the final state is enough
    for i in range(n):
        if not (np.isfinite(px[i]) and np.isfinite(py[i])):
            return n_steps
    return -1


# corner pairs of a counter-clockwise quad: 4 edges then 2 diagonals
_QUAD_SPRINGS = np.array([[0, 1], [1, 2], [2, 3], [3, 0], [0, 2], [1, 3]])
_QUAD_EDGES = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])


@dataclass
class _Assembly:
    node_ids: np.ndarray
    x0: np.ndarray
    si: np.ndarray
    sj: np.ndarray
    ra: np.ndarray
    rb: np.ndarray
    stiff: np.ndarray
    group: np.ndarray
    ea: np.ndarray
    eb: np.ndarray
    elements: np.ndarray


def _assemble(design: DecodedDesign, cfg: SimulatorConfig, axis: int) -> _Assembly:
    if len(design.grid_dims) != 2 or design.elements.shape[1] != 4:
        raise InvalidArgumentError("the toy simulators need a 2D quad mesh")
    if design.empty:
        raise EmptyDesignError("design has no occupied elements")
    active = largest_component(design.occupancy, design.grid_dims)
    elems = design.elements[active]
    labels = design.labels[active]
    node_ids, local = np.unique(elems, return_inverse=True)
    local = local.reshape(elems.shape)
    x0 = np.ascontiguousarray(design.morphed_nodes[node_ids, :2], dtype=float)

    pairs = local[:, _QUAD_SPRINGS]  # (ne, 6, 2)
    si = pairs[..., 0].ravel()
    sj = pairs[..., 1].ravel()
    d0 = x0[sj] - x0[si]
    ra = d0[:, axis].copy()
    rb = d0[:, 1 - axis].copy()
    muscle = np.repeat(labels >= 2, 6)
    stiff = np.where(muscle, cfg.k_muscle, cfg.k_passive).astype(float)
    n_groups = design.actuation_spec.groups if design.actuation_spec is not None else 0
    group = np.where(muscle, np.repeat(labels, 6) - 2, -1).astype(np.int64)
    group[group >= n_groups] = -1

    edges = local[:, _QUAD_EDGES].reshape(-1, 2)
    key = np.sort(edges, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    boundary = edges[counts[inv.ravel()] == 1]
    return _Assembly(
        node_ids, x0, si.astype(np.int64), sj.astype(np.int64), ra, rb, stiff, group,
        np.ascontiguousarray(boundary[:, 0], dtype=np.int64),
        np.ascontiguousarray(boundary[:, 1], dtype=np.int64),
        local,
    )


def _run(design, cfg, axis, ground, drag, gravity, v0=None) -> Trajectory:
    asm = _assemble(design, cfg, axis)
    times = np.arange(cfg.n_steps + 1) * cfg.dt
    n_groups = design.actuation_spec.groups if design.actuation_spec is not None else 0
    signals = np.ascontiguousarray(design.signals(times), dtype=float).reshape(cfg.n_steps + 1, n_groups)
    if n_groups == 0:
        signals = np.zeros((cfg.n_steps + 1, 1))
    out = np.empty((cfg.n_steps + 1, asm.x0.shape[0], 2))
    vel = np.zeros_like(asm.x0) if v0 is None else np.ascontiguousarray(v0, dtype=float)
    bad = _integrate(
        asm.x0, vel, asm.si, asm.sj, asm.ra, asm.rb, asm.stiff, asm.group,
        float(cfg.damping), float(cfg.node_mass), float(gravity), float(cfg.dt), int(cfg.n_steps),
        signals, float(cfg.kappa), float(cfg.contact_stiffness), float(cfg.contact_damping),
        float(cfg.friction), bool(ground), asm.ea, asm.eb, float(drag), out,
    )
    if bad >= 0:
        raise SimulationDivergedError(f"non-finite state at step {bad}")
    return Trajectory(out, times, asm.node_ids, asm.elements, locomotion_axis=1 if ground else 0)


def simulate_jumper(design: DecodedDesign, cfg: SimulatorConfig, v0=None) -> Trajectory:
    """Vertical muscles, gravity and ground contact at ``y = 0``.

    The body is shifted so its lowest node rests on the ground.
    """
    shifted = design.morphed_nodes.copy()
    active = largest_component(design.occupancy, design.grid_dims) if not design.empty else None
    if active is not None:
        used = np.unique(design.elements[active])
        shifted[:, 1] -= shifted[used, 1].min()
    return _run(design.replace(morphed_nodes=shifted), cfg, axis=1, ground=True, drag=0.0,
                gravity=cfg.gravity, v0=v0)


def simulate_swimmer(design: DecodedDesign, cfg: SimulatorConfig, v0=None) -> Trajectory:
    """Longitudinal muscles in a quiescent fluid with normal surface drag."""
    return _run(design, cfg, axis=0, ground=False, drag=cfg.drag, gravity=0.0, v0=v0)


def simulate(task: str, design: DecodedDesign, cfg: SimulatorConfig) -> Trajectory:
    if task == "jump":
        return simulate_jumper(design, cfg)
    if task == "swim":
        return simulate_swimmer(design, cfg)
    raise InvalidArgumentError(f"unknown task {task!r}")
