"""Basis-function design embedding: vector layout and decoding.

A design vector is the concatenation, in this fixed order, of

* ``K`` material score coefficient blocks (``K * n_phi``),
* morph coefficients (``d * n_rbf`` of the morph grid, or nothing),
* occupancy coefficients (independent mode only),
* actuation parameters,
* external parameters.

Every coefficient lives in ``[-bound, bound]`` and is clamped at decode
time; actuation entries are mapped affinely from ``[-1, 1]`` onto their
physical ranges.

Material ``1`` is the passive phase. Material ``k >= 2`` is muscle driven by
actuation group ``k - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .basis import (
    GradientBound,
    RbfGridSpec,
    assemble_scalar_basis_matrix,
    assemble_vector_basis_matrix,
)
from .exceptions import InvalidArgumentError
from .geometry import Mesh

__all__ = [
    "ActuationSpec",
    "EncoderConfig",
    "DesignVectorLayout",
    "DecodedDesign",
    "build_layout",
    "decode_material_weights",
    "decode_material_labels",
    "decode_occupancy",
    "decode_morph",
    "eval_actuation",
    "decode_design",
    "BasisDesignEncoder",
    "OCCUPANCY_MODES",
]

OCCUPANCY_MODES = ("none", "independent", "sum_of_materials")
ACTUATION_KINDS = ("squared_periodic", "gaussian_pulse", "schedule")


@dataclass(frozen=True)
class ActuationSpec:
    """Open-loop actuation family and the physical ranges of its parameters.

    ``squared_periodic`` uses ``groups`` frequencies followed by
    ``groups - 1`` relative phases (group 1 has phase 0).
    ``gaussian_pulse`` uses (peak time, amplitude, width) per group.
    ``schedule`` uses ``knots`` piecewise-constant levels per group spread
    evenly over ``horizon`` seconds.
    """

    kind: str = "squared_periodic"
    groups: int = 1
    freq_bounds: tuple = (0.5, 5.0)
    phase_bounds: tuple = (0.0, np.pi)
    peak_bounds: tuple = (0.0, 0.3)
    amplitude_bounds: tuple = (0.0, 1.0)
    width_bounds: tuple = (0.005, 0.05)
    knots: int = 4
    horizon: float = 1.0

    def __post_init__(self):
        if self.kind not in ACTUATION_KINDS:
            raise InvalidArgumentError(f"unknown actuation kind {self.kind!r}")
        if self.groups < 1:
            raise InvalidArgumentError("actuation needs at least one group")
        if self.kind == "schedule" and (self.knots < 1 or not self.horizon > 0):
            raise InvalidArgumentError("schedule needs knots >= 1 and a positive horizon")

    @property
    def n_params(self) -> int:
        if self.kind == "squared_periodic":
            return 2 * self.groups - 1
        if self.kind == "gaussian_pulse":
            return 3 * self.groups
        return self.knots * self.groups

    def _bounds(self) -> np.ndarray:
        g = self.groups
        if self.kind == "squared_periodic":
            rows = [self.freq_bounds] * g + [self.phase_bounds] * (g - 1)
        elif self.kind == "gaussian_pulse":
            rows = [self.peak_bounds, self.amplitude_bounds, self.width_bounds] * g
        else:
            rows = [(0.0, 1.0)] * (self.knots * g)
        return np.asarray(rows, dtype=float).reshape(-1, 2)

    def to_physical(self, unit) -> np.ndarray:
        """Map box coordinates in ``[-1, 1]`` (clamped) to physical parameters."""
        u = np.clip(np.asarray(unit, dtype=float), -1.0, 1.0)
        if u.size != self.n_params:
            raise InvalidArgumentError(f"expected {self.n_params} actuation params, got {u.size}")
        b = self._bounds()
        return b[:, 0] + 0.5 * (u + 1.0) * (b[:, 1] - b[:, 0])


def eval_actuation(spec: ActuationSpec, params, t):
    """Muscle signals in ``[0, 1]`` at time(s) ``t``.

    Returns shape ``(groups,)`` for scalar ``t`` and ``(len(t), groups)``
    otherwise. ``params`` are physical parameters.
    """
    p = np.asarray(params, dtype=float)
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    g = spec.groups
    if spec.kind == "squared_periodic":
        freq = p[:g]
        phase = np.concatenate([[0.0], p[g:]])
        u = np.sin(np.pi * freq[None, :] * tt + phase[None, :]) ** 2
    elif spec.kind == "gaussian_pulse":
        peak, amp, width = p.reshape(g, 3).T
        u = amp[None, :] * np.exp(-((tt - peak[None, :]) ** 2) / (2.0 * width[None, :] ** 2))
    else:
        levels = p.reshape(g, spec.knots)
        k = np.clip((tt[:, 0] / spec.horizon * spec.knots).astype(int), 0, spec.knots - 1)
        u = levels[:, k].T
    u = np.clip(u, 0.0, 1.0)
    return u[0] if scalar else u


@dataclass
class EncoderConfig:
    """Configuration of the basis-function encoder.

    ``reference_mask`` optionally restricts the design to a fixed reference
    shape inside the mesh box (elements outside it are never occupied).
    ``muscle_region_masks`` maps a material index to the element mask where
    that material is allowed; elsewhere it falls back to material 1.
    """

    n_materials: int
    material_spec: RbfGridSpec
    morph_spec: Optional[RbfGridSpec] = None
    occupancy_mode: str = "none"
    occupancy_spec: Optional[RbfGridSpec] = None
    theta: float = 0.0
    tau: float = 1.0
    gamma: float = 0.3
    actuation: Optional[ActuationSpec] = None
    external_count: int = 0
    muscle_region_masks: Optional[dict] = None
    reference_mask: Optional[np.ndarray] = None
    coefficient_bound: float = 1.0

    def __post_init__(self):
        if self.n_materials < 1:
            raise InvalidArgumentError("n_materials must be >= 1")
        if self.occupancy_mode not in OCCUPANCY_MODES:
            raise InvalidArgumentError(f"unknown occupancy mode {self.occupancy_mode!r}")
        if self.occupancy_mode == "independent" and self.occupancy_spec is None:
            raise InvalidArgumentError("independent occupancy needs occupancy_spec")
        if not self.tau > 0:
            raise InvalidArgumentError("tau must be positive")
        if not 0 < self.gamma < 1:
            raise InvalidArgumentError("gamma must lie in (0, 1)")
        if self.external_count < 0:
            raise InvalidArgumentError("external_count must be >= 0")


@dataclass(frozen=True)
class DesignVectorLayout:
    n_phi: int
    n_materials: int
    material: slice
    morph: slice
    occupancy: slice
    actuation: slice
    external: slice
    total: int

    def material_block(self, c, k: int) -> np.ndarray:
        """Coefficients of material ``k`` (1-based)."""
        start = self.material.start + (k - 1) * self.n_phi
        return np.asarray(c)[start:start + self.n_phi]

    def material_matrix(self, c) -> np.ndarray:
        """Material coefficients as an ``(n_phi, K)`` matrix."""
        return np.asarray(c)[self.material].reshape(self.n_materials, self.n_phi).T

    def blocks(self, c) -> dict:
        c = np.asarray(c)
        if c.shape[-1] != self.total:
            raise InvalidArgumentError(f"design vector has {c.shape[-1]} entries, layout needs {self.total}")
        return {name: c[..., getattr(self, name)] for name in self.block_names}

    def join(self, blocks: dict) -> np.ndarray:
        return np.concatenate([np.asarray(blocks[name], dtype=float) for name in self.block_names])

    def mask(self, *names) -> np.ndarray:
        """Boolean mask over the vector selecting the named blocks."""
        m = np.zeros(self.total, dtype=bool)
        for name in names:
            m[getattr(self, name)] = True
        return m

    block_names = ("material", "morph", "occupancy", "actuation", "external")


def build_layout(config: EncoderConfig) -> DesignVectorLayout:
    n_phi = config.material_spec.n_rbf
    sizes = [
        config.n_materials * n_phi,
        config.morph_spec.dim * config.morph_spec.n_rbf if config.morph_spec is not None else 0,
        config.occupancy_spec.n_rbf if config.occupancy_mode == "independent" else 0,
        config.actuation.n_params if config.actuation is not None else 0,
        config.external_count,
    ]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    slices = [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(5)]
    return DesignVectorLayout(n_phi, config.n_materials, *slices, total=int(offsets[-1]))


def _scores(c, B, layout) -> np.ndarray:
    return B @ layout.material_matrix(c)


def decode_material_weights(c, B, layout: DesignVectorLayout, tau: float) -> np.ndarray:
    """Row-stochastic softmax weights of the material score fields."""
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    s = _scores(c, B, layout) / tau
    s -= s.max(axis=1, keepdims=True)
    w = np.exp(s)
    return w / w.sum(axis=1, keepdims=True)


def decode_material_labels(c, B, layout: DesignVectorLayout, muscle_region_masks=None) -> np.ndarray:
    """Per-element argmax material (1-based, lowest index wins ties)."""
    labels = np.argmax(_scores(c, B, layout), axis=1) + 1
    if muscle_region_masks:
        for k, allowed in muscle_region_masks.items():
            labels[(labels == k) & ~np.asarray(allowed, dtype=bool)] = 1
    return labels


def decode_occupancy(c, B, layout: DesignVectorLayout, config: EncoderConfig, B_occupancy=None) -> np.ndarray:
    """Thresholded occupancy mask (inclusive ``>= theta``)."""
    if config.occupancy_mode == "independent":
        Bo = B if B_occupancy is None else B_occupancy
        field_vals = Bo @ np.asarray(c)[layout.occupancy]
    elif config.occupancy_mode == "sum_of_materials":
        field_vals = _scores(c, B, layout).sum(axis=1)
    else:
        raise InvalidArgumentError("occupancy_mode 'none' has no occupancy field")
    return field_vals >= config.theta


def decode_morph(c, A, layout: DesignVectorLayout, gamma: float, reference_nodes, grad_bound=None):
    """Morphed node positions ``x + A q`` with q rescaled to the strain bound.

    ``grad_bound`` evaluates the sup-norm Jacobian bound for a given ``q``;
    without it no clamping is applied.
    """
    x = np.asarray(reference_nodes, dtype=float)
    q = np.asarray(c, dtype=float)[layout.morph]
    if q.size == 0:
        return x.copy()
    if grad_bound is not None:
        g = grad_bound(q)
        if g > gamma:
            q = q * (gamma / g)
    return x + (A @ q).reshape(x.shape)


@dataclass
class DecodedDesign:
    """Concrete design handed to a simulator.

    ``labels`` is 0 on unoccupied elements and ``1..K`` elsewhere.
    """

    occupancy: np.ndarray
    labels: np.ndarray
    morphed_nodes: np.ndarray
    elements: np.ndarray
    grid_dims: tuple
    n_materials: int
    actuation_spec: Optional[ActuationSpec] = None
    actuation_params: np.ndarray = field(default_factory=lambda: np.zeros(0))
    external: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def empty(self) -> bool:
        return not bool(np.any(self.occupancy))

    @property
    def n_elements(self) -> int:
        return self.occupancy.shape[0]

    @property
    def muscle_fraction(self) -> float:
        occ = int(self.occupancy.sum())
        return float(np.sum(self.labels >= 2) / occ) if occ else 0.0

    def signals(self, t):
        """Actuation signals per muscle group at time(s) ``t``."""
        if self.actuation_spec is None:
            return np.zeros((0,)) if np.ndim(t) == 0 else np.zeros((np.size(t), 0))
        return eval_actuation(self.actuation_spec, self.actuation_params, t)

    def replace(self, **changes) -> "DecodedDesign":
        data = dict(self.__dict__)
        data.update(changes)
        return DecodedDesign(**data)


def _finish_design(occupancy, labels, nodes, mesh: Mesh, config_like, act_unit, external):
    labels = np.where(occupancy, labels, 0).astype(np.int64)
    spec = config_like.actuation
    act = spec.to_physical(act_unit) if spec is not None else np.zeros(0)
    return DecodedDesign(
        occupancy=occupancy,
        labels=labels,
        morphed_nodes=nodes,
        elements=mesh.elements,
        grid_dims=mesh.dims,
        n_materials=config_like.n_materials,
        actuation_spec=spec,
        actuation_params=act,
        external=np.asarray(external, dtype=float).copy(),
    )


class BasisDesignEncoder(TransformerMixin, BaseEstimator):
    """Basis-function design encoder.

    ``fit(mesh)`` pre-evaluates the basis matrices on the mesh; ``decode``
    maps one design vector to a :class:`DecodedDesign`; ``transform`` maps a
    batch of vectors to an ``(n_samples, n_elements)`` label array.

    Parameters
    ----------
    config : EncoderConfig
    """

    def __init__(self, config: EncoderConfig):
        self.config = config

    def fit(self, mesh: Mesh, y=None):
        cfg = self.config
        if cfg.material_spec.dim != mesh.dim:
            raise InvalidArgumentError("material grid and mesh dimensions differ")
        self.mesh_ = mesh
        self.layout_ = build_layout(cfg)
        self.n_params_ = self.layout_.total
        self.B_ = assemble_scalar_basis_matrix(mesh.element_centers, cfg.material_spec)
        self.B_occupancy_ = None
        if cfg.occupancy_mode == "independent":
            self.B_occupancy_ = assemble_scalar_basis_matrix(mesh.element_centers, cfg.occupancy_spec)
        self.A_ = None
        self.grad_bound_ = None
        if cfg.morph_spec is not None:
            self.A_ = assemble_vector_basis_matrix(mesh.nodes, cfg.morph_spec, mesh.dim)
            samples = np.vstack([mesh.nodes, mesh.element_centers])
            self.grad_bound_ = GradientBound(cfg.morph_spec, samples)
        self.reference_mask_ = (
            np.ones(mesh.n_elements, dtype=bool)
            if cfg.reference_mask is None
            else np.asarray(cfg.reference_mask, dtype=bool)
        )
        return self

    def mask(self, *names) -> np.ndarray:
        check_is_fitted(self, "layout_")
        return self.layout_.mask(*names)

    def clamp(self, c) -> np.ndarray:
        """Project a raw vector onto the decode box."""
        check_is_fitted(self, "layout_")
        c = np.array(c, dtype=float)
        L, b = self.layout_, self.config.coefficient_bound
        for name in ("material", "morph", "occupancy", "external"):
            sl = getattr(L, name)
            c[sl] = np.clip(c[sl], -b, b)
        c[L.actuation] = np.clip(c[L.actuation], -1.0, 1.0)
        return c

    def material_weights(self, c) -> np.ndarray:
        check_is_fitted(self, "layout_")
        return decode_material_weights(self.clamp(c), self.B_, self.layout_, self.config.tau)

    def decode(self, c) -> DecodedDesign:
        check_is_fitted(self, "layout_")
        cfg, L, mesh = self.config, self.layout_, self.mesh_
        c = np.asarray(c, dtype=float)
        if c.shape != (L.total,):
            raise InvalidArgumentError(f"design vector must have shape ({L.total},), got {c.shape}")
        c = self.clamp(c)
        if cfg.occupancy_mode == "none":
            occupancy = self.reference_mask_.copy()
        else:
            occupancy = decode_occupancy(c, self.B_, L, cfg, self.B_occupancy_) & self.reference_mask_
        labels = decode_material_labels(c, self.B_, L, cfg.muscle_region_masks)
        if self.A_ is not None:
            nodes = decode_morph(c, self.A_, L, cfg.gamma, mesh.nodes, self.grad_bound_)
        else:
            nodes = mesh.nodes.copy()
        return _finish_design(occupancy, labels, nodes, mesh, cfg, c[L.actuation], c[L.external])

    def transform(self, X) -> np.ndarray:
        X = check_array(X, ensure_2d=True)
        return np.stack([self.decode(row).labels for row in X])


def decode_design(c, config: EncoderConfig, mesh: Mesh) -> DecodedDesign:
    """One-shot decode; prefer a fitted :class:`BasisDesignEncoder` in loops."""
    return BasisDesignEncoder(config).fit(mesh).decode(c)
