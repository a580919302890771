"""Comparison encoders: a coordinate MLP (neural field) and per-voxel values.

Both produce :class:`~softcodesign.encoding.DecodedDesign` objects so they
plug into the same simulators and objectives as the basis encoder.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .encoding import ActuationSpec, DecodedDesign, _finish_design
from .exceptions import InvalidArgumentError
from .geometry import Mesh

__all__ = [
    "MlpSpec",
    "VoxelEncoderSpec",
    "mlp_param_count",
    "mlp_forward",
    "NeuralFieldEncoder",
    "VoxelEncoder",
    "decode_neural_field",
    "decode_per_voxel",
]


@dataclass(frozen=True)
class MlpSpec:
    """Fully connected net: tanh hidden layers, linear output."""

    layer_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or any(n < 1 for n in sizes):
            raise InvalidArgumentError("an MLP needs >= 2 positive layer sizes")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]


def mlp_param_count(spec: MlpSpec) -> int:
    s = spec.layer_sizes
    return sum(a * b + b for a, b in zip(s[:-1], s[1:]))


def mlp_forward(spec: MlpSpec, weights, x) -> np.ndarray:
    """Evaluate the net at one point ``(d,)`` or a batch ``(n, d)``.

    Per layer the flat weight vector holds the ``(out, in)`` matrix in
    row-major order followed by the bias.
    """
    w = np.asarray(weights, dtype=float)
    if w.size != mlp_param_count(spec):
        raise InvalidArgumentError(f"expected {mlp_param_count(spec)} weights, got {w.size}")
    h = np.atleast_2d(np.asarray(x, dtype=float))
    pos = 0
    n_layers = len(spec.layer_sizes) - 1
    for i, (a, b) in enumerate(zip(spec.layer_sizes[:-1], spec.layer_sizes[1:])):
        W = w[pos:pos + a * b].reshape(b, a)
        pos += a * b
        bias = w[pos:pos + b]
        pos += b
        h = h @ W.T + bias
        if i < n_layers - 1:
            h = np.tanh(h)
    return h[0] if np.ndim(x) == 1 else h


def _normalize(points, lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return 2.0 * (np.asarray(points, float) - lo) / (hi - lo) - 1.0


class NeuralFieldEncoder(TransformerMixin, BaseEstimator):
    """Neural-field encoder: one MLP for material scores, one for displacements.

    The vector layout is material-net weights, morph-net weights, actuation.
    Displacements are ``gamma * tanh(net(x)) * scale`` with ``scale`` half the
    smallest box extent, so they never exceed ``gamma * scale``.
    """

    def __init__(
        self,
        material_net: Optional[MlpSpec] = None,
        morph_net: Optional[MlpSpec] = None,
        n_materials: int = 2,
        gamma: float = 0.3,
        actuation: Optional[ActuationSpec] = None,
        reference_mask=None,
        muscle_region_masks=None,
        weight_bound: float = 1.0,
    ):
        self.material_net = material_net
        self.morph_net = morph_net
        self.n_materials = n_materials
        self.gamma = gamma
        self.actuation = actuation
        self.reference_mask = reference_mask
        self.muscle_region_masks = muscle_region_masks
        self.weight_bound = weight_bound

    def fit(self, mesh: Mesh, y=None):
        d = mesh.dim
        if self.material_net is not None and (
            self.material_net.n_in != d or self.material_net.n_out != self.n_materials
        ):
            raise InvalidArgumentError("material net must map d inputs to K scores")
        if self.morph_net is not None and (self.morph_net.n_in != d or self.morph_net.n_out != d):
            raise InvalidArgumentError("morph net must map d inputs to d outputs")
        self.mesh_ = mesh
        n_mat = mlp_param_count(self.material_net) if self.material_net else 0
        n_morph = mlp_param_count(self.morph_net) if self.morph_net else 0
        n_act = self.actuation.n_params if self.actuation else 0
        self.slices_ = {
            "material": slice(0, n_mat),
            "morph": slice(n_mat, n_mat + n_morph),
            "actuation": slice(n_mat + n_morph, n_mat + n_morph + n_act),
        }
        self.n_params_ = n_mat + n_morph + n_act
        self.scale_ = 0.5 * float(np.min(mesh.hi - mesh.lo))
        self.centers_in_ = _normalize(mesh.element_centers, mesh.lo, mesh.hi)
        self.nodes_in_ = _normalize(mesh.nodes, mesh.lo, mesh.hi)
        self.reference_mask_ = (
            np.ones(mesh.n_elements, dtype=bool)
            if self.reference_mask is None
            else np.asarray(self.reference_mask, dtype=bool)
        )
        return self

    def mask(self, *names) -> np.ndarray:
        check_is_fitted(self, "slices_")
        m = np.zeros(self.n_params_, dtype=bool)
        for name in names:
            if name in self.slices_:
                m[self.slices_[name]] = True
        return m

    def decode(self, c) -> DecodedDesign:
        check_is_fitted(self, "slices_")
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n_params_,):
            raise InvalidArgumentError(f"expected {self.n_params_} parameters, got {c.shape}")
        s = self.slices_
        w = np.clip(c, -self.weight_bound, self.weight_bound)
        mesh = self.mesh_
        if self.material_net is not None:
            scores = mlp_forward(self.material_net, w[s["material"]], self.centers_in_)
            labels = np.argmax(scores, axis=1) + 1
        else:
            labels = np.ones(mesh.n_elements, dtype=np.int64)
        if self.muscle_region_masks:
            for k, allowed in self.muscle_region_masks.items():
                labels[(labels == k) & ~np.asarray(allowed, dtype=bool)] = 1
        nodes = mesh.nodes.copy()
        if self.morph_net is not None:
            out = mlp_forward(self.morph_net, w[s["morph"]], self.nodes_in_)
            nodes = nodes + self.gamma * np.tanh(out) * self.scale_
        return _finish_design(
            self.reference_mask_.copy(), labels, nodes, mesh, self, np.clip(c[s["actuation"]], -1, 1), np.zeros(0)
        )

    def transform(self, X) -> np.ndarray:
        X = check_array(X)
        return np.stack([self.decode(row).labels for row in X])


def decode_neural_field(weights, config: NeuralFieldEncoder, mesh: Mesh) -> DecodedDesign:
    return NeuralFieldEncoder(**config.get_params()).fit(mesh).decode(weights)


@dataclass(frozen=True)
class VoxelEncoderSpec:
    theta_remove: float = -0.25
    theta_muscle: float = 0.25
    includes_occupancy: bool = True

    def __post_init__(self):
        if not self.theta_remove < self.theta_muscle:
            raise InvalidArgumentError("theta_remove must be below theta_muscle")


class VoxelEncoder(TransformerMixin, BaseEstimator):
    """One value per element, thresholded into removed / passive / muscle.

    Muscle elements use material 2 (actuation group 1).
    """

    def __init__(self, spec: VoxelEncoderSpec = VoxelEncoderSpec(), actuation: Optional[ActuationSpec] = None):
        self.spec = spec
        self.actuation = actuation

    @property
    def n_materials(self) -> int:
        return 2

    def fit(self, mesh: Mesh, y=None):
        self.mesh_ = mesh
        n_act = self.actuation.n_params if self.actuation else 0
        self.slices_ = {
            "material": slice(0, mesh.n_elements),
            "actuation": slice(mesh.n_elements, mesh.n_elements + n_act),
        }
        self.n_params_ = mesh.n_elements + n_act
        return self

    def mask(self, *names) -> np.ndarray:
        check_is_fitted(self, "slices_")
        m = np.zeros(self.n_params_, dtype=bool)
        for name in names:
            if name in self.slices_:
                m[self.slices_[name]] = True
        return m

    def decode(self, c) -> DecodedDesign:
        check_is_fitted(self, "slices_")
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n_params_,):
            raise InvalidArgumentError(f"expected {self.n_params_} parameters, got {c.shape}")
        v = np.clip(c[self.slices_["material"]], -1.0, 1.0)
        sp = self.spec
        if sp.includes_occupancy:
            occupancy = v >= sp.theta_remove
            labels = np.where(v >= sp.theta_muscle, 2, 1)
        else:
            occupancy = np.ones(v.shape, dtype=bool)
            labels = np.where(v >= 0.0, 2, 1)
        act = np.clip(c[self.slices_["actuation"]], -1.0, 1.0)
        return _finish_design(occupancy, labels, self.mesh_.nodes.copy(), self.mesh_, self, act, np.zeros(0))

    def transform(self, X) -> np.ndarray:
        X = check_array(X)
        return np.stack([self.decode(row).labels for row in X])


def decode_per_voxel(values, spec: VoxelEncoderSpec, mesh: Mesh, actuation: Optional[ActuationSpec] = None) -> DecodedDesign:
    return VoxelEncoder(spec, actuation).fit(mesh).decode(values)
