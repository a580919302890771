"""Basis-function design embeddings for soft-robot co-design.

Shared Gaussian RBF bases encode material scores, occupancy and
morphing of a reference mesh; a CMA-ES runner co-optimizes shape,
material and actuation against toy 2D simulators, and an analysis
module measures encoder expressiveness with Chamfer distances and MDS.
"""
from .basis import RbfGridSpec, assemble_scalar_basis_matrix, assemble_vector_basis_matrix
from .encoding import (
    ActuationSpec,
    BasisDesignEncoder,
    DecodedDesign,
    DesignVectorLayout,
    EncoderConfig,
    build_layout,
    decode_design,
)
from .baselines import MlpSpec, NeuralFieldEncoder, VoxelEncoder, VoxelEncoderSpec
from .geometry import Mesh, build_grid_mesh, build_sphere_cloud
from .simulators import SimulatorConfig, Trajectory, simulate_jumper, simulate_swimmer
from .objectives import LossWeights, TrajectoryMetrics, jump_loss, swim_loss, trajectory_metrics
from .cmaes import CMAESMinimizer, OptimizationSchedule, run_schedule
from .analysis import (
    BasisMorpher,
    ClassicalMDS,
    NeuralMorpher,
    chamfer_distance,
    classical_mds,
    d95,
    novelty_scores,
    sample_design_distances,
)

__version__ = "0.1.0"
