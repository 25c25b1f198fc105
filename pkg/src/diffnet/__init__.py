"""Diffusion adaptive networks: simulation, robust kernel-MAP updates, and
closed-form mean-square performance predictions."""

from . import cli, diffusion, harness, network, noise, npdlms, theory
from .diffusion import DLLAD, DLMS, DLMSF, DMCC, DSELMS, NodeState, SharedData
from .harness import (
    AlgorithmSpec,
    ExperimentConfig,
    RunResult,
    config_from_dict,
    load_config,
    run_experiment,
    run_realization,
    sweep,
)
from .network import (
    CombinationMatrix,
    GroundTruth,
    Measurement,
    NetworkTopology,
    NodeProfile,
    RandomWalk,
    Stationary,
    build_topology,
    combination_weights,
)
from .noise import AlphaStable, Gaussian
from .npdlms import NPDLMS, EstimateBuffer, KernelParams, MuWeights, ThresholdParams
from .theory import MomentSet, PerformanceCurves, TheoryInputs, build_moments

__version__ = "0.1.0"
