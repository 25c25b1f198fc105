"""Per-node diffusion adaptive filtering.

Defines the adapt/combine contract (ATC and CTA orderings) and the classical
robust update families used as comparison baselines. Every family is written
as an ascent direction g(e) * u', so the update is always

    theta <- theta_eval + step * sum_{l in N_k} g(e_l) u_l'

where e_l = d_l - u_l theta_eval. All families consume the full neighbourhood
measurement set so comparisons against the kernel-MAP update are like for
like.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import DimensionMismatch, InvalidParameters


@dataclass
class NodeState:
    """Current estimate and the last intermediate (combine or adapt) vector."""

    theta: np.ndarray
    phi: np.ndarray | None = None


@dataclass(frozen=True)
class DLMS:
    """Plain diffusion LMS: g(e) = e."""

    kind: ClassVar[str] = "dlms"


@dataclass(frozen=True)
class DSELMS:
    """Diffusion sign-error LMS: g(e) = sign(e)."""

    kind: ClassVar[str] = "dse_lms"


@dataclass(frozen=True)
class DMCC:
    """Diffusion maximum-correntropy: g(e) = exp(-e^2 / (2 w^2)) e."""

    kernel_width: float = 2.0
    kind: ClassVar[str] = "dmcc"

    def __post_init__(self):
        if not self.kernel_width > 0:
            raise InvalidParameters(f"kernel_width must be > 0, got {self.kernel_width}")


@dataclass(frozen=True)
class DLMSF:
    """Diffusion LMS/F: g(e) = e^3 / (mix + e^2)."""

    mix: float = 1.0
    kind: ClassVar[str] = "dlms_f"

    def __post_init__(self):
        if not self.mix > 0:
            raise InvalidParameters(f"mix must be > 0, got {self.mix}")


@dataclass(frozen=True)
class DLLAD:
    """Diffusion least logarithmic absolute difference: g(e) = sign(e)/(1 + a|e|)."""

    scale: float = 1.0
    kind: ClassVar[str] = "dllad"

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidParameters(f"scale must be > 0, got {self.scale}")


BaselineKind = DLMS | DSELMS | DMCC | DLMSF | DLLAD


@dataclass
class SharedData:
    """Everything node `node` sees in one iteration.

    Arrays are aligned with `neighbors` (sorted 1-based ids, node included):
    regressor rows u, targets d, and the neighbours' previous-iteration
    estimates. `phi` carries this-iteration adapt intermediates and is only
    filled by the scheduler for the ATC combine phase.
    """

    node: int
    neighbors: tuple
    u: np.ndarray
    d: np.ndarray
    theta_prev: np.ndarray
    phi: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.neighbors)
        if self.node not in self.neighbors:
            raise DimensionMismatch(f"node {self.node} missing from its own neighbourhood")
        if self.u.shape[0] != m or self.d.shape[0] != m or self.theta_prev.shape[0] != m:
            raise DimensionMismatch("shared arrays must have one row per neighbour")

    @property
    def own_index(self) -> int:
        return self.neighbors.index(self.node)


def error_gain(kind: BaselineKind, e):
    """The scalar ascent gain g(e) of a baseline family (vectorized over e)."""
    e = np.asarray(e, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        if isinstance(kind, DLMS):
            out = e
        elif isinstance(kind, DSELMS):
            out = np.sign(e)
        elif isinstance(kind, DMCC):
            w = kind.kernel_width
            out = np.exp(-(e * e) / (2.0 * w * w)) * e
        elif isinstance(kind, DLMSF):
            # e^3 overflows long before the ratio stops being ~e; switch forms.
            out = np.where(np.abs(e) < 1e100, e**3 / (kind.mix + e * e), e)
        elif isinstance(kind, DLLAD):
            out = np.sign(e) / (1.0 + kind.scale * np.abs(e))
        else:
            raise InvalidParameters(f"unknown baseline kind {kind!r}")
    return out


def baseline_update_direction(kind: BaselineKind, e: float, u: np.ndarray) -> np.ndarray:
    """Ascent direction g(e) * u' for one neighbour's data."""
    return error_gain(kind, e) * np.asarray(u, dtype=float)


def _adapt(theta_eval: np.ndarray, shared: SharedData, kind: BaselineKind, step_size: float) -> np.ndarray:
    e = shared.d - shared.u @ theta_eval
    return theta_eval + step_size * (shared.u.T @ error_gain(kind, e))


def cta_step(state: NodeState, shared: SharedData, weights: np.ndarray,
             kind: BaselineKind, step_size: float) -> NodeState:
    """Combine-then-adapt: average neighbours' previous estimates, then adapt there."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != len(shared.neighbors):
        raise DimensionMismatch("one combination weight per neighbour required")
    phi = shared.theta_prev.T @ weights
    theta = _adapt(phi, shared, kind, step_size)
    return NodeState(theta=theta, phi=phi)


def atc_step(state: NodeState, shared: SharedData, weights: np.ndarray,
             kind: BaselineKind, step_size: float) -> NodeState:
    """Adapt-then-combine: adapt the own estimate, then average intermediates.

    Neighbours' this-iteration intermediates must be present in `shared.phi`
    (the synchronous scheduler fills them); the own slot is recomputed locally.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != len(shared.neighbors):
        raise DimensionMismatch("one combination weight per neighbour required")
    phi_own = _adapt(state.theta, shared, kind, step_size)
    if len(shared.neighbors) == 1:
        return NodeState(theta=weights[0] * phi_own, phi=phi_own)
    if shared.phi is None:
        raise DimensionMismatch("ATC combine needs this-iteration intermediates in shared.phi")
    phi_all = np.array(shared.phi, dtype=float)
    phi_all[shared.own_index] = phi_own
    theta = phi_all.T @ weights
    return NodeState(theta=theta, phi=phi_own)
