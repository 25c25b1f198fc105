"""Sensor-network model: topology, combination weights, per-node signal
statistics, the linear measurement model, and ground-truth processes.

Node ids are 1-based everywhere; every node has an implicit self-loop, so the
neighbourhood N_k always contains k itself.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import noise as noise_models
from .errors import (
    DimensionMismatch,
    DisconnectedGraph,
    IndexOutOfRange,
    InvalidParameters,
    NonPositiveSignalPower,
)

COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True)
class NetworkTopology:
    """Undirected connected graph over nodes 1..N with implicit self-loops."""

    node_count: int
    edges: frozenset
    neighborhoods: tuple

    def neighbors(self, k: int) -> tuple:
        """N_k as a sorted tuple of 1-based ids, k included."""
        return self.neighborhoods[k - 1]

    def degree(self, k: int) -> int:
        return len(self.neighborhoods[k - 1])


def build_topology(node_count: int, edges) -> NetworkTopology:
    """Validate and freeze a topology from an edge list.

    Duplicate edges and explicit self-loops are coalesced away; the graph must
    come out connected.
    """
    if node_count < 1:
        raise IndexOutOfRange(f"node_count must be >= 1, got {node_count}")
    normalized = set()
    for edge in edges:
        l, k = int(edge[0]), int(edge[1])
        for idx in (l, k):
            if not 1 <= idx <= node_count:
                raise IndexOutOfRange(f"node index {idx} outside 1..{node_count}")
        if l == k:
            continue  # self-loops are implicit
        normalized.add((min(l, k), max(l, k)))

    adjacency = {k: {k} for k in range(1, node_count + 1)}
    for l, k in normalized:
        adjacency[l].add(k)
        adjacency[k].add(l)

    seen = {1}
    queue = deque([1])
    while queue:
        node = queue.popleft()
        for other in adjacency[node]:
            if other not in seen:
                seen.add(other)
                queue.append(other)
    if len(seen) != node_count:
        missing = sorted(set(range(1, node_count + 1)) - seen)
        raise DisconnectedGraph(f"nodes {missing} unreachable from node 1")

    neighborhoods = tuple(tuple(sorted(adjacency[k])) for k in range(1, node_count + 1))
    return NetworkTopology(node_count=node_count, edges=frozenset(normalized), neighborhoods=neighborhoods)


@dataclass
class CombinationMatrix:
    """Left-stochastic neighbour weights; matrix[l-1, k-1] is a_{l,k}."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"combination matrix must be square, got {a.shape}")
        if np.any(a < 0):
            raise InvalidParameters("combination weights must be nonnegative")
        col_sums = a.sum(axis=0)
        if np.max(np.abs(col_sums - 1.0)) > COLUMN_SUM_TOL:
            raise InvalidParameters(f"columns must sum to 1 within {COLUMN_SUM_TOL}")
        self.matrix = a

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]

    def column(self, k: int) -> np.ndarray:
        return self.matrix[:, k - 1]

    def to_csv(self, path) -> None:
        """Plain CSV export, one matrix row per line."""
        np.savetxt(path, self.matrix, delimiter=",", fmt="%.17g")


def combination_weights(topology: NetworkTopology, rule: str = "uniform") -> CombinationMatrix:
    """Build a left-stochastic combination matrix respecting the topology.

    `uniform` takes a_{l,k} = 1/|N_k| for l in N_k.  `metropolis` assigns the
    network-wide max-degree reciprocal off-diagonal and lets the diagonal
    absorb the remainder.
    """
    n = topology.node_count
    a = np.zeros((n, n))
    if rule == "uniform":
        for k in range(1, n + 1):
            nbrs = topology.neighbors(k)
            for l in nbrs:
                a[l - 1, k - 1] = 1.0 / len(nbrs)
    elif rule == "metropolis":
        max_degree = max(topology.degree(k) for k in range(1, n + 1))
        for k in range(1, n + 1):
            nbrs = topology.neighbors(k)
            for l in nbrs:
                if l != k:
                    a[l - 1, k - 1] = 1.0 / max_degree
            a[k - 1, k - 1] = 1.0 - (len(nbrs) - 1) / max_degree
    else:
        raise InvalidParameters(f"unknown combination rule {rule!r}")
    return CombinationMatrix(a)


def noise_variance_from_snr(snr_db: float, r_u: np.ndarray, theta_o: np.ndarray) -> float:
    """Model-noise variance for a target SNR, with sigma_d^2 = theta_o' R_u theta_o."""
    theta_o = np.asarray(theta_o, dtype=float)
    r_u = np.asarray(r_u, dtype=float)
    signal_power = float(theta_o @ r_u @ theta_o)
    if signal_power <= 0.0:
        raise NonPositiveSignalPower(f"theta_o' R_u theta_o = {signal_power} <= 0")
    return signal_power * 10.0 ** (-snr_db / 10.0)


@dataclass
class NodeProfile:
    """Per-node signal statistics: regressor covariance, noise law, step size."""

    regressor_covariance: np.ndarray
    noise: noise_models.NoiseSpec
    step_size: float
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.regressor_covariance, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got {r.shape}")
        if np.max(np.abs(r - r.T)) > 1e-12:
            raise InvalidParameters("regressor covariance must be symmetric within 1e-12")
        eigmin = float(np.linalg.eigvalsh(r)[0])
        if eigmin <= 0.0:
            raise InvalidParameters(f"regressor covariance must be positive definite (min eig {eigmin})")
        if not self.step_size > 0.0:
            raise InvalidParameters(f"step size must be > 0, got {self.step_size}")
        self.regressor_covariance = r
        self._chol = np.linalg.cholesky(r)

    @property
    def dim(self) -> int:
        return self.regressor_covariance.shape[0]


@dataclass(frozen=True)
class Measurement:
    """One regressor/target pair; the realized noise is kept for diagnostics."""

    u: np.ndarray
    d: float
    v: float


def generate_measurement(profile: NodeProfile, theta_now: np.ndarray, rng) -> Measurement:
    """Draw u ~ N(0, R_u), v ~ profile.noise, and form d = u theta + v."""
    z = rng.standard_normal(profile.dim)
    u = profile._chol @ z
    v = noise_models.sample(profile.noise, rng)
    d = float(u @ np.asarray(theta_now, dtype=float) + v)
    return Measurement(u=u, d=d, v=v)


@dataclass(frozen=True)
class Stationary:
    """Fixed ground truth."""


@dataclass(frozen=True)
class RandomWalk:
    """First-order Gauss-Markov drift around theta_o; decay pinned at 0.99."""

    q_variance: float
    decay: float = 0.99

    def __post_init__(self):
        if self.q_variance < 0.0:
            raise InvalidParameters(f"q_variance must be >= 0, got {self.q_variance}")


class GroundTruth:
    """Ground-truth parameter process theta_{o,n}, stationary or drifting."""

    def __init__(self, theta_o, drift=Stationary()):
        self.theta_o = np.asarray(theta_o, dtype=float).copy()
        self.drift = drift
        self._omega = np.zeros_like(self.theta_o)

    def advance(self, rng) -> np.ndarray:
        """One step of the drift process; returns theta_{o,n}."""
        if isinstance(self.drift, RandomWalk):
            q = rng.standard_normal(self.theta_o.shape) * math.sqrt(self.drift.q_variance)
            self._omega = self.drift.decay * self._omega + q
            return self.theta_o + self._omega
        return self.theta_o.copy()


def drift_step(ground_truth: GroundTruth, rng) -> np.ndarray:
    return ground_truth.advance(rng)


def save_topology(topology: NetworkTopology, path) -> None:
    """Plain-text export: first line N, then one `l k` pair per edge, 1-based."""
    lines = [str(topology.node_count)]
    lines += [f"{l} {k}" for l, k in sorted(topology.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_topology(path) -> NetworkTopology:
    """Parse the plain-text topology format written by `save_topology`."""
    raw = Path(path).read_text().split("\n")
    rows = [line.strip() for line in raw if line.strip() and not line.strip().startswith("#")]
    if not rows:
        raise InvalidParameters(f"empty topology file {path}")
    node_count = int(rows[0])
    edges = []
    for line in rows[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise InvalidParameters(f"bad edge line {line!r} in {path}")
        edges.append((int(parts[0]), int(parts[1])))
    return build_topology(node_count, edges)


def _data_text(name: str) -> str:
    return resources.files("diffnet").joinpath("data", name).read_text()


def default_topology() -> NetworkTopology:
    """The canonical committed 16-node connected topology."""
    rows = [line.strip() for line in _data_text("topology16.txt").split("\n") if line.strip()]
    node_count = int(rows[0])
    edges = [tuple(int(x) for x in line.split()) for line in rows[1:]]
    return build_topology(node_count, edges)


def default_variance_profile() -> np.ndarray:
    """Committed per-node regressor variances, drawn once from [0.8, 1.2]."""
    rows = [line.strip() for line in _data_text("regressor_variances16.txt").split("\n") if line.strip()]
    return np.array([float(x) for x in rows])
