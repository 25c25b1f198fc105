"""Closed-form mean-square predictions for the kernel-MAP diffusion filter.

The analysis linearizes the bounded error gain with a two-term Maclaurin
series, which collapses the per-neighbour likelihood slope to the constant
(2 delta^2 - 1) / (2 delta^2 h). That constant must be negative for the mean
recursion to contract, hence the hard requirement delta < 1/sqrt(2) here;
the simulator itself has no such restriction.

All block matrices follow the stacked-error convention: the global error is
col{theta_o - theta_k} with d-sized blocks, the combine matrix extends to
A' (x) I_d, and the weighted-norm recursion works on vec'd weight matrices
through the Kronecker identity (F' (x) F') vec(S) = vec(F' S F).  The big
(Nd)^2 transition is never materialized outside of tests; solves and
recursions use the identity directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DeltaOutOfRange,
    DimensionMismatch,
    InsufficientPilot,
    InvalidParameters,
    NoConvergence,
    SingularSolve,
    UnstableSystem,
)
from .network import CombinationMatrix, NetworkTopology

STEIN_TOL = 1e-10


def _per_node(value, n, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise DimensionMismatch(f"{name} must be scalar or length-{n}, got shape {arr.shape}")
    return arr


@dataclass
class TheoryInputs:
    """Everything the moment construction needs.

    `r_similar` counts buffered neighbour estimates that match the current one
    (1..B); `beta_bar` holds the per-node, per-lag diagonal scalings relating
    buffered vectors to the current estimate, shape (N, B, d). The defaults
    r = B and beta = identity make the prior-bias block vanish.
    """

    topology: NetworkTopology
    combination: CombinationMatrix
    regressor_covariances: list
    noise_variances: np.ndarray
    step_sizes: np.ndarray
    theta_o: np.ndarray
    h: np.ndarray = 1.0
    sigma: np.ndarray = 1.0
    delta: float = 0.25
    buffer_size: int = 3
    r_similar: np.ndarray | None = None
    beta_bar: np.ndarray | None = None

    def __post_init__(self):
        n = self.topology.node_count
        covs = [np.asarray(r, dtype=float) for r in self.regressor_covariances]
        if len(covs) != n:
            raise DimensionMismatch(f"need {n} regressor covariances, got {len(covs)}")
        d = covs[0].shape[0]
        for r in covs:
            if r.shape != (d, d):
                raise DimensionMismatch("regressor covariances must share one square shape")
        self.regressor_covariances = covs
        self.theta_o = np.asarray(self.theta_o, dtype=float)
        if self.theta_o.shape != (d,):
            raise DimensionMismatch(f"theta_o must have length {d}")
        if self.combination.node_count != n:
            raise DimensionMismatch("combination matrix does not match topology size")
        self.noise_variances = _per_node(self.noise_variances, n, "noise_variances")
        self.step_sizes = _per_node(self.step_sizes, n, "step_sizes")
        self.h = _per_node(self.h, n, "h")
        self.sigma = _per_node(self.sigma, n, "sigma")
        if np.any(self.noise_variances < 0):
            raise InvalidParameters("noise variances must be >= 0")
        if np.any(self.step_sizes <= 0) or np.any(self.h <= 0) or np.any(self.sigma <= 0):
            raise InvalidParameters("step sizes and bandwidths must be > 0")
        if not 0.0 < self.delta < 1.0 / math.sqrt(2.0):
            raise DeltaOutOfRange(
                f"delta must lie in (0, 1/sqrt(2)) for the Maclaurin contraction, got {self.delta}"
            )
        if self.buffer_size < 1:
            raise InvalidParameters("buffer_size must be >= 1")
        if self.r_similar is None:
            self.r_similar = np.full(n, float(self.buffer_size))
        else:
            self.r_similar = _per_node(self.r_similar, n, "r_similar")
            if np.any(self.r_similar < 1) or np.any(self.r_similar > self.buffer_size):
                raise InvalidParameters("r_similar entries must lie in [1, buffer_size]")
        if self.beta_bar is None:
            self.beta_bar = np.ones((n, self.buffer_size, d))
        else:
            self.beta_bar = np.asarray(self.beta_bar, dtype=float)
            if self.beta_bar.shape != (n, self.buffer_size, d):
                raise DimensionMismatch(f"beta_bar must have shape ({n}, {self.buffer_size}, {d})")

    @property
    def dim(self) -> int:
        return self.regressor_covariances[0].shape[0]

    def likelihood_coefficient(self, k: int) -> float:
        """(2 delta^2 - 1) / (2 delta^2 h_k); negative on the valid delta range."""
        d2 = 2.0 * self.delta * self.delta
        return (d2 - 1.0) / (d2 * self.h[k - 1])


@dataclass
class MomentSet:
    """Block moment matrices of the linearized error recursion."""

    step_matrix: np.ndarray       # M, block-diagonal alpha_k I_d
    coeff_covariance: np.ndarray  # R, block-diagonal Maclaurin data blocks
    noise_covariance: np.ndarray  # E[G_n G_n'], full Nd x Nd
    prior_bias: np.ndarray        # P, block-diagonal
    mean_transition: np.ndarray   # F = (I + M R - M P) A_ext
    xi_vec: np.ndarray            # vec(M (G + P_outer) M), length (Nd)^2
    prior_outer: np.ndarray       # P theta_bar theta_bar' P'
    regressor_covariances: list
    theta_o: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.regressor_covariances)

    @property
    def dim(self) -> int:
        return self.regressor_covariances[0].shape[0]

    @property
    def theta_stacked(self) -> np.ndarray:
        return np.tile(self.theta_o, self.node_count)

    def big_transition(self) -> np.ndarray:
        """F' (x) F', materialized; meant for small instances and tests."""
        ft = self.mean_transition.T
        return np.kron(ft, ft)

    def _xi_source(self) -> np.ndarray:
        return self.noise_covariance + self.prior_outer

    def block(self, mat: np.ndarray, k: int) -> np.ndarray:
        d = self.dim
        s = slice((k - 1) * d, k * d)
        return mat[s, s]


def build_moments(inputs: TheoryInputs) -> MomentSet:
    """Assemble the moment matrices of the linearized recursion."""
    topo = inputs.topology
    n, d = topo.node_count, inputs.dim
    covs = inputs.regressor_covariances

    m_blocks = [inputs.step_sizes[k - 1] * np.eye(d) for k in range(1, n + 1)]
    r_blocks = []
    p_blocks = []
    for k in range(1, n + 1):
        c_k = inputs.likelihood_coefficient(k)
        r_sum = sum(covs[l - 1] for l in topo.neighbors(k))
        r_blocks.append(c_k * r_sum)
        bias = np.zeros(d)
        beta_sum = inputs.beta_bar[k - 1].sum(axis=0)  # sum_i diag(beta_{k,i})
        for l in topo.neighbors(k):
            if l == k:
                continue
            r_l = inputs.r_similar[l - 1]
            bias += beta_sum * (inputs.buffer_size - r_l) / (inputs.buffer_size * r_l)
        p_blocks.append(np.diag(bias / inputs.sigma[k - 1]))

    step_matrix = scipy.linalg.block_diag(*m_blocks)
    coeff_covariance = scipy.linalg.block_diag(*r_blocks)
    prior_bias = scipy.linalg.block_diag(*p_blocks)

    noise_covariance = np.zeros((n * d, n * d))
    neighbor_sets = [set(topo.neighbors(k)) for k in range(1, n + 1)]
    for k in range(1, n + 1):
        for kp in range(k, n + 1):
            common = neighbor_sets[k - 1] & neighbor_sets[kp - 1]
            if not common:
                continue
            blk = sum(inputs.noise_variances[l - 1] * covs[l - 1] for l in common)
            blk = inputs.likelihood_coefficient(k) * inputs.likelihood_coefficient(kp) * blk
            noise_covariance[(k - 1) * d:k * d, (kp - 1) * d:kp * d] = blk
            if kp != k:
                noise_covariance[(kp - 1) * d:kp * d, (k - 1) * d:k * d] = blk.T

    a_ext = np.kron(inputs.combination.matrix.T, np.eye(d))
    eye = np.eye(n * d)
    mean_transition = (eye + step_matrix @ coeff_covariance - step_matrix @ prior_bias) @ a_ext

    theta_bar = np.tile(inputs.theta_o, n)
    p_theta = prior_bias @ theta_bar
    prior_outer = np.outer(p_theta, p_theta)
    xi_matrix = step_matrix @ (noise_covariance + prior_outer) @ step_matrix
    xi_vec = xi_matrix.flatten(order="F")

    return MomentSet(
        step_matrix=step_matrix,
        coeff_covariance=coeff_covariance,
        noise_covariance=noise_covariance,
        prior_bias=prior_bias,
        mean_transition=mean_transition,
        xi_vec=xi_vec,
        prior_outer=prior_outer,
        regressor_covariances=covs,
        theta_o=np.asarray(inputs.theta_o, dtype=float),
    )


def stepsize_upper_bound(inputs: TheoryInputs, k: int) -> float:
    """Largest mean-stable step size for node k under the linearized recursion."""
    topo = inputs.topology
    d2 = 2.0 * inputs.delta * inputs.delta
    coeff = (1.0 - d2) / (d2 * inputs.h[k - 1])
    hessian = coeff * sum(inputs.regressor_covariances[l - 1] for l in topo.neighbors(k))
    beta_sum = inputs.beta_bar[k - 1].sum(axis=0)
    bias = np.zeros(inputs.dim)
    for l in topo.neighbors(k):
        if l == k:
            continue
        r_l = inputs.r_similar[l - 1]
        bias += beta_sum * (inputs.buffer_size - r_l) / (inputs.buffer_size * r_l)
    hessian = hessian + np.diag(bias / inputs.sigma[k - 1])
    lam_max = float(np.linalg.eigvalsh(hessian)[-1])
    if lam_max <= 0.0:
        return math.inf
    return 2.0 / lam_max


def spectral_radius(matrix: np.ndarray, tol: float = 1e-10, max_iterations: int = 200_000) -> float:
    """Largest eigenvalue modulus via two-column orthogonal (block power) iteration.

    Deterministic start vectors; on stagnation the subspace is restarted from a
    seeded generator. A two-dimensional block captures complex-conjugate
    dominant pairs, which plain power iteration cannot.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameters("matrix entries must be finite")
    n = a.shape[0]
    if n == 1:
        return float(abs(a[0, 0]))

    def ritz_radius(q):
        h = q.T @ (a @ q)
        tr, det = h[0, 0] + h[1, 1], h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        disc = complex(tr * tr - 4.0 * det) ** 0.5
        return max(abs((tr + disc) / 2.0), abs((tr - disc) / 2.0))

    q = np.zeros((n, 2))
    q[0, 0] = 1.0
    q[1, 1] = 1.0
    q += 1e-3 / np.arange(2, n + 2)[:, None]  # deterministic fill, breaks unlucky alignments
    q, _ = np.linalg.qr(q)

    estimate = ritz_radius(q)
    stable = 0
    restart = 0
    for it in range(1, max_iterations + 1):
        w = a @ q
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0  # nilpotent direction: spectrum reachable only at zero
        q, r = np.linalg.qr(w)
        if min(abs(r[0, 0]), abs(r[1, 1])) < 1e-300 * norm_w:
            # collapsed subspace; restart deterministically
            restart += 1
            q, _ = np.linalg.qr(np.random.default_rng(restart).standard_normal((n, 2)))
            stable = 0
            continue
        new_estimate = ritz_radius(q)
        if abs(new_estimate - estimate) <= tol * max(1.0, abs(new_estimate)):
            stable += 1
            if stable >= 5:
                return float(new_estimate)
        else:
            stable = 0
        estimate = new_estimate
        if it % 50_000 == 0:
            restart += 1
            q, _ = np.linalg.qr(np.random.default_rng(restart).standard_normal((n, 2)))
            stable = 0
    raise NoConvergence(f"spectral radius estimate did not settle in {max_iterations} iterations")


def _solve_stein(f: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve X = F X F' + Q by Smith squaring; dense Lyapunov solve as fallback."""
    x = q.copy()
    a = f.copy()
    for _ in range(120):
        x_next = x + a @ x @ a.T
        a = a @ a
        if not np.all(np.isfinite(x_next)):
            x = None
            break
        delta = np.linalg.norm(x_next - x, "fro")
        x = x_next
        if delta <= STEIN_TOL * max(1.0, np.linalg.norm(x, "fro")):
            break
    if x is not None:
        residual = np.linalg.norm(x - f @ x @ f.T - q, "fro")
        if residual <= STEIN_TOL * max(1.0, np.linalg.norm(x, "fro")):
            return x
    x = scipy.linalg.solve_discrete_lyapunov(f, q)
    residual = np.linalg.norm(x - f @ x @ f.T - q, "fro")
    if not np.all(np.isfinite(x)) or residual > 1e-8 * max(1.0, np.linalg.norm(x, "fro")):
        raise SingularSolve(f"Stein solve residual {residual:.3e} above tolerance")
    return x


def to_db(values):
    """10 log10, mapping exact zeros to -inf without warnings."""
    arr = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(arr)


@dataclass
class PerformanceCurves:
    """Per-node and network MSD/EMSE, linear scale; dB via `to_db`.

    Curve arrays are indexed by completed iterations: row 0 is the all-zero
    initialization (error equal to theta_o), row n the prediction after n
    updates. Steady-state fields hold the n -> infinity limits.
    """

    node_msd: np.ndarray | None = None
    node_emse: np.ndarray | None = None
    network_msd: np.ndarray | None = None
    network_emse: np.ndarray | None = None
    steady_node_msd: np.ndarray | None = None
    steady_node_emse: np.ndarray | None = None
    steady_network_msd: float | None = None
    steady_network_emse: float | None = None


def _require_stable(moments: MomentSet) -> None:
    radius = spectral_radius(moments.mean_transition)
    if radius >= 1.0:
        raise UnstableSystem(f"mean transition spectral radius {radius:.6f} >= 1")


def steady_state_metrics(moments: MomentSet) -> PerformanceCurves:
    """Steady-state per-node and network MSD/EMSE of the linearized recursion."""
    _require_stable(moments)
    f = moments.mean_transition
    xi = moments.step_matrix @ moments._xi_source() @ moments.step_matrix
    y = _solve_stein(f, xi)
    n, d = moments.node_count, moments.dim
    node_msd = np.empty(n)
    node_emse = np.empty(n)
    for k in range(1, n + 1):
        y_kk = moments.block(y, k)
        node_msd[k - 1] = np.trace(y_kk)
        node_emse[k - 1] = np.trace(y_kk @ moments.regressor_covariances[k - 1])
    return PerformanceCurves(
        steady_node_msd=node_msd,
        steady_node_emse=node_emse,
        steady_network_msd=float(np.mean(node_msd)),
        steady_network_emse=float(np.mean(node_emse)),
    )


def transient_curves(moments: MomentSet, theta_o: np.ndarray | None = None,
                     n_max: int = 500) -> PerformanceCurves:
    """Iteration-indexed MSD/EMSE predictions from the weighted-norm recursion.

    Carries z_n = F^n theta_bar and W_n = F^n Xi (F')^n forward, one
    matrix product per iteration, instead of powers of the (Nd)^2 transition.
    """
    _require_stable(moments)
    if theta_o is None:
        theta_o = moments.theta_o
    theta_bar = np.tile(np.asarray(theta_o, dtype=float), moments.node_count)
    f = moments.mean_transition
    xi = moments.step_matrix @ moments._xi_source() @ moments.step_matrix
    n, d = moments.node_count, moments.dim

    node_msd = np.empty((n_max + 1, n))
    node_emse = np.empty((n_max + 1, n))
    blocks = [slice((k - 1) * d, k * d) for k in range(1, n + 1)]
    for k in range(1, n + 1):
        head = theta_bar[blocks[k - 1]]
        node_msd[0, k - 1] = head @ head
        node_emse[0, k - 1] = head @ moments.regressor_covariances[k - 1] @ head

    z = theta_bar.copy()
    w = xi.copy()
    acc_msd = np.zeros(n)
    acc_emse = np.zeros(n)
    for step in range(1, n_max + 1):
        z = f @ z
        for k in range(1, n + 1):
            blk = blocks[k - 1]
            w_kk = w[blk, blk]
            r_k = moments.regressor_covariances[k - 1]
            acc_msd[k - 1] += np.trace(w_kk)
            acc_emse[k - 1] += np.trace(w_kk @ r_k)
            z_k = z[blk]
            node_msd[step, k - 1] = z_k @ z_k + acc_msd[k - 1]
            node_emse[step, k - 1] = z_k @ r_k @ z_k + acc_emse[k - 1]
        w = f @ w @ f.T

    return PerformanceCurves(
        node_msd=node_msd,
        node_emse=node_emse,
        network_msd=node_msd.mean(axis=1),
        network_emse=node_emse.mean(axis=1),
    )


def estimate_beta_and_r(trace: np.ndarray, buffer_size: int, sigma: float,
                        burn_in: int = 0):
    """Estimate the buffer-scaling diagonals and similarity counts from a pilot.

    `trace` has shape (T, N, d): per-iteration estimates of every node.
    Ratios theta[t-i]/theta[t] are clipped to [-2, 2] with tiny denominators
    treated as neutral; r counts lags whose normalized kernel value is >= 0.9.
    """
    trace = np.asarray(trace, dtype=float)
    if trace.ndim != 3:
        raise DimensionMismatch(f"trace must be (T, N, d), got {trace.shape}")
    post = trace[burn_in:]
    t_len, n, d = post.shape
    if t_len - buffer_size < 10 * buffer_size:
        raise InsufficientPilot(
            f"need at least {11 * buffer_size} post-burn-in iterations, got {t_len}"
        )
    beta_bar = np.empty((n, buffer_size, d))
    r_similar = np.empty(n)
    for k in range(n):
        cur = post[buffer_size:, k, :]                      # theta_{k,t}
        safe = np.abs(cur) >= 1e-8
        counts = np.zeros(t_len - buffer_size)
        for i in range(1, buffer_size + 1):
            past = post[buffer_size - i:t_len - i, k, :]    # theta_{k,t-i}
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(safe, past / cur, 1.0)
            beta_bar[k, i - 1] = np.clip(ratio, -2.0, 2.0).mean(axis=0)
            sq = ((cur - past) ** 2).sum(axis=1)
            counts += np.exp(-sq / (2.0 * sigma)) >= 0.9
        r_similar[k] = min(buffer_size, max(1, round(counts.mean())))
    return beta_bar, r_similar
