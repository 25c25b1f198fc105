"""Experiment orchestration: configuration, seeded Monte-Carlo runs, MSD
measurement, parameter sweeps, and CSV export.

Determinism contract: (config, base_seed) fixes every output byte. Each
realization derives its generator from SeedSequence([base_seed, index]), all
measurement and noise draws are made up front in a fixed order, and every
configured algorithm runs on the same draws, so comparisons are paired.
Realizations are statistically independent and reduced in index order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml
from scipy.special import expit

from . import noise as noise_models
from .diffusion import DLLAD, DLMS, DLMSF, DMCC, DSELMS, SharedData, error_gain
from .errors import ConfigError, DiffnetError, PartialFailure
from .network import (
    CombinationMatrix,
    GroundTruth,
    NetworkTopology,
    NodeProfile,
    RandomWalk,
    Stationary,
    build_topology,
    combination_weights,
    default_topology,
    default_variance_profile,
    load_topology,
    noise_variance_from_snr,
)
from .npdlms import NPDLMS, EstimateBuffer, KernelParams, ThresholdParams, npdlms_adapt
from .theory import TheoryInputs, to_db

DIVERGENCE_MSD = 1e6
RECORD_CAP = 1e12

_BASELINES = {"dlms": DLMS, "dse_lms": DSELMS, "dmcc": DMCC, "dlms_f": DLMSF, "dllad": DLLAD}


@dataclass(frozen=True)
class AlgorithmSpec:
    """One configured algorithm: update family, step size, CSV label."""

    kind: object
    step_size: float
    label: str = ""

    def __post_init__(self):
        if not self.step_size > 0:
            raise ConfigError(f"step size must be > 0, got {self.step_size}")
        if not self.label:
            object.__setattr__(self, "label", self.kind.kind)


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    topology: NetworkTopology
    combination: CombinationMatrix
    theta_o: np.ndarray
    drift: Stationary | RandomWalk
    covariances: list
    noise_specs: list
    algorithms: list
    iterations: int
    realizations: int
    base_seed: int
    gate: ThresholdParams = ThresholdParams()
    strategy: str = "cta"
    output: str | None = None

    def __post_init__(self):
        n = self.topology.node_count
        self.theta_o = np.asarray(self.theta_o, dtype=float)
        d = self.theta_o.shape[0]
        if self.iterations < 1 or self.realizations < 1:
            raise ConfigError("iterations and realizations must be >= 1")
        if len(self.covariances) != n or len(self.noise_specs) != n:
            raise ConfigError(f"need per-node covariances and noise specs for {n} nodes")
        for cov in self.covariances:
            if np.asarray(cov).shape != (d, d):
                raise ConfigError(f"covariances must be ({d}, {d}) to match theta_o")
        if not self.algorithms:
            raise ConfigError("at least one algorithm must be configured")
        labels = [spec.label for spec in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"algorithm labels must be unique, got {labels}")
        if self.strategy not in ("cta", "atc"):
            raise ConfigError(f"strategy must be 'cta' or 'atc', got {self.strategy!r}")
        if self.combination.node_count != n:
            raise ConfigError("combination matrix size does not match topology")
        self._chols = [np.linalg.cholesky(np.asarray(c, dtype=float)) for c in self.covariances]

    @property
    def dim(self) -> int:
        return self.theta_o.shape[0]

    def npdlms_spec(self) -> AlgorithmSpec | None:
        for spec in self.algorithms:
            if isinstance(spec.kind, NPDLMS):
                return spec
        return None


def node_profiles(config: ExperimentConfig, step_size: float = 1.0) -> list:
    """Per-node signal profiles (step size is algorithm-dependent, pass it in)."""
    return [
        NodeProfile(regressor_covariance=cov, noise=spec, step_size=step_size)
        for cov, spec in zip(config.covariances, config.noise_specs)
    ]


# ---------------------------------------------------------------------------
# configuration parsing


def _parse_theta(raw, dim):
    if raw is None or raw == "normalized_ones":
        return np.ones(dim) / math.sqrt(dim)
    theta = np.asarray(raw, dtype=float)
    if theta.shape != (dim,):
        raise ConfigError(f"theta_o must have length {dim}")
    return theta


def _parse_topology(raw):
    if raw is None or raw == "builtin:16":
        return default_topology()
    if isinstance(raw, dict):
        try:
            return build_topology(int(raw["nodes"]), [tuple(e) for e in raw.get("edges", [])])
        except KeyError as exc:
            raise ConfigError(f"inline topology needs 'nodes': {exc}") from exc
    return load_topology(raw)


def _parse_variances(raw, n):
    if raw is None or raw == "builtin:16":
        profile = default_variance_profile()
        if n != profile.shape[0]:
            raise ConfigError(f"builtin variance profile is for 16 nodes, topology has {n}")
        return profile
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ConfigError(f"regressor_variances must be scalar or length {n}")
    return arr


def _parse_noise(raw, covariances, theta_o):
    n = len(covariances)
    if raw is None:
        raise ConfigError("a 'noise' section is required")
    kind = raw.get("kind")
    if kind == "gaussian":
        if "snr_db" in raw:
            snr = float(raw["snr_db"])
            return [
                noise_models.Gaussian(noise_variance_from_snr(snr, covariances[k], theta_o))
                for k in range(n)
            ]
        if "variance" in raw:
            var = np.asarray(raw["variance"], dtype=float)
            if var.ndim == 0:
                var = np.full(n, float(var))
            if var.shape != (n,):
                raise ConfigError(f"gaussian variance must be scalar or length {n}")
            return [noise_models.Gaussian(float(v)) for v in var]
        raise ConfigError("gaussian noise needs 'snr_db' or 'variance'")
    if kind == "alpha_stable":
        spec = noise_models.AlphaStable(
            alpha=float(raw["alpha"]), beta=float(raw.get("beta", 0.0)),
            gamma=float(raw.get("gamma", 1.0)), delta=float(raw.get("delta", 0.0)),
        )
        return [spec] * n
    raise ConfigError(f"unknown noise kind {kind!r}")


def _parse_algorithm(raw) -> AlgorithmSpec:
    kind_name = raw.get("kind")
    step = raw.get("step_size")
    if step is None:
        raise ConfigError(f"algorithm {kind_name!r} is missing step_size")
    label = raw.get("label", "")
    if kind_name == "npdlms":
        kernel = KernelParams(
            sigma=float(raw.get("sigma", 1.0)),
            h=float(raw.get("h", 1.0)),
            delta=float(raw.get("delta", 0.25)),
        )
        kind = NPDLMS(buffer_size=int(raw.get("buffer", 3)), kernel=kernel)
    elif kind_name in _BASELINES:
        cls = _BASELINES[kind_name]
        kwargs = {}
        if kind_name == "dmcc" and "kernel_width" in raw:
            kwargs["kernel_width"] = float(raw["kernel_width"])
        if kind_name == "dlms_f" and "mix" in raw:
            kwargs["mix"] = float(raw["mix"])
        if kind_name == "dllad" and "scale" in raw:
            kwargs["scale"] = float(raw["scale"])
        kind = cls(**kwargs)
    else:
        raise ConfigError(f"unknown algorithm kind {kind_name!r}")
    return AlgorithmSpec(kind=kind, step_size=float(step), label=label)


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build and validate a config from plain nested dictionaries."""
    try:
        topology = _parse_topology(raw.get("topology"))
        n = topology.node_count
        dim = int(raw.get("d", 5))
        theta_o = _parse_theta(raw.get("theta_o"), dim)
        variances = _parse_variances(raw.get("regressor_variances"), n)
        covariances = [v * np.eye(dim) for v in variances]

        env = raw.get("environment") or {"kind": "stationary"}
        if env.get("kind") == "stationary":
            drift = Stationary()
        elif env.get("kind") == "random_walk":
            drift = RandomWalk(q_variance=float(env.get("q_variance", 1e-4)))
        else:
            raise ConfigError(f"unknown environment kind {env.get('kind')!r}")

        noise_specs = _parse_noise(raw.get("noise"), covariances, theta_o)
        algorithms = [_parse_algorithm(a) for a in raw.get("algorithms", [])]

        gate_raw = raw.get("gate") or {}
        gate = ThresholdParams(
            eta=float(gate_raw.get("eta", 0.0)),
            slope=float(gate_raw.get("slope", 5.0)),
            mode=gate_raw.get("mode", "smooth"),
        )
        rule = raw.get("combination", "uniform")
        return ExperimentConfig(
            topology=topology,
            combination=combination_weights(topology, rule),
            theta_o=theta_o,
            drift=drift,
            covariances=covariances,
            noise_specs=noise_specs,
            algorithms=algorithms,
            iterations=int(raw.get("iterations", 500)),
            realizations=int(raw.get("realizations", 1)),
            base_seed=int(raw.get("base_seed", 0)),
            gate=gate,
            strategy=raw.get("strategy", "cta"),
            output=raw.get("output"),
        )
    except ConfigError:
        raise
    except DiffnetError as exc:
        raise ConfigError(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad configuration: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} does not contain a mapping")
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# simulation core


def realization_rng(base_seed: int, index: int):
    """Independent, reproducible stream for one realization."""
    return np.random.default_rng(np.random.SeedSequence(entropy=[int(base_seed), int(index)]))


@dataclass
class RealizationData:
    """Pre-generated draws shared by every algorithm within one realization."""

    theta_path: np.ndarray  # (T, d)
    regressors: np.ndarray  # (T, N, d)
    targets: np.ndarray     # (T, N)
    noises: np.ndarray      # (T, N)


def generate_realization_data(config: ExperimentConfig, rng) -> RealizationData:
    t_len, n, d = config.iterations, config.topology.node_count, config.dim
    ground_truth = GroundTruth(config.theta_o, config.drift)
    theta_path = np.empty((t_len, d))
    for t in range(t_len):
        theta_path[t] = ground_truth.advance(rng)
    z = rng.standard_normal((t_len, n, d))
    regressors = np.einsum("nij,tnj->tni", np.stack(config._chols), z)
    noises = np.empty((t_len, n))
    for k in range(n):
        noises[:, k] = noise_models.sample(config.noise_specs[k], rng, t_len)
    targets = np.einsum("tnd,td->tn", regressors, theta_path) + noises
    return RealizationData(theta_path=theta_path, regressors=regressors,
                           targets=targets, noises=noises)


def _adjacency_mask(topology: NetworkTopology) -> np.ndarray:
    n = topology.node_count
    mask = np.zeros((n, n))
    for k in range(1, n + 1):
        for l in topology.neighbors(k):
            mask[l - 1, k - 1] = 1.0
    return mask


def _record(theta: np.ndarray, theta_now: np.ndarray) -> np.ndarray:
    dev = theta - theta_now[:, None]
    return np.einsum("dk,dk->k", dev, dev)


def _run_baseline(config: ExperimentConfig, spec: AlgorithmSpec, data: RealizationData):
    """Vectorized synchronous run of one baseline family; returns (sq, None, diverged)."""
    a = config.combination.matrix
    mask = _adjacency_mask(config.topology)
    t_len, n, d = config.iterations, config.topology.node_count, config.dim
    theta = np.zeros((d, n))
    sq = np.empty((t_len, n))
    step = spec.step_size
    cta = config.strategy == "cta"
    with np.errstate(all="ignore"):
        for t in range(t_len):
            u_t = data.regressors[t]
            d_t = data.targets[t]
            if cta:
                phi = theta @ a
                err = d_t[:, None] - u_t @ phi
                theta = phi + step * (u_t.T @ (error_gain(spec.kind, err) * mask))
            else:
                err = d_t[:, None] - u_t @ theta
                phi = theta + step * (u_t.T @ (error_gain(spec.kind, err) * mask))
                theta = phi @ a
            sq[t] = _record(theta, data.theta_path[t])
    return sq, None, _diverged(sq)


def _diverged(sq: np.ndarray) -> bool:
    if not np.all(np.isfinite(sq)):
        return True
    return bool(np.any(sq.mean(axis=1) > DIVERGENCE_MSD))


def _run_npdlms_reference(config: ExperimentConfig, spec: AlgorithmSpec, data: RealizationData,
                          trace_out: np.ndarray | None = None):
    """Per-node run of the kernel-MAP update through the single-node ops.

    The vectorized runner below is the production path; this one exists so the
    two can be cross-checked on small cases.
    """
    algo: NPDLMS = spec.kind
    topo = config.topology
    a = config.combination.matrix
    t_len, n, d = config.iterations, topo.node_count, config.dim
    neighbor_ids = [topo.neighbors(k) for k in range(1, n + 1)]
    neighbor_idx = [np.array([l - 1 for l in ids]) for ids in neighbor_ids]
    buffers = [EstimateBuffer(algo.buffer_size, ids) for ids in neighbor_ids]
    theta = np.zeros((n, d))
    sq = np.empty((t_len, n))
    updates = np.zeros(n)
    cta = config.strategy == "cta"
    for t in range(t_len):
        u_t = data.regressors[t]
        d_t = data.targets[t]
        theta_prev = theta
        combined = a.T @ theta_prev if cta else None
        staged = np.empty_like(theta)
        for k in range(n):
            idx = neighbor_idx[k]
            shared = SharedData(node=k + 1, neighbors=neighbor_ids[k], u=u_t[idx],
                                d=d_t[idx], theta_prev=theta_prev[idx])
            point = combined[k] if cta else theta_prev[k]
            adapted, fired = npdlms_adapt(shared, buffers[k], algo.kernel, config.gate,
                                          spec.step_size, point)
            updates[k] += fired
            staged[k] = adapted
        theta = staged if cta else a.T @ staged
        sq[t] = _record(theta.T, data.theta_path[t])
        if trace_out is not None:
            trace_out[t] = theta
    return sq, updates, _diverged(sq)


def _run_npdlms(config: ExperimentConfig, spec: AlgorithmSpec, data: RealizationData,
                trace_out: np.ndarray | None = None):
    """Vectorized synchronous run of the kernel-MAP update.

    Every node's rings hold the same global history theta_{., n-1..n-B}, so
    the per-node buffers collapse into one (B, N, d) array and the mu weights
    into one (B, N, N) softmax. Matches `_run_npdlms_reference` to rounding.
    """
    algo: NPDLMS = spec.kind
    kernel = algo.kernel
    topo = config.topology
    a = config.combination.matrix
    mask = _adjacency_mask(topo)                  # mask[l, k] = 1 iff l in N_k
    cross = mask.copy()
    np.fill_diagonal(cross, 0.0)                  # N_k \ {k}
    t_len, n, d = config.iterations, topo.node_count, config.dim
    step = spec.step_size
    sigma, h, delta = kernel.sigma, kernel.h, kernel.delta
    gate = config.gate
    cta = config.strategy == "cta"

    theta = np.zeros((n, d))
    history = np.zeros((0, n, d))                 # newest first, rows <= buffer_size
    sq = np.empty((t_len, n))
    updates = np.zeros(n)
    for t in range(t_len):
        u_t = data.regressors[t]
        d_t = data.targets[t]
        history = np.concatenate((theta[None], history[: algo.buffer_size - 1]))
        point = a.T @ theta if cta else theta     # (N, d) evaluation points

        err = d_t[:, None] - u_t @ point.T        # err[l, k] = d_l - u_l theta_eval_k
        eps = np.einsum("lk,lk->k", err * err, mask)
        err = np.clip(err, -1e150, 1e150)
        gain = delta * (err / np.hypot(delta, err)) * mask
        grad = (u_t.T @ gain) / h                 # (d, N)

        if history.shape[0] >= 2:
            diff_own = history - point[None]      # (B, N, d)
            lw_own = -np.einsum("bnd,bnd->bn", diff_own, diff_own) / (2.0 * sigma)
            diff_nbr = history - theta[None]
            lw_nbr = -np.einsum("bnd,bnd->bn", diff_nbr, diff_nbr) / (2.0 * sigma)
            mu_own = np.exp(lw_own - lw_own.max(axis=0))
            mu_own /= mu_own.sum(axis=0)
            joint = lw_own[:, None, :] + lw_nbr[:, :, None]   # (B, l, k)
            mu_joint = np.exp(joint - joint.max(axis=0))
            mu_joint /= mu_joint.sum(axis=0)
            mu_diff = (mu_joint - mu_own[:, None, :]) * cross[None]
            np.nan_to_num(mu_diff, copy=False)    # underflowed pairs carry no prior signal
            grad = grad + np.einsum("bkd,blk->dk", history, mu_diff) / sigma

        if gate.mode == "hard":
            open_gate = (eps > gate.eta).astype(float)
        else:
            open_gate = expit(2.0 * gate.slope * (eps - gate.eta))
        updates += eps > gate.eta
        adapted = point + step * open_gate[:, None] * grad.T
        theta = adapted if cta else a.T @ adapted
        sq[t] = _record(theta.T, data.theta_path[t])
        if trace_out is not None:
            trace_out[t] = theta
    return sq, updates, _diverged(sq)


def run_realization(config: ExperimentConfig, index: int):
    """All configured algorithms on one shared measurement stream.

    Returns {label: (per-node squared deviations (T, N), update counts or
    None, diverged flag)}. Recorded deviations are capped at RECORD_CAP so
    diverged runs stay plottable; the flag carries the divergence signal.
    """
    rng = realization_rng(config.base_seed, index)
    data = generate_realization_data(config, rng)
    out = {}
    for spec in config.algorithms:
        if isinstance(spec.kind, NPDLMS):
            sq, updates, diverged = _run_npdlms(config, spec, data)
        else:
            sq, updates, diverged = _run_baseline(config, spec, data)
        sq = np.where(np.isfinite(sq), np.minimum(sq, RECORD_CAP), RECORD_CAP)
        out[spec.label] = (sq, updates, diverged)
    return out


@dataclass
class RunResult:
    """Ensemble-averaged curves and counters for one experiment."""

    labels: list
    iterations: int
    realizations: int
    node_msd: dict               # label -> (T, N) linear ensemble means
    kappa: dict                  # label -> (N,) mean hard-gate update counts, or None
    diverged: dict               # label -> number of diverged realizations
    wall_time_s: float = 0.0

    def network_msd(self, label: str) -> np.ndarray:
        return self.node_msd[label].mean(axis=1)

    def network_msd_db(self, label: str) -> np.ndarray:
        return to_db(self.network_msd(label))

    def steady_window(self) -> int:
        return max(1, round(0.2 * self.iterations))

    def steady_state_msd_db(self, label: str) -> float:
        curve = self.network_msd(label)
        return float(to_db(curve[-self.steady_window():].mean()))

    def node_steady_state_msd_db(self, label: str) -> np.ndarray:
        node = self.node_msd[label]
        return to_db(node[-self.steady_window():].mean(axis=0))

    def kappa_mean(self, label: str) -> float:
        counts = self.kappa[label]
        if counts is None:
            raise ConfigError(f"{label} has no gate counter")
        return float(counts.mean())


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Average squared errors over realizations (before the dB transform)."""
    started = time.perf_counter()
    t_len, n = config.iterations, config.topology.node_count
    sums = {spec.label: np.zeros((t_len, n)) for spec in config.algorithms}
    kappa = {spec.label: np.zeros(n) if isinstance(spec.kind, NPDLMS) else None
             for spec in config.algorithms}
    diverged = {spec.label: 0 for spec in config.algorithms}
    failures = []
    for index in range(config.realizations):
        try:
            results = run_realization(config, index)
        except Exception as exc:  # noqa: BLE001 - reported via PartialFailure
            failures.append((index, exc))
            continue
        for label, (sq, updates, flag) in results.items():
            sums[label] += sq
            if updates is not None:
                kappa[label] += updates
            diverged[label] += bool(flag)
    if failures:
        raise PartialFailure(failures)
    result = RunResult(
        labels=[spec.label for spec in config.algorithms],
        iterations=t_len,
        realizations=config.realizations,
        node_msd={label: s / config.realizations for label, s in sums.items()},
        kappa={label: (k / config.realizations if k is not None else None)
               for label, k in kappa.items()},
        diverged=diverged,
        wall_time_s=time.perf_counter() - started,
    )
    if config.output:
        export_csv(result, config.output)
    return result


def run_pilot_trace(config: ExperimentConfig, index: int = 0) -> np.ndarray:
    """(T, N, d) trace of the kernel-MAP estimates from one realization."""
    spec = config.npdlms_spec()
    if spec is None:
        raise ConfigError("pilot trace needs an npdlms algorithm in the config")
    rng = realization_rng(config.base_seed, index)
    data = generate_realization_data(config, rng)
    trace = np.empty((config.iterations, config.topology.node_count, config.dim))
    _run_npdlms(config, spec, data, trace_out=trace)
    return trace


# ---------------------------------------------------------------------------
# export and sweeps


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_csv(result: RunResult, path) -> None:
    """`iteration,<label>_msd_db,...` with one row per iteration, LF endings."""
    if not result.labels:
        raise ConfigError("no algorithms to export")
    curves = {label: result.network_msd_db(label) for label in result.labels}
    header = "iteration," + ",".join(f"{label}_msd_db" for label in result.labels)
    lines = [header]
    for t in range(result.iterations):
        row = [str(t + 1)] + [_fmt(curves[label][t]) for label in result.labels]
        lines.append(",".join(row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


SWEEPABLE = ("eta", "h", "delta", "sigma")


def _override_sweep_value(config: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    if parameter == "eta":
        gate = ThresholdParams(eta=float(value), slope=config.gate.slope, mode=config.gate.mode)
        return replace(config, gate=gate, output=None)
    algorithms = []
    for spec in config.algorithms:
        if isinstance(spec.kind, NPDLMS):
            kernel = spec.kind.kernel
            kernel = KernelParams(
                sigma=float(value) if parameter == "sigma" else kernel.sigma,
                h=float(value) if parameter == "h" else kernel.h,
                delta=float(value) if parameter == "delta" else kernel.delta,
            )
            spec = AlgorithmSpec(kind=NPDLMS(buffer_size=spec.kind.buffer_size, kernel=kernel),
                                 step_size=spec.step_size, label=spec.label)
        algorithms.append(spec)
    return replace(config, algorithms=algorithms, output=None)


def sweep(config: ExperimentConfig, parameter: str, values) -> list:
    """One experiment per value, same base seed throughout (paired comparison)."""
    if parameter not in SWEEPABLE:
        raise ConfigError(f"sweep parameter must be one of {SWEEPABLE}, got {parameter!r}")
    if config.npdlms_spec() is None:
        raise ConfigError("sweeps apply to the npdlms algorithm; none configured")
    return [run_experiment(_override_sweep_value(config, parameter, v)) for v in values]


def export_sweep_csv(values, results, path) -> None:
    """Concatenated per-value curves with a leading param_value column."""
    if not results:
        raise ConfigError("no sweep results to export")
    labels = results[0].labels
    header = "param_value,iteration," + ",".join(f"{label}_msd_db" for label in labels)
    lines = [header]
    for value, result in zip(values, results):
        curves = {label: result.network_msd_db(label) for label in labels}
        for t in range(result.iterations):
            row = [_fmt(value), str(t + 1)] + [_fmt(curves[label][t]) for label in labels]
            lines.append(",".join(row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def theory_inputs_from_config(config: ExperimentConfig, r_similar=None,
                              beta_bar=None) -> TheoryInputs:
    """Theory-side inputs for the configured kernel-MAP algorithm.

    Requires Gaussian noise (the moment matrices need finite variances).
    """
    spec = config.npdlms_spec()
    if spec is None:
        raise ConfigError("theory predictions need an npdlms algorithm in the config")
    variances = []
    for ns in config.noise_specs:
        if not isinstance(ns, noise_models.Gaussian):
            raise ConfigError("theory predictions require gaussian noise")
        variances.append(ns.variance)
    algo: NPDLMS = spec.kind
    return TheoryInputs(
        topology=config.topology,
        combination=config.combination,
        regressor_covariances=config.covariances,
        noise_variances=np.array(variances),
        step_sizes=np.full(config.topology.node_count, spec.step_size),
        theta_o=config.theta_o,
        h=algo.kernel.h,
        sigma=algo.kernel.sigma,
        delta=algo.kernel.delta,
        buffer_size=algo.buffer_size,
        r_similar=r_similar,
        beta_bar=beta_bar,
    )


def export_theory_csv(curves, steady, path) -> None:
    """`n,msd_theory_db,emse_theory_db` rows plus a steady_state summary row."""
    msd_db = to_db(curves.network_msd)
    emse_db = to_db(curves.network_emse)
    lines = ["n,msd_theory_db,emse_theory_db"]
    for n in range(msd_db.shape[0]):
        lines.append(f"{n},{_fmt(msd_db[n])},{_fmt(emse_db[n])}")
    lines.append(
        "steady_state," + _fmt(to_db(steady.steady_network_msd)) + "," + _fmt(to_db(steady.steady_network_emse))
    )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
