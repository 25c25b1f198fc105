import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def ring_topology_dict(n, extra=()):
    edges = [[k, k % n + 1] for k in range(1, n + 1)]
    edges += [list(e) for e in extra]
    return {"nodes": n, "edges": edges}


def small_config_dict(**overrides):
    """A fast 5-node Gaussian experiment used across harness tests."""
    raw = {
        "topology": ring_topology_dict(5, extra=[(1, 3)]),
        "d": 3,
        "regressor_variances": [1.0, 0.9, 1.1, 1.0, 0.95],
        "noise": {"kind": "gaussian", "snr_db": 20},
        "algorithms": [{"kind": "dlms", "step_size": 0.05}],
        "iterations": 60,
        "realizations": 2,
        "base_seed": 77,
        "gate": {"eta": 0.0, "mode": "hard"},
    }
    raw.update(overrides)
    return raw
