#!/usr/bin/env python3
"""Regenerate the canonical 16-node network data files.

The shipped topology is a random geometric graph (16 points in the unit
square, connect within radius 0.42) drawn from a fixed seed, retried until
connected. The regressor variance profile is 16 draws from U[0.8, 1.2],
also from a fixed seed. Both files live in src/diffnet/data/ and are
committed; this script only exists to document how they were produced.
"""

from pathlib import Path

import numpy as np

TOPOLOGY_SEED = 22
VARIANCE_SEED = 17
RADIUS = 0.32
N = 16

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "diffnet" / "data"


def geometric_graph(rng):
    points = rng.uniform(0.0, 1.0, (N, 2))
    edges = []
    for i in range(N):
        for j in range(i + 1, N):
            if np.hypot(*(points[i] - points[j])) < RADIUS:
                edges.append((i + 1, j + 1))
    return edges


def is_connected(edges):
    adj = {k: set() for k in range(1, N + 1)}
    for l, k in edges:
        adj[l].add(k)
        adj[k].add(l)
    seen, stack = {1}, [1]
    while stack:
        node = stack.pop()
        for other in adj[node]:
            if other not in seen:
                seen.add(other)
                stack.append(other)
    return len(seen) == N


def main():
    rng = np.random.default_rng(TOPOLOGY_SEED)
    while True:
        edges = geometric_graph(rng)
        if is_connected(edges):
            break

    DATA_DIR.mkdir(parents=True, exist_ok=True)
    topo_lines = [str(N)] + [f"{l} {k}" for l, k in sorted(edges)]
    (DATA_DIR / "topology16.txt").write_text("\n".join(topo_lines) + "\n")

    variances = np.random.default_rng(VARIANCE_SEED).uniform(0.8, 1.2, N)
    (DATA_DIR / "regressor_variances16.txt").write_text(
        "\n".join(f"{v:.17g}" for v in variances) + "\n"
    )

    degrees = {k: 1 for k in range(1, N + 1)}  # self-loop
    for l, k in edges:
        degrees[l] += 1
        degrees[k] += 1
    print(f"wrote {len(edges)} edges; |N_k| range {min(degrees.values())}..{max(degrees.values())}")
    print(f"variances in [{variances.min():.3f}, {variances.max():.3f}]")


if __name__ == "__main__":
    main()
