"""Two-layer network construction: generators, edge-list loading, degree measures.

The static layer carries permanent contacts; the temporal layer holds
potential contacts that only materialize (with per-link probability) while
both endpoints are active.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class NetworkError(ValueError):
    """Raised for infeasible generator parameters or malformed network files."""


def _check_adjacency(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NetworkError(f"{name} must be square, got shape {m.shape}")
    if not np.array_equal(m, m.T):
        raise NetworkError(f"{name} must be symmetric")
    if np.any(np.diag(m) != 0):
        raise NetworkError(f"{name} must have a zero diagonal")
    if not np.isin(m, (0, 1)).all():
        raise NetworkError(f"{name} entries must be 0 or 1")


@dataclass(frozen=True)
class LayeredNetwork:
    """Static adjacency `a`, temporal adjacency `b`, activation probabilities `p`.

    `p[i, j]` is meaningful only where `b[i, j] == 1`; elsewhere it is stored
    as 0 so the weighted temporal adjacency is simply `p * b`.
    """

    a: np.ndarray
    b: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        _check_adjacency(a, "a")
        _check_adjacency(b, "b")
        if a.shape != b.shape:
            raise NetworkError("layers must share the node set")
        p = np.asarray(self.p, dtype=float)
        if p.shape != b.shape:
            raise NetworkError("p must match the temporal layer shape")
        if np.any((p < 0) | (p > 1)):
            raise NetworkError("p entries must lie in [0, 1]")
        if not np.allclose(p, p.T):
            raise NetworkError("p must be symmetric")
        p = np.where(b > 0, p, 0.0)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def b_hat(self) -> np.ndarray:
        """Weighted temporal adjacency (elementwise p * b)."""
        return self.p * self.b

    def average_degree(self, node: int) -> float:
        """Static degree plus expected temporal degree of `node`."""
        if not 0 <= node < self.n:
            raise NetworkError(f"node {node} out of range [0, {self.n})")
        return float(self.a[node].sum() + (self.p[node] * self.b[node]).sum())

    def average_degrees(self) -> np.ndarray:
        return self.a.sum(axis=1) + (self.p * self.b).sum(axis=1)


@dataclass(frozen=True)
class NodeClassAssignment:
    """Per-node class labels with class-level activation probabilities.

    Link probabilities factorize: p[i, j] = p_class[class_of[i]] * p_class[class_of[j]].
    """

    class_of: np.ndarray
    p_class: np.ndarray

    def __post_init__(self):
        class_of = np.asarray(self.class_of, dtype=int)
        p_class = np.asarray(self.p_class, dtype=float)
        if class_of.min(initial=0) < 0 or class_of.max(initial=0) >= len(p_class):
            raise NetworkError("class index out of range of p_class")
        if np.any((p_class < 0) | (p_class > 1)):
            raise NetworkError("class probabilities must lie in [0, 1]")
        object.__setattr__(self, "class_of", class_of)
        object.__setattr__(self, "p_class", p_class)

    def node_probabilities(self) -> np.ndarray:
        return self.p_class[self.class_of]

    def link_probabilities(self, b: np.ndarray) -> np.ndarray:
        pi = self.node_probabilities()
        return np.outer(pi, pi) * np.asarray(b, dtype=float)


def gen_random_regular(n: int, degree: int, seed) -> np.ndarray:
    """Random d-regular simple graph via the pairing model.

    Pairs stubs uniformly, re-shuffling the conflicting ones (self-loops,
    multi-edges) until none remain; restarts from scratch when a pass makes
    no progress, up to a bounded attempt count.
    """
    if degree < 0 or degree >= n:
        raise NetworkError(f"degree must satisfy 0 <= degree < n, got {degree} with n={n}")
    if (n * degree) % 2 != 0:
        raise NetworkError(f"n*degree must be even, got n={n}, degree={degree}")
    rng = np.random.default_rng(seed)
    if degree == 0:
        return np.zeros((n, n))
    max_attempts = 200
    for _ in range(max_attempts):
        edges: set[tuple[int, int]] = set()
        stubs = np.repeat(np.arange(n), degree)
        while len(stubs):
            stubs = rng.permutation(stubs)
            rejected = []
            progress = False
            for u, v in zip(stubs[0::2], stubs[1::2]):
                u, v = int(u), int(v)
                key = (u, v) if u < v else (v, u)
                if u == v or key in edges:
                    rejected.extend((u, v))
                else:
                    edges.add(key)
                    progress = True
            if not progress:
                break
            stubs = np.array(rejected, dtype=int)
        if len(stubs) == 0:
            adj = np.zeros((n, n))
            for u, v in edges:
                adj[u, v] = adj[v, u] = 1.0
            return adj
    raise NetworkError(
        f"pairing model failed to produce a simple {degree}-regular graph "
        f"on {n} nodes after {max_attempts} attempts"
    )


def gen_erdos_renyi(n: int, prob: float, seed) -> np.ndarray:
    """G(n, p): each unordered pair is linked independently with probability `prob`."""
    if not 0.0 <= prob <= 1.0:
        raise NetworkError(f"prob must lie in [0, 1], got {prob}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    adj = upper.astype(float)
    return adj + adj.T


def gen_barabasi_albert(
    n: int, seed_size: int, attach: int, seed, seed_graph: str = "complete"
) -> tuple[np.ndarray, list[int]]:
    """Preferential-attachment growth from an initial seed subgraph.

    Each arriving node connects to `attach` distinct existing nodes chosen
    with probability proportional to current degree. Returns the adjacency
    and the ordered list of initial seed nodes.
    """
    if not 1 <= attach <= seed_size:
        raise NetworkError(f"need 1 <= attach <= seed_size, got attach={attach}, seed_size={seed_size}")
    if n <= seed_size:
        raise NetworkError(f"need n > seed_size, got n={n}, seed_size={seed_size}")
    if seed_graph not in ("complete", "ring"):
        raise NetworkError(f"unknown seed_graph {seed_graph!r}")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n))
    seeds = list(range(seed_size))
    if seed_graph == "complete":
        for i in seeds:
            for j in seeds:
                if i != j:
                    adj[i, j] = 1.0
    else:
        for i in seeds:
            j = (i + 1) % seed_size
            adj[i, j] = adj[j, i] = 1.0
    degree = adj.sum(axis=1)
    for new in range(seed_size, n):
        weights = degree[:new].copy()
        if weights.sum() == 0:
            weights[:] = 1.0
        targets: set[int] = set()
        while len(targets) < attach:
            w = weights.copy()
            w[list(targets)] = 0.0
            w /= w.sum()
            targets.add(int(rng.choice(new, p=w)))
        for t in targets:
            adj[new, t] = adj[t, new] = 1.0
            degree[t] += 1
        degree[new] = attach
    return adj, seeds


def load_two_layer_edge_list(path) -> LayeredNetwork:
    """Parse a two-layer edge list file.

    Lines are ``<layer:1|2> <src> <dst> [p]`` with `p` permitted only on
    layer 2; ``#default_p <float>`` sets the layer-2 default (1.0 otherwise)
    and other ``#`` lines are comments. Node ids are 0-based.
    """
    default_p = 1.0
    edges: list[tuple[int, int, int, float | None]] = []
    max_id = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "default_p":
                    try:
                        default_p = float(parts[1])
                    except (IndexError, ValueError):
                        raise NetworkError(f"line {lineno}: malformed #default_p header")
                    if not 0.0 <= default_p <= 1.0:
                        raise NetworkError(f"line {lineno}: default_p must lie in [0, 1]")
                continue
            parts = line.split()
            if len(parts) not in (3, 4):
                raise NetworkError(f"line {lineno}: expected 3 or 4 fields, got {len(parts)}")
            try:
                layer = int(parts[0])
                src, dst = int(parts[1]), int(parts[2])
            except ValueError:
                raise NetworkError(f"line {lineno}: non-integer layer or node id")
            if layer not in (1, 2):
                raise NetworkError(f"line {lineno}: unknown layer tag {parts[0]!r}")
            if src < 0 or dst < 0:
                raise NetworkError(f"line {lineno}: negative node id")
            if src == dst:
                raise NetworkError(f"line {lineno}: self-loop {src}-{dst}")
            pval: float | None = None
            if len(parts) == 4:
                if layer != 2:
                    raise NetworkError(f"line {lineno}: p is only permitted on layer 2")
                try:
                    pval = float(parts[3])
                except ValueError:
                    raise NetworkError(f"line {lineno}: malformed p value {parts[3]!r}")
                if not 0.0 <= pval <= 1.0:
                    raise NetworkError(f"line {lineno}: p must lie in [0, 1]")
            edges.append((layer, src, dst, pval))
            max_id = max(max_id, src, dst)
    if max_id < 0:
        raise NetworkError(f"{path}: no edges found")
    n = max_id + 1
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    p = np.zeros((n, n))
    for layer, src, dst, pval in edges:
        if layer == 1:
            a[src, dst] = a[dst, src] = 1.0
        else:
            pv = default_p if pval is None else pval
            if b[src, dst] and p[src, dst] != pv:
                raise NetworkError(
                    f"conflicting p for temporal link {src}-{dst}: {p[src, dst]} vs {pv}"
                )
            b[src, dst] = b[dst, src] = 1.0
            p[src, dst] = p[dst, src] = pv
    return LayeredNetwork(a=a, b=b, p=p)


def average_degree(net: LayeredNetwork, node: int) -> float:
    return net.average_degree(node)


def union_distances(net: LayeredNetwork, source: int) -> np.ndarray:
    """BFS hop distances on the unweighted union graph A ∪ B (inf if unreachable)."""
    union = (net.a + net.b) > 0
    dist = np.full(net.n, np.inf)
    dist[source] = 0.0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(union[u]):
            if not np.isfinite(dist[v]):
                dist[v] = dist[u] + 1.0
                queue.append(int(v))
    return dist


def closeness_centrality(net: LayeredNetwork) -> np.ndarray:
    """Closeness on the union graph; harmonic form when the graph is disconnected."""
    n = net.n
    scores = np.zeros(n)
    dists = [union_distances(net, i) for i in range(n)]
    connected = all(np.isfinite(d).all() for d in dists)
    for i, dist in enumerate(dists):
        others = np.delete(dist, i)
        if len(others) == 0:
            continue
        if connected:
            total = others.sum()
            scores[i] = (n - 1) / total if total > 0 else 0.0
        else:
            finite = others[np.isfinite(others) & (others > 0)]
            scores[i] = float((1.0 / finite).sum())
    return scores


def connected_components(net: LayeredNetwork) -> list[np.ndarray]:
    """Connected components of the union graph, as arrays of node indices."""
    seen = np.zeros(net.n, dtype=bool)
    comps = []
    for start in range(net.n):
        if seen[start]:
            continue
        dist = union_distances(net, start)
        members = np.flatnonzero(np.isfinite(dist))
        seen[members] = True
        comps.append(members)
    return comps
