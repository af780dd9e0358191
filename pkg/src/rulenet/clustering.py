"""One-pass discretization of hidden activations with epsilon search.

Each hidden node's activations (train-split order) are clustered online:
the first value seeds cluster 1, later values join the nearest existing
cluster when within epsilon of its stored representative (the seed value;
centroids are replaced by member means only at finalization), otherwise
they start a new cluster. The epsilon search walks the grid {i*zeta} from
large to small, per node, keeping the largest value that preserves the
required discretized accuracy. Nodes with an almost-constant activation
range are flagged and get a single cluster without running the clusterer.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .training import evaluate_set


@dataclass
class NodeClusters:
    centroids: list
    counts: list
    sums: list
    epsilon: float
    constant: bool = False
    assignments: list = field(default_factory=list)  # insertion-time indices

    @property
    def D(self):
        return len(self.centroids)


class ClusterModel:
    def __init__(self, nodes):
        self.nodes = list(nodes)

    def __len__(self):
        return len(self.nodes)

    def to_json(self):
        return json.dumps({
            "nodes": [{
                "centroids": nc.centroids,
                "counts": nc.counts,
                "sums": nc.sums,
                "epsilon": nc.epsilon,
                "constant": nc.constant,
            } for nc in self.nodes]
        }, indent=1)

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        return cls([NodeClusters(n["centroids"], n["counts"], n["sums"],
                                 n["epsilon"], n["constant"])
                    for n in raw["nodes"]])

    def report(self):
        lines = ["node  epsilon  D  centroid(count) ..."]
        for m, nc in enumerate(self.nodes):
            parts = " ".join(f"{c:.6g}({k})" for c, k in zip(nc.centroids, nc.counts))
            tag = " constant" if nc.constant else ""
            lines.append(f"H{m + 1}  {nc.epsilon:.3g}  {nc.D}  {parts}{tag}")
        return "\n".join(lines) + "\n"


@dataclass
class ClusterSearchConfig:
    zeta: float = 0.10
    required_accuracy: float = None   # None: full fidelity (the discretized
                                      # net must reproduce every continuous
                                      # classification, so train accuracy is
                                      # preserved exactly)
    constant_tol: float = 1e-2        # activation range below this => constant


def cluster_node(activations, epsilon):
    """Cluster one node's activation sequence at a fixed epsilon."""
    vals = [float(a) for a in activations]
    if not vals:
        raise ValueError("no activations to cluster")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    H = [vals[0]]
    counts = [1]
    sums = [vals[0]]
    assignments = [0]
    for delta in vals[1:]:
        best_j = 0
        best_d = abs(delta - H[0])
        for j in range(1, len(H)):
            dj = abs(delta - H[j])
            if dj < best_d:
                best_d = dj
                best_j = j
        if best_d <= epsilon:
            counts[best_j] += 1
            sums[best_j] += delta
            assignments.append(best_j)
        else:
            H.append(delta)
            counts.append(1)
            sums.append(delta)
            assignments.append(len(H) - 1)
    centroids = [s / c for s, c in zip(sums, counts)]
    return NodeClusters(centroids, counts, sums, epsilon, False, assignments)


def assign(model, node, delta):
    """Index of the nearest finalized centroid; ties to the lower index."""
    cents = np.asarray(model.nodes[node].centroids)
    return int(np.argmin(np.abs(cents - delta)))


def assign_all(model, acts):
    """Cluster codes for a k-by-h activation matrix."""
    k, h = acts.shape
    codes = np.empty((k, h), dtype=np.intp)
    for m in range(h):
        cents = np.asarray(model.nodes[m].centroids)
        codes[:, m] = np.argmin(np.abs(acts[:, m][:, None] - cents[None, :]), axis=1)
    return codes


def snap(model, acts):
    """Replace each activation by its assigned centroid."""
    snapped = np.empty_like(acts)
    for m in range(acts.shape[1]):
        cents = np.asarray(model.nodes[m].centroids)
        idx = np.argmin(np.abs(acts[:, m][:, None] - cents[None, :]), axis=1)
        snapped[:, m] = cents[idx]
    return snapped


def _output_predictions(net, hidden):
    y = hidden @ net.v[:, :-1].T + net.v[:, -1]
    return np.argmax(y, axis=1)  # sigmoid is monotone, argmax unchanged


def discretized_predictions(net, model, acts):
    return _output_predictions(net, snap(model, acts))


def discretized_accuracy(net, model, X, T):
    """Accuracy with hidden activations replaced by assigned centroids."""
    _, _, _, acts = evaluate_set(net, X, T)
    labels = np.argmax(T, axis=1)
    return float(np.mean(discretized_predictions(net, model, acts) == labels))


def search_epsilon(net, X, T, cfg):
    """Per-node search for the largest grid epsilon keeping accuracy.

    Nodes are fixed in index order; a candidate epsilon for node m is
    evaluated with nodes < m already discretized and nodes > m continuous,
    so the final joint model meets the target whenever any grid value does.
    With an explicit required_accuracy a candidate passes when discretized
    accuracy stays at or above it; in the default full-fidelity mode it must
    reproduce the continuous network's classification of every train
    pattern. Falls back to zeta/10 when no grid value passes.
    """
    _, _, _, acts = evaluate_set(net, X, T)
    k, h = acts.shape
    labels = np.argmax(T, axis=1)
    cont_preds = _output_predictions(net, acts)
    grid = []
    i = 1
    while i * cfg.zeta < 1.0 - 1e-12:
        grid.append(i * cfg.zeta)
        i += 1

    def passes(hidden):
        preds = _output_predictions(net, hidden)
        if cfg.required_accuracy is None:
            return bool(np.array_equal(preds, cont_preds))
        return float(np.mean(preds == labels)) >= cfg.required_accuracy

    hidden = acts.copy()
    nodes = []
    for m in range(h):
        col = acts[:, m]
        if col.max() - col.min() < cfg.constant_tol:
            mean = float(col.sum() / k)
            nodes.append(NodeClusters([mean], [k], [float(col.sum())], 0.0,
                                      True, [0] * k))
            hidden[:, m] = mean
            continue
        chosen = None
        for eps in reversed(grid):
            cand = cluster_node(col, eps)
            cents = np.asarray(cand.centroids)
            hidden[:, m] = cents[np.argmin(np.abs(col[:, None] - cents[None, :]), axis=1)]
            if passes(hidden):
                chosen = cand
                break
        if chosen is None:
            chosen = cluster_node(col, cfg.zeta / 10.0)
            cents = np.asarray(chosen.centroids)
            hidden[:, m] = cents[np.argmin(np.abs(col[:, None] - cents[None, :]), axis=1)]
        nodes.append(chosen)
    return ClusterModel(nodes)
