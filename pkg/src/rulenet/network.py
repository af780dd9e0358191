"""Three-layer feedforward classifier with connection masks.

Weights are stored dense; the last column of each matrix is the bias weight
(bias node has fixed input 1). ``active_*`` masks mark prunable connections:
a deactivated slot is forced to zero and stays zero. ``frozen`` marks hidden
nodes whose input weights no longer train. Bias connections are always
active, are never pruned, and are excluded from reported connection counts.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Topology:
    n: int
    h: int
    C: int

    def __post_init__(self):
        if self.n < 1 or self.h < 1 or self.C < 2:
            raise ValueError(f"bad topology {self.n}-{self.h}-{self.C}")


class Network:
    def __init__(self, w, v, active_w, active_v, frozen):
        self.w = np.ascontiguousarray(w, dtype=np.float64)
        self.v = np.ascontiguousarray(v, dtype=np.float64)
        self.active_w = np.asarray(active_w, dtype=bool)
        self.active_v = np.asarray(active_v, dtype=bool)
        self.frozen = np.asarray(frozen, dtype=bool)
        h, ncol = self.w.shape
        C, hcol = self.v.shape
        if hcol != h + 1 or self.active_w.shape != self.w.shape \
                or self.active_v.shape != self.v.shape or self.frozen.shape != (h,):
            raise ValueError("inconsistent network shapes")
        self.topology = Topology(ncol - 1, h, C)
        self.enforce_masks()

    @property
    def n(self):
        return self.topology.n

    @property
    def h(self):
        return self.topology.h

    @property
    def C(self):
        return self.topology.C

    def enforce_masks(self):
        """Force deactivated slots to exactly zero; bias columns stay active."""
        self.active_w[:, -1] = True
        self.active_v[:, -1] = True
        self.w[~self.active_w] = 0.0
        self.v[~self.active_v] = 0.0

    def copy(self):
        return Network(self.w.copy(), self.v.copy(), self.active_w.copy(),
                       self.active_v.copy(), self.frozen.copy())

    def deactivate_w(self, m, l):
        self.active_w[m, l] = False
        self.w[m, l] = 0.0

    def deactivate_v(self, p, m):
        self.active_v[p, m] = False
        self.v[p, m] = 0.0

    def relevant_inputs(self):
        """Mask over input nodes that still feed some hidden node."""
        return self.active_w[:, :-1].any(axis=0)

    def connection_count(self):
        """Active non-bias connections (the reporting convention)."""
        return int(self.active_w[:, :-1].sum() + self.active_v[:, :-1].sum())

    def node_count(self):
        """Relevant inputs + hidden + outputs (the reporting convention)."""
        return int(self.relevant_inputs().sum()) + self.h + self.C

    def to_text(self):
        lines = [f"topology {self.n} {self.h} {self.C}"]
        lines.append("frozen " + " ".join(str(int(f)) for f in self.frozen))
        for row in self.active_w:
            lines.append("aw " + "".join(str(int(b)) for b in row))
        for row in self.active_v:
            lines.append("av " + "".join(str(int(b)) for b in row))
        for row in self.w:
            lines.append("w " + " ".join(repr(float(x)) for x in row))
        for row in self.v:
            lines.append("v " + " ".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        if head[0] != "topology":
            raise ValueError("not a network file")
        n, h, C = int(head[1]), int(head[2]), int(head[3])
        frozen = [bool(int(t)) for t in lines[1].split()[1:]]
        pos = 2
        aw = [[c == "1" for c in lines[pos + m].split()[1]] for m in range(h)]
        pos += h
        av = [[c == "1" for c in lines[pos + p].split()[1]] for p in range(C)]
        pos += C
        w = [[float(t) for t in lines[pos + m].split()[1:]] for m in range(h)]
        pos += h
        v = [[float(t) for t in lines[pos + p].split()[1:]] for p in range(C)]
        net = cls(w, v, aw, av, frozen)
        if (net.n, net.h, net.C) != (n, h, C):
            raise ValueError("network file shape mismatch")
        return net


def init_network(n, C, seed):
    """Fresh network with a single hidden node, weights uniform in [-1, 1]."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1.0, 1.0, size=(1, n + 1))
    v = rng.uniform(-1.0, 1.0, size=(C, 2))
    return Network(w, v, np.ones_like(w, dtype=bool),
                   np.ones_like(v, dtype=bool), np.zeros(1, dtype=bool))


def add_hidden_node(net, seed):
    """Grow the hidden layer by one unfrozen node; existing weights untouched."""
    rng = np.random.default_rng(seed)
    new_w = rng.uniform(-1.0, 1.0, size=net.n + 1)
    new_v = rng.uniform(-1.0, 1.0, size=net.C)
    h = net.h
    w = np.vstack([net.w, new_w])
    aw = np.vstack([net.active_w, np.ones(net.n + 1, dtype=bool)])
    v = np.insert(net.v, h, new_v, axis=1)
    av = np.insert(net.active_v, h, np.ones(net.C, dtype=bool), axis=1)
    frozen = np.append(net.frozen, False)
    return Network(w, v, aw, av, frozen)


def hidden_activations(net, x):
    """Hyperbolic-tangent activations of the hidden layer for one input."""
    w = net.w * net.active_w
    return np.tanh(w[:, :-1] @ np.asarray(x, dtype=np.float64) + w[:, -1])


def forward(net, x):
    """Sigmoid outputs of the network for one input vector."""
    d = hidden_activations(net, x)
    v = net.v * net.active_v
    y = v[:, :-1] @ d + v[:, -1]
    return 1.0 / (1.0 + np.exp(-y))


def classify(net, x):
    """Predicted class index; ties break toward the lower index."""
    return int(np.argmax(forward(net, x)))
