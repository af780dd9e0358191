"""Magnitude pruning of trained networks with retraining between removals.

Candidates are active non-bias weights in ascending magnitude order. Each
removal is followed by a capped retraining to plateau; if the train-split
accuracy falls below the floor the snapshot is restored and the weight is
marked unprunable. Dead nodes (no active non-bias input or no active
output) are removed afterwards.
"""

from dataclasses import dataclass, replace
from math import tanh

import numpy as np

from .network import Network
from .training import accuracy, train_until_plateau


class DegenerateNetworkError(Exception):
    pass


@dataclass
class PruneConfig:
    accuracy_floor: float = None   # None: unpruned train accuracy - 0.5 pp
    retrain_epochs_cap: int = 50
    retrain_tau: int = 5
    retrain_plateau_tol: float = None  # None: inherit the training tolerance
    order: str = "magnitude"       # the only candidate ordering


@dataclass
class PruneStep:
    weight: str        # e.g. "w[2,5]" or "v[0,1]"
    magnitude: float
    removed: bool
    accuracy_after: float


@dataclass
class PruneLog:
    steps: list
    epochs: int

    def to_csv(self):
        lines = ["weight,magnitude,removed,accuracy_after"]
        for s in self.steps:
            lines.append(f"{s.weight},{s.magnitude!r},{int(s.removed)},{s.accuracy_after!r}")
        return "\n".join(lines) + "\n"


def _candidates(net, unprunable):
    """Active non-bias weights not yet marked unprunable, ascending |w|."""
    out = []
    for m in range(net.h):
        for l in range(net.n):
            if net.active_w[m, l] and ("w", m, l) not in unprunable:
                out.append((abs(net.w[m, l]), 0, m, l))
    for p in range(net.C):
        for m in range(net.h):
            if net.active_v[p, m] and ("v", p, m) not in unprunable:
                out.append((abs(net.v[p, m]), 1, p, m))
    return min(out) if out else None


def _alive(net):
    """At least one hidden node keeps an active input and an active output."""
    return any(net.active_w[m, :-1].any() and net.active_v[:, m].any()
               for m in range(net.h))


def prune_network(net, train, validation, pcfg, tcfg):
    """Remove as many connections as accuracy allows; returns (net, log)."""
    X, T = train
    Xv, Tv = validation
    if len(Xv) == 0:
        Xv, Tv = X, T
    floor = pcfg.accuracy_floor
    if floor is None:
        floor = accuracy(net, X, T) - 0.005
    retrain_cfg = replace(
        tcfg, max_epochs=pcfg.retrain_epochs_cap, tau=pcfg.retrain_tau,
        plateau_tol=pcfg.retrain_plateau_tol or tcfg.plateau_tol)
    net = net.copy()
    unprunable = set()
    steps = []
    epochs = 0
    while True:
        cand = _candidates(net, unprunable)
        if cand is None:
            break
        mag, layer, r, c = cand
        name = f"{'wv'[layer]}[{r},{c}]"
        snapshot = net.copy()
        if layer == 0:
            net.deactivate_w(r, c)
        else:
            net.deactivate_v(r, c)
        if not _alive(net):
            # never prune the network into a dead hidden layer
            net = snapshot
            unprunable.add(("wv"[layer], r, c))
            steps.append(PruneStep(name, mag, False, accuracy(net, X, T)))
            continue
        net, trace = train_until_plateau(net, X, T, Xv, Tv, retrain_cfg)
        epochs += trace.epochs
        acc = accuracy(net, X, T)
        if acc >= floor:
            steps.append(PruneStep(name, mag, True, acc))
        else:
            net = snapshot
            unprunable.add(("wv"[layer], r, c))
            steps.append(PruneStep(name, mag, False, accuracy(net, X, T)))
    return net, PruneLog(steps, epochs)


def remove_dead_nodes(net):
    """Drop hidden nodes with no active non-bias input or no active output.

    A node with active outputs but no active inputs computes the constant
    tanh(bias); its contribution is folded into the output biases so the
    network function is preserved.
    """
    keep = []
    v = net.v.copy()
    for m in range(net.h):
        has_in = bool(net.active_w[m, :-1].any())
        has_out = bool(net.active_v[:, m].any())
        if has_in and has_out:
            keep.append(m)
        elif has_out:
            v[:, -1] += v[:, m] * tanh(net.w[m, -1])
    if not keep:
        raise DegenerateNetworkError("network degenerate: no live hidden nodes")
    if len(keep) == net.h:
        return net.copy()
    cols = keep + [net.h]
    return Network(net.w[keep], v[:, cols], net.active_w[keep],
                   net.active_v[:, cols], net.frozen[keep])
