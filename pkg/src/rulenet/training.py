"""Backpropagation on the penalized cross-entropy objective.

One training run is single-threaded and fully deterministic: per-pattern
updates in fixed file order, the decay penalty applied fractionally (1/k
per pattern), plateau detection over a trailing window of tau epochs, input
weight freezing for nodes with stable activations, and the constructive
loop that grows the hidden layer until a validation error target is met.
"""

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .network import Network, add_hidden_node, init_network


class TrainingDiverged(Exception):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    tau: int = 10
    plateau_tol: float = 1e-3
    freeze_tol: float = 1e-2
    eps1: float = 0.1
    eps2: float = 1e-4
    beta: float = 10.0
    max_epochs: int = 500
    valid_error_target: float = None  # None: derived from a reference run
    max_hidden: int = 8

    def __post_init__(self):
        if not 0.1 <= self.learning_rate <= 1.0:
            raise ValueError("learning rate must lie in [0.1, 1.0]")
        for name in ("tau", "plateau_tol", "freeze_tol", "eps1", "eps2",
                     "beta", "max_epochs", "max_hidden"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class TrainTrace:
    """Per-epoch log: validation E, train F/P/theta, per-node mean activation.

    Keeps the last tau+1 full activation matrices of the current phase so
    the freezing criterion can compare epoch n against epoch n - tau.
    """

    def __init__(self, tau):
        self.tau = tau
        self.E_valid = []
        self.F = []
        self.P = []
        self.theta = []
        self.mean_act = []
        self.recent_acts = deque(maxlen=tau + 1)
        self.hit_max_epochs = False
        self.capped_hidden = False

    @property
    def epochs(self):
        return len(self.theta)

    def log(self, E_valid, F, P, acts):
        self.E_valid.append(E_valid)
        self.F.append(F)
        self.P.append(P)
        self.theta.append(F + P)
        self.mean_act.append(acts.mean(axis=0) if acts.size else np.zeros(acts.shape[1]))
        self.recent_acts.append(acts)

    def new_phase(self):
        """Activation histories of different architectures are not comparable."""
        self.recent_acts.clear()

    def to_csv(self):
        h_final = len(self.mean_act[-1]) if self.mean_act else 0
        header = ["epoch", "E_valid", "F", "P", "theta"]
        header += [f"act_mean_{m + 1}" for m in range(h_final)]
        lines = [",".join(header)]
        for i in range(self.epochs):
            row = [str(i + 1), repr(self.E_valid[i]), repr(self.F[i]),
                   repr(self.P[i]), repr(self.theta[i])]
            acts = list(self.mean_act[i])
            row += [repr(float(a)) for a in acts]
            row += [""] * (h_final - len(acts))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _masks(net):
    return (net.active_w.astype(np.uint8), net.active_v.astype(np.uint8),
            net.frozen.astype(np.uint8))


def squared_error(net, X, T):
    """Half the summed squared output error (the validation-stop measure)."""
    E, _, _, _ = backend.evaluate(net.w, net.v, X, T)
    return E


def cross_entropy(net, X, T):
    E, F, _, _ = backend.evaluate(net.w, net.v, X, T)
    return F


def penalty(net, eps1, eps2, beta):
    aw, av, _ = _masks(net)
    return backend.penalty_value(net.w, net.v, aw, av, eps1, eps2, beta)


def evaluate_set(net, X, T):
    """(E, F, n_correct, activations) in one kernel pass."""
    return backend.evaluate(net.w, net.v, X, T)


def accuracy(net, X, T):
    if len(X) == 0:
        return 0.0
    _, _, correct, _ = backend.evaluate(net.w, net.v, X, T)
    return correct / len(X)


def objective(net, X, T, cfg):
    return cross_entropy(net, X, T) + penalty(net, cfg.eps1, cfg.eps2, cfg.beta)


def objective_gradient(net, X, T, cfg):
    """Analytic batch gradient of theta = F + P over trainable weights.

    Entries for inactive connections and frozen hidden rows are zero.
    """
    n, h = net.n, net.h
    A = X @ net.w[:, :n].T + net.w[:, n]
    D = np.tanh(A)
    Y = D @ net.v[:, :h].T + net.v[:, h]
    S = 1.0 / (1.0 + np.exp(-Y))
    G = S - T
    gv = np.empty_like(net.v)
    gv[:, :h] = G.T @ D
    gv[:, h] = G.sum(axis=0)
    dA = (G @ net.v[:, :h]) * (1.0 - D * D)
    gw = np.empty_like(net.w)
    gw[:, :n] = dA.T @ X
    gw[:, n] = dA.sum(axis=0)

    def pgrad(q):
        return (cfg.eps1 * 2.0 * cfg.beta * q / (1.0 + cfg.beta * q * q) ** 2
                + 2.0 * cfg.eps2 * q)

    gw[:, :n] += pgrad(net.w[:, :n])
    gv[:, :h] += pgrad(net.v[:, :h])
    gw[~net.active_w] = 0.0
    gv[~net.active_v] = 0.0
    gw[net.frozen] = 0.0
    return gw, gv


def backprop_epoch(net, X, T, cfg):
    """One pass of per-pattern gradient steps on theta, in file order."""
    net.enforce_masks()
    aw, av, frozen = _masks(net)
    k = len(X)
    backend.run_epoch(net.w, net.v, aw, av, frozen, X, T,
                      cfg.learning_rate, cfg.eps1 / k, cfg.eps2 / k, cfg.beta)
    if not (np.isfinite(net.w).all() and np.isfinite(net.v).all()):
        raise TrainingDiverged(
            f"non-finite weights after an epoch (lr={cfg.learning_rate})")
    return net


def train_until_plateau(net, X, T, Xv, Tv, cfg, trace=None):
    """Run epochs until theta is almost constant over the trailing tau epochs.

    The relative change |theta(n) - theta(n - tau)| / |theta(n - tau)| must
    drop below plateau_tol. Hitting max_epochs sets a flag, not an error.
    """
    if trace is None:
        trace = TrainTrace(cfg.tau)
    start = trace.epochs
    theta_hist = []
    for _ in range(cfg.max_epochs):
        backprop_epoch(net, X, T, cfg)
        E_t, F_t, _, acts = evaluate_set(net, X, T)
        P_t = penalty(net, cfg.eps1, cfg.eps2, cfg.beta)
        theta = F_t + P_t
        if not np.isfinite(theta):
            raise TrainingDiverged("objective became non-finite")
        E_v = squared_error(net, Xv, Tv) if len(Xv) else E_t
        trace.log(E_v, F_t, P_t, acts)
        theta_hist.append(theta)
        if len(theta_hist) > cfg.tau:
            prev = theta_hist[-1 - cfg.tau]
            if abs(theta - prev) / max(abs(prev), 1e-300) < cfg.plateau_tol:
                return net, trace
    trace.hit_max_epochs = True
    return net, trace


def freeze_stable_nodes(net, trace, cfg):
    """Freeze input weights of nodes whose output barely moved over tau epochs.

    Criterion: mean absolute activation change across the train split between
    the newest logged epoch and the one tau epochs earlier < freeze_tol.
    """
    if len(trace.recent_acts) < cfg.tau + 1:
        raise ValueError(
            f"need {cfg.tau + 1} epochs of activations, have {len(trace.recent_acts)}")
    now = trace.recent_acts[-1]
    then = trace.recent_acts[0]
    drift = np.abs(now - then).mean(axis=0)
    net.frozen = net.frozen | (drift < cfg.freeze_tol)
    return net


def reference_error_target(X, T, Xv, Tv, cfg, seed):
    """Default validation target: an unpenalized 3-hidden-node run, minus 5%."""
    rng = np.random.default_rng(seed)
    ref = init_network(X.shape[1], T.shape[1], rng)
    ref = add_hidden_node(ref, rng)
    ref = add_hidden_node(ref, rng)
    ref_cfg = replace(cfg, eps1=1e-300, eps2=1e-300)
    ref, _ = train_until_plateau(ref, X, T, Xv, Tv, ref_cfg)
    return 0.95 * squared_error(ref, Xv, Tv)


def constructive_train(train, validation, cfg, seed):
    """Grow the hidden layer one node at a time until validation E is met.

    ``train`` and ``validation`` are (X, T) pairs; an empty validation set
    falls back to measuring E on the train set. Returns the network and the
    cumulative trace; the hidden-node cap returns the best net seen, flagged.
    """
    X, T = train
    Xv, Tv = validation
    if len(Xv) == 0:
        Xv, Tv = X, T
    rng = np.random.default_rng(seed)
    target = cfg.valid_error_target
    if target is None:
        target = reference_error_target(X, T, Xv, Tv, cfg, rng)
    net = init_network(X.shape[1], T.shape[1], rng)
    trace = TrainTrace(cfg.tau)
    best_net, best_E = None, np.inf
    while True:
        net, trace = train_until_plateau(net, X, T, Xv, Tv, cfg, trace)
        E_v = squared_error(net, Xv, Tv)
        if E_v < best_E:
            best_net, best_E = net.copy(), E_v
        if E_v <= target:
            return net, trace
        if net.h >= cfg.max_hidden:
            trace.capped_hidden = True
            return best_net, trace
        if len(trace.recent_acts) >= cfg.tau + 1:
            freeze_stable_nodes(net, trace, cfg)
        net = add_hidden_node(net, rng)
        trace.new_phase()
