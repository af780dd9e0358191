"""Bit-compatibility of the compiled kernels with the Python fallback."""

import numpy as np
import pytest

from rulenet import _kernels_py, backend

compiled = pytest.importorskip("rulenet._kernels",
                               reason="compiled extension not built")


def random_state(seed, n=5, h=3, C=3, k=30, masked=True):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1, 1, (h, n + 1))
    v = rng.uniform(-1, 1, (C, h + 1))
    aw = np.ones_like(w, dtype=bool)
    av = np.ones_like(v, dtype=bool)
    if masked:
        aw[:, :-1] = rng.random((h, n)) > 0.25
        av[:, :-1] = rng.random((C, h)) > 0.25
    w[~aw] = 0.0
    v[~av] = 0.0
    frozen = rng.random(h) < 0.3 if masked else np.zeros(h, dtype=bool)
    X = rng.uniform(0, 1, (k, n))
    y = rng.integers(0, C, k)
    return w, v, aw.astype(np.uint8), av.astype(np.uint8), \
        frozen.astype(np.uint8), X, np.eye(C)[y]


@pytest.mark.parametrize("seed", range(5))
def test_run_epoch_bit_identical(seed):
    w, v, aw, av, frozen, X, T = random_state(seed)
    w2, v2 = w.copy(), v.copy()
    k = len(X)
    for _ in range(4):
        compiled.run_epoch(w, v, aw, av, frozen, X, T, 0.5, 0.1 / k, 1e-4 / k, 10.0)
        _kernels_py.run_epoch(w2, v2, aw, av, frozen, X, T, 0.5, 0.1 / k, 1e-4 / k, 10.0)
    assert np.array_equal(w, w2)
    assert np.array_equal(v, v2)


@pytest.mark.parametrize("seed", range(5))
def test_evaluate_bit_identical(seed):
    w, v, aw, av, frozen, X, T = random_state(seed, n=4, h=2, C=2)
    E1, F1, c1, a1 = compiled.evaluate(w, v, X, T)
    E2, F2, c2, a2 = _kernels_py.evaluate(w, v, X, T)
    assert (E1, F1, c1) == (E2, F2, c2)
    assert np.array_equal(a1, a2)


@pytest.mark.parametrize("seed", range(5))
def test_penalty_bit_identical(seed):
    w, v, aw, av, frozen, X, T = random_state(seed)
    p1 = compiled.penalty_value(w, v, aw, av, 0.1, 1e-4, 10.0)
    p2 = _kernels_py.penalty_value(w, v, aw, av, 0.1, 1e-4, 10.0)
    assert p1 == p2


def test_single_pattern_epoch_matches_batch_gradient():
    # with one pattern the online step is exactly one gradient step
    from rulenet.network import Network
    from rulenet.training import TrainConfig, objective_gradient

    w, v, aw, av, frozen, X, T = random_state(11, k=1, masked=False)
    net = Network(w.copy(), v.copy(), aw.astype(bool), av.astype(bool),
                  frozen.astype(bool))
    cfg = TrainConfig(learning_rate=0.5)
    gw, gv = objective_gradient(net, X, T, cfg)
    backend.run_epoch(w, v, aw, av, frozen, X, T, 0.5,
                      cfg.eps1, cfg.eps2, cfg.beta)
    assert np.allclose(w, net.w - 0.5 * gw, atol=1e-12, rtol=0)
    assert np.allclose(v, net.v - 0.5 * gv, atol=1e-12, rtol=0)


def test_backend_name_exposed():
    assert backend.BACKEND in ("compiled", "python")
