import json

import numpy as np
import pytest

import warpnet as wn


def test_identity_warp_roundtrip():
    g = wn.identity_warp(10)
    assert np.array_equal(g, np.arange(10.0))
    assert wn.is_valid_warp(g)
    x = np.random.default_rng(0).normal(size=(10, 3))
    y = wn.warp_sequence(x, g)
    assert np.array_equal(x, y)


def test_warp_algebra():
    g = wn.random_warp(50, 0.5, seed=42)
    assert wn.is_valid_warp(g)
    assert np.array_equal(g, wn.random_warp(50, 0.5, seed=42))
    back = wn.warp_from_derivative(wn.warp_derivative(g))
    assert np.max(np.abs(back - g)) < 1e-9
    round_trip = wn.compose(g, wn.invert(g))
    assert np.max(np.abs(round_trip - np.arange(50.0))) < 2.0
    mean = wn.mean_warp([g, g])
    assert np.allclose(mean, g)


def test_invalid_warp_rejected():
    bad = np.array([0.0, 2.0, 1.0, 3.0])
    assert not wn.is_valid_warp(bad)
    with pytest.raises(ValueError):
        wn.warp_sequence(np.zeros((4, 1)), bad)


def test_constraint_layer():
    v = np.array([0.0, 1.0, 0.0, 0.0])
    g = wn.constraint_forward(v)
    assert wn.is_valid_warp(g)
    assert g[1] == pytest.approx(3.0, abs=1e-4)
    # uniform tail -> identity
    ident = wn.constraint_forward(np.array([0.0, 1.0, 1.0, 1.0]))
    assert np.allclose(ident, np.arange(4.0), atol=1e-6)


def test_resample_backward_matches_finite_differences():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(12, 2))
    g = np.concatenate([[0.0], np.sort(rng.uniform(0.3, 10.7, size=10)), [11.0]])
    dy = rng.normal(size=(12, 2))
    dx, dpos = wn.resample_backward(x, g, dy)

    def loss(xv, gv):
        return float(np.sum(wn.warp_sequence(xv, gv) * dy))

    h = 1e-6
    for idx in [(0, 0), (3, 1), (7, 0)]:
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        num = (loss(xp, g) - loss(xm, g)) / (2 * h)
        assert num == pytest.approx(dx[idx], abs=1e-5)
    for i in [2, 5, 8]:
        gp, gm = g.copy(), g.copy()
        gp[i] += h
        gm[i] -= h
        num = (loss(x, gp) - loss(x, gm)) / (2 * h)
        assert num == pytest.approx(dpos[i], abs=1e-5)


def test_generate_dataset_shapes():
    (xtr, ytr), (xte, yte) = wn.generate_dataset(
        "gauss2", t=40, train_n=20, test_n=10, seed=3
    )
    assert xtr.shape == (20, 40, 1)
    assert xte.shape == (10, 40, 1)
    assert sorted(set(ytr.tolist())) == [0, 1]
    (xtr2, _), _ = wn.generate_dataset("gauss2", t=40, train_n=20, test_n=10, seed=3)
    assert np.array_equal(xtr, xtr2)


def test_gradient_checks_pass():
    results = wn.gradient_checks(seed=7)
    assert len(results) >= 8
    assert all(r["passed"] for r in results)


def test_run_experiment_tiny():
    config = {
        "dataset": {
            "kind": "gauss2",
            "t": 40,
            "train_n": 60,
            "test_n": 20,
            "warped": False,
            "seed": 1,
        },
        "ttn": None,
        "classifier": {"conv": [[4, 5]], "fc": [16]},
        "train": {
            "optimizer": "adam",
            "base_lr": 1e-3,
            "iterations": 200,
            "batch_size": 8,
            "eval_every": 1,
            "seed": 2,
        },
    }
    result = wn.run_experiment(json.dumps(config))
    assert 0.0 <= result["final_accuracy"] <= 1.0
    assert result["history"][0][1] == pytest.approx(np.log(2.0), rel=0.05)
