import math

import numpy as np
import pytest

from s3kit.chain import build_chain
from s3kit.omega import INPUT, OmegaTopology, random_topology
from s3kit.piecewise import PiecewiseLinear, eval_pwl
from s3kit.stats import SampleTable
from s3kit.training import (
    Params,
    PwlTask,
    TrainConfig,
    TrainingDiverged,
    equivalence_experiment,
    forward_params,
    init_params,
    loss_and_grad,
    random_distinct_topologies,
    train_chain,
    train_omega,
)


def tent_data():
    x = np.linspace(0.0, 1.0, 101)
    tent = PiecewiseLinear((0.0, 0.5, 1.0), (0.5, 0.0, 0.5))
    return x, eval_pwl(tent, x), build_chain(tent)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(init_scale=0)


def test_exact_init_is_fixed_point():
    x, _, net = tent_data()
    y = net(x)
    trained, history = train_chain(2, x, y, TrainConfig(learning_rate=0.05, epochs=10), init=net)
    assert history[0] == 0.0
    assert trained.weights == net.weights and trained.biases == net.biases
    assert trained.signs == net.signs and trained.output_bias == net.output_bias


def test_zero_learning_rate_constant_history():
    x, y, _ = tent_data()
    _, history = train_chain(3, x, y, TrainConfig(learning_rate=0.0, epochs=25))
    assert len(history) == 25 and len(set(history)) == 1


def test_history_length_and_determinism():
    x, y, _ = tent_data()
    cfg = TrainConfig(learning_rate=0.01, epochs=50, seed=3)
    a, ha = train_chain(4, x, y, cfg)
    b, hb = train_chain(4, x, y, cfg)
    assert len(ha) == 50 and ha == hb and a == b
    assert ha[-1] < ha[0]


def test_divergence_raises_with_history():
    x, y, _ = tent_data()
    with pytest.raises(TrainingDiverged) as info:
        train_chain(3, x, 1e4 * y, TrainConfig(learning_rate=10.0, epochs=100))
    assert len(info.value.history) >= 1


def test_domain_checked():
    x, y, _ = tent_data()
    with pytest.raises(ValueError):
        train_chain(2, x, y, TrainConfig(epochs=1), domain=(0.0, 0.5))
    with pytest.raises(ValueError):
        train_chain(0, x, y, TrainConfig(epochs=1))


def test_trained_net_matches_params_forward():
    x, y, _ = tent_data()
    t = OmegaTopology((INPUT, 0, INPUT))
    net, _ = train_omega(t, x, y, TrainConfig(learning_rate=0.01, epochs=20))
    pred, _, _ = forward_params(t.parents, Params.from_net(net), x)
    assert np.allclose(net(x), pred, rtol=0, atol=1e-14)


def _numeric_grad(parents, p, x, y, h=1e-6):
    v = p.flat()
    g = np.empty_like(v)
    for k in range(v.size):
        up, dn = v.copy(), v.copy()
        up[k] += h
        dn[k] -= h
        g[k] = (loss_and_grad(parents, Params.from_flat(up), x, y)[0]
                - loss_and_grad(parents, Params.from_flat(dn), x, y)[0]) / (2 * h)
    return g


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(7)
    x = np.linspace(0.0, 1.0, 41)
    y = np.sin(3 * x)
    checked = 0
    while checked < 100:
        n = int(rng.integers(1, 7))
        parents = random_topology(n, int(rng.integers(2**31))).parents
        p = Params(rng.uniform(0.5, 1.5, n), rng.uniform(-0.5, 0.5, n), rng.uniform(-1, 1, n), float(rng.uniform(-1, 1)))
        _, z, _ = forward_params(parents, p, x)
        if np.min(np.abs(z)) <= 1e-3:
            continue
        _, grad = loss_and_grad(parents, p, x, y)
        num = _numeric_grad(parents, p, x, y)
        ana = grad.flat()
        assert np.max(np.abs(ana - num)) <= 1e-4 * max(1.0, np.max(np.abs(num)))
        checked += 1


def test_init_params_shape_and_range():
    p = init_params(5, TrainConfig(init_scale=0.1, seed=2))
    assert np.all(np.abs(p.weights - 1) <= 0.1) and np.all(np.abs(p.biases) <= 0.1)
    assert np.all(p.coefs == 1.0) and p.bias == 0.0


def test_pwl_task_deterministic():
    task = PwlTask()
    assert task.target(3) == task.target(3)
    assert task.target(3) != task.target(4)
    x, y = task.data(0)
    assert x[0] == 0.0 and x[-1] == 1.0 and len(x) == 101


def test_identical_topologies_identical_columns():
    cfg = TrainConfig(learning_rate=0.01, epochs=30, init_scale=0.1)
    chain = OmegaTopology.chain(4)
    res = equivalence_experiment([chain, chain], PwlTask(), 2, cfg, names=["a", "b"], workers=1)
    assert isinstance(res.table, SampleTable)
    assert res.table["a"] == res.table["b"]
    assert len(res.table["a"]) == 2 and res.failures == []


def test_parallel_matches_serial():
    cfg = TrainConfig(learning_rate=0.01, epochs=20, init_scale=0.1)
    tops = random_distinct_topologies(4, 3, seed=1)
    serial = equivalence_experiment(tops, PwlTask(), 3, cfg, workers=1)
    parallel = equivalence_experiment(tops, PwlTask(), 3, cfg, workers=2)
    assert serial.table == parallel.table


def test_experiment_requires_two_trials():
    with pytest.raises(ValueError):
        equivalence_experiment([OmegaTopology.chain(2)], PwlTask(), 1, TrainConfig(epochs=1))


def test_divergent_trials_flagged():
    cfg = TrainConfig(learning_rate=1e3, epochs=50)
    res = equivalence_experiment([OmegaTopology.chain(3)], PwlTask(), 2, cfg, names=["c"], workers=1)
    assert len(res.failures) == 2
    assert all(math.isnan(v) for v in res.table["c"])


def test_random_distinct_topologies():
    tops = random_distinct_topologies(6, 6, seed=0)
    assert len(set(tops)) == 6
    with pytest.raises(ValueError):
        random_distinct_topologies(3, 7, seed=0)
