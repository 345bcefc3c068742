"""Full-batch gradient descent for one-neuron-per-layer shortcut networks,
and the repeated-trial experiment comparing members of the topology family.

Trainable networks use the constructed architecture unchanged except that
the fixed +/-1 output signs become real output coefficients (initialised
at +1); the input-to-output shortcut carries weight zero as in the
construction.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chain import S3ChainNet
from .omega import INPUT, OmegaNet, OmegaTopology, count_topologies, random_topology
from .piecewise import PiecewiseLinear, eval_pwl, fit_uniform
from .stats import SampleTable

DIVERGENCE_LOSS = 1e6


class TrainingDiverged(RuntimeError):
    def __init__(self, history: list[float]):
        self.history = history
        super().__init__(f"loss exceeded {DIVERGENCE_LOSS:g} at epoch {len(history) - 1}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 2000
    seed: int = 0
    init_scale: float = 0.5

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")


@dataclass
class Params:
    weights: np.ndarray
    biases: np.ndarray
    coefs: np.ndarray
    bias: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights, self.biases, self.coefs, [self.bias]])

    @classmethod
    def from_flat(cls, v: np.ndarray) -> "Params":
        n = (len(v) - 1) // 3
        return cls(v[:n].copy(), v[n:2 * n].copy(), v[2 * n:3 * n].copy(), float(v[-1]))

    @classmethod
    def from_net(cls, net) -> "Params":
        return cls(np.array(net.weights), np.array(net.biases), np.array(net.signs), float(net.output_bias))


def forward_params(parents: Sequence[int], p: Params, x: np.ndarray):
    """Return ``(prediction, pre_activations, activations)`` for a batch ``x``."""
    n = len(parents)
    z = np.empty((n, x.size))
    q = np.empty((n, x.size))
    for i, par in enumerate(parents):
        src = x if par == INPUT else q[par]
        z[i] = p.weights[i] * src + p.biases[i]
        q[i] = np.maximum(z[i], 0.0)
    pred = p.coefs @ q + p.bias
    return pred, z, q


def loss_and_grad(parents: Sequence[int], p: Params, x: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient by reverse accumulation.

    Children always carry larger indices than their parents, so a single
    descending sweep visits every neuron after all of its consumers.
    """
    pred, z, q = forward_params(parents, p, x)
    resid = pred - y
    loss = float(np.mean(resid**2))
    g = 2.0 * resid / x.size
    n = len(parents)
    dq = np.outer(p.coefs, g)
    gw = np.zeros(n)
    gb = np.zeros(n)
    for i in range(n - 1, -1, -1):
        dz = dq[i] * (z[i] > 0)
        par = parents[i]
        src = x if par == INPUT else q[par]
        gw[i] = dz @ src
        gb[i] = dz.sum()
        if par != INPUT:
            dq[par] += dz * p.weights[i]
    grad = Params(gw, gb, q @ g, float(g.sum()))
    return loss, grad


def init_params(n: int, cfg: TrainConfig) -> Params:
    """Weights ``1 + U(-s, s)``, biases ``U(-s, s)``, unit coefficients, zero bias.

    Weights are centred on 1 so that a deep stack neither vanishes nor
    explodes at the start.
    """
    rng = np.random.default_rng(cfg.seed)
    s = cfg.init_scale
    return Params(1.0 + rng.uniform(-s, s, n), rng.uniform(-s, s, n), np.ones(n), 0.0)


def train_params(parents: Sequence[int], x, y, cfg: TrainConfig, init: Params | None = None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = init if init is not None else init_params(len(parents), cfg)
    history = []
    for _ in range(cfg.epochs):
        loss, grad = loss_and_grad(parents, p, x, y)
        history.append(loss)
        if not math.isfinite(loss) or loss > DIVERGENCE_LOSS:
            raise TrainingDiverged(history)
        p = Params(
            p.weights - cfg.learning_rate * grad.weights,
            p.biases - cfg.learning_rate * grad.biases,
            p.coefs - cfg.learning_rate * grad.coefs,
            p.bias - cfg.learning_rate * grad.bias,
        )
    return p, history


def _rmse(parents, p: Params, x, y) -> float:
    pred, _, _ = forward_params(parents, p, np.asarray(x, dtype=float))
    return float(np.sqrt(np.mean((pred - np.asarray(y)) ** 2)))


def _check_data(x, domain):
    x = np.asarray(x, dtype=float)
    if domain is None:
        return (float(x.min()), float(x.max()))
    a, b = domain
    if np.any(x < a) or np.any(x > b):
        raise ValueError(f"training abscissae leave the declared domain [{a}, {b}]")
    return (float(a), float(b))


def train_chain(n_layers: int, x, y, cfg: TrainConfig, domain=None, init: S3ChainNet | None = None):
    """Fit a one-neuron-wide chain with ``n_layers`` neurons; returns ``(net, loss_history)``.

    The returned net's ``signs`` hold the trained real output coefficients.
    Raises :class:`TrainingDiverged` (history attached) if the loss blows up.
    """
    if n_layers < 1:
        raise ValueError("need at least one layer")
    dom = _check_data(x, domain)
    parents = OmegaTopology.chain(n_layers).parents
    start = Params.from_net(init) if init is not None else None
    if start is not None and len(start.weights) != n_layers:
        raise ValueError("initial network has the wrong depth")
    p, history = train_params(parents, x, y, cfg, start)
    net = S3ChainNet(tuple(p.weights), tuple(p.biases), tuple(p.coefs), p.bias, dom)
    return net, history


def train_omega(t: OmegaTopology, x, y, cfg: TrainConfig, domain=None):
    dom = _check_data(x, domain)
    p, history = train_params(t.parents, x, y, cfg)
    net = OmegaNet(t, tuple(p.weights), tuple(p.biases), tuple(p.coefs), p.bias, dom)
    return net, history


@dataclass(frozen=True)
class PwlTask:
    """Random continuous piecewise-linear regression targets on [0, 1].

    Trial ``k`` draws ``segments`` pieces with knots and values from a
    generator seeded by ``seed + k``, sampled every ``step``.
    """

    segments: int = 6
    step: float = 0.01
    seed: int = 10_000

    def target(self, trial: int) -> PiecewiseLinear:
        rng = np.random.default_rng(self.seed + trial)
        inner = np.sort(rng.uniform(0.0, 1.0, self.segments - 1))
        xs = np.concatenate([[0.0], inner, [1.0]])
        ys = rng.uniform(0.0, 1.0, self.segments + 1)
        return PiecewiseLinear(tuple(xs), tuple(ys))

    def data(self, trial: int):
        pwl = self.target(trial)
        x = np.array(fit_uniform(lambda v: 0.0, (0.0, 1.0), self.step).breakpoints)
        return x, eval_pwl(pwl, x)


@dataclass
class ExperimentResult:
    table: SampleTable
    failures: list[tuple[str, int]] = field(default_factory=list)


def _trial(args):
    parents, task, trial, cfg = args
    x, y = task.data(trial)
    trial_cfg = TrainConfig(cfg.learning_rate, cfg.epochs, cfg.seed + trial, cfg.init_scale)
    try:
        p, _ = train_params(parents, x, y, trial_cfg)
    except TrainingDiverged:
        return math.nan
    return _rmse(parents, p, x, y)


def thread_cap() -> int:
    raw = os.environ.get("S3KIT_THREADS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def equivalence_experiment(
    topologies: Sequence[OmegaTopology],
    task: PwlTask,
    trials: int,
    cfg: TrainConfig,
    names: Sequence[str] | None = None,
    workers: int | None = None,
) -> ExperimentResult:
    """Train every topology on the same ``trials`` targets and initial seeds.

    Trial ``k`` uses target ``task.target(k)`` and initialisation seed
    ``cfg.seed + k`` for every topology, so differences between columns come
    from topology alone. Diverged runs are recorded as ``nan`` and listed.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    names = list(names) if names is not None else [t.to_text() for t in topologies]
    if len(set(names)) != len(names):
        names = [f"{i}:{n}" for i, n in enumerate(names)]
    jobs = [(t.parents, task, k, cfg) for t in topologies for k in range(trials)]
    workers = workers if workers is not None else thread_cap()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_trial(j) for j in jobs]
    cols = {}
    failures = []
    for i, name in enumerate(names):
        col = results[i * trials:(i + 1) * trials]
        failures += [(name, k) for k, v in enumerate(col) if math.isnan(v)]
        cols[name] = col
    return ExperimentResult(SampleTable(cols), failures)


def random_distinct_topologies(n_hidden: int, count: int, seed: int) -> list[OmegaTopology]:
    """``count`` distinct random members, drawn with seeds ``seed, seed+1, ...``."""
    if count > count_topologies(n_hidden):
        raise ValueError("more topologies requested than exist")
    out: list[OmegaTopology] = []
    s = seed
    while len(out) < count:
        t = random_topology(n_hidden, s)
        if t not in out:
            out.append(t)
        s += 1
    return out
