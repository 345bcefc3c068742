"""One-neuron-wide shortcut chain that represents a piecewise-linear target.

Neuron ``i`` computes ``R_i = relu(W_i * R_{i-1} + b_i)`` (``R_{-1} = x``)
and every neuron also feeds the output, which forms
``sum_i sign_i * R_i + output_bias``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .piecewise import DomainError, PiecewiseLinear, eval_pwl

CONDITION_WARN = 1e12


class SimplifyFirstError(ValueError):
    """Adjacent encoded segments share a slope; the knot carries no neuron."""


class ConditioningWarning(UserWarning):
    pass


@dataclass(frozen=True)
class S3ChainNet:
    weights: tuple[float, ...]
    biases: tuple[float, ...]
    signs: tuple[float, ...]
    output_bias: float
    domain: tuple[float, float]
    shift_c: float = 0.0

    def __post_init__(self):
        for name in ("weights", "biases", "signs"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        if not len(self.weights) == len(self.biases) == len(self.signs):
            raise ValueError("weights, biases and signs must have equal length")

    @property
    def n_neurons(self) -> int:
        return len(self.weights)

    def __call__(self, x):
        return forward_chain(self, x)[0]

    def to_dict(self) -> dict:
        return {
            "kind": "s3_chain",
            "neurons": [{"w": w, "b": b} for w, b in zip(self.weights, self.biases)],
            "signs": list(self.signs),
            "output_bias": self.output_bias,
            "shift_c": self.shift_c,
            "domain": list(self.domain),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "S3ChainNet":
        if d.get("kind") != "s3_chain":
            raise ValueError(f"expected kind 's3_chain', got {d.get('kind')!r}")
        return cls(
            weights=tuple(n["w"] for n in d["neurons"]),
            biases=tuple(n["b"] for n in d["neurons"]),
            signs=tuple(d["signs"]),
            output_bias=float(d["output_bias"]),
            domain=tuple(d["domain"]),
            shift_c=float(d.get("shift_c", 0.0)),
        )


@dataclass(frozen=True)
class EncodedSegments:
    """Knots and slope increments of the segments a network must encode.

    Leading constant segments are dropped; ``knots[i]`` is the left end of
    the i-th encoded segment and ``increments[i] = M_i - M_{i-1}`` with the
    slope before the first encoded segment taken as zero.
    """

    knots: tuple[float, ...]
    increments: tuple[float, ...]
    base_value: float
    shift_c: float

    @property
    def signs(self) -> tuple[float, ...]:
        return tuple(1.0 if d > 0 else -1.0 for d in self.increments)


def encode_segments(pwl: PiecewiseLinear) -> EncodedSegments:
    xs, ys, ms = pwl.breakpoints, pwl.values, pwl.slopes
    first = next((k for k, m in enumerate(ms) if m != 0.0), None)
    ymin = min(ys)
    shift_c = -ymin + 1.0 if ymin < 0 else 0.0
    if first is None:
        return EncodedSegments((), (), ys[0], shift_c)
    knots, incs = [], []
    prev = 0.0
    for k in range(first, len(ms)):
        d = ms[k] - prev
        if d == 0.0:
            raise SimplifyFirstError(
                f"segments {k - 1} and {k} have equal slope {ms[k]!r}; call simplify() first"
            )
        knots.append(xs[k])
        incs.append(d)
        prev = ms[k]
    return EncodedSegments(tuple(knots), tuple(incs), ys[0], shift_c)


def build_chain(pwl: PiecewiseLinear) -> S3ChainNet:
    """Construct the chain whose output equals ``pwl`` on its whole domain.

    The first neuron is ``|M_k| (x - x_k)`` for the first non-constant
    segment ``k``. Each later neuron undoes the previous neuron's slope and
    re-slopes by its own increment:
    ``W_{i+1} = |dM_{i+1}| / |dM_i|``, ``b_{i+1} = -(x_{i+1} - x_i) |dM_{i+1}|``.
    A negative target is lifted by ``C`` before construction; since the
    lift only moves the output bias it is compensated there, leaving
    ``f(x_0)`` as the effective bias.
    """
    enc = encode_segments(pwl)
    if not enc.increments:
        return S3ChainNet((), (), (), enc.base_value, pwl.domain, enc.shift_c)
    mags = [abs(d) for d in enc.increments]
    weights = [mags[0]]
    biases = [-mags[0] * enc.knots[0]]
    for i in range(1, len(mags)):
        weights.append(mags[i] / mags[i - 1])
        biases.append(-(enc.knots[i] - enc.knots[i - 1]) * mags[i])
    if max(weights) > CONDITION_WARN:
        warnings.warn(
            f"chain weight {max(weights):.3g} exceeds {CONDITION_WARN:.0e}; "
            "the recurrence may lose precision",
            ConditioningWarning,
            stacklevel=2,
        )
    lifted_bias = enc.base_value + enc.shift_c
    return S3ChainNet(
        weights=tuple(weights),
        biases=tuple(biases),
        signs=enc.signs,
        output_bias=lifted_bias - enc.shift_c,
        domain=pwl.domain,
        shift_c=enc.shift_c,
    )


def _check_domain(x: np.ndarray, domain: tuple[float, float]) -> None:
    a, b = domain
    if np.any(x < a) or np.any(x > b) or np.any(np.isnan(x)):
        raise DomainError(f"x outside domain [{a}, {b}]")


def chain_trace(net: S3ChainNet, x: np.ndarray) -> np.ndarray:
    """Activations ``R_i`` for an array of inputs; shape ``(n_neurons, *x.shape)``."""
    trace = np.empty((net.n_neurons,) + x.shape)
    r = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        r = np.maximum(w * r + b, 0.0)
        trace[i] = r
    return trace


def forward_chain(net: S3ChainNet, x):
    """Return ``(value, trace)``; scalar x gives a float value and list trace."""
    arr = np.asarray(x, dtype=float)
    _check_domain(arr, net.domain)
    trace = chain_trace(net, arr)
    value = net.output_bias + np.tensordot(np.asarray(net.signs), trace, axes=(0, 0))
    if arr.ndim == 0:
        return float(value), [float(t) for t in trace]
    return value, trace


Target = Union[PiecewiseLinear, Callable[[np.ndarray], np.ndarray]]


def sup_error(net, target: Target, grid_points: int, domain: tuple[float, float] | None = None) -> float:
    """Max |net - target| on a uniform grid including both endpoints.

    ``net`` may be any callable over arrays with a ``domain`` attribute.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    a, b = domain if domain is not None else net.domain
    grid = np.linspace(a, b, grid_points)
    ref = eval_pwl(target, grid) if isinstance(target, PiecewiseLinear) else np.asarray(target(grid), dtype=float)
    return float(np.max(np.abs(np.asarray(net(grid)) - ref)))
