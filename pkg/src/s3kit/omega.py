"""The family of shortcut networks in which each hidden neuron has a single
inbound edge and every non-output neuron also feeds the output.

A topology is a parent list: ``parents[i]`` is ``INPUT`` or the index of an
earlier hidden neuron. The chain (``I,0,1,...``) and the one-hidden-layer
star (``I,I,I,...``) are the two extremes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .chain import S3ChainNet, _check_domain, encode_segments
from .piecewise import PiecewiseLinear

INPUT = -1
MAX_ENUMERATE = 8


class TopologyError(ValueError):
    pass


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class OmegaTopology:
    parents: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))

    @property
    def n_hidden(self) -> int:
        return len(self.parents)

    @property
    def edge_count(self) -> int:
        # one inbound edge per hidden neuron, plus input and hidden neurons to output
        return self.n_hidden + (self.n_hidden + 1)

    @property
    def n_neurons(self) -> int:
        """Neuron count including input and output."""
        return self.n_hidden + 2

    def to_text(self) -> str:
        return format_topology(self)

    @classmethod
    def chain(cls, n: int) -> "OmegaTopology":
        return cls((INPUT,) + tuple(range(n - 1)))

    @classmethod
    def star(cls, n: int) -> "OmegaTopology":
        return cls((INPUT,) * n)


def parse_topology(text: str) -> OmegaTopology:
    """Parse ``I,0,I,2`` style parent lists."""
    parents = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok.upper() == "I":
            parents.append(INPUT)
        else:
            try:
                parents.append(int(tok))
            except ValueError:
                raise TopologyError(f"bad parent token {tok!r}") from None
    return OmegaTopology(tuple(parents))


def format_topology(t: OmegaTopology) -> str:
    return ",".join("I" if p == INPUT else str(p) for p in t.parents)


def validate_topology(t: OmegaTopology) -> list[str]:
    """Return a list of violated requirements; empty means the topology is valid."""
    violations = []
    if t.n_hidden < 1:
        violations.append("topology has no hidden neurons")
        return violations
    if t.parents[0] != INPUT:
        violations.append(f"neuron 0: must be wired to the input, got parent {t.parents[0]}")
    for i, p in enumerate(t.parents[1:], start=1):
        if p == i:
            violations.append(f"neuron {i}: self-parent")
        elif p >= i:
            violations.append(f"neuron {i}: parent {p} is not an earlier neuron (ordering/acyclicity)")
        elif p < INPUT:
            violations.append(f"neuron {i}: invalid parent {p}")
    n_total = t.n_neurons
    if not violations and t.edge_count != 2 * n_total - 3:
        violations.append(f"edge count {t.edge_count} != 2N-3 = {2 * n_total - 3}")
    return violations


def cut_rewire(t: OmegaTopology, neuron: int, new_parent: int) -> OmegaTopology:
    """Move ``neuron``'s single inbound edge to ``new_parent``."""
    if not 0 <= neuron < t.n_hidden:
        raise TopologyError(f"neuron {neuron} out of range 0..{t.n_hidden - 1}")
    if neuron == 0 and new_parent != INPUT:
        raise TopologyError("neuron 0 is wired to the input by construction")
    if new_parent == neuron:
        raise TopologyError(f"neuron {neuron}: self-parent")
    if new_parent >= neuron or new_parent < INPUT:
        raise TopologyError(f"neuron {neuron}: new parent {new_parent} must be INPUT or an earlier neuron")
    parents = list(t.parents)
    parents[neuron] = new_parent
    return OmegaTopology(tuple(parents))


def count_topologies(n: int) -> int:
    return math.factorial(n)


def enumerate_topologies(n: int) -> Iterator[OmegaTopology]:
    """Yield all ``n!`` members with ``n`` hidden neurons."""
    if n < 1:
        raise ValueError("need at least one hidden neuron")
    if n > MAX_ENUMERATE:
        raise ValueError(
            f"refusing to enumerate n={n}: would produce {count_topologies(n)} topologies "
            f"(limit n <= {MAX_ENUMERATE})"
        )
    choices = [(INPUT,)] + [(INPUT,) + tuple(range(i)) for i in range(1, n)]
    for parents in itertools.product(*choices):
        yield OmegaTopology(parents)


def random_topology(n: int, seed) -> OmegaTopology:
    """Each parent drawn uniformly from its ``i + 1`` admissible choices."""
    rng = np.random.default_rng(seed)
    parents = [INPUT] + [int(rng.integers(-1, i)) for i in range(1, n)]
    return OmegaTopology(tuple(parents))


@dataclass(frozen=True)
class OmegaNet:
    topology: OmegaTopology
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
        n = self.topology.n_hidden
        if not len(self.weights) == len(self.biases) == len(self.signs) == n:
            raise ArityError(f"topology has {n} hidden neurons but parameters do not match")

    def __call__(self, x):
        return forward_omega(self, x)[0]

    def to_dict(self) -> dict:
        return {
            "kind": "omega",
            "parents": ["I" if p == INPUT else p for p in self.topology.parents],
            "neurons": [{"w": w, "b": b} for w, b in zip(self.weights, self.biases)],
            "signs": list(self.signs),
            "output_bias": self.output_bias,
            "shift_c": self.shift_c,
            "domain": list(self.domain),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OmegaNet":
        if d.get("kind") != "omega":
            raise ValueError(f"expected kind 'omega', got {d.get('kind')!r}")
        parents = tuple(INPUT if p in ("I", INPUT) else int(p) for p in d["parents"])
        return cls(
            topology=OmegaTopology(parents),
            weights=tuple(n["w"] for n in d["neurons"]),
            biases=tuple(n["b"] for n in d["neurons"]),
            signs=tuple(d["signs"]),
            output_bias=float(d["output_bias"]),
            domain=tuple(d["domain"]),
            shift_c=float(d.get("shift_c", 0.0)),
        )

    @classmethod
    def from_chain(cls, net: S3ChainNet) -> "OmegaNet":
        return cls(
            OmegaTopology.chain(net.n_neurons), net.weights, net.biases, net.signs,
            net.output_bias, net.domain, net.shift_c,
        )


def build_omega(t: OmegaTopology, pwl: PiecewiseLinear) -> OmegaNet:
    """Assign weights so that every member realises ``pwl`` exactly.

    Neuron ``i`` encodes the slope increment at knot ``x_i`` whatever its
    parent is. Under a hidden parent ``j`` the parent's output is mapped back
    to the input domain first: ``W_i = |dM_i|/|dM_j|``,
    ``b_i = -(x_i - x_j)|dM_i|``. Under the input, ``W_i = |dM_i|`` and
    ``b_i = -|dM_i| x_i``.
    """
    bad = validate_topology(t)
    if bad:
        raise TopologyError("; ".join(bad))
    enc = encode_segments(pwl)
    if len(enc.increments) != t.n_hidden:
        raise ArityError(
            f"target encodes {len(enc.increments)} segments but topology has {t.n_hidden} hidden neurons"
        )
    mags = [abs(d) for d in enc.increments]
    weights, biases = [], []
    for i, parent in enumerate(t.parents):
        if parent == INPUT:
            weights.append(mags[i])
            biases.append(-mags[i] * enc.knots[i])
        else:
            weights.append(mags[i] / mags[parent])
            biases.append(-(enc.knots[i] - enc.knots[parent]) * mags[i])
    return OmegaNet(t, tuple(weights), tuple(biases), enc.signs, enc.base_value, pwl.domain, enc.shift_c)


def omega_trace(net: OmegaNet, x: np.ndarray) -> np.ndarray:
    trace = np.empty((net.topology.n_hidden,) + x.shape)
    for i, p in enumerate(net.topology.parents):
        src = x if p == INPUT else trace[p]
        trace[i] = np.maximum(net.weights[i] * src + net.biases[i], 0.0)
    return trace


def forward_omega(net: OmegaNet, x):
    """Evaluate in index order, which is a topological order by construction."""
    arr = np.asarray(x, dtype=float)
    _check_domain(arr, net.domain)
    trace = omega_trace(net, arr)
    value = net.output_bias + np.tensordot(np.asarray(net.signs), trace, axes=(0, 0))
    if arr.ndim == 0:
        return float(value), [float(v) for v in trace]
    return value, trace


def pairwise_sup_difference(nets: Sequence, grid: np.ndarray) -> float:
    """Largest sup-norm gap between any two networks on ``grid``."""
    outs = np.stack([np.asarray(n(grid)) for n in nets])
    return float(np.max(outs.max(axis=0) - outs.min(axis=0)))
