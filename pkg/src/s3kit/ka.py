"""Width-bounded approximator built from one-neuron chains along a
Kolmogorov-Arnold decomposition ``f(x) = sum_q Phi_q(sum_p phi_qp(x_p))``.

The decomposition itself is supplied by the caller (finding one is not
constructive); this module turns each univariate piece into a chain under
an error budget and checks the composite on a grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chain import S3ChainNet, build_chain, sup_error
from .piecewise import fit_uniform, simplify

Scalar = Callable[[np.ndarray], np.ndarray]
IDENTITY_TOL = 1e-8


class BudgetInfeasible(ValueError):
    """A chain missed its budgeted tolerance at the requested grid step."""

    def __init__(self, label: str, error: float, tolerance: float, step: float, suggested_step: float):
        self.label = label
        self.error = error
        self.tolerance = tolerance
        self.suggested_step = suggested_step
        super().__init__(
            f"{label}: sup error {error:.3g} exceeds budget {tolerance:.3g} at step {step}; "
            f"retry with step <= {suggested_step:.3g}"
        )


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _const(c: float) -> Scalar:
    def f(x):
        return np.full_like(np.asarray(x, dtype=float), c)

    return f


def _ident(x):
    return np.asarray(x, dtype=float)


@dataclass
class KADecomposition:
    """``inner[q][p]`` maps [0, 1] to R, ``outer[q]`` lives on ``outer_domains[q]``."""

    n: int
    inner: list[list[Scalar]]
    outer: list[Scalar]
    target: Callable[[np.ndarray], np.ndarray]
    outer_domains: list[tuple[float, float]] | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("decomposition needs input dimension n >= 2")
        if len(self.outer) != 2 * self.n + 1 or len(self.inner) != 2 * self.n + 1:
            raise ValueError(f"need {2 * self.n + 1} outer functions and inner rows")
        if any(len(row) != self.n for row in self.inner):
            raise ValueError(f"each inner row needs {self.n} functions")
        err = self.identity_error()
        if err > IDENTITY_TOL:
            raise ValueError(f"decomposition does not reproduce its target: max error {err:.3g}")

    def compose(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        total = np.zeros(x.shape[0])
        for q in range(2 * self.n + 1):
            s = sum(self.inner[q][p](x[:, p]) for p in range(self.n))
            total += self.outer[q](s)
        return total

    def identity_error(self, points_per_axis: int = 11, max_points: int = 100_000) -> float:
        """Max identity residual on a tensor grid, or a seeded sample once the grid gets too large."""
        if points_per_axis**self.n <= max_points:
            g = np.linspace(0.0, 1.0, points_per_axis)
            pts = np.array(list(itertools.product(g, repeat=self.n)))
        else:
            rng = np.random.default_rng(0)
            pts = np.vstack([np.zeros(self.n), np.ones(self.n), rng.uniform(size=(max_points, self.n))])
        return float(np.max(np.abs(self.compose(pts) - self.target(pts))))


def additive(n: int = 2) -> KADecomposition:
    """``sum_p x_p^2``: one outer identity, remaining outer functions zero."""
    inner = [[(lambda x: np.asarray(x, dtype=float) ** 2) for _ in range(n)]]
    inner += [[_zero] * n for _ in range(2 * n)]
    outer = [_ident] + [_zero] * (2 * n)
    return KADecomposition(n, inner, outer, lambda x: np.sum(np.atleast_2d(x) ** 2, axis=1),
                           name="additive", params={"n": n})


def exp_log_product() -> KADecomposition:
    """``x1 * x2 = exp(log(1+x1) + log(1+x2)) - x1 - x2 - 1``."""
    n = 2
    log1p = lambda x: np.log1p(np.asarray(x, dtype=float))  # noqa: E731
    neg = lambda x: -np.asarray(x, dtype=float)  # noqa: E731
    inner = [[log1p, log1p], [neg, neg], [_zero, _zero], [_zero, _zero], [_zero, _zero]]
    outer = [np.exp, _ident, _const(-1.0), _zero, _zero]
    return KADecomposition(n, inner, outer, lambda x: np.prod(np.atleast_2d(x), axis=1),
                           name="exp_log_product", params={})


def constant(n: int = 2, c: float = 1.0) -> KADecomposition:
    inner = [[_zero] * n for _ in range(2 * n + 1)]
    outer = [_const(c)] + [_zero] * (2 * n)
    return KADecomposition(n, inner, outer, lambda x: np.full(np.atleast_2d(x).shape[0], c),
                           name="constant", params={"n": n, "c": c})


DECOMPOSITIONS = {
    "additive": additive,
    "exp_log_product": exp_log_product,
    "constant": constant,
}


def get_decomposition(name: str, **params) -> KADecomposition:
    try:
        factory = DECOMPOSITIONS[name]
    except KeyError:
        raise KeyError(f"unknown decomposition {name!r}; choose from {', '.join(DECOMPOSITIONS)}") from None
    return factory(**params)


def lipschitz_modulus(f: Scalar, interval: tuple[float, float], samples: int = 4001) -> Callable[[float], float]:
    """Continuity modulus ``eps -> eps / Lip`` from a sampled Lipschitz constant.

    Sampling under-estimates the constant, so the end-to-end grid check in
    :func:`assemble` stays the arbiter. Constant functions get ``inf``.
    """
    a, b = interval
    if b <= a:
        return lambda eps: math.inf
    x = np.linspace(a, b, samples)
    y = np.asarray(f(x), dtype=float)
    lip = float(np.max(np.abs(np.diff(y)) / np.diff(x)))
    if lip == 0.0:
        return lambda eps: math.inf
    return lambda eps: eps / lip


@dataclass(frozen=True)
class BudgetPlan:
    n: int
    sigma: float
    outer_tol: float
    outer_delta: tuple[float, ...]
    inner_tol: tuple[tuple[float, ...], ...]


def error_budget(n: int, sigma: float, outer_moduli: Sequence[Callable[[float], float]]) -> BudgetPlan:
    """Split the target precision ``sigma`` across outer and inner chains.

    Every outer chain gets ``eps = sigma / (4n + 2)``. With ``delta_q`` the
    modulus of ``Phi_q`` at ``eps``, each inner chain feeding ``Phi_q`` gets
    ``delta_q / (n + 1)`` so their sum stays strictly below ``delta_q``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if len(outer_moduli) != 2 * n + 1:
        raise ValueError(f"need {2 * n + 1} moduli, got {len(outer_moduli)}")
    eps = sigma / (4 * n + 2)
    deltas = []
    for q, mod in enumerate(outer_moduli):
        d = float(mod(eps))
        if not d > 0:
            raise ValueError(f"modulus of outer function {q} returned nonpositive delta {d}")
        deltas.append(d)
    inner = tuple(tuple(d / (n + 1) for _ in range(n)) for d in deltas)
    return BudgetPlan(n, sigma, eps, tuple(deltas), inner)


@dataclass(frozen=True)
class KANet:
    n: int
    sigma: float
    inner_nets: tuple[tuple[S3ChainNet, ...], ...]
    outer_nets: tuple[S3ChainNet, ...]
    decomposition: str = "custom"
    params: dict = field(default_factory=dict)
    chain_errors: dict = field(default_factory=dict)

    def __call__(self, x):
        return forward_ka(self, x)

    def to_dict(self) -> dict:
        return {
            "kind": "ka",
            "n": self.n,
            "sigma": self.sigma,
            "decomposition": self.decomposition,
            "params": self.params,
            "inner": [[c.to_dict() for c in row] for row in self.inner_nets],
            "outer": [c.to_dict() for c in self.outer_nets],
            "chain_errors": self.chain_errors,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KANet":
        if d.get("kind") != "ka":
            raise ValueError(f"expected kind 'ka', got {d.get('kind')!r}")
        return cls(
            n=int(d["n"]),
            sigma=float(d["sigma"]),
            inner_nets=tuple(tuple(S3ChainNet.from_dict(c) for c in row) for row in d["inner"]),
            outer_nets=tuple(S3ChainNet.from_dict(c) for c in d["outer"]),
            decomposition=d.get("decomposition", "custom"),
            params=dict(d.get("params", {})),
            chain_errors=dict(d.get("chain_errors", {})),
        )


def _suggest_step(step: float, err: float, tol: float) -> float:
    # linear interpolation error scales with step^2
    return 0.9 * step * math.sqrt(tol / err) if err > 0 else step


def _fit_chain(f: Scalar, interval: tuple[float, float], step: float, tol: float, label: str, check_points: int):
    a, b = interval
    pwl = simplify(fit_uniform(lambda t: float(f(np.asarray(t))), (a, b), min(step, b - a)))
    net = build_chain(pwl)
    err = sup_error(net, f, check_points)
    if err > tol:
        raise BudgetInfeasible(label, err, tol, step, _suggest_step(step, err, tol))
    return net, err


def assemble(dec: KADecomposition, sigma: float, step: float, check_points: int = 20001) -> KANet:
    """Build inner chains on [0, 1], then outer chains on the reachable sum range.

    The outer interval for ``Phi_q`` is the range ``[sum_p min D_qp, sum_p max D_qp]``
    actually produced by the inner chains, padded by the inner budget and
    clipped to the declared outer domain. Every chain is checked against
    its budget on ``check_points`` samples before it is accepted.
    """
    n = dec.n
    n_outer = 2 * n + 1
    domains = dec.outer_domains or [(-math.inf, math.inf)] * n_outer
    # a first pass of inner chains fixes the reachable interval, which fixes the moduli
    probe = np.linspace(0.0, 1.0, check_points)
    raw_ranges = []
    for q in range(n_outer):
        lo = sum(float(np.min(dec.inner[q][p](probe))) for p in range(n))
        hi = sum(float(np.max(dec.inner[q][p](probe))) for p in range(n))
        raw_ranges.append((lo, hi))
    moduli = [lipschitz_modulus(dec.outer[q], _pad(raw_ranges[q], 1.0, domains[q])) for q in range(n_outer)]
    plan = error_budget(n, sigma, moduli)

    errors: dict = {}
    inner_nets = []
    for q in range(n_outer):
        row = []
        for p in range(n):
            tol = plan.inner_tol[q][p]
            label = f"inner[{q}][{p}]"
            net, err = _fit_chain(dec.inner[q][p], (0.0, 1.0), step, tol, label, check_points)
            errors[label] = err
            row.append(net)
        inner_nets.append(tuple(row))

    outer_nets = []
    for q in range(n_outer):
        lo = sum(float(np.min(net(probe))) for net in inner_nets[q])
        hi = sum(float(np.max(net(probe))) for net in inner_nets[q])
        pad = sum(plan.inner_tol[q])
        interval = _pad((lo, hi), pad if math.isfinite(pad) else 1.0, domains[q])
        label = f"outer[{q}]"
        net, err = _fit_chain(dec.outer[q], interval, step, plan.outer_tol, label, check_points)
        errors[label] = err
        outer_nets.append(net)

    return KANet(n, sigma, tuple(inner_nets), tuple(outer_nets), dec.name, dict(dec.params), errors)


def _pad(interval, pad, clip):
    lo, hi = interval
    lo, hi = max(lo - pad, clip[0]), min(hi + pad, clip[1])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def forward_ka(net: KANet, x) -> np.ndarray | float:
    """``sum_q D_q(sum_p D_qp(x_p))`` for a point or an ``(m, n)`` batch in the unit cube."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != net.n:
        raise ValueError(f"expected {net.n} coordinates, got {arr.shape[1]}")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("coordinates must lie in [0, 1]")
    total = np.zeros(arr.shape[0])
    for q, outer in enumerate(net.outer_nets):
        s = sum(net.inner_nets[q][p](arr[:, p]) for p in range(net.n))
        a, b = outer.domain
        # inner sums stay inside the outer interval up to accumulated round-off
        total += outer(np.clip(s, a, b))
    return float(total[0]) if scalar else total


def width_of(net: KANet) -> int:
    """Most one-neuron chains running side by side in either stage."""
    inner = sum(len(row) for row in net.inner_nets)
    return max(inner, len(net.outer_nets))


def composite_error(net: KANet, dec: KADecomposition, points_per_axis: int = 101) -> float:
    """Max |W - f| on a tensor grid (n = 2) or a seeded uniform sample of the same size."""
    if dec.n == 2:
        g = np.linspace(0.0, 1.0, points_per_axis)
        pts = np.array(list(itertools.product(g, g)))
    else:
        rng = np.random.default_rng(0)
        pts = np.vstack([np.zeros(dec.n), np.ones(dec.n), rng.uniform(size=(points_per_axis**2, dec.n))])
    return float(np.max(np.abs(forward_ka(net, pts) - dec.target(pts))))
