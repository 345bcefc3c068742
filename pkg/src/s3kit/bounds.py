"""Norm extraction and generalization-bound calculators for chain, dense
(concatenate-everything) and S3 (concatenate-into-output) layer stacks.

Dense layer ``i`` reads the concatenation of the input and every earlier
layer, so ``A_i`` is ``d_i x sum_{k<i} d_k``. The S3 variant reads only its
predecessor except for the last layer, which reads everything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000

AUX_VARIANTS = ("chain_rademacher", "chain_pacbayes", "dense_rademacher", "dense_pacbayes")


class ProfileShapeError(ValueError):
    pass


def spectral_norm(a: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value by power iteration on the Gram matrix ``A^T A``."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("empty matrix")
    gram = a.T @ a if a.shape[0] >= a.shape[1] else a @ a.T
    v = np.ones(gram.shape[0]) / math.sqrt(gram.shape[0])
    # an all-ones start can be orthogonal to the top eigenvector; fall back to a fixed pseudo-random one
    if np.linalg.norm(gram @ v) == 0.0 and np.any(gram):
        v = np.random.default_rng(0).standard_normal(gram.shape[0])
        v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        lam = float(v @ w)
        # for a symmetric matrix the residual bounds the distance of lam to an eigenvalue,
        # so this stays reliable when the top two singular values nearly coincide
        if np.linalg.norm(w - lam * v) <= tol * lam:
            break
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return math.sqrt(max(lam, 0.0))


def matrix_norms(a) -> tuple[float, float, float]:
    """``(spectral, (2,1), Frobenius)``; the (2,1) norm sums column l2 norms."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.size == 0:
        raise ValueError("empty matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    # zero columns contribute nothing; dropping them keeps padded and unpadded results bit-identical
    live = a[:, np.any(a != 0, axis=0)]
    if live.size == 0:
        return 0.0, 0.0, 0.0
    two_one = math.fsum(np.linalg.norm(live, axis=0))
    frob = math.sqrt(math.fsum((live * live).ravel()))
    return spectral_norm(live), two_one, frob


@dataclass(frozen=True)
class LayerNorms:
    lipschitz: float
    spectral: float
    two_one: float
    frobenius: float
    out_dim: int
    in_dim: int

    def __post_init__(self):
        for name in ("lipschitz", "spectral", "two_one", "frobenius"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.out_dim < 0 or self.in_dim < 0:
            raise ValueError("dimensions must be nonnegative")


@dataclass(frozen=True)
class NormProfile:
    layers: tuple[LayerNorms, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("profile needs at least one layer")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def max_width(self) -> int:
        return max(layer.out_dim for layer in self.layers)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(layer, name) for layer in self.layers], dtype=float)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    def is_dense_shaped(self) -> bool:
        acc = self.input_dim
        for layer in self.layers:
            if layer.in_dim != acc:
                return False
            acc += layer.out_dim
        return True

    def is_s3_shaped(self) -> bool:
        layers = self.layers
        if len(layers) == 1:
            return True
        for i in range(1, len(layers) - 1):
            if layers[i].in_dim != layers[i - 1].out_dim:
                return False
        total = self.input_dim + sum(layer.out_dim for layer in layers[:-1])
        return layers[-1].in_dim == total

    def to_dict(self) -> dict:
        return {"layers": [
            {"rho": l.lipschitz, "s": l.spectral, "b": l.two_one, "B_F": l.frobenius, "d": l.out_dim, "n": l.in_dim}
            for l in self.layers
        ]}

    @classmethod
    def from_dict(cls, d: dict) -> "NormProfile":
        return cls(tuple(
            LayerNorms(float(l.get("rho", 1.0)), float(l["s"]), float(l["b"]), float(l.get("B_F", 0.0)),
                       int(l["d"]), int(l["n"]))
            for l in d["layers"]
        ))


def profile_from_matrices(mats: Sequence, lipschitz: float | Sequence[float] = 1.0) -> NormProfile:
    """Per-layer norms of weight matrices ``A_i`` (shape ``d_i x n_i``).

    The (2,1) entry is taken of ``A_i^T``, i.e. the sum of row norms of
    ``A_i``, which is the quantity the margin bound constrains.
    """
    rhos = [lipschitz] * len(mats) if np.isscalar(lipschitz) else list(lipschitz)
    layers = []
    for a, rho in zip(mats, rhos):
        a = np.asarray(a, dtype=float)
        s, _, frob = matrix_norms(a)
        _, b, _ = matrix_norms(a.T)
        layers.append(LayerNorms(float(rho), s, b, frob, a.shape[0], a.shape[1]))
    return NormProfile(tuple(layers))


@dataclass(frozen=True)
class BoundInputs:
    n_samples: int
    margin: float
    data_bound: float
    delta: float
    class_count: int = 10

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        if self.data_bound < 0:
            raise ValueError("data_bound must be nonnegative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.class_count < 1:
            raise ValueError("class_count must be positive")


def _spectral_margin_bound(profile: NormProfile, log_dims: np.ndarray, inputs: BoundInputs) -> float:
    n = inputs.n_samples
    rho = profile.column("lipschitz")
    s = profile.column("spectral")
    b = profile.column("two_one")
    lip = 1.0 + rho * s
    complexity = np.prod(lip) * math.sqrt(np.sum(rho**2 * b**2 / lip**2) * np.sum(log_dims))
    return (
        8.0 / n**1.5
        + 3.0 * math.sqrt(math.log(1.0 / inputs.delta) / (2.0 * n))
        + 36.0 * inputs.data_bound * math.log(n) / (inputs.margin * n) * complexity
    )


def bartlett_dense(profile: NormProfile, inputs: BoundInputs) -> float:
    """Spectrally-normalized margin bound for a densely concatenated stack."""
    if not profile.is_dense_shaped():
        raise ProfileShapeError("profile is not dense-shaped: need n_i = sum_{k<i} d_k")
    d = profile.column("out_dim")
    nd = profile.column("in_dim")
    if np.any(d * nd == 0):
        raise ProfileShapeError("zero layer dimension")
    return _spectral_margin_bound(profile, np.log(2.0 * d * nd), inputs)


def bartlett_s3(profile: NormProfile, dense_dims: Sequence[int], inputs: BoundInputs) -> float:
    """Same bound for the S3 stack after zero-padding each matrix to dense size.

    Padding leaves every norm unchanged and only enlarges the log-dimension
    term, which is why ``dense_dims`` (the dense ``n_i``) enter here.
    """
    dense_dims = np.asarray(dense_dims, dtype=float)
    if len(dense_dims) != profile.depth:
        raise ProfileShapeError(f"{len(dense_dims)} dense dims for {profile.depth} layers")
    nd = profile.column("in_dim")
    if np.any(nd > dense_dims):
        raise ProfileShapeError("S3 layer wider than its dense counterpart")
    d = profile.column("out_dim")
    if np.any(d * dense_dims == 0):
        raise ProfileShapeError("zero layer dimension")
    return _spectral_margin_bound(profile, np.log(2.0 * d * dense_dims), inputs)


def aux_bound(profile: NormProfile, inputs: BoundInputs, variant: str) -> float:
    """Order-of-magnitude bounds with leading constants set to 1.

    ``*_rademacher`` use Frobenius norms only; ``*_pacbayes`` combine
    spectral and Frobenius norms with ``log(L p)``, ``p`` the widest layer.
    The ``dense_*`` forms replace each norm ``B`` by ``1 + 2B`` or ``1 + eB``.
    """
    m = inputs.n_samples
    depth = profile.depth
    bf = profile.column("frobenius")
    b2 = profile.column("spectral")
    if variant == "chain_rademacher":
        return float(2.0**depth * np.prod(bf) / math.sqrt(m))
    if variant == "dense_rademacher":
        return float(np.prod(1.0 + 2.0 * bf) / math.sqrt(m))
    if variant not in ("chain_pacbayes", "dense_pacbayes"):
        raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(AUX_VARIANTS)}")
    lp = depth * profile.max_width
    if lp <= 1:
        raise ValueError(f"log(L p) is nonpositive for L p = {lp}")
    scale = b2 if variant == "chain_pacbayes" else 1.0 + math.e * b2
    if np.any(scale == 0):
        raise ValueError("zero spectral norm in the pac-bayes ratio")
    return float(
        np.prod(scale) * math.log(lp) / (inputs.margin * math.sqrt(m))
        * math.sqrt(depth**2 * profile.max_width * np.sum(bf**2 / scale**2))
    )


def margin(logits, label: int) -> float:
    """True-class score minus the best competing score; ``label`` is 1-based."""
    v = np.asarray(logits, dtype=float)
    if not 1 <= label <= v.size:
        raise ValueError(f"label {label} out of range 1..{v.size}")
    others = np.delete(v, label - 1)
    return float(v[label - 1] - others.max()) if others.size else math.inf


def ramp(r: float, gamma: float) -> float:
    if r < -gamma:
        return 0.0
    if r > 0:
        return 1.0
    return 1.0 + r / gamma


def ramp_loss(logits, label: int, gamma: float) -> float:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return ramp(-margin(logits, label), gamma)


def empirical_ramp_risk(logits_batch, labels, gamma: float) -> float:
    return float(np.mean([ramp_loss(v, y, gamma) for v, y in zip(logits_batch, labels)]))


@dataclass
class BoundReport:
    dense: dict
    s3: dict
    dense_profile: NormProfile | None = None
    s3_profile: NormProfile | None = None
    extra: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict:
        return {k: bool(self.s3[k] <= self.dense[k]) for k in self.dense}

    def to_dict(self) -> dict:
        out = {"dense": self.dense, "s3": self.s3, "verdicts": self.verdicts}
        if self.dense_profile is not None:
            out["dense_profile"] = self.dense_profile.to_dict()
        if self.s3_profile is not None:
            out["s3_profile"] = self.s3_profile.to_dict()
        out.update(self.extra)
        return out

    def table(self) -> str:
        lines = [f"{'formula':<18}{'dense':>16}{'s3':>16}  s3<=dense"]
        for k in self.dense:
            lines.append(f"{k:<18}{self.dense[k]:>16.6g}{self.s3[k]:>16.6g}  {self.verdicts[k]}")
        return "\n".join(lines)


def _aux_all(profile: NormProfile, inputs: BoundInputs) -> dict:
    out = {}
    for variant in AUX_VARIANTS:
        try:
            out[variant] = aux_bound(profile, inputs, variant)
        except ValueError:
            out[variant] = math.nan
    return out


def compare_bounds(dense_mats: Sequence, s3_mats: Sequence, inputs: BoundInputs, lipschitz: float = 1.0) -> BoundReport:
    """Evaluate every bound on a dense stack and its S3 counterpart.

    Each S3 matrix must fit inside its dense counterpart as a column block
    (same rows, no more columns), which is what makes the padded S3 norms
    dominated by the dense ones.
    """
    if len(dense_mats) != len(s3_mats):
        raise ProfileShapeError(f"depth mismatch: {len(dense_mats)} dense vs {len(s3_mats)} s3 layers")
    for i, (a, b) in enumerate(zip(dense_mats, s3_mats)):
        a, b = np.atleast_2d(a), np.atleast_2d(b)
        if a.shape[0] != b.shape[0] or b.shape[1] > a.shape[1]:
            raise ProfileShapeError(f"layer {i + 1}: s3 shape {b.shape} does not embed in dense shape {a.shape}")
    dp = profile_from_matrices(dense_mats, lipschitz)
    sp = profile_from_matrices(s3_mats, lipschitz)
    dense_dims = dp.column("in_dim")
    dense = {"bartlett": bartlett_dense(dp, inputs), **_aux_all(dp, inputs)}
    s3 = {"bartlett": bartlett_s3(sp, dense_dims, inputs), **_aux_all(sp, inputs)}
    return BoundReport(dense, s3, dp, sp)


def random_stack(rng: np.random.Generator, input_dim: int, widths: Sequence[int], scale: float = 1.0):
    """Gaussian dense stack and its S3 counterpart taken as leading column blocks."""
    dense, s3 = [], []
    acc = input_dim
    for i, d in enumerate(widths):
        a = rng.standard_normal((d, acc)) * scale / math.sqrt(acc)
        dense.append(a)
        last = i == len(widths) - 1
        cols = acc if (i == 0 or last) else widths[i - 1]
        s3.append(a[:, :cols].copy())
        acc += d
    return dense, s3
