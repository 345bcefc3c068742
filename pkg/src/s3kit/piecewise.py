"""Continuous piecewise-linear targets on a closed interval."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when a point lies outside the closed domain of a function."""


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear function given by its knots.

    ``breakpoints`` are strictly increasing abscissae and ``values`` the
    function values there. Between knots the function is the linear
    interpolant, so continuity holds by construction.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        xs = tuple(float(v) for v in self.breakpoints)
        ys = tuple(float(v) for v in self.values)
        if len(xs) < 2:
            raise ValueError("a piecewise-linear function needs at least 2 breakpoints")
        if len(xs) != len(ys):
            raise ValueError(f"{len(xs)} breakpoints but {len(ys)} values")
        if not all(math.isfinite(v) for v in xs + ys):
            raise ValueError("breakpoints and values must be finite")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", xs)
        object.__setattr__(self, "values", ys)

    @property
    def domain(self) -> tuple[float, float]:
        return self.breakpoints[0], self.breakpoints[-1]

    @property
    def n_segments(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def slopes(self) -> tuple[float, ...]:
        xs, ys = self.breakpoints, self.values
        return tuple((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1))

    def __call__(self, x):
        return eval_pwl(self, x)

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseLinear":
        return cls(tuple(d["breakpoints"]), tuple(d["values"]))


def fit_uniform(f: Callable[[float], float], interval: Sequence[float], step: float) -> PiecewiseLinear:
    """Sample ``f`` on a uniform grid ``a, a+step, ..., b``.

    The last sub-interval is shorter when ``step`` does not divide ``b - a``.
    Grid points are computed as ``a + k*step`` (not by accumulation) so that
    e.g. ``[1, 2]`` with step 0.01 yields exactly 101 knots.
    """
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    if not (step > 0 and step <= b - a):
        raise ValueError(f"step must lie in (0, {b - a}], got {step}")
    n_full = math.floor((b - a) / step + 1e-9)
    xs = [a + k * step for k in range(n_full + 1)]
    # snap a final knot that is within round-off of b
    if abs(xs[-1] - b) <= 1e-9 * max(1.0, abs(b)):
        xs[-1] = b
    elif xs[-1] < b:
        xs.append(b)
    else:
        xs[-1] = b
    ys = []
    for x in xs:
        y = float(f(x))
        if not math.isfinite(y):
            raise ValueError(f"non-finite sample f({x!r}) = {y!r}")
        ys.append(y)
    return PiecewiseLinear(tuple(xs), tuple(ys))


def default_slope_tol(pwl: PiecewiseLinear) -> float:
    return 1e-12 * (1.0 + max(abs(m) for m in pwl.slopes))


def simplify(pwl: PiecewiseLinear, slope_tol: float | None = None) -> PiecewiseLinear:
    """Merge adjacent segments whose slopes differ by at most ``slope_tol``.

    A knot is dropped when the slope of the (already merged) segment ending
    there and the next original segment agree within tolerance. Comparing
    against the merged slope keeps a slow drift of slopes from being merged
    away piece by piece.
    """
    if slope_tol is None:
        slope_tol = default_slope_tol(pwl)
    if slope_tol < 0:
        raise ValueError("slope_tol must be nonnegative")
    xs, ys = pwl.breakpoints, pwl.values
    keep_x, keep_y = [xs[0]], [ys[0]]
    for i in range(1, len(xs) - 1):
        m_left = (ys[i] - keep_y[-1]) / (xs[i] - keep_x[-1])
        m_right = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        if abs(m_right - m_left) > slope_tol:
            keep_x.append(xs[i])
            keep_y.append(ys[i])
    keep_x.append(xs[-1])
    keep_y.append(ys[-1])
    return PiecewiseLinear(tuple(keep_x), tuple(keep_y))


def eval_pwl(pwl: PiecewiseLinear, x):
    """Evaluate by linear interpolation; scalars in, scalars out.

    Points outside the domain raise :class:`DomainError` rather than clamp.
    """
    arr = np.asarray(x, dtype=float)
    a, b = pwl.domain
    if np.any(arr < a) or np.any(arr > b) or np.any(np.isnan(arr)):
        raise DomainError(f"x outside domain [{a}, {b}]")
    out = np.interp(arr, pwl.breakpoints, pwl.values)
    return float(out) if out.ndim == 0 else out


def to_csv_rows(pwl: PiecewiseLinear) -> list[tuple[float, float]]:
    return list(zip(pwl.breakpoints, pwl.values))
