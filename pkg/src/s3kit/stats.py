"""Welch's unequal-variance t-test with a self-contained Student-t tail."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # the fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """``P(|T| >= |t|)`` for Student's t with ``dof`` degrees of freedom."""
    if not dof > 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    if t2 < dof:
        # dof / (dof + t^2) rounds to 1 for tiny t; use the complementary argument instead
        return 1.0 - betainc(0.5, dof / 2.0, t2 / (dof + t2))
    return betainc(dof / 2.0, 0.5, dof / (dof + t2))


def _mean_var(xs: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    m = math.fsum(xs) / n
    return m, math.fsum((x - m) ** 2 for x in xs) / (n - 1)


@dataclass(frozen=True)
class WelchResult:
    t: float
    dof: float
    p: float


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Two-sided Welch test of equal means without assuming equal variances.

    When both samples have zero variance the statistic is undefined; by
    convention ``p = 1`` for equal means and ``p = 0`` otherwise.
    """
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 observations")
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    na, nb = len(a), len(b)
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0.0:
        if ma == mb:
            return WelchResult(0.0, float(na + nb - 2), 1.0)
        return WelchResult(math.copysign(math.inf, ma - mb), float(na + nb - 2), 0.0)
    t = (ma - mb) / math.sqrt(se2)
    # weight form of Welch-Satterthwaite; squaring tiny variances directly can underflow
    wa, wb = sa / se2, sb / se2
    dof = 1.0 / (wa * wa / (na - 1) + wb * wb / (nb - 1))
    return WelchResult(t, dof, t_two_sided_p(t, dof))


def student_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Pooled-variance variant, kept as a cross-check for the Welch form."""
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 observations")
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    na, nb = len(a), len(b)
    dof = na + nb - 2
    pooled = ((na - 1) * va + (nb - 1) * vb) / dof
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    if se == 0.0:
        return WelchResult(0.0, float(dof), 1.0 if ma == mb else 0.0)
    t = (ma - mb) / se
    return WelchResult(t, float(dof), t_two_sided_p(t, dof))


class SampleTable(dict):
    """Named columns of repeated-trial results; ``nan`` marks a missing trial."""

    def __init__(self, columns: dict[str, Sequence[float]] | None = None):
        super().__init__()
        for k, v in (columns or {}).items():
            self[k] = [float(x) for x in v]
        for k, v in self.items():
            if not v:
                raise ValueError(f"column {k!r} is empty")

    def present(self, name: str) -> list[float]:
        return [x for x in self[name] if not math.isnan(x)]

    @classmethod
    def read_csv(cls, path) -> "SampleTable":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            cols: dict[str, list[float]] = {name: [] for name in reader.fieldnames or []}
            for row in reader:
                for name in cols:
                    cell = (row.get(name) or "").strip()
                    if cell:
                        cols[name].append(float(cell))
        return cls(cols)

    def write_csv(self, path) -> None:
        names = list(self)
        rows = max(len(v) for v in self.values())
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for i in range(rows):
                w.writerow([format(self[k][i], ".17g") if i < len(self[k]) else "" for k in names])


def column_means(table: SampleTable) -> dict[str, float]:
    return {k: math.fsum(table.present(k)) / len(table.present(k)) for k in table}


def pairwise_welch(table: SampleTable) -> dict[tuple[str, str], WelchResult]:
    names = list(table)
    return {
        (a, b): welch_t_test(table.present(a), table.present(b))
        for i, a in enumerate(names) for b in names[i + 1:]
    }


TABLE1_PATH = Path(__file__).with_name("data") / "table1.csv"


def load_table1() -> SampleTable:
    """Error rates of six equivalent-topology networks over 20 initialisations (CIFAR-10)."""
    return SampleTable.read_csv(TABLE1_PATH)
