import numpy as np
import pytest

from s3kit.piecewise import PiecewiseLinear, fit_uniform, simplify


def random_pwl(rng, max_segments=64, lo=-5.0, hi=5.0):
    """Sorted uniform knots on [0, 1] (endpoints kept), uniform values, simplified."""
    k = int(rng.integers(1, max_segments + 1))
    xs = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 1.0, k - 1)), [1.0]])
    ys = rng.uniform(lo, hi, k + 1)
    return simplify(PiecewiseLinear(tuple(xs), tuple(ys)))


def hinge_oracle(pwl, x):
    """f(x0) + sum_k dM_k (x - x_k)^+ evaluated directly, no chain recurrence."""
    xs, ys, ms = pwl.breakpoints, pwl.values, pwl.slopes
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, ys[0])
    prev = 0.0
    for k, m in enumerate(ms):
        out = out + (m - prev) * np.maximum(x - xs[k], 0.0)
        prev = m
    return out


@pytest.fixture
def tent():
    return PiecewiseLinear((0.0, 0.5, 1.0), (0.5, 0.0, 0.5))


@pytest.fixture
def identity_pwl():
    return PiecewiseLinear((0.0, 1.0), (0.0, 1.0))


@pytest.fixture
def cubic_pwl():
    from s3kit.builtins import cubic_fig3

    return fit_uniform(lambda x: float(cubic_fig3(x)), (1.0, 2.0), 0.01)


_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        # prefer the measurement line the test printed; fall back to the assertion message
        lines = [l for l in report.capstdout.splitlines() if l.startswith(f"criterion {number}:")]
        if lines:
            detail = lines[-1].split(None, 3)[-1]
        elif report.failed and hasattr(report.longrepr, "reprcrash"):
            detail = str(report.longrepr.reprcrash.message).splitlines()[0]
        else:
            detail = ""
        _CRITERIA[number] = ("PASS" if report.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        line = f"criterion {number}: {status}  {title}"
        if detail:
            line += f"\n    {detail}"
        terminalreporter.write_line(line)
