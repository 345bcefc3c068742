import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hinge_oracle, random_pwl
from s3kit.builtins import cubic_fig3
from s3kit.chain import (
    ConditioningWarning,
    S3ChainNet,
    SimplifyFirstError,
    build_chain,
    forward_chain,
    sup_error,
)
from s3kit.piecewise import DomainError, PiecewiseLinear, simplify


def test_identity_chain(identity_pwl):
    net = build_chain(identity_pwl)
    assert net.weights == (1.0,) and net.biases == (0.0,)
    assert net.signs == (1.0,) and net.output_bias == 0.0
    assert forward_chain(net, 0.7)[0] == pytest.approx(0.7)
    assert forward_chain(net, 1.0) == (1.0, [1.0])


def test_tent_chain(tent):
    net = build_chain(tent)
    assert net.n_neurons == 2
    assert forward_chain(net, 0.75)[0] == pytest.approx(0.25)
    value, trace = forward_chain(net, 0.25)
    assert value == pytest.approx(0.25)
    assert trace == pytest.approx([0.25, 0.0])
    assert sup_error(net, tent, 10_000) <= 1e-12


def test_tent_weights_follow_recurrence_by_hand(tent):
    # dM = (-1, 2): W0 = 1, b0 = 0; W1 = 2/1, b1 = -(0.5 - 0) * 2
    net = build_chain(tent)
    assert net.weights == (1.0, 2.0)
    assert net.biases == (0.0, -1.0)
    assert net.signs == (-1.0, 1.0)


def test_cubic_chain(cubic_pwl):
    net = build_chain(simplify(cubic_pwl))
    assert net.n_neurons == 100
    assert sup_error(net, cubic_pwl, 10_000) <= 1e-9
    assert sup_error(net, cubic_fig3, 100_000) <= 1.5e-4 + 1e-9


def test_left_endpoint_all_dormant(cubic_pwl):
    net = build_chain(cubic_pwl)
    value, trace = forward_chain(net, 1.0)
    assert value == cubic_pwl.values[0]
    assert all(t == 0 for t in trace)


def test_constant_pwl_degenerate():
    net = build_chain(PiecewiseLinear((0.0, 1.0, 2.0), (3.0, 3.0, 3.0)))
    assert net.n_neurons == 0
    assert forward_chain(net, 1.5)[0] == 3.0


def test_leading_constant_segment_absorbed():
    p = PiecewiseLinear((0.0, 0.4, 1.0), (2.0, 2.0, 3.2))
    net = build_chain(p)
    assert net.n_neurons == 1
    assert net.biases[0] == pytest.approx(-2.0 * 0.4)
    assert sup_error(net, p, 1001) <= 1e-12


def test_unsimplified_target_rejected():
    p = PiecewiseLinear((0.0, 0.5, 1.0), (0.0, 0.5, 1.0))
    with pytest.raises(SimplifyFirstError):
        build_chain(p)


def test_negative_target_shift_cancels():
    p = PiecewiseLinear((0.0, 0.3, 0.6, 1.0), (-2.0, 1.0, -4.0, 0.5))
    net = build_chain(p)
    assert net.shift_c == pytest.approx(5.0)
    assert net.output_bias == -2.0
    grid = np.linspace(0, 1, 5001)
    assert np.max(np.abs(net(grid) - hinge_oracle(p, grid))) <= 1e-12


def test_domain_error(tent):
    net = build_chain(tent)
    with pytest.raises(DomainError):
        forward_chain(net, -0.01)


def test_conditioning_warning():
    p = PiecewiseLinear((0.0, 0.5, 0.5 + 1e-13, 1.0), (0.0, 1e-13, 1.0, 1.0))
    with pytest.warns(ConditioningWarning):
        build_chain(simplify(p, 0.0))


def test_sup_error_identity_against_function(identity_pwl):
    assert sup_error(build_chain(identity_pwl), lambda x: x, 1000) == 0.0


def test_json_roundtrip(tent):
    net = build_chain(tent)
    back = S3ChainNet.from_dict(net.to_dict())
    assert back == net
    assert net.to_dict()["kind"] == "s3_chain"


def test_exact_representation_random_suite():
    rng = np.random.default_rng(2024)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        worst = max(sup_error(build_chain(p), p, 10_000) for p in (random_pwl(rng) for _ in range(50)))
    assert worst <= 1e-9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_chain_matches_hinge_oracle(seed):
    p = random_pwl(np.random.default_rng(seed), max_segments=32)
    net = build_chain(p)
    grid = np.linspace(0, 1, 2001)
    assert np.max(np.abs(net(grid) - hinge_oracle(p, grid))) <= 1e-9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_telescoping_slope(seed):
    rng = np.random.default_rng(seed)
    p = random_pwl(rng, max_segments=16)
    net = build_chain(p)
    h = 1e-6
    xs = p.breakpoints
    for k, m in enumerate(p.slopes):
        if xs[k + 1] - xs[k] < 10 * h:
            continue
        mid = 0.5 * (xs[k] + xs[k + 1])
        d = (net(mid + h) - net(mid - h)) / (2 * h)
        assert abs(d - m) <= 1e-4 * (1 + abs(m))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_dormancy_left_of_knot(seed):
    p = random_pwl(np.random.default_rng(seed), max_segments=16)
    net = build_chain(p)
    knots = p.breakpoints
    for i in range(net.n_neurons):
        x = np.linspace(knots[0], knots[i], 50, endpoint=False)
        _, trace = forward_chain(net, x)
        assert np.all(trace[i] == 0.0)
