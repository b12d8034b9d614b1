"""Unit tests for parameter validation, kernels, and connection probability."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksrg.model import (
    MarkedVertex,
    ModelParams,
    box_contains,
    box_side,
    connection_prob,
    connection_prob_array,
    kernel_value,
    kernel_value_array,
    pareto_mean,
    pareto_median,
    pareto_quantile,
)

marks = st.floats(min_value=1.0, max_value=1e6, allow_nan=False, allow_infinity=False)


def test_kernel_interpolation_example():
    params = ModelParams(d=1, sigma=1.0)
    assert kernel_value(2.0, 2.0, params) == 4.0


def test_kernel_sum_example():
    params = ModelParams(d=1, kernel="sum")
    assert kernel_value(1.0, 1.0, params) == 2.0


@given(w=marks)
def test_kernel_max_with_unit_mark(w):
    params = ModelParams(d=2, sigma=0.0)
    assert kernel_value(w, 1.0, params) == w


@given(w1=marks, w2=marks)
def test_kernel_symmetry(w1, w2):
    params = ModelParams(d=2, sigma=1.7)
    assert kernel_value(w1, w2, params) == kernel_value(w2, w1, params)
    params_sum = ModelParams(d=2, kernel="sum")
    assert kernel_value(w1, w2, params_sum) == kernel_value(w2, w1, params_sum)


@given(w1=marks, w2=marks, d=st.integers(min_value=1, max_value=4))
def test_sum_kernel_sandwiched_by_max_kernel(w1, w2, d):
    max_kernel = ModelParams(d=d, sigma=0.0)
    sum_kernel = ModelParams(d=d, kernel="sum")
    k0 = kernel_value(w1, w2, max_kernel)
    ks = kernel_value(w1, w2, sum_kernel)
    assert k0 <= ks * (1 + 1e-12)
    assert ks <= 2**d * k0 * (1 + 1e-12)


def test_kernel_array_matches_scalar():
    params = ModelParams(d=3, sigma=0.5, kernel="interpolation")
    rng = np.random.default_rng(7)
    w1 = 1.0 + rng.pareto(1.5, size=50)
    w2 = 1.0 + rng.pareto(1.5, size=50)
    arr = kernel_value_array(w1, w2, params)
    for i in range(50):
        assert arr[i] == pytest.approx(kernel_value(w1[i], w2[i], params), rel=1e-15)


def test_connection_prob_polynomial_example():
    params = ModelParams(d=1, sigma=1.0, alpha=2.0, beta=1.0, p=1.0)
    u = MarkedVertex(position=(0.0,), mark=2.0)
    v = MarkedVertex(position=(8.0,), mark=2.0)
    assert connection_prob(u, v, params) == pytest.approx(0.25, rel=1e-15)


def test_connection_prob_distance_zero_gives_p():
    params = ModelParams(d=2, alpha=3.0, p=0.7)
    u = MarkedVertex(position=(1.0, 1.0), mark=1.0)
    v = MarkedVertex(position=(1.0, 1.0), mark=5.0)
    assert connection_prob(u, v, params) == 0.7


def test_connection_prob_threshold_fails_below():
    # beta*kappa = 8 < 9 = dist^d, so the indicator is 0.
    params = ModelParams(
        d=1, sigma=0.0, alpha=math.inf, profile="threshold", beta=2.0, p=1.0
    )
    u = MarkedVertex(position=(0.0,), mark=4.0)
    v = MarkedVertex(position=(9.0,), mark=1.0)
    assert connection_prob(u, v, params) == 0.0


def test_connection_prob_threshold_equality_connects():
    params = ModelParams(
        d=1, sigma=0.0, alpha=math.inf, profile="threshold", beta=2.0, p=0.5
    )
    u = MarkedVertex(position=(0.0,), mark=4.0)
    v = MarkedVertex(position=(8.0,), mark=1.0)
    assert connection_prob(u, v, params) == 0.5


@given(
    w1=marks,
    w2=marks,
    x=st.floats(min_value=-100, max_value=100),
    y=st.floats(min_value=-100, max_value=100),
)
@settings(max_examples=50)
def test_connection_prob_symmetric_and_bounded(w1, w2, x, y):
    params = ModelParams(d=1, sigma=1.0, alpha=2.5, beta=0.8, p=0.9)
    u = MarkedVertex(position=(x,), mark=w1)
    v = MarkedVertex(position=(y,), mark=w2)
    puv = connection_prob(u, v, params)
    pvu = connection_prob(v, u, params)
    assert puv == pvu
    assert 0.0 <= puv <= params.p


def test_connection_prob_monotone_in_mark_and_distance():
    params = ModelParams(d=2, sigma=1.0, alpha=2.0, beta=1.0, p=1.0)
    rng = np.random.default_rng(11)
    for _ in range(200):
        x = rng.uniform(-10, 10, size=2)
        w = 1.0 + rng.pareto(1.2)
        u = MarkedVertex(position=tuple(x), mark=w)
        v_near = MarkedVertex(position=(0.0, 0.0), mark=2.0)
        v_far = MarkedVertex(position=(0.0, 0.0), mark=2.0)
        base = connection_prob(u, v_near, params)
        richer = MarkedVertex(position=(0.0, 0.0), mark=2.0 + rng.uniform(0, 5))
        assert connection_prob(u, richer, params) >= base - 1e-15
        farther = MarkedVertex(position=tuple(x * (1 + rng.uniform(0.1, 2))), mark=w)
        assert connection_prob(farther, v_far, params) <= base + 1e-15


def test_connection_prob_array_matches_scalar():
    params = ModelParams(d=2, sigma=1.0, alpha=1.5, beta=1.3, p=0.6)
    rng = np.random.default_rng(3)
    pos = rng.uniform(-20, 20, size=(40, 2))
    w = pareto_quantile(rng.uniform(0, 1, size=40), 2.5)
    dist = np.linalg.norm(pos[:20] - pos[20:], axis=1)
    kappa = kernel_value_array(w[:20], w[20:], params)
    probs = connection_prob_array(dist**2, kappa, params)
    for i in range(20):
        u = MarkedVertex(position=tuple(pos[i]), mark=w[i])
        v = MarkedVertex(position=tuple(pos[20 + i]), mark=w[20 + i])
        assert probs[i] == pytest.approx(connection_prob(u, v, params), rel=1e-12)


@pytest.mark.parametrize(
    "bad",
    [
        dict(tau=2.0),
        dict(tau=1.5),
        dict(alpha=1.0),
        dict(alpha=0.5),
        dict(sigma=-0.1),
        dict(beta=0.0),
        dict(beta=-1.0),
        dict(p=0.0),
        dict(p=1.2),
        dict(d=0),
        dict(kernel="geometric"),
        dict(profile="cauchy"),
        dict(vertex_set="grid"),
        dict(alpha=math.inf),  # polynomial profile with infinite alpha
        dict(profile="threshold", alpha=2.0),
        dict(vertex_set="lattice", p=1.0, beta=1.0),
    ],
)
def test_invalid_params_rejected(bad):
    with pytest.raises(ValueError):
        ModelParams(**bad)


def test_lattice_allowed_when_subcritical_percolation():
    ModelParams(vertex_set="lattice", p=0.5, beta=1.0)
    ModelParams(vertex_set="lattice", p=1.0, beta=0.5)


def test_infinite_params_accepted():
    ModelParams(tau=math.inf)
    ModelParams(alpha=math.inf, profile="threshold")


def test_params_roundtrip_via_json():
    params = ModelParams(
        d=2, tau=math.inf, alpha=math.inf, sigma=0.5, profile="threshold",
        beta=2.0, p=0.3, vertex_set="lattice",
    )
    again = ModelParams.from_json(params.to_json())
    assert again == params
    assert "inf" in params.to_json()


def test_params_from_dict_accepts_inf_string_and_infers_profile():
    params = ModelParams.from_dict({"d": 1, "tau": "inf", "alpha": "inf"})
    assert math.isinf(params.tau)
    assert params.profile == "threshold"
    params2 = ModelParams.from_dict({"profile": "threshold"})
    assert math.isinf(params2.alpha)


def test_params_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        ModelParams.from_dict({"d": 1, "taau": 2.5})


def test_effective_sigma_zero_for_sum_kernel():
    params = ModelParams(kernel="sum", sigma=3.0)
    assert params.effective_sigma == 0.0
    assert ModelParams(sigma=3.0).effective_sigma == 3.0


def test_marked_vertex_validation():
    with pytest.raises(ValueError):
        MarkedVertex(position=(0.0,), mark=0.5)
    with pytest.raises(ValueError):
        MarkedVertex(position=(math.inf,), mark=2.0)
    v = MarkedVertex(position=(1, 2), mark=1.0)
    assert v.position == (1.0, 2.0)


def test_pareto_quantile_inverts_tail():
    # P(W >= w) = w^-(tau-1): the u-quantile has tail probability 1-u.
    tau = 2.5
    for u in (0.0, 0.3, 0.9, 0.999):
        w = float(pareto_quantile(u, tau))
        assert w >= 1.0
        assert w ** -(tau - 1.0) == pytest.approx(1.0 - u, rel=1e-12)
    assert float(pareto_quantile(0.5, tau)) == pytest.approx(pareto_median(tau))


def test_pareto_constant_marks():
    assert float(pareto_quantile(0.97, math.inf)) == 1.0
    assert pareto_median(math.inf) == 1.0
    assert pareto_mean(math.inf) == 1.0


def test_pareto_median_formula():
    assert pareto_median(3.0) == pytest.approx(math.sqrt(2.0))
    assert pareto_mean(3.0) == pytest.approx(2.0)


def test_box_geometry():
    assert box_side(16.0, 2) == 4.0
    pts = np.array([[0.0, 0.0], [2.0, 0.0], [2.1, 0.0], [-2.0, -2.0]])
    inside = box_contains(pts, 16.0, 2)
    assert inside.tolist() == [True, True, False, True]
