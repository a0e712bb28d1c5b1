import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankone import busemann as bm
from rankone import operators as op
from rankone import quadrature as qd
from rankone import spaces as sp

from .conftest import SPACES, samples


def _seeds():
    return st.integers(0, 2**31 - 1)


def test_zero_at_base_point(space, rng):
    s = sp.random_unit(space, rng, 50)
    assert np.max(np.abs(bm.busemann(s, sp.Point.base(space)))) < 1e-15


@pytest.mark.parametrize("t", [1.0, 2.5])
def test_ray_toward_boundary_point(space, rng, t):
    s = sp.random_unit(space, rng)
    assert abs(float(bm.busemann(s, sp.Point.from_tangent(space, -t * s))) + t) < 1e-10


def test_gradient_at_base_point_is_direction(space, rng):
    s = sp.random_unit(space, rng)
    assert np.allclose(bm.busemann_gradient(s, sp.Point.base(space)), s, atol=1e-13)


def test_gradient_along_ray(space, rng):
    # Phi_s decreases toward s, so the gradient points back along the ray
    s = sp.random_unit(space, rng)
    x = sp.Point.from_tangent(space, -1.5 * s)
    velocity = sp.log(x, sp.Point.from_tangent(space, -2.5 * s))
    assert np.allclose(bm.busemann_gradient(s, x), -velocity, atol=1e-9)


@pytest.mark.parametrize("name", SPACES)
def test_large_t_oracle(name, rng):
    space = sp.get_space(name)
    for _ in range(10):
        x, s = sp.random_point(space, rng, 2.0), sp.random_unit(space, rng)
        assert abs(float(bm.busemann(s, x)) - bm.busemann_large_t(s, x)) < 1e-8


@pytest.mark.parametrize("name", SPACES)
def test_horosphere_oracle(name, rng):
    space = sp.get_space(name)
    for _ in range(5):
        x, s = sp.random_point(space, rng, 2.0), sp.random_unit(space, rng)
        assert abs(float(bm.busemann(s, x)) - bm.busemann_horosphere(s, x)) < 1e-6


@pytest.mark.parametrize("name", SPACES)
@given(seed=_seeds())
def test_one_lipschitz(name, seed):
    space = sp.get_space(name)
    rng = np.random.default_rng(seed)
    x, y = sp.random_point(space, rng, 3.0), sp.random_point(space, rng, 3.0)
    s = sp.random_unit(space, rng, 20)
    assert np.max(np.abs(bm.busemann(s, x) - bm.busemann(s, y))) <= sp.distance(x, y) + 1e-12


@pytest.mark.parametrize("name", SPACES)
@given(seed=_seeds())
def test_gradient_is_unit_and_matches_finite_differences(name, seed):
    space = sp.get_space(name)
    rng = np.random.default_rng(seed)
    x, s = sp.random_point(space, rng, 2.0), sp.random_unit(space, rng)
    g = bm.busemann_gradient(s, x)
    fd = bm.fd_gradient(s, x)
    assert abs(np.linalg.norm(g) - 1.0) < 1e-12
    assert abs(np.linalg.norm(fd) - 1.0) < 1e-8
    v = sp.random_unit(space, rng)
    assert abs(fd @ v - g @ v) < 1e-6


def test_gradient_endpoint_is_the_boundary_point(space, rng):
    x, s = sp.random_point(space, rng, 1.0), sp.random_unit(space, rng)
    assert np.allclose(sp.boundary_endpoint(x, bm.busemann_gradient(s, x)), s, atol=1e-12)


@pytest.mark.parametrize("name", SPACES)
def test_hessian_identity(name, rng):
    space = sp.get_space(name)
    for _ in range(3):
        x, s = sp.random_point(space, rng, 1.5), sp.random_unit(space, rng)
        assert bm.hessian_check(s, x) <= 1e-4


def test_hessian_on_ray_and_at_base_point(space, rng):
    s = sp.random_unit(space, rng)
    assert bm.hessian_check(s, sp.Point.from_tangent(space, -0.8 * s)) <= 1e-4
    assert bm.hessian_check(s, sp.Point.base(space)) <= 1e-4


def test_hessian_exceeds_scaled_metric(space, rng):
    x, s = sp.random_point(space, rng, 1.0), sp.random_unit(space, rng)
    H = bm.fd_hessian_busemann(s, x)
    gap = H - math.exp(2 * float(bm.busemann(s, x))) * np.eye(space.dim)
    assert np.linalg.eigvalsh(gap)[0] >= -1e-4


def test_trace_identity(space, rng):
    x0 = sp.Point.base(space)
    for s in sp.random_unit(space, rng, 5):
        assert abs(np.trace(op.assemble_Axs(x0, s)) - space.weight_exponent) < 1e-12


def test_gradient_flow_raises_value_by_time(space, rng):
    x, s = sp.random_point(space, rng, 1.0), sp.random_unit(space, rng)
    y = bm.gradient_flow(s, x, 0.7)
    assert abs(float(bm.busemann(s, y) - bm.busemann(s, x)) - 0.7) < 1e-6


def test_visual_density_values(space, rng):
    s = sp.random_unit(space, rng)
    assert abs(float(bm.visual_density(sp.Point.base(space), s)) - 1.0) < 1e-15
    x1 = sp.Point.from_tangent(space, -s)
    assert abs(float(bm.visual_density(x1, s)) / math.exp(space.entropy) - 1.0) < 1e-12


def test_pushforward_identity_pointwise(space, rng):
    for _ in range(5):
        x, v = sp.random_point(space, rng, 1.0), sp.random_unit(space, rng)
        assert bm.pushforward_residual(x, v) < 1e-6


@pytest.mark.parametrize("name", SPACES)
def test_density_quadrature_near_base_point(name, rng):
    space = sp.get_space(name)
    S = samples(name)
    for _ in range(5):
        x = sp.random_point(space, rng, 0.3)
        assert abs(qd.integrate_density_form(qd.constant_field(1.0), x, S) - 1.0) < 0.02


@pytest.mark.xfail(strict=True, reason="importance weights exp(-delta Phi) have variance ~exp(delta r); "
                                       "2% at r = 1 needs far more than the default budget")
@pytest.mark.parametrize("name", ["HH2", "OH2"])
def test_density_quadrature_on_unit_ball(name, rng):
    space = sp.get_space(name)
    S = samples(name)
    worst = max(abs(qd.integrate_density_form(qd.constant_field(1.0), sp.random_point(space, rng, 1.0), S) - 1.0)
                for _ in range(10))
    assert worst < 0.02


def test_embedding_of_base_point_is_zero(space):
    assert np.max(np.abs(bm.embed(sp.Point.base(space), samples(space.name)))) == 0.0


def test_embedding_values_bounded_by_distance(space, rng):
    x = sp.random_point(space, rng, 2.0)
    assert np.max(np.abs(bm.embed(x, samples(space.name)))) <= np.linalg.norm(x.log0) + 1e-12


def test_embedding_sup_distance_from_below_and_attained(space, rng):
    S = samples(space.name)
    for _ in range(5):
        x, y = sp.random_point(space, rng, 2.0), sp.random_point(space, rng, 2.0)
        sup, d = bm.embedding_gap(x, y, S)
        assert sup <= d + 1e-12
        w = bm.sup_witness(x, y)
        assert abs(float(bm.busemann(w, y) - bm.busemann(w, x)) - d) < 1e-9
    with pytest.raises(ValueError):
        bm.sup_witness(x, x)


@pytest.mark.xfail(strict=True, reason="the sup is attained on a set of measure zero; at dn >= 8 random "
                                       "nodes sit far from it and the gap exceeds 2%")
@pytest.mark.parametrize("name", ["HH2", "OH2"])
def test_embedding_node_gap_two_percent(name, rng):
    space = sp.get_space(name)
    S = samples(name)
    for _ in range(10):
        x, y = sp.random_point(space, rng, 2.0), sp.random_point(space, rng, 2.0)
        sup, d = bm.embedding_gap(x, y, S)
        assert (d - sup) / d <= 0.02


def test_busemann_requires_point(space, rng):
    with pytest.raises(TypeError):
        bm.busemann(sp.random_unit(space, rng), np.zeros(space.dim))
