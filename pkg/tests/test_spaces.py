import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rankone import algebra as alg
from rankone import spaces as sp

from .conftest import SPACES

CH2 = sp.get_space("CH2")
OH2 = sp.get_space("OH2")


def tangents(space, radius=3.0):
    return arrays(np.float64, space.dim, elements=st.floats(-1, 1)).map(
        lambda v: v * (radius / max(1.0, np.linalg.norm(v) * np.sqrt(space.dim))))


def test_space_parsing_and_dimensions():
    for name, (d, dim, ent) in {"CH2": (2, 4, 4), "CH3": (2, 6, 6), "HH2": (4, 8, 10), "OH2": (8, 16, 22)}.items():
        s = sp.get_space(name)
        assert (s.d, s.dim, s.entropy, s.weight_exponent) == (d, dim, ent, dim + d)
    with pytest.raises(ValueError):
        sp.get_space("OH3")
    with pytest.raises(ValueError):
        sp.get_space("RH2")
    with pytest.raises(ValueError):
        sp.get_space("nonsense")


@pytest.mark.parametrize("name", SPACES)
def test_base_point_and_normalization(name, rng):
    space = sp.get_space(name)
    x0 = sp.Point.base(space)
    assert np.allclose(x0.log0, 0)
    for _ in range(5):
        x = sp.random_point(space, rng, 3.0)
        assert x.normalization_residual() < 1e-10 * np.cosh(3.0) ** 2
        assert abs(sp.distance(x0, x) - np.linalg.norm(x.log0)) < 1e-10


@pytest.mark.parametrize("name", SPACES)
def test_distance_routes_agree(name, rng):
    space = sp.get_space(name)
    for _ in range(20):
        x, y = sp.random_point(space, rng, 2.5), sp.random_point(space, rng, 2.5)
        assert abs(sp.distance(x, y) - sp.distance_trace(x, y)) < 1e-9


@pytest.mark.parametrize("name", ["CH2", "CH3", "HH2"])
def test_projective_distance(name, rng):
    space = sp.get_space(name)
    for _ in range(10):
        x, y = sp.random_point(space, rng, 2.0), sp.random_point(space, rng, 2.0)
        assert abs(sp.distance_projective(x, y) - sp.distance(x, y)) < 1e-8


def test_projective_normalization_is_scale_free(rng):
    x = sp.random_point(CH2, rng, 1.5)
    lam = np.array([0.3, -1.1])
    u = alg.mul(x.payload, lam) * 2.7
    y = sp.Point.from_projective(CH2, u)
    assert sp.distance(x, y) < 1e-7
    with pytest.raises(ValueError):
        sp.Point.from_projective(CH2, np.array([[0.1, 0], [1, 0], [0, 0]]))


def test_vector_model_round_trip_and_distance(rng):
    for _ in range(20):
        x = sp.random_point(OH2, rng, 2.0)
        theta, a, b = x.payload[0, 0], x.payload[1], x.payload[2]
        y = sp.Point.from_vector_model(theta, a, b)
        assert np.allclose(y.payload, x.payload, atol=1e-12)
        z = sp.random_point(OH2, rng, 2.0)
        assert abs(sp.distance_vector_model(x, z) - sp.distance_trace(x, z)) < 1e-10
    with pytest.raises(ValueError):
        sp.Point.from_vector_model(1.0, np.ones(8), np.zeros(8))


@pytest.mark.parametrize("name", SPACES)
def test_exp_log_round_trip(name, rng):
    space = sp.get_space(name)
    for _ in range(10):
        x = sp.random_point(space, rng, 2.0)
        w = sp.random_unit(space, rng) * rng.uniform(0, 3)
        y = sp.exp_point(x, w)
        assert np.allclose(sp.log(x, y), w, atol=1e-9)
        assert abs(sp.distance(x, y) - np.linalg.norm(w)) < 1e-9


@given(tangents(CH2), tangents(CH2), tangents(CH2))
def test_triangle_inequality_and_symmetry(u, v, w):
    x, y, z = (sp.Point.from_tangent(CH2, t) for t in (u, v, w))
    dxy, dyz, dxz = sp.distance(x, y), sp.distance(y, z), sp.distance(x, z)
    assert abs(dxy - sp.distance(y, x)) < 1e-10
    assert dxz <= dxy + dyz + 1e-9


@given(tangents(OH2, 2.0), tangents(OH2, 2.0))
def test_distance_routes_agree_property(u, v):
    x, y = sp.Point.from_tangent(OH2, u), sp.Point.from_tangent(OH2, v)
    assert abs(sp.distance(x, y) - sp.distance_trace(x, y)) < 1e-8


def test_distance_near_diagonal_is_accurate(rng):
    # two points 1e-6 apart at r = 3: the J-vector pairing loses exp(4r) eps here, the payload form does not
    x = sp.random_point(OH2, rng, 1.0)
    x = sp.Point.from_tangent(OH2, x.log0 / np.linalg.norm(x.log0) * 3.0)
    v = sp.random_unit(OH2, rng)
    y = sp.exp_point(x, 1e-6 * v)
    assert abs(sp.distance(x, y) - 1e-6) < 1e-12


def test_geodesic_requires_unit_vector():
    x0 = sp.Point.base(CH2)
    with pytest.raises(ValueError):
        sp.geodesic(x0, np.ones(4), 1.0)
    g = sp.geodesic(x0, np.array([1.0, 0, 0, 0]), 2.0)
    assert abs(sp.distance(x0, g) - 2.0) < 1e-12


def test_points_of_different_spaces_rejected(rng):
    with pytest.raises(ValueError):
        sp.distance(sp.Point.base(CH2), sp.Point.base(OH2))


@pytest.mark.parametrize("name", SPACES)
def test_ideal_quadratic_matches_direct_construction(name, rng):
    space = sp.get_space(name)
    s = sp.random_unit(space, rng, 7)
    direct = sp.model(space).from_payload(sp.ideal_payload(space, s))
    assert np.allclose(sp.ideal_jvec(space, s), direct, atol=1e-13)
    X = sp.random_point(space, rng, 1.0).jvec
    assert np.allclose(sp.ideal_pairing(space, X, s), sp.model(space).pairing(X, direct), atol=1e-12)


@pytest.mark.parametrize("name", SPACES)
def test_curvature_pinching(name, rng):
    space = sp.get_space(name)
    x = sp.random_point(space, rng, 1.0)
    for _ in range(20):
        v, w = sp.random_unit(space, rng, 2)
        K = sp.sectional_curvature_probe(x, v, w)
        assert -4.05 <= K <= -0.95
    x0 = sp.Point.base(space)
    v, w = sp.random_unit(space, rng, 2)
    assert abs(sp.sectional_curvature_probe(x0, v, w) - sp.curvature_exact(space, v, w)) < 0.05


def test_curvature_extremes_ch2():
    x0 = sp.Point.base(CH2)
    v = np.array([1.0, 0, 0, 0])
    Jv = sp.J_structure(CH2, 1, v)
    assert abs(sp.sectional_curvature_probe(x0, v, Jv) + 4) < 0.05
    # q(v, w) real: curvature -1
    w = np.array([0, 0, 1.0, 0])
    assert abs(sp.sectional_curvature_probe(x0, v, w) + 1) < 0.05


def test_curvature_extremes_oh2():
    x0 = sp.Point.base(OH2)
    v = np.zeros(16)
    v[0] = 1.0
    same_line = np.zeros(16)
    same_line[3] = 1.0
    assert abs(sp.sectional_curvature_probe(x0, v, same_line) + 4) < 0.05
    other = np.zeros(16)
    other[8] = 1.0
    assert abs(sp.sectional_curvature_probe(x0, v, other) + 1) < 0.05


def test_hinges():
    x0 = sp.Point.base(CH2)
    v = np.array([1.0, 0, 0, 0])
    Jv = sp.J_structure(CH2, 1, v)
    a, b, c = 0.7, 1.2, 0.3
    p = sp.exp_point(x0, a * v)
    q = sp.exp_point(x0, b * (c * v + np.sqrt(1 - c * c) * Jv))
    assert abs(sp.distance(p, q) - sp.hinge_same_line(a, b, c)) < 1e-10
    w = np.array([0, 0, 1.0, 0])
    q = sp.exp_point(x0, b * w)
    assert abs(sp.distance(p, q) - sp.hinge_orthogonal(a, b)) < 1e-10


@pytest.mark.parametrize("route", ["left-inverse", "conjugate-rotation"])
def test_cayley_line_bases_are_orthonormal_and_agree(route, rng):
    v = sp.random_unit(OH2, rng, 5)
    B = sp.line_basis(OH2, v, route)
    assert np.allclose(np.swapaxes(B, -1, -2) @ B, np.eye(8), atol=1e-12)
    P1 = sp.line_projector(OH2, v, "left-inverse")
    P2 = sp.line_projector(OH2, v, "conjugate-rotation")
    assert np.allclose(P1, P2, atol=1e-12)
    # v lies on its own line
    assert np.allclose(np.einsum("jab,jb->ja", P1, v), v, atol=1e-12)


def test_weighted_projector_sum(rng):
    v = sp.random_unit(OH2, rng, 9)
    w = rng.uniform(0, 1, 9)
    ref = np.tensordot(w, sp.line_projector(OH2, v), axes=1)
    assert np.allclose(sp.weighted_projector_sum(OH2, v, w), ref, atol=1e-13)


def test_rotation_to_first_factor(rng):
    v = sp.random_unit(OH2, rng)
    Rm = sp.rotation_to_first_factor(v)
    assert np.allclose(Rm.T @ Rm, np.eye(16), atol=1e-12)
    assert np.linalg.norm((Rm @ v)[8:]) < 1e-12


def test_j_structure_is_complex_structure():
    v = np.arange(1.0, 5.0)
    J2 = sp.J_structure(CH2, 1, sp.J_structure(CH2, 1, v))
    assert np.allclose(J2, -v)
    with pytest.raises(ValueError):
        sp.J_structure(OH2, 1, np.ones(16))
    with pytest.raises(ValueError):
        sp.cayley_line_projection(CH2, v, v)
    with pytest.raises(ValueError):
        sp.line_projection(CH2, np.zeros(4), v)
