import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankone import busemann as bm
from rankone import operators as op
from rankone import projection as pr
from rankone import quadrature as qd
from rankone import spaces as sp

from .conftest import SPACES, samples

CH2 = sp.get_space("CH2")


@lru_cache(maxsize=None)
def solver(name):
    return pr.ProjectionSolver(sp.get_space(name), samples(name))


@lru_cache(maxsize=None)
def random_case(name, seed=0):
    space = sp.get_space(name)
    phi, y = pr.random_phi(space, np.random.default_rng(seed))
    return phi, solver(name).project(phi, start=y).x


@lru_cache(maxsize=None)
def case_with_height(name, seed=0):
    rng = np.random.default_rng(seed)
    target = float(rng.uniform(0.05, 0.5))
    phi, x = pr.phi_with_height(sp.get_space(name), rng, solver(name), target)
    return phi, x, target


# ---------------------------------------------------------------- solver contract


@pytest.mark.parametrize("name", SPACES)
def test_projection_of_embedded_points(name, rng):
    space = sp.get_space(name)
    for _ in range(3):
        y = sp.random_point(space, rng, 1.5)
        r = solver(name).project(qd.embedding_field(y))
        assert sp.distance(r.x, y) < 1e-8
        assert r.iterations <= 20
        assert r.residual <= solver(name).tol


@given(seed=st.integers(0, 2**31 - 1))
def test_projection_of_embedded_points_property(seed):
    y = sp.random_point(CH2, np.random.default_rng(seed), 1.8)
    assert sp.distance(solver("CH2")(qd.embedding_field(y)), y) < 1e-8


@given(seed=st.integers(0, 2**31 - 1), shift=st.floats(-0.15, 0.15))
def test_constants_do_not_move_the_projection(seed, shift):
    phi, x = random_case("CH2", 3)
    assert sp.distance(solver("CH2").project(phi + shift, start=x).x, x) < 1e-8


@pytest.mark.parametrize("name", ["CH2", "HH2"])
def test_newton_residual_and_uniqueness(name):
    phi, x = random_case(name)
    omega, _ = pr.normalized_omega(phi, x, samples(name))
    assert np.linalg.norm(omega) < 1e-8
    _, spread = solver(name).multistart(phi, seeds=4, radius=1.5)
    assert spread < 1e-6


def test_ball_and_iteration_guards():
    with pytest.raises(ValueError):
        solver("CH2").project(qd.constant_field(2.5))
    strict = pr.ProjectionSolver(CH2, samples("CH2"), max_iter=1)
    phi, _ = random_case("CH2")
    with pytest.raises(pr.ConvergenceError) as info:
        strict.project(phi)
    assert info.value.iterations == 1 and info.value.residual > 0


def test_idempotence(space):
    phi, x = random_case(space.name)
    assert sp.distance(solver(space.name)(qd.embedding_field(x), start=x), x) < 1e-8


# ---------------------------------------------------------------- derivative


@pytest.mark.parametrize("name", ["CH2", "HH2", "OH2"])
def test_derivative_identity(name, rng):
    phi, x = random_case(name)
    assert pr.derivative_check(phi, solver(name), directions=4, rng=rng, x=x) < 1e-4


def test_discrete_solver_follows_the_derivative(rng):
    # the full solver also rotates its nodes; that adds a first-order term bounded by the quadrature error
    phi, _ = random_case("CH2")
    assert pr.discrete_derivative_gap(phi, solver("CH2"), directions=2, rng=rng) < 0.1


def test_embedded_point_properties(rng):
    y = sp.random_point(CH2, rng, 1.0)
    base = qd.embedding_field(y)
    bundle = op.assemble_bundle(base, y, samples("CH2"))
    Y = pr.orthogonal_field(y, samples("CH2"), rng)
    assert np.linalg.norm(bundle.AinvE() @ Y(bundle.metric.boundary)) < 1e-8
    v = sp.random_unit(CH2, rng)
    assert np.linalg.norm(bundle.AinvE() @ (bundle.directions @ v) - v) < 1e-8
    assert pr.critical_point_check(y, solver("CH2"), rng) < 1e-3


# ---------------------------------------------------------------- interpolation family


def test_interpolation_endpoints(space, rng):
    phi, x = random_case(space.name)
    s = samples(space.name).nodes[:64]
    assert np.allclose(pr.interpolation_family(phi, x, 0.0)(s), bm.busemann(s, x), atol=1e-14)
    assert np.allclose(pr.interpolation_family(phi, x, 1.0)(s), phi(s), atol=1e-12)


@pytest.mark.parametrize("t", [0.25, 0.5, 0.9])
def test_interpolation_invariance(t):
    phi, x = random_case("HH2")
    xt = solver("HH2").project(pr.interpolation_family(phi, x, t), start=x).x
    assert sp.distance(xt, x) < 1e-7


def test_interpolation_domain_violation():
    phi, x = random_case("CH2")
    with pytest.raises(ValueError):
        pr.interpolation_family(phi, x, -50.0)(samples("CH2").nodes)


def test_unit_mass_gauge_leaves_projection_fixed():
    phi, x = random_case("CH2")
    gauged = pr.unit_mass_gauge(phi, x, samples("CH2"))
    metric = qd.MetricAtPhi(gauged, x, samples("CH2"))
    assert abs(metric.log_rho_scale) < 1e-12
    assert sp.distance(solver("CH2").project(gauged, start=x).x, x) < 1e-8


@pytest.mark.parametrize("name", SPACES)
def test_det_critical(name):
    phi, x = random_case(name)
    dA, dAh = pr.det_critical_check(phi, x, samples(name))
    assert abs(dA) <= 1e-3 and abs(dAh) <= 1e-3
    assert max(map(abs, pr.det_critical_analytic(phi, x, samples(name)))) <= 1e-10


def test_det_critical_constant_family(rng):
    y = sp.random_point(CH2, rng, 1.0)
    dA, dAh = pr.det_critical_check(qd.embedding_field(y), y, samples("CH2"))
    assert abs(dA) < 1e-12 and abs(dAh) < 1e-12


# ---------------------------------------------------------------- height


def test_height_zero_on_embedded_image(space, rng):
    y = sp.random_point(space, rng, 1.0)
    assert pr.height(qd.embedding_field(y), y, samples(space.name)) < 1e-8


def test_height_increases_with_bump_size(rng):
    y = sp.random_point(CH2, rng, 1.0)
    base = qd.embedding_field(y)
    pert = qd.bump_field(sp.random_unit(CH2, rng), 4.0)
    hs = []
    for kappa in (0.01, 0.02, 0.04):
        phi = base + kappa * pert
        hs.append(pr.height(phi, solver("CH2").project(phi, start=y).x, samples("CH2")))
    assert hs[0] > 0 and np.all(np.diff(hs) > 0)


@settings(max_examples=10)
@given(seed=st.integers(0, 2**31 - 1))
def test_height_lipschitz_bound(seed):
    S = samples("CH2")
    phi, x = random_case("CH2")
    pert = qd.random_smooth_field(CH2, np.random.default_rng(seed), amplitude=0.05)
    psi = phi + pert
    xp = solver("CH2").project(psi, start=x).x
    s = S.nodes
    l2 = lambda v: math.sqrt(S.weights @ v**2)
    rhs = l2(pert(s)) + l2(bm.busemann(s, x) - bm.busemann(s, xp))
    assert abs(pr.height(phi, x, S) - pr.height(psi, xp, S)) <= rhs + 1e-12


def test_height_accepts_node_values():
    phi, x = random_case("CH2")
    S = samples("CH2")
    assert pr.height(phi(S.nodes), x, S) == pr.height(phi, x, S)


@pytest.mark.parametrize("name", ["CH2", "HH2"])
def test_phi_with_height_hits_target(name):
    phi, x, target = case_with_height(name)
    assert abs(pr.height(phi, x, samples(name)) - target) <= 0.1 * target
    assert pr.sup_on_nodes(phi, samples(name)) <= 2.0


def test_height_differential_matches_finite_differences(rng):
    phi, x, _ = case_with_height("CH2")
    bundle = op.assemble_bundle(phi, x, samples("CH2"))
    h = pr.pullback_height(bundle, bundle.metric.phi_values)
    assert pr.height_differential_fd_gap(bundle, phi, samples("CH2"), h, rng=rng) < 1e-5


# ---------------------------------------------------------------- compression


def test_compression_config_validation():
    with pytest.raises(ValueError):
        pr.CompressionConfig(sigma=0.0)
    cfg = pr.CompressionConfig(0.1)
    assert abs(cfg.c - 0.1**3 / 3) < 1e-18
    assert abs(cfg.radius_limit - 4 / math.sqrt(0.1)) < 1e-12


def test_homothety_fixes_base_point_and_identity(space, rng):
    cfg = pr.CompressionConfig(0.1)
    p = sp.random_point(space, rng, 2.0)
    assert sp.distance(pr.compress(p, 0.0, cfg), p) < 1e-12
    assert np.linalg.norm(pr.compress(sp.Point.base(space), 0.7, cfg).log0) < 1e-15
    far = sp.Point.from_tangent(space, sp.random_unit(space, rng) * 13.0)
    with pytest.raises(ValueError):
        pr.compress(far, 0.1, cfg)


@pytest.mark.parametrize("name", SPACES)
def test_compression_jacobian_routes(name, rng):
    space = sp.get_space(name)
    cfg = pr.CompressionConfig(0.1)
    for _ in range(3):
        p = sp.random_point(space, rng, 3.0)
        h = float(rng.uniform(0, 1))
        tau, _ = cfg.scale(h)
        fd = pr.compression_jacobian_fd(p, h, cfg)
        assert fd - tau <= 1e-3
        assert abs(fd - pr.compression_jacobian(p, h, cfg)) < 1e-5


def test_homothety_differential_against_finite_differences(rng):
    p = sp.random_point(CH2, rng, 1.5)
    tau = 0.8
    D, _, _ = pr.homothety_differential(p, tau)
    q = pr.homothety(p, tau)
    eps = 1e-6
    for i in range(4):
        e = np.zeros(4)
        e[i] = eps
        col = (sp.log(q, pr.homothety(sp.exp_point(p, e), tau))
               - sp.log(q, pr.homothety(sp.exp_point(p, -e), tau))) / (2 * eps)
        assert np.allclose(col, D[:, i], atol=1e-7)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_certificate_holds_in_ch2(seed, rng):
    phi, x, _ = case_with_height("CH2", seed)
    cfg = pr.CompressionConfig(0.1)
    cert = pr.certified_projection(phi, solver("CH2"), cfg, x=x, check_dh=True, rng=rng)
    assert cert.jacobian <= cert.bound + 1e-2
    assert cert.dh_fd_gap < 1e-5
    d = cert.as_dict()
    assert d["margin"] == cert.bound - cert.jacobian and d["radius"] >= 0


def test_certificate_at_embedded_point(rng):
    y = sp.random_point(CH2, rng, 1.0)
    cert = pr.certified_projection(qd.embedding_field(y), solver("CH2"), pr.CompressionConfig(0.1), x=y)
    assert cert.height < 1e-8 and cert.bound == pytest.approx(1.0)
    assert abs(cert.jacobian - 1.0) < 5e-3


def test_volume_sanity(rng):
    img, src = pr.volume_sanity(solver("CH2"), pr.CompressionConfig(0.1), rng)
    assert img / src <= 1.02
