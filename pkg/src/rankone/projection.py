"""Barycenter projection, its derivative, the height, and the compressed projection.

The discrete projection solves sum_j w_j rho_j v_j = 0 over the pullback nodes
of x, so P(Phi(x)) = x holds exactly for antithetic sample sets. Its node set
rotates with the frame at x; the derivative identity is therefore certified on
the frozen-node problem at x = P(phi), whose exact derivative is A^{-1} E.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import busemann as bm
from . import operators as op
from . import quadrature as qd
from . import spaces as sp


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class ProjectionResult:
    x: sp.Point
    iterations: int
    residual: float
    history: list = field(default_factory=list)


def normalized_omega(phi, x, samples):
    """sum_j w_j rho_bar_j v_j in the frame at x, plus the metric it came from."""
    metric = qd.MetricAtPhi(phi, x, samples)
    return (samples.weights * metric.rho_bar) @ samples.nodes, metric


def _newton_matrix(metric, samples):
    P = samples.line_projectors()
    wr = samples.weights * metric.rho_bar
    return np.eye(samples.space.dim) + np.tensordot(wr, P, axes=1)


def _frozen_merit(phi, metric):
    """y -> log sum_j w_j exp(delta Phi_j(x) + 2 Phi_j(y) - k phi_j) over the pullback nodes of x."""
    space = metric.x.space
    s = metric.boundary
    logc = (np.log(metric.samples.weights) + space.entropy * metric.busemann_values
            - space.weight_exponent * metric.phi_values)

    def merit(y):
        z = logc + 2.0 * bm.busemann(s, y)
        top = z.max()
        return float(top + np.log(np.exp(z - top).sum()))

    return merit


def sup_on_nodes(phi, samples):
    return float(np.max(np.abs(phi(samples.nodes))))


@dataclass
class ProjectionSolver:
    space: sp.SpaceDescriptor
    samples: qd.BoundarySampleSet
    tol: float = 1e-10
    # a stalled line search below this residual is roundoff in omega, not failure
    stall_tol: float = 1e-8
    max_iter: int = 60  # rate is only linear when rho concentrates on few nodes
    trust_radius: float = 1.0
    R: float = 2.0
    check_ball: bool = True

    def project(self, phi, start=None):
        if self.check_ball and sup_on_nodes(phi, self.samples) > self.R + 1e-12:
            raise ValueError(f"phi leaves the ball of radius {self.R}")
        x = sp.Point.base(self.space) if start is None else start
        omega, metric = normalized_omega(phi, x, self.samples)
        res = float(np.linalg.norm(omega))
        history = [res]
        it = 0
        while res > self.tol:
            if it >= self.max_iter:
                raise ConvergenceError("projection did not converge", res, it)
            A = _newton_matrix(metric, self.samples)
            if np.linalg.eigvalsh(A)[0] < 0.5:
                raise ConvergenceError("Newton matrix lost definiteness", res, it)
            step = -np.linalg.solve(A, omega)
            ns = np.linalg.norm(step)
            if ns > self.trust_radius:
                step *= self.trust_radius / ns
            # merit: log of the convex potential with nodes frozen at x; its gradient is 2 omega
            merit = _frozen_merit(phi, metric)
            f0 = merit(x)
            slope = 2.0 * float(omega @ step)
            slack = 64 * np.finfo(float).eps * (1.0 + abs(f0))  # decrease ~ res^2 is below roundoff near the solution
            alpha = 1.0
            for _ in range(40):
                y = sp.exp_point(x, alpha * step)
                if merit(y) <= f0 + 1e-4 * alpha * slope + slack:
                    break
                alpha *= 0.5
            else:
                if res <= self.stall_tol:
                    break
                raise ConvergenceError("line search failed", res, it)
            om_y, met_y = normalized_omega(phi, y, self.samples)
            r_y = float(np.linalg.norm(om_y))
            x, omega, metric, res = y, om_y, met_y, r_y
            history.append(res)
            it += 1
        return ProjectionResult(x, it, res, history)

    def __call__(self, phi, start=None):
        return self.project(phi, start).x

    def multistart(self, phi, seeds=5, radius=2.0, rng=None):
        """Solve from random starts; returns (points, max pairwise distance)."""
        rng = np.random.default_rng(0) if rng is None else rng
        pts = [self.project(phi, sp.random_point(self.space, rng, radius)).x for _ in range(seeds)]
        spread = max(sp.distance(a, b) for a in pts for b in pts)
        return pts, spread


# ---------------------------------------------------------------- frozen-node problem


class FrozenProblem:
    """Convex surrogate with the nodes fixed at alpha_{x*}(v_j).

    Minimizes F(y) = sum_j c_j exp(2 Phi_j(y) - k psi_j) / 2 with
    c_j = w_j exp(delta Phi_j(x*)); at psi = phi its minimizer is x* and its
    derivative in psi is exactly A^{-1} E of the bundle at (phi, x*).
    """

    def __init__(self, x_star, samples):
        self.x_star = x_star
        self.samples = samples
        self.space = x_star.space
        s, lam = samples.pullback(x_star)
        self.nodes = s
        self.ideal = sp.ideal_jvec(self.space, s)
        self.base = samples.weights * np.exp(self.space.entropy * (-0.5 * np.log(lam)))

    def _terms(self, y, psi_vals):
        phi_y = bm.busemann(self.nodes, y)
        logc = 2.0 * phi_y - self.space.weight_exponent * psi_vals
        shift = logc.max()
        c = self.base * np.exp(logc - shift)
        grads = bm.busemann_gradient(self.nodes, y, ideal=self.ideal)
        return c, grads

    def solve(self, psi_vals, start=None, tol=1e-14, max_iter=50):
        y = self.x_star if start is None else start
        dim = self.space.dim
        for _ in range(max_iter):
            c, G = self._terms(y, psi_vals)
            g = c @ G / c.sum()
            if np.linalg.norm(g) < tol:
                return y
            H = np.eye(dim) + sp.weighted_projector_sum(self.space, G, c / c.sum())
            y = sp.exp_point(y, -np.linalg.solve(H, g))
        raise ConvergenceError("frozen problem did not converge", float(np.linalg.norm(g)), max_iter)

    def height(self, psi_vals, y):
        diff = psi_vals - bm.busemann(self.nodes, y)
        return float(math.sqrt(diff @ (self.base * diff)))


def derivative_check(phi, solver, directions=10, h=1e-5, rng=None, x=None):
    """max over random unit fields X of |P(phi + hX) - P(phi) - h A^{-1}E X| / h (frozen-node route)."""
    rng = np.random.default_rng(0) if rng is None else rng
    x = solver(phi) if x is None else x
    bundle = op.assemble_bundle(phi, x, solver.samples)
    frozen = FrozenProblem(x, solver.samples)
    base = phi(frozen.nodes)
    y0 = frozen.solve(base)
    worst = 0.0
    for _ in range(directions):
        X = qd.random_smooth_field(solver.space, rng, amplitude=1.0)(frozen.nodes)
        X /= bundle.g_norm(X)
        yh = frozen.solve(base + h * X, start=y0)
        fd = sp.log(y0, yh)
        pred = h * (bundle.AinvE() @ X)
        worst = max(worst, float(np.linalg.norm(fd - pred)) / h)
    return worst


def discrete_derivative_gap(phi, solver, directions=3, h=1e-5, rng=None):
    """Same comparison through the full discrete solver; reports the node-rotation effect."""
    rng = np.random.default_rng(0) if rng is None else rng
    x = solver(phi)
    bundle = op.assemble_bundle(phi, x, solver.samples)
    worst = 0.0
    for _ in range(directions):
        X = qd.random_smooth_field(solver.space, rng, amplitude=1.0)
        scale = bundle.g_norm(X(bundle.metric.boundary))
        xh = solver.project(phi + (h / scale) * X, start=x).x
        pred = (h / scale) * (bundle.AinvE() @ X(bundle.metric.boundary))
        worst = max(worst, float(np.linalg.norm(sp.log(x, xh) - pred)) / h)
    return worst


# ---------------------------------------------------------------- interpolation and height


def interpolation_family(phi, x, t):
    """Field s -> Phi_s(x) - log(1 - t + t exp(k(Phi_s(x) - phi(s))))/k with k = dn+d."""
    k = x.space.weight_exponent

    def fn(s):
        b = bm.busemann(s, x)
        arg = 1.0 - t + t * np.exp(k * (b - phi(s)))
        if np.any(arg <= 0):
            raise ValueError("interpolation leaves the domain of the logarithm")
        return b - np.log(arg) / k

    return qd.Field(fn, f"interp(t={t:g})")


def unit_mass_gauge(phi, x, samples):
    """phi plus the constant that makes the integral of rho over mu_x equal 1; P is unchanged."""
    metric = qd.MetricAtPhi(phi, x, samples)
    return phi + metric.log_rho_scale / x.space.weight_exponent


def det_critical_check(phi, x, samples, h=1e-3):
    """Central differences at t = 0 of det A and det A_hat along the interpolation family.

    Evaluated in the unit-mass gauge, where the normalized weights are affine in t.
    Otherwise the family's Taylor radius is about 1/max(rho), which for k = 24 can
    be far below h and even leave the domain of the logarithm at t = -h.
    """
    phi = unit_mass_gauge(phi, x, samples)
    vals = {}
    for t in (h, -h):
        b = op.assemble_bundle(interpolation_family(phi, x, t), x, samples)
        vals[t] = (np.linalg.det(b.A), np.linalg.det(b.A_hat))
    dA = (vals[h][0] - vals[-h][0]) / (2 * h)
    dAh = (vals[h][1] - vals[-h][1]) / (2 * h)
    return float(dA), float(dAh)


def det_critical_analytic(phi, x, samples):
    """Exact t-derivative at t = 0 of det A along the interpolation family, on the same nodes.

    Same unit-mass gauge as the finite-difference route: the weights along the
    family are 1 - t + t*rho_bar, which move by rho_bar - 1.
    """
    metric = qd.MetricAtPhi(phi, x, samples)
    drift = samples.weights * (metric.rho_bar - 1.0)
    route = "left-inverse" if x.space.field == "O" else "conjugate-rotation"
    out = []
    for r in (route, "conjugate-rotation"):
        P = samples.line_projectors(r)
        A0 = np.eye(x.space.dim) + np.tensordot(samples.weights, P, axes=1)
        dA = np.tensordot(drift, P, axes=1)
        out.append(float(np.linalg.det(A0) * np.trace(np.linalg.solve(A0, dA))))
    return tuple(out)


def height(phi, x, samples):
    """L2 distance (reference measure) between phi and the embedded point x, on the reference nodes.

    Reweighting pullback nodes by exp(delta Phi) instead has variance growing like
    exp(delta r), which is useless in OH2 already at r near 1.
    """
    s = samples.nodes
    diff = (phi(s) if isinstance(phi, qd.Field) else np.asarray(phi, dtype=float)) - bm.busemann(s, x)
    return float(math.sqrt(samples.weights @ diff**2))


def pullback_height(bundle, phi_values):
    """Height on the pullback nodes of the bundle, the discretization the covector below differentiates."""
    diff = phi_values - bundle.metric.busemann_values
    return float(math.sqrt(diff @ (bundle.l2_weights() * diff)))


def height_differential(bundle, phi_values, h=None):
    """Node-value covector of dh: X -> <k, X - dPhi(A^{-1}E X)>_{L2}, k = (phi - Phi(x))/h.

    h defaults to the pullback height, which makes this the exact differential of it.
    """
    h = pullback_height(bundle, phi_values) if h is None else h
    k = (phi_values - bundle.metric.busemann_values) / h
    lk = bundle.l2_weights() * k
    return lk - bundle.AinvE().T @ (bundle.directions.T @ lk)


# ---------------------------------------------------------------- compression


@dataclass(frozen=True)
class CompressionConfig:
    sigma: float = 0.1
    R: float = 2.0
    contract: bool = True

    def __post_init__(self):
        if self.sigma <= 0 or self.R <= 0:
            raise ValueError("sigma and R must be positive")

    @property
    def c(self):
        return self.sigma ** 3 / 3.0

    @property
    def radius_limit(self):
        return 4.0 / math.sqrt(self.sigma)

    def scale(self, h):
        """Radial factor at height h; its derivative in h."""
        q = 1.0 + self.sigma * h * h
        if self.contract:
            return 1.0 / q, -2.0 * self.sigma * h / (q * q)
        return q, 2.0 * self.sigma * h


def homothety(p, t):
    """exp_{x0}(t log_{x0} p)."""
    return sp.Point.from_tangent(p.space, t * p.log0)


def compress(p, h, config):
    r = float(np.linalg.norm(p.log0))
    if r > config.radius_limit:
        raise ValueError(f"point at distance {r:.3g} exceeds 4/sqrt(sigma)")
    tau, _ = config.scale(h)
    return homothety(p, tau)


def _sinh_ratio(a, b):
    """sinh(a)/sinh(b), continuous at b = 0 with limit a/b."""
    if abs(b) < 1e-8:
        return a / b if b != 0 else 1.0
    return math.sinh(a) / math.sinh(b)


def homothety_differential(p, tau):
    """Differential of A_tau at p, in the frames at p and A_tau(p)."""
    space = p.space
    w = p.log0
    r = float(np.linalg.norm(w))
    dim = space.dim
    if r < 1e-12:
        return tau * np.eye(dim), np.zeros(dim), r
    u = w / r
    P_line = sp.line_projector(space, u)
    radial = np.outer(u, u)
    f_line = _sinh_ratio(2 * tau * r, 2 * r) if r > 0 else tau
    f_rest = _sinh_ratio(tau * r, r) if r > 0 else tau
    D = tau * radial + f_line * (P_line - radial) + f_rest * (np.eye(dim) - P_line)
    return D, u, r


def compression_jacobian(p, h, config):
    """Analytic dn-Jacobian of (p, h) -> Q_sigma(p, h), including the h column."""
    tau, dtau = config.scale(h)
    D, u, r = homothety_differential(p, tau)
    M = np.column_stack([D, r * dtau * u]) if r > 0 else np.column_stack([D, np.zeros(p.space.dim)])
    return float(math.sqrt(np.linalg.det(M @ M.T)))


def compression_jacobian_fd(p, h, config, eps=1e-6):
    dim = p.space.dim
    q0 = compress(p, h, config)
    cols = []
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = eps
        qp = compress(sp.exp_point(p, e), h, config)
        qm = compress(sp.exp_point(p, -e), h, config)
        cols.append((sp.log(q0, qp) - sp.log(q0, qm)) / (2 * eps))
    qp = compress(p, h + eps, config)
    qm = compress(p, h - eps, config)
    cols.append((sp.log(q0, qp) - sp.log(q0, qm)) / (2 * eps))
    M = np.column_stack(cols)
    return float(math.sqrt(np.linalg.det(M @ M.T)))


@dataclass
class ProjectionCertificate:
    point: sp.Point
    projection: sp.Point
    height: float
    jacobian: float
    bound: float
    tau: float
    dh_fd_gap: float | None = None

    @property
    def margin(self):
        return self.bound - self.jacobian

    def as_dict(self):
        return {"height": self.height, "jacobian": self.jacobian, "bound": self.bound,
                "margin": self.margin, "tau": self.tau, "dh_fd_gap": self.dh_fd_gap,
                "radius": float(np.linalg.norm(self.point.log0))}


def compressed_differential(bundle, phi_values, h, config):
    """Whitened dn x N derivative of phi -> Q_sigma(P(phi), sigma h(phi))."""
    x = bundle.metric.x
    sig = config.sigma
    tau, dtau = config.scale(sig * h)
    D, u, r = homothety_differential(x, tau)
    M = D @ bundle.AinvE_white()
    if h > 0:
        ell = height_differential(bundle, phi_values) / bundle.sqrt_g
        M = M + np.outer(r * dtau * sig * u, ell)
    return M, tau


def certified_projection(phi, solver, config, x=None, check_dh=False, rng=None):
    """P_sigma(phi) with the dn-Jacobian J of phi -> P_sigma(phi) and the bound 1 - c h^2."""
    x = solver(phi) if x is None else x
    bundle = op.assemble_bundle(phi, x, solver.samples)
    phi_vals = bundle.metric.phi_values
    h = height(phi, x, solver.samples)
    M, tau = compressed_differential(bundle, phi_vals, h, config)
    sv = np.linalg.svd(M, compute_uv=False)
    J = float(np.prod(sv))
    out = compress(x, config.sigma * h, config)
    cert = ProjectionCertificate(out, x, h, J, 1.0 - config.c * h * h, tau)
    if check_dh and h > 0:
        cert.dh_fd_gap = height_differential_fd_gap(bundle, phi, solver.samples, h, rng=rng)
    return cert


def height_differential_fd_gap(bundle, phi, samples, h, eps=1e-6, directions=3, rng=None):
    """Frozen-node finite differences of h against the analytic covector."""
    rng = np.random.default_rng(0) if rng is None else rng
    frozen = FrozenProblem(bundle.metric.x, samples)
    base = phi(frozen.nodes)
    y0 = frozen.solve(base)
    h0 = frozen.height(base, y0)
    ell = height_differential(bundle, bundle.metric.phi_values)
    worst = 0.0
    for _ in range(directions):
        X = qd.random_smooth_field(samples.space, rng, amplitude=1.0)(frozen.nodes)
        X /= bundle.g_norm(X)
        hp = frozen.height(base + eps * X, frozen.solve(base + eps * X, start=y0))
        hm = frozen.height(base - eps * X, frozen.solve(base - eps * X, start=y0))
        worst = max(worst, abs((hp - hm) / (2 * eps) - ell @ X))
    return worst + abs(h0 - pullback_height(bundle, bundle.metric.phi_values))


# ---------------------------------------------------------------- further properties


def idempotence_gap(phi, solver):
    x = solver(phi)
    return sp.distance(solver(qd.embedding_field(x), start=x), x)


def orthogonal_field(x, samples, rng):
    """Smooth field G-orthogonal to the image of dPhi at phi = Phi(x), exact at the pullback nodes."""
    bundle = op.assemble_bundle(qd.embedding_field(x), x, samples)
    X = qd.random_smooth_field(x.space, rng, amplitude=1.0)
    vals = X(bundle.metric.boundary)
    xi = np.linalg.solve(bundle.Q, bundle.directions.T @ (bundle.node_weights * vals))
    Y = X - qd.directional_field(x, xi)
    return Y * (1.0 / bundle.g_norm(Y(bundle.metric.boundary)))


def critical_point_check(x, solver, rng=None, eps=1e-3):
    """Central difference of Jac_G P at Phi(x) along a G-orthogonal field."""
    rng = np.random.default_rng(0) if rng is None else rng
    base = qd.embedding_field(x)
    Y = orthogonal_field(x, solver.samples, rng)
    jac = []
    for e in (eps, -eps):
        phi = base + e * Y
        xe = solver.project(phi, start=x).x
        jac.append(op.jacobian_AE(op.assemble_bundle(phi, xe, solver.samples))[0])
    return abs(jac[0] - jac[1]) / (2 * eps)


def random_phi(space, rng, base_radius=1.0, strength=1.0, R=2.0):
    """Phi(y) plus a random smooth perturbation of size about strength * 4/(dn+d)."""
    y = sp.random_point(space, rng, base_radius)
    pert = qd.random_smooth_field(space, rng, amplitude=strength * 4.0 / space.weight_exponent)
    room = 0.99 * (R - float(np.linalg.norm(y.log0)))
    if pert.bound > room:
        pert = pert * (room / pert.bound)
    return qd.embedding_field(y) + pert, y


def phi_with_height(space, rng, solver, target, base_radius=1.0, iters=4, min_effective=100, draws=20):
    """Random phi rescaled so that its height is close to target.

    A draw is discarded when its projection fails, when the ball constraint
    keeps its height more than 10% from target, or when the weights rho_bar
    concentrate on fewer than min_effective nodes; at k = 24 that happens for
    rough fields, and the rotating-node Newton field then cycles.
    """
    for _ in range(draws):
        try:
            phi, x = _draw_with_height(space, rng, solver, target, base_radius, iters)
        except ConvergenceError:
            continue
        if abs(height(phi, x, solver.samples) - target) > 0.1 * target:
            continue
        if qd.MetricAtPhi(phi, x, solver.samples).effective_size >= min_effective:
            return phi, x
    raise ConvergenceError(f"no resolvable field of height {target:.3g} in {draws} draws", float("nan"), draws)


def _draw_with_height(space, rng, solver, target, base_radius, iters):
    y = sp.random_point(space, rng, base_radius)
    pert = qd.random_smooth_field(space, rng, amplitude=1.0)
    emb = qd.embedding_field(y)
    # sup|emb| <= r(y) on the boundary; keep sup|phi| strictly inside the ball
    room = 0.99 * (solver.R - float(np.linalg.norm(y.log0)))
    a_max = room / float(np.abs(pert(solver.samples.nodes)).max())
    a = min(target, a_max)
    x = y
    for _ in range(iters):
        phi = emb + a * pert
        x = solver.project(phi, start=x).x
        h = height(phi, x, solver.samples)
        if h == 0:
            break
        a = min(a * target / h, a_max)
    phi = emb + a * pert
    return phi, solver.project(phi, start=x).x


def volume_sanity(solver, config, rng, points=6, patch=0.3, bump=0.2):
    """Volume of P_sigma o f against the G-volume of f for a smooth patch map f.

    f(u) = Phi(exp_{x0}(u)) + bump * <u, a> * Z for a fixed smooth field Z,
    sampled at random u in a cube of side 2 * patch. Returns (vol_image, vol_source).
    """
    space = solver.space
    dim = space.dim
    a = sp.random_unit(space, rng)
    Z = qd.random_smooth_field(space, rng, amplitude=1.0)
    img, src = 0.0, 0.0
    for _ in range(points):
        u = rng.uniform(-patch, patch, dim)
        y = sp.Point.from_tangent(space, u)
        phi = qd.embedding_field(y) + (bump * float(u @ a)) * Z
        cert_x = solver.project(phi, start=y).x
        bundle = op.assemble_bundle(phi, cert_x, solver.samples)
        h = height(phi, cert_x, solver.samples)
        M, _ = compressed_differential(bundle, bundle.metric.phi_values, h, config)
        # df/du_i at the nodes of cert_x, by central differences
        step = 1e-5
        cols = []
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = step
            fp = qd.embedding_field(sp.Point.from_tangent(space, u + e)) + (bump * float((u + e) @ a)) * Z
            fm = qd.embedding_field(sp.Point.from_tangent(space, u - e)) + (bump * float((u - e) @ a)) * Z
            cols.append((fp(bundle.metric.boundary) - fm(bundle.metric.boundary)) / (2 * step))
        Df = np.column_stack(cols) * bundle.sqrt_g[:, None]
        img += abs(float(np.linalg.det(M @ Df)))
        src += float(math.sqrt(np.linalg.det(Df.T @ Df)))
    return img / points, src / points
