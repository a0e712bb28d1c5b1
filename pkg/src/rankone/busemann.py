"""Busemann functions of the symmetric metric and the derived embedding.

Boundary points are named by unit vectors s at x0: s is the Busemann
gradient at x0, and the ideal point itself is the null J-vector of the
payload (1, -s). With that convention

    Phi_s(x) = 1/2 log tr(X_x o Z_s),

Phi_s(x0) = 0, grad Phi_s(x0) = s, and Phi_s decreases to -t along the
ray t -> exp_{x0}(-t s) heading to the ideal point.
"""

import numpy as np

from . import spaces as sp
from .spaces import Point, model


def busemann(s, x):
    """Phi_s(x) for a single point x and one or many boundary directions s."""
    if isinstance(x, Point):
        X = x.jvec
        space = x.space
    else:
        raise TypeError("x must be a Point")
    return 0.5 * np.log(sp.ideal_pairing(space, X, s))


def busemann_at_jvecs(space, s, X):
    """Phi_s at a batch of J-vectors X (shape (k, jdim)) for one direction s."""
    Z = sp.ideal_jvec(space, np.asarray(s, dtype=float))
    return 0.5 * np.log(model(space).pairing(X, Z))


def busemann_gradient(s, x, ideal=None):
    """grad Phi_s(x) in the frame at x; unit length. ideal may carry precomputed ideal_jvec(s)."""
    Z = (sp.ideal_jvec(x.space, np.asarray(s, dtype=float)) if ideal is None else ideal) @ x.transvection_inv.T
    _, v = sp._ideal_to_direction(x.space, Z)
    return v


def busemann_large_t(s, x, T=30.0):
    """Oracle: d(x, gamma(T)) - T along the ray toward s."""
    far = Point.from_tangent(x.space, -T * np.asarray(s, dtype=float))
    return sp.distance(x, far) - T


def horosphere_distance(s, x, c, T=None):
    """Distance from x to the horosphere at s tangent to the sphere of radius c about x0.

    The horosphere is the limit of spheres about gamma(T) through the tangency
    point gamma(c); the tangency point and gamma(T) lie on one unit-speed ray,
    so their distance is T - c exactly. Pairing two far points directly would
    lose about exp(2(c + T)) * eps to cancellation.
    """
    s = np.asarray(s, dtype=float)
    T = c + 40.0 if T is None else T
    far = Point.from_tangent(x.space, -T * s)
    return sp.distance(x, far) - (T - c)


def busemann_horosphere(s, x, c1=20.0, c2=25.0):
    """Phi_s(x) = d(x, H_{s,c1}) - d(x0, H_{s,c2}) - c1 + c2."""
    x0 = Point.base(x.space)
    return horosphere_distance(s, x, c1) - horosphere_distance(s, x0, c2) - c1 + c2


def visual_density(x, s):
    """Density of the visual measure at x against the one at x0."""
    return np.exp(-x.space.entropy * busemann(s, x))


def pushforward_jacobian(x, v, h=1e-6):
    """Sphere Jacobian of v -> alpha_x(v) at a unit v, by central differences.

    The pushforward identity says visual_density(x, alpha_x(v)) times this
    Jacobian is 1; this is the pointwise form of the change of variables.
    """
    v = np.asarray(v, dtype=float)
    dim = len(v)
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(dim)]))
    T = q[:, 1:dim]
    probes = np.concatenate([v + h * T.T, v - h * T.T])
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    s, _ = sp.pullback_nodes(x, probes)
    D = (s[:dim - 1] - s[dim - 1:]).T / (2 * h)
    return float(np.sqrt(np.linalg.det(D.T @ D)))


def pushforward_residual(x, v, h=1e-6):
    """|visual_density(x, alpha_x(v)) * Jacobian - 1| for one unit direction v at x."""
    s, _ = sp.pullback_nodes(x, np.asarray(v, dtype=float)[None])
    return abs(float(visual_density(x, s[0])) * pushforward_jacobian(x, v, h) - 1.0)


def embed(x, samples):
    """Node values of the embedded point: Phi_s(x) at every sample direction."""
    return busemann(samples.nodes, x)


def _half_exp2(s, x, W):
    X = sp.exp(x, W)
    return 0.5 * np.exp(2.0 * busemann_at_jvecs(x.space, s, X))


def hessian_model(s, x):
    """Closed-form Hessian of exp(2 Phi_s)/2 at x in the frame at x."""
    v = busemann_gradient(s, x)
    phi = busemann(s, x)
    return np.exp(2.0 * phi) * (np.eye(x.space.dim) + sp.line_projector(x.space, v))


def fd_hessian(f, dim, h=1e-4):
    """Central second differences of f: R^dim -> R at 0; f takes a batch (k, dim)."""
    eye = np.eye(dim)
    I, J = np.triu_indices(dim)
    pp = h * (eye[I] + eye[J])
    pm = h * (eye[I] - eye[J])
    vals = f(np.concatenate([pp, -pm, pm, -pp]))
    k = len(I)
    fpp, fmp, fpm, fmm = vals[:k], vals[k:2 * k], vals[2 * k:3 * k], vals[3 * k:]
    H = np.zeros((dim, dim))
    H[I, J] = (fpp - fmp - fpm + fmm) / (4 * h * h)
    H[J, I] = H[I, J]
    return H


def fd_hessian_busemann(s, x, h=1e-4):
    """Hessian of exp(2 Phi_s)/2 in normal coordinates at x, with Richardson over h and h/2."""
    f = lambda W: _half_exp2(s, x, W)
    H1 = fd_hessian(f, x.space.dim, h)
    H2 = fd_hessian(f, x.space.dim, h / 2)
    return (4 * H2 - H1) / 3


def hessian_check(s, x, h=1e-4):
    """Max-norm gap between the finite-difference and closed-form Hessians, scaled by exp(-2 Phi)."""
    scale = np.exp(-2.0 * busemann(s, x))
    return float(np.max(np.abs(fd_hessian_busemann(s, x, h) - hessian_model(s, x))) * scale)


def fd_gradient(s, x, h=1e-5):
    dim = x.space.dim
    eye = np.eye(dim)
    X = sp.exp(x, np.concatenate([h * eye, -h * eye]))
    vals = busemann_at_jvecs(x.space, s, X)
    return (vals[:dim] - vals[dim:]) / (2 * h)


def gradient_flow(s, x, t, steps=200):
    """RK4 integration of the gradient flow of Phi_s in the ambient J-vector space."""
    space = x.space
    mdl = model(space)
    e0 = np.zeros((space.m, space.d))
    e0[0, 0] = 1.0

    def field(X):
        p = Point.from_jvec(space, X)
        v = busemann_gradient(s, p)
        return p.transvection @ mdl.polar(e0, mdl.tangent_payload(v))

    X = x.jvec.copy()
    dt = t / steps
    for _ in range(steps):
        k1 = field(X)
        k2 = field(X + 0.5 * dt * k1)
        k3 = field(X + 0.5 * dt * k2)
        k4 = field(X + dt * k3)
        X = X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Point.from_jvec(space, X)


def embedding_gap(x, y, samples):
    """(sup-norm distance of the embedded points, true distance)."""
    return float(np.max(np.abs(embed(x, samples) - embed(y, samples)))), sp.distance(x, y)


def sup_witness(x, y):
    """Boundary direction where Phi_s(y) - Phi_s(x) reaches d(x, y): the end of the ray from y through x."""
    u = sp.log(y, x)
    r = np.linalg.norm(u)
    # log(x, x) is roundoff, not an exact zero
    if r < 1e-12:
        raise ValueError("points coincide")
    return sp.boundary_endpoint(y, -u / r)
