"""Rank-one hyperbolic spaces CH^n, HH^n and OH^2 in a common Jordan-algebra model.

A point is a rank-one idempotent of trace 1 in the Jordan algebra of
I-Hermitian (n+1) x (n+1) matrices over K, flattened to a real "J-vector".
It is built from a payload p = (theta, a_1, ..., a_n) with theta > 0 and
theta^2 - sum |a_j|^2 = 1:

* K = O uses the vector model X = I p* p, so cosh(2d) = 2 tr(X o Y) - 1.
* K = C, H use the projective model with right scalars, X = I u u*, so
  tr(X o Y) = |q(u, w)|^2 and cosh d = |q(u, w)|.

Tangent vectors at the base point x0 = (1, 0, ..., 0) are arrays of
length dn (n blocks of d real coordinates). At any other point x the
canonical frame is the image of the frame at x0 under the transvection
g_x along the geodesic from x0 to x; g_x is the exponential of a Jordan
derivation and acts linearly on J-vectors.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.linalg import expm

from . import algebra as alg

SUPPORTED = ("CH2", "CH3", "HH2", "OH2")


@dataclass(frozen=True)
class SpaceDescriptor:
    field: str
    n: int

    def __post_init__(self):
        if self.field not in ("C", "H", "O"):
            raise ValueError(f"base field must be C, H or O, got {self.field!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.field == "O" and self.n != 2:
            raise ValueError("the octonionic hyperbolic space exists only for n = 2")

    @property
    def d(self):
        return alg.DIMS[self.field]

    @property
    def dim(self):
        return self.d * self.n

    @property
    def entropy(self):
        return self.dim + self.d - 2

    @property
    def weight_exponent(self):
        """dn + d, the exponent in the barycenter weights."""
        return self.dim + self.d

    @property
    def m(self):
        return self.n + 1

    @property
    def right_scalars(self):
        return self.field != "O"

    @property
    def name(self):
        return f"{self.field}H{self.n}"

    @property
    def jdim(self):
        return alg.jordan_dim(self.m, self.d)


def get_space(name):
    name = name.strip().upper()
    if len(name) < 3 or name[1] != "H" or not name[2:].isdigit():
        raise ValueError(f"cannot parse space name {name!r}; expected one of {SUPPORTED}")
    return SpaceDescriptor(name[0], int(name[2:]))


# ---------------------------------------------------------------- model engine


class Model:
    """Precomputed linear algebra of the Jordan model for one space."""

    def __init__(self, space):
        self.space = space
        m, d, J = space.m, space.d, space.jdim
        basis = alg.from_vec(np.eye(J), m, d)
        prods = alg.jordan_product(basis[:, None], basis[None, :])
        # product[i, j] = J-vector of e_i o e_j
        self.product = alg.to_vec(prods)
        self.trace_vec = np.zeros(J)
        self.trace_vec[:m] = 1.0
        self.trace_form = self.product @ self.trace_vec
        self.x0 = np.zeros(J)
        self.x0[0] = 1.0
        self._L_x0 = self.mult_matrix(self.x0)

    def mult_matrix(self, A):
        """Matrix of X -> A o X on J-vectors."""
        return np.einsum("i,ijk->kj", A, self.product)

    def jordan(self, X, Y):
        return np.einsum("...i,...j,ijk->...k", X, Y, self.product)

    def pairing(self, X, Y):
        return np.einsum("...i,ij,...j->...", X, self.trace_form, Y)

    def from_payload(self, p):
        return alg.to_vec(alg.outer(p, p, self.space.right_scalars))

    def polar(self, p, q):
        rs = self.space.right_scalars
        return alg.to_vec(alg.outer(p, q, rs) + alg.outer(q, p, rs))

    def to_payload(self, X):
        """Payload with nonnegative real first entry; inverse of from_payload."""
        _, p = alg.decompose_idempotent(alg.from_vec(X, self.space.m, self.space.d),
                                        self.space.right_scalars)
        return p

    def tangent_payload(self, w):
        w = np.asarray(w, dtype=float)
        p = np.zeros(w.shape[:-1] + (self.space.m, self.space.d))
        p[..., 1:, :] = w.reshape(w.shape[:-1] + (self.space.n, self.space.d))
        return p

    def derivation(self, w):
        """Jordan derivation generating the transvection along exp(t w) at x0."""
        e0 = self.tangent_payload(np.zeros(self.space.dim))
        e0[0, 0] = 1.0
        Y = self.polar(e0, self.tangent_payload(w))
        L_Y = self.mult_matrix(Y)
        return 4.0 * (L_Y @ self._L_x0 - self._L_x0 @ L_Y)

    def transvection(self, w):
        return expm(self.derivation(w))


@lru_cache(maxsize=None)
def model(space):
    return Model(space)


# ---------------------------------------------------------------- base-point maps


def _sinhc(r):
    r = np.asarray(r, dtype=float)
    small = r < 1e-6
    safe = np.where(small, 1.0, r)
    return np.where(small, 1.0 + r * r / 6.0, np.sinh(safe) / safe)


def exp0_payload(space, w):
    w = np.asarray(w, dtype=float)
    r = np.linalg.norm(w, axis=-1)
    p = model(space).tangent_payload(w * _sinhc(r)[..., None])
    p[..., 0, 0] = np.cosh(r)
    return p


def log0_payload(space, p):
    a = p[..., 1:, :].reshape(p.shape[:-2] + (space.dim,))
    sa = np.linalg.norm(a, axis=-1)
    r = np.arcsinh(sa)
    safe = np.where(sa > 0, sa, 1.0)
    scale = np.where(sa > 1e-8, r / safe, 1.0 - sa * sa / 6.0)
    return a * scale[..., None]


def ideal_payload(space, s):
    """Null payload (1, -s): the endpoint of the backward ray from x0 in direction s."""
    s = np.asarray(s, dtype=float)
    p = model(space).tangent_payload(-s)
    p[..., 0, 0] = 1.0
    return p


@lru_cache(maxsize=None)
def ideal_quadratic(space):
    """Coefficients (c, L, Q) with ideal_jvec(s) = c + L s + sum_ab Q[:, a, b] s_a s_b.

    The null J-vector of (1, -s) is an exact quadratic polynomial in s with small
    integer coefficients, so polarization recovers it without rounding.
    """
    mdl = model(space)
    dim = space.dim

    def direct(s):
        p = mdl.tangent_payload(-np.asarray(s, dtype=float))
        p[..., 0, 0] = 1.0
        return mdl.from_payload(p)

    eye = np.eye(dim)
    c = direct(np.zeros(dim))
    plus, minus = direct(eye), direct(-eye)
    L = 0.5 * (plus - minus).T
    Q = np.zeros((space.jdim, dim, dim))
    diag = 0.5 * (plus + minus) - c
    for a in range(dim):
        Q[:, a, a] = diag[a]
        pair = direct(eye[a] + eye[a + 1:]) if a + 1 < dim else None
        if pair is not None:
            off = 0.5 * (pair - plus[a] - plus[a + 1:] + c)
            Q[:, a, a + 1:] = off.T
            Q[:, a + 1:, a] = off.T
    for arr in (c, L, Q):
        arr.setflags(write=False)
    return c, L, Q


def ideal_jvec(space, s):
    c, L, Q = ideal_quadratic(space)
    s = np.asarray(s, dtype=float)
    dim = space.dim
    flat = s.reshape(-1, dim)
    quad = (flat[:, :, None] * flat[:, None, :]).reshape(-1, dim * dim) @ Q.reshape(len(c), -1).T
    out = c + flat @ L.T + quad
    return out.reshape(s.shape[:-1] + (len(c),))


def ideal_pairing(space, X, s):
    """tr(X o Z_s) for one J-vector X and a batch of directions s, as a quadratic form in s."""
    mdl = model(space)
    c, L, Q = ideal_quadratic(space)
    t = mdl.trace_form @ np.asarray(X, dtype=float)
    gamma = np.tensordot(t, Q, axes=1)
    s = np.asarray(s, dtype=float)
    return t @ c + s @ (L.T @ t) + ((s @ gamma) * s).sum(-1)


def _ideal_to_direction(space, Z):
    """Decompose a null J-vector Z = lam * X(1, -s) into (lam, s)."""
    m, d = space.m, space.d
    upper, _ = alg._layout(m, d)
    Z = np.asarray(Z, dtype=float)
    lam = Z[..., 0]
    cols = [m + d * k for k, (i, j) in enumerate(upper) if i == 0]
    row = np.stack([Z[..., c:c + d] for c in cols], axis=-2) / lam[..., None, None]
    if space.right_scalars:
        row = alg.conj(row)
    s = -row.reshape(row.shape[:-2] + (space.dim,))
    return lam, s


# ---------------------------------------------------------------- points


class Point:
    """A point of the space, stored by its normalized payload."""

    def __init__(self, space, payload):
        payload = np.asarray(payload, dtype=float)
        if payload.shape != (space.m, space.d):
            raise ValueError(f"payload must have shape {(space.m, space.d)}")
        self.space = space
        self.payload = payload

    @classmethod
    def base(cls, space):
        return cls.from_tangent(space, np.zeros(space.dim))

    @classmethod
    def from_tangent(cls, space, w):
        """exp_{x0}(w)."""
        return cls(space, exp0_payload(space, w))

    @classmethod
    def from_jvec(cls, space, X):
        return cls(space, model(space).to_payload(np.asarray(X, dtype=float)))

    @classmethod
    def from_vector_model(cls, theta, a, b, tol=1e-12):
        space = SpaceDescriptor("O", 2)
        p = np.array([theta * alg.unit(8), a, b], dtype=float)
        q = theta ** 2 - alg.inner(a, a) - alg.inner(b, b)
        if theta <= 0 or abs(q - 1.0) > tol * max(1.0, theta ** 2):
            raise ValueError("vector-model triple must satisfy theta > 0, theta^2 - |a|^2 - |b|^2 = 1")
        return cls(space, p)

    @classmethod
    def from_projective(cls, space, u):
        """Normalize an arbitrary timelike representative u (C/H only)."""
        if not space.right_scalars:
            raise ValueError("projective representatives are for C and H only")
        u = np.asarray(u, dtype=float)
        q = alg.inner(u[0], u[0]) - np.sum(alg.inner(u[1:], u[1:]))
        if q <= 0:
            raise ValueError("representative is not timelike: q(u, u) <= 0")
        u0 = u[0]
        # right-multiply by conj(u0)/|u0| to make the first entry real positive
        phase = alg.conj(u0) / alg.norm(u0)
        u = alg.mul(u, phase) / np.sqrt(q)
        return cls(space, u)

    @cached_property
    def jvec(self):
        return model(self.space).from_payload(self.payload)

    @cached_property
    def log0(self):
        return log0_payload(self.space, self.payload)

    @cached_property
    def transvection(self):
        return model(self.space).transvection(self.log0)

    @cached_property
    def transvection_inv(self):
        return model(self.space).transvection(-self.log0)

    def normalization_residual(self):
        p = self.payload
        return abs(alg.inner(p[0], p[0]) - np.sum(alg.inner(p[1:], p[1:])) - 1.0)

    def __repr__(self):
        return f"Point({self.space.name}, r={np.linalg.norm(self.log0):.6g})"


def random_point(space, rng, radius):
    v = rng.standard_normal(space.dim)
    v /= np.linalg.norm(v)
    return Point.from_tangent(space, v * radius * rng.uniform())


def random_unit(space, rng, size=None):
    shape = (space.dim,) if size is None else (size, space.dim)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# ---------------------------------------------------------------- metric


def _pairing_to_distance(tr):
    """tr(X o Y) = cosh^2 d."""
    return np.arcsinh(np.sqrt(np.maximum(tr - 1.0, 0.0)))


def _minkowski(p, q):
    """Real part of the signature (1, n) form on payloads."""
    return float(alg.inner(p[0], q[0]) - np.sum(alg.inner(p[1:], q[1:])))


def _line_pairing(p, q):
    """K-valued pairing z(p, q) with tr(X_p o X_q) = |z|^2; real-linear in q, Re z = Minkowski form.

    C/H: the Hermitian form. O: theta eta - c conj(a) - (d a^) conj(b a^) with a^ = a/|a|
    (a^ = 1 when a = 0), the closed form of the vector model.
    """
    if p.shape[-1] != 8:
        return hermitian_form(p, q)
    (theta, a, b), (eta, c, d) = p, q
    na = alg.norm(a)
    ah = a / na if na > 0 else alg.unit(8)
    return theta[0] * eta - alg.mul(c, alg.conj(a)) - alg.mul(alg.mul(d, ah), alg.conj(alg.mul(b, ah)))


def distance(x, y):
    """Distance from payloads: sinh^2 d = |z(u, e)|^2 - <e, e> with e = w - u.

    Both terms are O(|e|^2), so nearby points far from x0 keep full relative
    accuracy; the J-vector pairing would lose exp(4r) * eps to cancellation.
    """
    if x.space != y.space:
        raise ValueError("points live in different spaces")
    u, w = x.payload, y.payload
    e = w - u
    z = _line_pairing(u, e)
    sinh2 = float(alg.inner(z, z)) - _minkowski(e, e)
    return float(np.arcsinh(np.sqrt(max(sinh2, 0.0))))


def distance_trace(x, y):
    """Distance from the J-vector pairing tr(X o Y) = cosh^2 d (independent route)."""
    if x.space != y.space:
        raise ValueError("points live in different spaces")
    return float(_pairing_to_distance(model(x.space).pairing(x.jvec, y.jvec)))


def distance_vector_model(x, y):
    """OH^2 distance from the octonionic closed form for tr(X_v o X_w), independent of matrices."""
    if x.space.field != "O":
        raise ValueError("vector-model distance is for OH^2")
    theta, a, b = x.payload
    eta, c, d = y.payload
    th, et = theta[0], eta[0]
    if alg.norm(a) > 1e-300:
        tr = th * th * et * et * alg.vector_model_pairing(x.payload / th, y.payload / et)
    else:
        z = th * et * alg.unit(8) - alg.mul(d, alg.conj(b))
        tr = alg.inner(z, z)
    return float(_pairing_to_distance(tr))


def hermitian_form(u, w):
    """q(u, w) = conj(u0) w0 - sum conj(uj) wj."""
    terms = alg.mul(alg.conj(u), w)
    return terms[0] - np.sum(terms[1:], axis=0)


def distance_projective(x, y):
    """C/H distance cosh d = |q(u, w)| from projective representatives."""
    if not x.space.right_scalars:
        raise ValueError("projective distance is for C and H")
    return float(np.arccosh(max(alg.norm(hermitian_form(x.payload, y.payload)), 1.0)))


# ---------------------------------------------------------------- exp / log at arbitrary points


def exp(x, w):
    """exp_x(w) for w in frame coordinates at x; w may be a batch (k, dn). Returns J-vectors."""
    X = model(x.space).from_payload(exp0_payload(x.space, w))
    return X @ x.transvection.T


def exp_point(x, w):
    return Point.from_jvec(x.space, exp(x, np.asarray(w, dtype=float)))


def log(x, y):
    """log_x(y) in frame coordinates at x."""
    Y = y.jvec if isinstance(y, Point) else np.asarray(y, dtype=float)
    Z = Y @ x.transvection_inv.T
    return log0_payload(x.space, model(x.space).to_payload(Z))


def geodesic(x, v, t):
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("geodesic needs a unit initial vector")
    return exp_point(x, t * v)


def boundary_endpoint(x, v):
    """Unit vector s at x0 naming the endpoint of the backward ray t -> exp_x(-t v).

    Equivalently the boundary point whose Busemann gradient at x is v.
    v may be a batch (k, dn).
    """
    Z = ideal_jvec(x.space, v) @ x.transvection.T
    lam, s = _ideal_to_direction(x.space, Z)
    return s


def pullback_nodes(x, v, ideal=None):
    """(s, lam): boundary points alpha_x(v) and the scale lam with Phi_s(x) = -log(lam)/2.

    ideal may carry precomputed ideal_jvec(v) for a fixed node set.
    """
    Z = (ideal_jvec(x.space, v) if ideal is None else ideal) @ x.transvection.T
    lam, s = _ideal_to_direction(x.space, Z)
    return s, lam


# ---------------------------------------------------------------- K-lines and Cayley lines


def _blocks(space, v):
    v = np.asarray(v, dtype=float)
    return v.reshape(v.shape[:-1] + (space.n, space.d))


def line_basis(space, v, route="left-inverse"):
    """Orthonormal basis (columns) of the K-line through v: shape (..., dn, d).

    C/H: the right K-line {v lam}. O: the Cayley line {(x, x c)} containing v.
    For O, route "left-inverse" uses (e_t, e_t c)/sqrt(1+|c|^2) with c = a^{-1} b,
    route "conjugate-rotation" uses (conj(e_t) a, (conj(e_t) a) r)/|v| with r = a^{-1} b.
    """
    v = np.asarray(v, dtype=float)
    d = space.d
    eye = np.eye(d)
    blocks = _blocks(space, v)
    if space.right_scalars:
        nv = np.linalg.norm(v, axis=-1)[..., None, None]
        cols = [alg.mul(blocks, eye[t]) / nv for t in range(d)]
        cols = [c.reshape(v.shape[:-1] + (space.dim,)) for c in cols]
        return np.stack(cols, axis=-1)
    a, b = blocks[..., 0, :], blocks[..., 1, :]
    na, nb = alg.norm(a), alg.norm(b)
    out = np.empty(v.shape[:-1] + (16, 8))
    use_a = na >= nb
    if route == "left-inverse":
        c = np.where(use_a[..., None], alg.mul(alg.inv(np.where(use_a[..., None], a, alg.unit(8))), b),
                     alg.mul(alg.inv(np.where(use_a[..., None], alg.unit(8), b)), a))
        scale = 1.0 / np.sqrt(1.0 + alg.inner(c, c))
        for t in range(d):
            first = np.broadcast_to(eye[t], c.shape)
            second = alg.mul(eye[t], c)
            lo = np.where(use_a[..., None], first, second)
            hi = np.where(use_a[..., None], second, first)
            out[..., :8, t] = lo * scale[..., None]
            out[..., 8:, t] = hi * scale[..., None]
        return out
    if route == "conjugate-rotation":
        nv = np.linalg.norm(v, axis=-1)
        lead = np.where(use_a[..., None], a, b)
        other = np.where(use_a[..., None], b, a)
        r = alg.mul(alg.inv(lead), other)
        for t in range(d):
            x = alg.mul(alg.conj(eye[t]), lead)
            y = alg.mul(x, r)
            lo = np.where(use_a[..., None], x, y)
            hi = np.where(use_a[..., None], y, x)
            out[..., :8, t] = lo / nv[..., None]
            out[..., 8:, t] = hi / nv[..., None]
        return out
    raise ValueError(f"unknown basis route {route!r}")


def line_projector(space, v, route="left-inverse"):
    B = line_basis(space, v, route)
    return B @ np.swapaxes(B, -1, -2)


def weighted_projector_sum(space, v, weights, route="left-inverse"):
    """sum_j weights_j P(v_j) as one product of stacked line bases; weights must be nonnegative."""
    B = line_basis(space, v, route) * np.sqrt(np.asarray(weights, dtype=float))[:, None, None]
    flat = np.swapaxes(B, 0, 1).reshape(space.dim, -1)
    return flat @ flat.T


def line_projection(space, v, w, route="left-inverse"):
    """Orthogonal projection of w onto the K-line (Cayley line for O) through v."""
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(v) == 0:
        raise ValueError("the zero vector spans no line")
    B = line_basis(space, v, route)
    return B @ (np.swapaxes(B, -1, -2) @ np.asarray(w, dtype=float))


def cayley_line_projection(space, v, w, route="left-inverse"):
    if space.field != "O":
        raise ValueError("Cayley lines exist only over the octonions")
    return line_projection(space, v, w, route)


def J_structure(space, t, v):
    """Right multiplication by the unit e_t in every block (C/H only)."""
    if space.field == "O":
        raise ValueError("no global J-structure over the octonions")
    if not 0 <= t < space.d:
        raise ValueError(f"t must lie in [0, {space.d - 1}]")
    blocks = _blocks(space, v)
    return alg.mul(blocks, alg.basis(space.d, t)).reshape(np.shape(v))


def J_matrices(space):
    return np.stack([J_structure(space, t, np.eye(space.dim)).T for t in range(space.d)])


def cayley_reflection(r, w):
    """Matrix of (x, y) -> (r x + y conj(w), x w - r y) on O^2, for r^2 + |w|^2 = 1.

    Symmetric orthogonal involution sending Cayley lines to Cayley lines; even
    products of these stand in for the isotropy group at x0.
    """
    w = np.asarray(w, dtype=float)
    eye = np.eye(16)
    x, y = eye[:, :8], eye[:, 8:]
    top = r * x + alg.mul(y, alg.conj(w))
    bottom = alg.mul(x, w) - r * y
    return np.concatenate([top, bottom], axis=1).T


def rotation_to_first_factor(v):
    """Isotropy element (product of two reflections) mapping the Cayley line of v onto O x {0}."""
    v = np.asarray(v, dtype=float)
    a, b = v[:8], v[8:]
    flip = cayley_reflection(1.0, np.zeros(8))
    if np.linalg.norm(a) < 1e-12 * np.linalg.norm(v):
        return flip @ cayley_reflection(0.0, alg.unit(8))
    c = alg.mul(alg.inv(a), b)
    r = 1.0 / np.sqrt(1.0 + alg.inner(c, c))
    return flip @ cayley_reflection(r, r * c)


# ---------------------------------------------------------------- curvature


def _second_order_curvature(x, v, w, t):
    a = distance(exp_point(x, t * v), exp_point(x, t * w))
    return 3.0 * (2.0 * t * t - a * a) / t ** 4


def sectional_curvature_probe(x, v, w, t=1e-2):
    """Sectional curvature of span{v, w} at x from the small-hinge distance defect.

    For orthonormal v, w: d(exp tv, exp tw)^2 = 2t^2 - K t^4 / 3 + O(t^6);
    Richardson extrapolation over t and t/2 removes the t^2 correction.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    v = v / np.linalg.norm(v)
    w = w - (w @ v) * v
    nw = np.linalg.norm(w)
    if nw < 1e-8:
        raise ValueError("degenerate plane")
    w = w / nw
    k1 = _second_order_curvature(x, v, w, t)
    k2 = _second_order_curvature(x, v, w, t / 2)
    return (4.0 * k2 - k1) / 3.0


def curvature_exact(space, v, w):
    """Closed form K = -1 - 3 |pi_line(v) w|^2 for orthonormal v, w at x0."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    v = v / np.linalg.norm(v)
    w = w - (w @ v) * v
    w = w / np.linalg.norm(w)
    pw = line_projection(space, v, w)
    return -1.0 - 3.0 * float(pw @ pw)


def hinge_same_line(t1, t2, cos_angle):
    """Distance across a hinge inside a curvature -4 plane."""
    c = np.cosh(2 * t1) * np.cosh(2 * t2) - np.sinh(2 * t1) * np.sinh(2 * t2) * cos_angle
    return 0.5 * np.arccosh(c)


def hinge_orthogonal(t1, t2):
    """Distance across a right-angle hinge in a curvature -1 plane."""
    return np.arccosh(np.cosh(t1) * np.cosh(t2))
