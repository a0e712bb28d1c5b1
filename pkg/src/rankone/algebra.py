"""Normed division algebras R, C, H, O and Hermitian-type Jordan matrices over them.

Elements are stored as real coordinate arrays whose last axis has length
1, 2, 4 or 8. Multiplication is the Cayley-Dickson doubling

    (a, b)(c, d) = (ac - conj(d) b, d a + b conj(c))

applied recursively, so e1 e2 = e3 and e4 is the unit adjoined when
passing from H to O. All vectorized routines broadcast over leading axes.
"""

from functools import lru_cache

import numpy as np

DIMS = {"R": 1, "C": 2, "H": 4, "O": 8}
TAGS = {v: k for k, v in DIMS.items()}


def _cd_conj(x):
    out = -x.copy()
    out[0] = x[0]
    return out


def _cd_mul(x, y):
    n = len(x)
    if n == 1:
        return x * y
    h = n // 2
    a, b, c, d = x[:h], x[h:], y[:h], y[h:]
    return np.concatenate([
        _cd_mul(a, c) - _cd_mul(_cd_conj(d), b),
        _cd_mul(d, a) + _cd_mul(b, _cd_conj(c)),
    ])


@lru_cache(maxsize=None)
def structure_constants(d):
    """Tensor C with e_i e_j = sum_k C[i, j, k] e_k."""
    if d not in TAGS:
        raise ValueError(f"no normed division algebra of dimension {d}")
    eye = np.eye(d)
    table = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            table[i, j] = _cd_mul(eye[i], eye[j])
    table.setflags(write=False)
    return table


def mul(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.shape[-1]
    if y.shape[-1] != d:
        raise ValueError("operands live in different algebras")
    x, y = np.broadcast_arrays(x, y)
    outer = x[..., :, None] * y[..., None, :]
    # one 2-D GEMM; a batched matmul over tiny leading blocks is far slower
    flat = outer.reshape(-1, d * d) @ structure_constants(d).reshape(d * d, d)
    return flat.reshape(x.shape)


def conj(x):
    x = np.array(x, dtype=float)
    x[..., 1:] *= -1.0
    return x


def inner(x, y):
    return np.sum(np.asarray(x) * np.asarray(y), axis=-1)


def norm(x):
    return np.sqrt(inner(x, x))


def inv(x):
    x = np.asarray(x, dtype=float)
    return conj(x) / inner(x, x)[..., None]


def unit(d):
    e = np.zeros(d)
    e[0] = 1.0
    return e


def basis(d, t):
    e = np.zeros(d)
    e[t] = 1.0
    return e


def left_matrix(a):
    """Real matrix of y -> a y."""
    return np.einsum("i,ijk->kj", np.asarray(a, dtype=float), structure_constants(len(a)))


def right_matrix(a):
    """Real matrix of y -> y a."""
    return np.einsum("j,ijk->ki", np.asarray(a, dtype=float), structure_constants(len(a)))


class AlgebraElement:
    __slots__ = ("coords", "tag")

    def __init__(self, coords, tag=None):
        coords = np.array(coords, dtype=float).reshape(-1)
        if tag is None:
            tag = TAGS.get(len(coords))
        if tag not in DIMS or DIMS[tag] != len(coords):
            raise ValueError(f"{len(coords)} coordinates do not fit algebra {tag!r}")
        self.coords = coords
        self.tag = tag

    def _check(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.tag != self.tag:
            raise ValueError(f"algebra mismatch: {self.tag} vs {other.tag}")
        return other

    def __mul__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.coords * other, self.tag)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(mul(self.coords, other.coords), self.tag)

    def __rmul__(self, other):
        if np.isscalar(other):
            return AlgebraElement(self.coords * other, self.tag)
        return NotImplemented

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.coords + other.coords, self.tag)

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.coords - other.coords, self.tag)

    def __neg__(self):
        return AlgebraElement(-self.coords, self.tag)

    def conj(self):
        return AlgebraElement(conj(self.coords), self.tag)

    def norm(self):
        return float(norm(self.coords))

    def inner(self, other):
        self._check(other)
        return float(inner(self.coords, other.coords))

    def inverse(self):
        return AlgebraElement(inv(self.coords), self.tag)

    def allclose(self, other, atol=1e-12):
        self._check(other)
        return bool(np.allclose(self.coords, other.coords, atol=atol, rtol=0))

    def __repr__(self):
        return f"AlgebraElement({self.tag}, {np.array2string(self.coords, precision=6)})"


def law_residuals(d=8, trials=1000, seed=0):
    """Max residual of each composition-algebra identity over random unit inputs."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((4, trials, d))
    a, b, c, e = v / norm(v)[..., None]
    return law_residuals_on(a, b, c, e, rng.standard_normal((3, trials, 1)))


def basis_law_residuals(d=8):
    """The same identities over every quadruple of basis units: validates the table itself."""
    idx = np.array(np.meshgrid(*[np.arange(d)] * 4, indexing="ij")).reshape(4, -1)
    a, b, c, e = np.eye(d)[idx]
    coef = np.ones((3, idx.shape[1], 1))
    return law_residuals_on(a, b, c, e, coef)


def law_residuals_on(a, b, c, e, coef):
    """Per-law max residual on batches of inputs; coef mixes 1, a, b for the associativity law."""
    d = a.shape[-1]
    one = unit(d)
    res = {}
    res["composition"] = np.abs(norm(mul(a, b)) - norm(a) * norm(b))
    res["left_right_isometry"] = np.maximum(
        np.abs(inner(mul(a, b), mul(a, c)) - inner(a, a) * inner(b, c)),
        np.abs(inner(mul(b, a), mul(c, a)) - inner(a, a) * inner(b, c)),
    )
    res["polarized_composition"] = np.abs(
        inner(mul(a, c), mul(b, e)) + inner(mul(a, e), mul(b, c)) - 2 * inner(a, b) * inner(c, e))
    res["conjugate_formula"] = norm(conj(a) - (2 * inner(a, one)[:, None] * one - a))
    two_ab = 2 * inner(a, b)[:, None] * one
    res["inner_symmetrization"] = np.max(np.stack([
        np.abs(inner(a, b) - inner(conj(a), conj(b))),
        norm(mul(conj(a), b) + mul(conj(b), a) - two_ab),
        norm(mul(a, conj(b)) + mul(b, conj(a)) - two_ab),
    ]), axis=0)
    na = inner(a, a)[:, None]
    res["inverse_cancellation"] = np.maximum(
        norm(mul(mul(b, a), conj(a)) - na * b), norm(mul(conj(a), mul(a, b)) - na * b))
    target = 2 * inner(a, b)[:, None] * c
    res["bilinear_alternative"] = np.maximum(
        norm(mul(a, mul(conj(b), c)) + mul(b, mul(conj(a), c)) - target),
        norm(mul(mul(c, conj(a)), b) + mul(mul(c, conj(b)), a) - target),
    )
    res["moufang_1"] = norm(mul(mul(a, b), mul(c, a)) - mul(a, mul(mul(b, c), a)))
    res["moufang_2"] = norm(mul(a, mul(b, mul(a, c))) - mul(mul(a, mul(b, a)), c))
    res["moufang_3"] = norm(mul(b, mul(a, mul(c, a))) - mul(mul(mul(b, a), c), a))
    # w drawn from span{1, a, b}: subalgebra generated by two elements is associative
    w = coef[0] * one + coef[1] * a + coef[2] * b
    res["two_generator_associativity"] = np.max(np.stack([
        norm(mul(mul(a, b), w) - mul(a, mul(b, w))),
        norm(mul(mul(w, a), b) - mul(w, mul(a, b))),
        norm(mul(mul(a, a), b) - mul(a, mul(a, b))),
    ]), axis=0)
    return {k: float(np.max(v)) for k, v in res.items()}


def vector_model_pairing(v, w):
    """tr(X_v o X_w) for v = (1, a, b), w = (1, c, d) over O, with a != 0, from octonion arithmetic alone.

    Closed form |1 - c conj(a) - (d a) conj(b a) / |a|^2|^2; no matrices involved.
    """
    _, a, b = v
    _, c, d = w
    if norm(a) <= 1e-300:
        raise ValueError("the closed form needs a != 0")
    z = unit(8) - mul(c, conj(a)) - mul(mul(d, a), conj(mul(b, a))) / inner(a, a)
    return float(inner(z, z))


def associator(a, b, c):
    return mul(mul(a, b), c) - mul(a, mul(b, c))


# ---------------------------------------------------------------- Jordan matrices
#
# An m x m matrix over K is an array (..., m, m, d). The real subspace of
# matrices with I X* I = X, I = diag(1, -1, ..., -1), is flattened to a
# "J-vector": m real diagonal entries followed by the d coordinates of each
# strictly upper entry in row-major order.


def signs(m):
    s = -np.ones(m)
    s[0] = 1.0
    return s


@lru_cache(maxsize=None)
def _layout(m, d):
    upper = [(i, j) for i in range(m) for j in range(i + 1, m)]
    return tuple(upper), m + d * len(upper)


def jordan_dim(m, d):
    return _layout(m, d)[1]


def mat_conj_transpose(X):
    return conj(np.swapaxes(X, -3, -2))


def from_vec(vec, m, d):
    vec = np.asarray(vec, dtype=float)
    upper, dim = _layout(m, d)
    if vec.shape[-1] != dim:
        raise ValueError(f"expected J-vector of length {dim}, got {vec.shape[-1]}")
    s = signs(m)
    X = np.zeros(vec.shape[:-1] + (m, m, d))
    for i in range(m):
        X[..., i, i, 0] = vec[..., i]
    for k, (i, j) in enumerate(upper):
        entry = vec[..., m + d * k: m + d * (k + 1)]
        X[..., i, j, :] = entry
        X[..., j, i, :] = s[i] * s[j] * conj(entry)
    return X


def to_vec(X):
    X = np.asarray(X, dtype=float)
    m, d = X.shape[-3], X.shape[-1]
    upper, dim = _layout(m, d)
    out = np.empty(X.shape[:-3] + (dim,))
    for i in range(m):
        out[..., i] = X[..., i, i, 0]
    for k, (i, j) in enumerate(upper):
        out[..., m + d * k: m + d * (k + 1)] = X[..., i, j, :]
    return out


def membership_residual(X):
    """max |I X* I - X|; zero exactly on the Jordan subspace."""
    m = X.shape[-3]
    s = signs(m)
    mirrored = mat_conj_transpose(X) * (s[:, None] * s[None, :])[..., None]
    return float(np.max(np.abs(mirrored - X)))


def matmul(X, Y):
    return np.sum(mul(X[..., :, :, None, :], Y[..., None, :, :, :]), axis=-3)


def jordan_product(X, Y):
    return 0.5 * (matmul(X, Y) + matmul(Y, X))


def trace(X):
    return np.trace(X[..., 0], axis1=-2, axis2=-1)


def trace_pairing(X, Y):
    """tr(X o Y) as a real number (real part of the trace of XY)."""
    return trace(jordan_product(X, Y))


def outer(p, q, right_scalars):
    """Matrix I p* q (entries s_i conj(p_i) q_j), or I p q* when right_scalars.

    right_scalars selects the associative convention where K acts on the
    right of vectors and points are the lines I u u*.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = p.shape[-2]
    s = signs(m)[:, None, None]
    if right_scalars:
        M = mul(p[..., :, None, :], conj(q)[..., None, :, :])
    else:
        M = mul(conj(p)[..., :, None, :], q[..., None, :, :])
    return M * s


class JordanElement:
    """Element of the Jordan algebra of I-Hermitian (n+1) x (n+1) matrices over K."""

    __slots__ = ("mat",)

    def __init__(self, mat):
        self.mat = np.asarray(mat, dtype=float)
        if self.mat.ndim != 3 or self.mat.shape[0] != self.mat.shape[1]:
            raise ValueError("expected an (m, m, d) array")
        if membership_residual(self.mat) > 1e-9 * max(1.0, np.max(np.abs(self.mat))):
            raise ValueError("matrix violates I X* I = X")

    @classmethod
    def from_diag_offdiag(cls, theta, a):
        """The 3 x 3 octonion shape with diagonal (t1, -t2, -t3) and entries a1, a2, a3."""
        theta = np.asarray(theta, dtype=float)
        a = np.asarray(a, dtype=float)
        X = np.zeros((3, 3, 8))
        X[0, 0, 0], X[1, 1, 0], X[2, 2, 0] = theta[0], -theta[1], -theta[2]
        X[0, 1], X[0, 2] = a[2], conj(a[1])
        X[1, 0], X[1, 2] = -conj(a[2]), -a[0]
        X[2, 0], X[2, 1] = -a[1], -conj(a[0])
        return cls(X)

    @classmethod
    def from_vec(cls, vec, m, d):
        return cls(from_vec(vec, m, d))

    def vec(self):
        return to_vec(self.mat)

    def __mul__(self, other):
        return JordanElement(jordan_product(self.mat, other.mat))

    def __add__(self, other):
        return JordanElement(self.mat + other.mat)

    def __sub__(self, other):
        return JordanElement(self.mat - other.mat)

    def scaled(self, c):
        return JordanElement(self.mat * c)

    def trace(self):
        return float(trace(self.mat))

    def pairing(self, other):
        return float(trace_pairing(self.mat, other.mat))


def classify_point(X, tol=1e-9):
    """'inner', 'outer', 'nilpotent-class' or 'invalid' for a Jordan element."""
    M = X.mat if isinstance(X, JordanElement) else np.asarray(X, dtype=float)
    scale = max(1.0, float(np.max(np.abs(M))))
    sq = matmul(M, M)
    if np.max(np.abs(sq)) <= tol * scale ** 2 and np.max(np.abs(M)) > tol:
        return "nilpotent-class"
    if np.max(np.abs(sq - M)) <= tol * scale ** 2 and abs(trace(M) - 1.0) <= tol * scale:
        x11 = M[0, 0, 0]
        if x11 >= 1.0 - tol * scale:
            return "inner"
        if x11 <= tol * scale:
            return "outer"
    return "invalid"


def decompose_idempotent(X, right_scalars=False):
    """Inverse of the rank-one construction X = sgn(X11) I v* v.

    Returns (sign, v) with v[0] real and nonnegative. Requires X11 != 0.
    """
    M = X.mat if isinstance(X, JordanElement) else np.asarray(X, dtype=float)
    x11 = M[..., 0, 0, 0]
    if np.any(x11 == 0):
        raise ValueError("X11 = 0: no affine representative")
    sign = np.sign(x11)
    theta = np.sqrt(np.abs(x11))
    row = M[..., 0, :, :] * (sign / theta)[..., None, None]
    v = conj(row) if right_scalars else row
    return sign, v
