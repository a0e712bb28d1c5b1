"""Boundary sample sets, fields on the boundary sphere, and the visual measures.

Integrals against the visual measure at x are computed in pullback form:
the sample directions v_j are read as unit vectors in the frame at x, pushed
to boundary points alpha_x(v_j), and averaged with the sample weights.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import busemann as bm
from . import spaces as sp

SCHEMES = ("antithetic-calibrated", "antithetic")


@dataclass(frozen=True, eq=False)
class BoundarySampleSet:
    space: sp.SpaceDescriptor
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str = "antithetic-calibrated"
    seed: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.nodes.ndim != 2 or self.nodes.shape[1] != self.space.dim:
            raise ValueError(f"nodes must have shape (N, {self.space.dim})")
        if self.weights.shape != (len(self.nodes),):
            raise ValueError("one weight per node")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    @property
    def size(self):
        return len(self.nodes)

    def line_projectors(self, route="left-inverse"):
        """Per-node projectors onto the K-line (Cayley line) through each node; cached."""
        key = ("proj", route)
        if key not in self._cache:
            self._cache[key] = sp.line_projector(self.space, self.nodes, route)
        return self._cache[key]

    def ideal_jvecs(self):
        """J-vectors of the ideal points (1, -v_j); cached since the nodes never move."""
        if "ideal" not in self._cache:
            self._cache["ideal"] = sp.ideal_jvec(self.space, self.nodes)
        return self._cache["ideal"]

    def pullback(self, x):
        return sp.pullback_nodes(x, self.nodes, self.ideal_jvecs())

    def moment2(self):
        return np.einsum("j,ja,jb->ab", self.weights, self.nodes, self.nodes)

    def save(self, path):
        path = Path(path)
        table = np.column_stack([self.nodes, self.weights])
        if path.suffix == ".csv":
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow([f"c{i}" for i in range(self.space.dim)] + ["weight"])
                for row in table:
                    writer.writerow([repr(float(v)) for v in row])
        else:
            with path.open("wb") as fh:
                np.save(fh, table, allow_pickle=False)

    @classmethod
    def load(cls, path, space):
        path = Path(path)
        if path.suffix == ".csv":
            with path.open(newline="") as fh:
                rows = list(csv.reader(fh))
            table = np.array([[float(v) for v in r] for r in rows[1:]])
        else:
            with path.open("rb") as fh:
                table = np.load(fh, allow_pickle=False)
        return cls(space, table[:, :-1].copy(), table[:, -1].copy(), scheme="loaded")


def _sym_features(M):
    """Upper-triangular entries of a batch of symmetric matrices."""
    i, j = np.triu_indices(M.shape[-1])
    return M[..., i, j]


def calibrate_weights(space, nodes, tol=1e-14, max_iter=50):
    """Exponentially tilted weights matching the second moment and the mean line projector.

    Targets: sum w v v^T = I/dn and sum w pi_line(v) = I/n. Solved through the
    convex dual log-sum-exp problem by Newton's method.
    """
    dim = space.dim
    P = sp.line_projector(space, nodes)
    feats = np.concatenate([
        _sym_features(nodes[:, :, None] * nodes[:, None, :]),
        _sym_features(P),
    ], axis=1)
    target = np.concatenate([
        _sym_features(np.eye(dim) / dim),
        _sym_features(np.eye(dim) / space.n),
    ])
    F = feats - target
    lam = np.zeros(F.shape[1])
    for _ in range(max_iter):
        z = F @ lam
        w = np.exp(z - z.max())
        w /= w.sum()
        g = w @ F
        if np.max(np.abs(g)) < tol:
            break
        Fc = F - g
        H = (Fc * w[:, None]).T @ Fc
        step = np.linalg.lstsq(H, g, rcond=1e-12)[0]
        lam -= step
    else:
        raise RuntimeError("weight calibration did not converge")
    return w


def generate_samples(space, N, seed, scheme="antithetic-calibrated"):
    """Antithetic uniform directions on the unit sphere at x0; deterministic in seed."""
    if N % 2:
        raise ValueError("N must be even for antithetic pairing")
    if N < 2:
        raise ValueError("N must be at least 2")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    half = rng.standard_normal((N // 2, space.dim))
    half /= np.linalg.norm(half, axis=1, keepdims=True)
    nodes = np.concatenate([half, -half])
    weights = np.full(N, 1.0 / N)
    if scheme == "antithetic-calibrated" and N >= 4 * space.dim ** 2:
        weights = calibrate_weights(space, nodes)
        # tilting features are even, so antithetic partners share a weight
        weights = 0.5 * (weights + np.roll(weights, N // 2))
        weights /= weights.sum()
    return BoundarySampleSet(space, nodes, weights, scheme, seed)


# ---------------------------------------------------------------- fields


class Field:
    """Real function on the boundary sphere; argument is a unit vector s at x0."""

    def __init__(self, fn, label="field", bound=None):
        self._fn = fn
        self.label = label
        # an upper bound for the sup norm when one is known cheaply
        self.bound = bound

    def __call__(self, s):
        return np.asarray(self._fn(np.asarray(s, dtype=float)), dtype=float)

    def sample(self, samples):
        return self(samples.nodes)

    def at(self, x, samples):
        """Values at the pullback nodes alpha_x(v_j)."""
        s, _ = samples.pullback(x)
        return self(s)

    def __add__(self, other):
        if isinstance(other, Field):
            return Field(lambda s: self(s) + other(s), f"({self.label} + {other.label})")
        c = float(other)
        return Field(lambda s: self(s) + c, f"({self.label} + {c:g})")

    __radd__ = __add__

    def __neg__(self):
        return Field(lambda s: -self(s), f"-{self.label}")

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        c = float(c)
        bound = None if self.bound is None else abs(c) * self.bound
        return Field(lambda s: c * self(s), f"{c:g}*{self.label}", bound)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Field({self.label})"


def constant_field(c):
    c = float(c)
    return Field(lambda s: np.full(s.shape[:-1], c), f"const({c:g})")


def embedding_field(x):
    """s -> Phi_s(x)."""
    return Field(lambda s: bm.busemann(s, x), "Phi(x)")


def bump_field(center, kappa, amplitude=1.0):
    center = np.asarray(center, dtype=float)
    center = center / np.linalg.norm(center)
    return Field(lambda s: amplitude * np.exp(kappa * (s @ center - 1.0)),
                 f"bump(kappa={kappa:g}, amp={amplitude:g})")


def random_smooth_field(space, rng, n_bumps=6, amplitude=0.3, kappa=2.0):
    """Sum of bumps with random centers and N(0, amplitude^2) heights."""
    centers = sp.random_unit(space, rng, n_bumps)
    heights = amplitude * rng.standard_normal(n_bumps)

    def fn(s):
        return np.exp(kappa * (s @ centers.T - 1.0)) @ heights

    return Field(fn, f"random({n_bumps} bumps, amp={amplitude:g})", bound=float(np.abs(heights).sum()))


def directional_field(x, xi):
    """s -> <grad Phi_s(x), xi>: the image of the tangent vector xi under dPhi."""
    xi = np.asarray(xi, dtype=float)

    def fn(s):
        Z = sp.ideal_jvec(x.space, s) @ x.transvection_inv.T
        _, v = sp._ideal_to_direction(x.space, Z)
        return v @ xi

    return Field(fn, "dPhi(xi)")


def node_field(samples, values, bandwidth=None):
    """Kernel-smoothed extension of node values to the whole sphere."""
    values = np.asarray(values, dtype=float)
    if values.shape != (samples.size,):
        raise ValueError("one value per sample node")
    kappa = 4.0 * samples.space.dim if bandwidth is None else 1.0 / bandwidth
    nodes = samples.nodes
    w = samples.weights

    def fn(s):
        s2 = np.atleast_2d(s)
        logk = kappa * (s2 @ nodes.T - 1.0)
        k = np.exp(logk - logk.max(axis=1, keepdims=True)) * w
        out = (k @ values) / k.sum(axis=1)
        return out.reshape(np.shape(s)[:-1])

    return Field(fn, "nodes")


# ---------------------------------------------------------------- measures and metric


def integrate_mu_x(f, x, samples):
    """Integral of f against the visual measure at x, in pullback form.

    f is a Field or an array of values already aligned with the pullback nodes.
    """
    if isinstance(f, Field):
        vals = f.at(x, samples)
    else:
        vals = np.asarray(f, dtype=float)
        if vals.shape != (samples.size,):
            raise ValueError("values are not aligned with the sample set")
    return float(samples.weights @ vals)


def integrate_density_form(f, x, samples):
    """Same integral through the visual density at fixed nodes (oracle)."""
    vals = f(samples.nodes) if isinstance(f, Field) else np.asarray(f, dtype=float)
    lam = bm.visual_density(x, samples.nodes)
    return float(samples.weights @ (vals * lam))


class MetricAtPhi:
    """The Riemannian metric on fields at phi, discretized at the pullback nodes of x."""

    def __init__(self, phi, x, samples):
        self.phi = phi
        self.x = x
        self.samples = samples
        space = x.space
        s, lam = samples.pullback(x)
        self.boundary = s
        self.busemann_values = -0.5 * np.log(lam)
        self.phi_values = phi(s) if isinstance(phi, Field) else np.asarray(phi, dtype=float)
        expo = space.weight_exponent * (self.busemann_values - self.phi_values)
        shift = expo.max()
        rho = np.exp(expo - shift)
        b = samples.weights @ rho
        self.log_rho_scale = shift + np.log(b)
        self.rho_bar = rho / b
        self.node_weights = space.n * space.d * samples.weights * self.rho_bar

    @property
    def effective_size(self):
        """1 / sum (w rho_bar)^2: how many nodes the weighted quadrature effectively uses."""
        p = self.samples.weights * self.rho_bar
        return float(1.0 / (p @ p))

    def values(self, X):
        if isinstance(X, Field):
            return X(self.boundary)
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.samples.size:
            raise ValueError("field values are not aligned with the sample set")
        return X

    def inner(self, X, Y):
        return self.values(X) @ (self.node_weights * self.values(Y))

    def l2_inner(self, X, Y):
        """L2 inner product against the reference measure at x0 (uses the visual density)."""
        inv_density = np.exp(self.x.space.entropy * self.busemann_values)
        return self.values(X) @ (self.samples.weights * inv_density * self.values(Y))

    def gram(self, basis):
        B = self.values(basis)
        return (B * self.node_weights) @ B.T


def g_phi_inner(X, Y, metric):
    return metric.inner(X, Y)
