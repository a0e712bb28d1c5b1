"""Operator calculus at the barycenter x = P(phi).

Every operator is assembled in the frame at x from the pullback nodes of a
sample set: node j carries the direction v_j (the Busemann gradient of the
boundary point alpha_x(v_j)) and the quadrature weight w_j. Fields are
vectors of node values; the metric G_phi on them is diagonal with node
weights nd * w_j * rho_bar_j, so "whitened" coordinates divide by the square
roots of those weights.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, special

from . import algebra as alg
from . import spaces as sp
from .quadrature import MetricAtPhi


@dataclass(frozen=True)
class Check:
    """One certificate line: residual is compared with tolerance (residual <= tolerance passes)."""

    name: str
    ref: str
    residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def as_dict(self):
        return {"name": self.name, "ref": self.ref, "residual": float(self.residual),
                "tolerance": float(self.tolerance), "pass": self.passed}


# ---------------------------------------------------------------- weights


@dataclass(frozen=True)
class WeightProfile:
    log_rho: np.ndarray
    b: float
    rho_bar: np.ndarray

    @classmethod
    def from_metric(cls, metric):
        space = metric.x.space
        log_rho = space.weight_exponent * (metric.busemann_values - metric.phi_values)
        return cls(log_rho, float(np.exp(metric.log_rho_scale)), metric.rho_bar)

    @property
    def rho(self):
        return np.exp(self.log_rho)

    def bracket_ok(self, log_c0):
        """c0^{-1} <= rho <= c0, checked in log space."""
        return bool(np.all(np.abs(self.log_rho) <= log_c0))


# ---------------------------------------------------------------- pointwise operator


def assemble_Axs(x, s):
    """Matrix (frame at x) of xi -> xi + projection of xi onto the K-line (Cayley line) of grad Phi_s(x).

    C/H use the sum over the J-structures; O uses the Cayley-line projector.
    """
    from .busemann import busemann_gradient

    v = busemann_gradient(s, x)
    return axs_matrix(x.space, v)


def axs_matrix(space, v):
    v = np.asarray(v, dtype=float)
    dim = space.dim
    if space.field == "O":
        return np.eye(dim) + sp.line_projector(space, v)
    Jv = np.stack([J @ v for J in sp.J_matrices(space)], axis=-1)
    return np.eye(dim) + Jv @ Jv.T


# ---------------------------------------------------------------- bundle


@dataclass(eq=False)
class OperatorBundle:
    space: sp.SpaceDescriptor
    metric: MetricAtPhi
    weights: WeightProfile
    directions: np.ndarray      # (N, dn): v_j in the frame at x
    node_weights: np.ndarray    # G_phi weights nd w_j rho_bar_j
    Q: np.ndarray
    Q_hat: np.ndarray
    A: np.ndarray               # sum of rho_bar A_{x,s} (pointwise route)
    A_hat: np.ndarray           # id + Q_hat/n (line projector route)
    E: np.ndarray               # (dn, N) against node values
    U: np.ndarray
    lam: np.ndarray
    eta: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.space.n

    @property
    def dn(self):
        return self.space.dim

    @property
    def sqrt_g(self):
        return np.sqrt(self.node_weights)

    @property
    def E_white(self):
        """E in G-orthonormal node coordinates."""
        return self.E / self.sqrt_g

    @property
    def dphi(self):
        """(N, dn): dPhi(xi) at the nodes is directions @ xi."""
        return self.directions

    def AinvE(self):
        if "AinvE" not in self._cache:
            self._cache["AinvE"] = np.linalg.solve(self.A_hat, self.E)
        return self._cache["AinvE"]

    def AinvE_white(self):
        return self.AinvE() / self.sqrt_g

    def v_basis_white(self):
        """G-orthonormal basis of V_phi = image of dPhi, in whitened coordinates (N, dn)."""
        if "Vw" not in self._cache:
            Z = self.directions * self.sqrt_g[:, None]
            q, _ = np.linalg.qr(Z)
            self._cache["Vw"] = q
        return self._cache["Vw"]

    def l2_weights(self):
        return self.metric.samples.weights * np.exp(self.space.entropy * self.metric.busemann_values)

    def l2_norm(self, X):
        X = np.asarray(X, dtype=float)
        return float(np.sqrt(X @ (self.l2_weights() * X)))

    def g_norm(self, X):
        X = np.asarray(X, dtype=float)
        return float(np.sqrt(X @ (self.node_weights * X)))


def assemble_bundle(phi, x, samples, trace_tol=None, floor=1e-8):
    """All operators at (phi, x). x should be P(phi); any x is allowed for diagnostics."""
    space = x.space
    metric = MetricAtPhi(phi, x, samples)
    wp = WeightProfile.from_metric(metric)
    w = samples.weights
    V = samples.nodes
    rb = metric.rho_bar
    wr = w * rb
    dn, n, d = space.dim, space.n, space.d

    Q = dn * (V.T * wr) @ V
    Q = 0.5 * (Q + Q.T)

    # pointwise route: average of assembled A_{x,s} (J-sum for C/H, left-inverse Cayley basis for O)
    if space.field == "O":
        P_left = samples.line_projectors("left-inverse")
        A = np.eye(dn) + np.tensordot(wr, P_left, axes=1)
        P_hat = samples.line_projectors("conjugate-rotation")
    else:
        Js = sp.J_matrices(space)
        JV = np.einsum("tab,jb->jat", Js, V)
        flat = np.swapaxes(JV * np.sqrt(wr)[:, None, None], 0, 1).reshape(dn, -1)
        A = np.eye(dn) + flat @ flat.T
        P_hat = samples.line_projectors()
    Q_hat = n * np.tensordot(wr, P_hat, axes=1)
    Q_hat = 0.5 * (Q_hat + Q_hat.T)
    A = 0.5 * (A + A.T)
    A_hat = np.eye(dn) + Q_hat / n

    E = (dn + d) * (V * wr[:, None]).T
    lam = np.linalg.eigvalsh(Q)
    eta = np.linalg.eigvalsh(Q_hat)
    tol = 4.0 / math.sqrt(samples.size) if trace_tol is None else trace_tol
    if abs(np.trace(Q) - dn) > tol:
        raise RuntimeError(f"trace of Q is {np.trace(Q):.6g}, expected {dn}")
    if lam[0] < floor:
        raise RuntimeError(f"smallest eigenvalue of Q is {lam[0]:.3g}; sample set is degenerate")
    U = linalg.sqrtm(Q).real
    U = 0.5 * (U + U.T)
    return OperatorBundle(space, metric, wp, V, dn * wr, Q, Q_hat, A, A_hat, E, U, lam, eta)


# ---------------------------------------------------------------- structure


def random_isotropy(rng, reflections=4):
    """Random element of the Cayley-line preserving group: an even product of Cayley reflections."""
    if reflections % 2:
        raise ValueError("need an even number of reflections")
    O = np.eye(16)
    for _ in range(reflections):
        u = rng.standard_normal(9)
        u /= np.linalg.norm(u)
        O = O @ sp.cayley_reflection(u[0], u[1:])
    return O


def left_mult_units():
    """Matrices of c -> e_t c on the octonions, t = 0..7."""
    return np.stack([alg.left_matrix(alg.basis(8, t)) for t in range(8)])


def verify_structure(bundle, tol=5e-3, rotations=20, seed=0):
    """Structure identities for Q_hat; returns a list of Check."""
    space = bundle.space
    Q, Qh = bundle.Q, bundle.Q_hat
    checks = [Check("A equals A_hat (two assembly routes)", "exact-metric assembly identity",
                    float(np.max(np.abs(bundle.A - bundle.A_hat))), 1e-10)]
    if space.field != "O":
        Js = sp.J_matrices(space)
        avg = sum(J @ Q @ J.T for J in Js) / space.d
        checks.append(Check("Q_hat equals J-average of Q", "J-averaging identity",
                            float(np.max(np.abs(Qh - avg))), tol))
        return checks
    rng = np.random.default_rng(seed)
    L = left_mult_units()
    block_res = 0.0
    avg_res = 0.0
    for _ in range(rotations):
        O = random_isotropy(rng)
        Qh_O = O.T @ Qh @ O
        Q_O = O.T @ Q @ O
        q11, q22 = Qh_O[:8, :8], Qh_O[8:, 8:]
        block_res = max(block_res,
                        np.max(np.abs(q11 - np.trace(q11) / 8 * np.eye(8))),
                        np.max(np.abs(q22 - np.trace(q22) / 8 * np.eye(8))))
        avg = sum(Lt.T @ Q_O[:8, :8] @ Lt for Lt in L) / 8
        avg_res = max(avg_res, np.max(np.abs(q11 - avg)))
    checks.append(Check("isotropy blocks are scalar", "isotropy block form", float(block_res), tol))
    checks.append(Check("Cayley-line averaging identity", "Cayley-line averaging identity", float(avg_res), tol))
    checks.append(Check("Rayleigh quotient constant on Cayley lines", "Cayley-line Rayleigh constancy",
                        diagonal_constancy(bundle, rng), tol))
    return checks


def diagonal_constancy(bundle, rng, trials=10, per_line=16):
    space = bundle.space
    worst = 0.0
    for _ in range(trials):
        xi0 = sp.random_unit(space, rng)
        B = sp.line_basis(space, xi0)
        coef = rng.standard_normal((per_line, space.d))
        xi = coef @ B.T
        xi /= np.linalg.norm(xi, axis=1, keepdims=True)
        rq = np.einsum("ja,ab,jb->j", xi, bundle.A_hat, xi)
        worst = max(worst, float(rq.max() - rq.min()))
    return worst


def spectral_checks(bundle, tol=None):
    """Trace and interlacing lambda_1 <= eta_1 <= 1 <= eta_dn <= lambda_dn <= dn."""
    N = bundle.metric.samples.size
    tol_tr = 4.0 / math.sqrt(N) if tol is None else tol
    lam, eta, dn = bundle.lam, bundle.eta, bundle.dn
    slack = 1e-10
    chain = [eta[0] - lam[0], 1 - eta[0], eta[-1] - 1, lam[-1] - eta[-1], dn - lam[-1]]
    return [
        Check("trace Q", "trace identity", abs(np.trace(bundle.Q) - dn), tol_tr),
        Check("trace Q_hat", "trace identity", abs(np.trace(bundle.Q_hat) - dn), tol_tr),
        Check("interlacing", "eigenvalue chain", float(max(0.0, -min(chain))), slack),
        Check("Q positive definite", "eigenvalue floor", float(max(0.0, -lam[0])), 0.0),
    ]


def e_structure_checks(bundle, tol=1e-10, rng=None):
    """E o dPhi = ((n+1)/n) Q and E annihilates the G-orthogonal complement of V."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = bundle.n
    EdPhi = bundle.E @ bundle.directions
    res1 = float(np.max(np.abs(EdPhi - (n + 1) / n * bundle.Q)))
    Vw = bundle.v_basis_white()
    Xw = rng.standard_normal((bundle.metric.samples.size, 5))
    Xw -= Vw @ (Vw.T @ Xw)
    X = Xw / bundle.sqrt_g[:, None]
    res2 = float(np.max(np.abs(bundle.E @ X)) / max(1.0, np.max(np.abs(Xw))))
    return [Check("E on V equals ((n+1)/n) Q", "E on the embedded tangent space", res1, tol),
            Check("E vanishes on V-perp", "E annihilates the complement", res2, tol)]


# ---------------------------------------------------------------- Jacobians


def jacobian_AE(bundle):
    """Jacobian of A_hat^{-1} o E in G geometry: (closed chain, singular value route)."""
    n, dn = bundle.n, bundle.dn
    sign, logdetA = np.linalg.slogdet(bundle.A_hat)
    if sign <= 0:
        raise np.linalg.LinAlgError("A_hat is not positive definite")
    logdetQ = float(np.sum(np.log(bundle.lam)))
    chain = math.exp(dn * math.log((n + 1) / n) + 0.5 * logdetQ - logdetA)
    sv = np.linalg.svd(bundle.AinvE_white(), compute_uv=False)
    svd = float(np.prod(sv[:dn]))
    return chain, svd


def jacobian_report(bundle, tol=5e-3):
    n, d = bundle.n, bundle.space.d
    chain, svd = jacobian_AE(bundle)
    logdetQ = float(np.sum(np.log(bundle.lam)))
    bound = math.exp((0.5 - 1.0 / (n + 1)) * logdetQ)
    lip = float(np.linalg.norm(bundle.AinvE_white(), 2))
    lip_bound = (n + 1) * math.sqrt(d / n)
    e_norm = float(np.linalg.norm(bundle.E_white, 2))
    detA = float(np.linalg.det(bundle.A_hat))
    chain_lower = ((n + 1) / n) ** bundle.dn * math.exp(logdetQ / (n + 1))
    return {
        "chain": chain, "svd": svd, "bound": bound, "lipschitz": lip,
        "checks": [
            Check("Jacobian routes agree", "chain vs singular values", abs(chain - svd), 1e-8),
            Check("Jacobian ceiling", "Jacobian ceiling", chain - 1.0, tol),
            Check("Jacobian below det(Q)^(1/2-1/(n+1))", "Jacobian ceiling", chain - bound, 1e-10),
            Check("Lipschitz bound of A^-1 E", "Jacobian ceiling", lip - lip_bound, 1e-10),
            Check("Lipschitz bound of E", "E norm ceiling", e_norm - lip_bound, 1e-10),
            Check("det A_hat lower chain", "det A_hat chain", chain_lower - detA, 1e-10 * detA),
        ],
    }


def whitened_basis(bundle, W):
    """G-orthonormal basis (whitened, N x k) of the span of the fields W (N x k)."""
    W = np.asarray(W, dtype=float)
    Ww = W * bundle.sqrt_g[:, None]
    q, r = np.linalg.qr(Ww)
    if np.min(np.abs(np.diag(r))) < 1e-12 * np.max(np.abs(np.diag(r))):
        raise ValueError("subspace is rank deficient")
    return q


def jacobian_on_subspace(M_white, Bw):
    """|det| of M restricted to the subspace with orthonormal whitened basis Bw."""
    return abs(float(np.linalg.det(M_white @ Bw)))


# ---------------------------------------------------------------- constants


def _log_add(a, b):
    return float(np.logaddexp(a, b))


def cap_fraction(dim, cos_angle=0.5):
    """Fraction of the unit sphere S^{dim-1} with <w, v> >= cos_angle: (beta route, quadrature route)."""
    a = (dim - 1) / 2
    beta_route = 0.5 * special.betainc(a, 0.5, 1.0 - cos_angle ** 2)
    num = integrate.quad(lambda t: (1 - t * t) ** ((dim - 3) / 2), cos_angle, 1.0)[0]
    den = integrate.quad(lambda t: (1 - t * t) ** ((dim - 3) / 2), -1.0, 1.0)[0]
    return float(beta_route), float(num / den)


def boundary_energy(x, samples):
    """Integral over the reference measure of exp(2 Phi_s(x)); exact for moment-calibrated weights."""
    from .busemann import busemann

    return float(samples.weights @ np.exp(2.0 * busemann(samples.nodes, x)))


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    log_value: float | None
    provenance: str
    note: str = ""

    @property
    def value(self):
        if self.log_value is None:
            return None
        with np.errstate(over="ignore", under="ignore"):
            return float(np.exp(self.log_value))

    def as_dict(self):
        return {"name": self.name, "log_value": self.log_value, "value": self.value,
                "provenance": self.provenance, "note": self.note}


class ConstantsLedger:
    """Constants of the quantitative chain, stored as natural logs (most overflow a double)."""

    def __init__(self, space, R=2.0, sigma=0.1, samples=None, radii=None):
        self.space = space
        self.R = R
        self.sigma = sigma
        dn, n, d = space.dim, space.n, space.d
        k = space.weight_exponent
        delta = space.entropy
        if samples is None:
            from .quadrature import generate_samples

            samples = generate_samples(space, max(4096, 8 * dn * dn), seed=0)
        radii = np.linspace(0.0, 3.0, 13) if radii is None else radii
        rng = np.random.default_rng(1)
        dirs = sp.random_unit(space, rng, 4)
        energies = [boundary_energy(sp.Point.from_tangent(space, r * u), samples)
                    for r in radii for u in dirs]
        self.energy_min = min(energies)
        e = {}

        def put(name, logv, prov, note=""):
            e[name] = LedgerEntry(name, None if logv is None else float(logv), prov, note)

        put("R", math.log(R), "configured")
        log_r0 = -k * R + math.log(self.energy_min)
        put("r_0", log_r0, "numerically-estimated",
            "exp(-(dn+d)R) * min over a radial grid of the boundary energy")
        log_R1 = math.log(2.0) + 2 * k * R - log_r0
        R1 = math.exp(log_R1)
        put("R_1", log_R1, "numerically-estimated", "2 exp(2(dn+d)R)/r_0")
        log_c0 = k * (R + R1) + math.log(k)
        put("c_0", log_c0, "closed-form")
        cb, cq = cap_fraction(dn)
        self.cap_routes = (cb, cq)
        put("c_2", math.log(cb), "closed-form", "spherical cap fraction at angle pi/3")
        log_C2 = math.log(dn / 4) + math.log(cb) - 2 * log_c0
        put("C_2", log_C2, "closed-form")
        log_c3 = (0.5 * (math.log(2 / dn) + 2 * log_c0 + delta * R1) + 0.5 * math.log(dn)
                  + 2 * math.log((n + 1) / n) - 0.5 * log_C2)
        put("c_3", log_c3, "closed-form")
        log_C1p = math.log(0.5 - 1 / (n + 1)) - math.log(4) + (dn - 2) * log_C2 - 2 * log_c3
        put("C_1'", log_C1p, "closed-form")
        log_C3 = math.log(0.5) + (dn / 2 - 1) * math.log(1 - 1 / dn)
        put("C_3", log_C3, "closed-form")
        log_c4 = math.log(dn / 2) - 2 * log_c0 - delta * R1 + log_C3
        put("c_4", log_c4, "closed-form")
        log_C1 = math.log(0.25) + min(log_C1p, log_c4)
        put("C_1", log_C1, "closed-form")
        log_c5 = _log_add(0.5 * (math.log(2 / dn) + 2 * log_c0 + delta * R1),
                          math.log(2 * (n + 1) / n) + 0.5 * (math.log(2) + delta * R1))
        put("c_5", log_c5, "closed-form")
        log_L = math.log(2 * k / math.sqrt(dn))
        log_C5 = min(0.5 * log_C1 + 0.5 * (1 - 2 * dn) * log_L, log_c5 - dn * log_L, 0.0)
        put("C_5", log_C5, "closed-form")
        put("C_6", None, "undefined",
            "needs the perturbation constant C_0, which is not explicit and multiplies eps = 0")
        put("sigma", math.log(sigma), "configured")
        put("c", 3 * math.log(sigma) - math.log(3), "configured", "sigma^3/3")
        self.entries = e

    def __getitem__(self, name):
        return self.entries[name]

    def log(self, name):
        return self.entries[name].log_value

    def as_dict(self):
        return {"space": self.space.name, "R": self.R, "sigma": self.sigma,
                "entries": [v.as_dict() for v in self.entries.values()]}

    def closed_form_residuals(self):
        """Recompute two closed-form entries directly and return the gaps."""
        dn, k = self.space.dim, self.space.weight_exponent
        R1 = math.exp(self.log("R_1"))
        c0 = k * (self.R + R1) + math.log(k)
        C3 = 0.5 * (1 - 1 / dn) ** (dn / 2 - 1)
        return {"c_0": abs(c0 - self.log("c_0")), "C_3": abs(math.log(C3) - self.log("C_3"))}


def eigen_floor(bundle, ledger):
    """lambda_1(Q) >= C_2; returns (pass, log margin)."""
    margin = math.log(bundle.lam[0]) - ledger.log("C_2")
    return margin >= 0.0, margin


def norm_comparison(bundle, ledger, fields):
    """Lower bracket of the G-norm by the L2 norm, for each field; returns worst log margin."""
    dn, delta = bundle.dn, bundle.space.entropy
    R1 = math.exp(ledger.log("R_1"))
    log_const = 0.5 * (math.log(dn / 2) - 2 * ledger.log("c_0") - delta * R1)
    worst = math.inf
    for X in fields:
        lg, l2 = bundle.g_norm(X), bundle.l2_norm(X)
        if l2 == 0:
            continue
        worst = min(worst, math.log(lg) - (log_const + math.log(l2)))
    return worst


def refined_jacobian_bound(bundle, X, W, ledger, slack=1e-10):
    """Refined Jacobian inequalities on the span of W (N x dn fields) at the unit field X in W.

    Returns a dict with the left side det(A_hat^{-1}) Jac_{G,W} E, the ledger right
    side, the projection penalty check and, for W = V, the sharp eigenvalue form.
    """
    n, dn = bundle.n, bundle.dn
    Bw = whitened_basis(bundle, W)
    if Bw.shape[1] != dn:
        raise ValueError(f"subspace must have dimension {dn}")
    X = np.asarray(X, dtype=float)
    gX = bundle.g_norm(X)
    X = X / gX
    detA = float(np.linalg.det(bundle.A_hat))
    lhs = jacobian_on_subspace(bundle.E_white, Bw) / detA
    resid = X - bundle.directions @ (bundle.AinvE() @ X)
    r2 = bundle.l2_norm(resid) ** 2
    with np.errstate(under="ignore"):
        C1 = math.exp(ledger.log("C_1"))
    rhs = 1.0 - C1 * r2

    Vw = bundle.v_basis_white()
    cosines = np.linalg.svd(Vw.T @ Bw, compute_uv=False)
    proj_jac = float(np.prod(cosines))
    worst_perp2 = float(1.0 - cosines.min() ** 2)
    C3 = math.exp(ledger.log("C_3"))
    proj_bound = 1.0 - C3 * worst_perp2

    lam = bundle.lam
    sharp = 1.0 - (0.5 - 1 / (n + 1)) * 0.25 * lam[0] ** (dn - 2) * (lam[0] - lam[-1]) ** 2
    chain, _ = jacobian_AE(bundle)
    return {
        "lhs": lhs, "rhs": rhs, "margin": rhs - lhs,
        "projection_jacobian": proj_jac, "projection_bound": proj_bound,
        "sharp_V_lhs": chain, "sharp_V_bound": sharp,
        "checks": [
            Check("refined Jacobian bound", "refined Jacobian", lhs - rhs, slack),
            Check("projection penalty", "projection penalty", proj_jac - proj_bound, slack),
            Check("eigenvalue-gap bound on V", "refined Jacobian on V", chain - sharp, slack),
        ],
    }


# ---------------------------------------------------------------- matrix lemmas


def _random_pd(rng, m, cond=10.0):
    Qm, _ = np.linalg.qr(rng.standard_normal((m, m)))
    ev = np.exp(rng.uniform(0, math.log(cond), m))
    return (Qm * ev) @ Qm.T


def _trace_free(rng, m, scale):
    H = rng.standard_normal((m, m))
    H -= np.trace(H) / m * np.eye(m)
    return H * scale / np.linalg.norm(H, 2)


def perturbation_constant(m, R):
    return math.factorial(m) * 2 ** m * (2 ** m - 1) * (2 * R + 1) ** (m - 2)


def matrix_lemma_suite(seed=0, trials=10000, sizes=(2, 16)):
    """Randomized checks of the matrix facts; returns {fact: violations}."""
    rng = np.random.default_rng(seed)
    lo, hi = sizes
    viol = {"log_concavity": 0, "log_concavity_equality": 0, "determinant_perturbation": 0,
            "interlacing_average": 0, "interlacing_block": 0, "block_determinant": 0}
    for _ in range(trials):
        m = int(rng.integers(lo, hi + 1))
        k = int(rng.integers(2, 6))
        mats = [_random_pd(rng, m) for _ in range(k)]
        mats = [M / np.linalg.det(M) ** (1 / m) for M in mats]
        if np.linalg.det(sum(mats) / k) < 1 - 1e-9:
            viol["log_concavity"] += 1
        if abs(np.linalg.det(sum([mats[0]] * k) / k) - 1) > 1e-9:
            viol["log_concavity_equality"] += 1

        R = float(rng.uniform(0.1, 2.0))
        n1, n2 = rng.uniform(0, R, 2)
        H1, H2 = _trace_free(rng, m, n1), _trace_free(rng, m, n2)
        lhs = abs(np.linalg.det(np.eye(m) + H1 + H2) - np.linalg.det(np.eye(m) + H1))
        rhs = perturbation_constant(m, R) * n2 * (n1 + n2)
        if lhs > rhs * (1 + 1e-12) + 1e-12:
            viol["determinant_perturbation"] += 1

        A = _random_pd(rng, m, cond=100.0)
        Os = [np.linalg.qr(rng.standard_normal((m, m)))[0] for _ in range(k)]
        avg = sum(O @ A @ O.T for O in Os) / k
        ka, la = np.linalg.eigvalsh(A), np.linalg.eigvalsh(avg)
        if la[0] < ka[0] - 1e-10 or la[-1] > ka[-1] + 1e-10:
            viol["interlacing_average"] += 1

        mm = 2 * max(1, m // 2)
        Bfull = _random_pd(rng, mm, cond=100.0)
        h = mm // 2
        Bd = Bfull.copy()
        Bd[:h, h:] = 0
        Bd[h:, :h] = 0
        kb, lb = np.linalg.eigvalsh(Bfull), np.linalg.eigvalsh(Bd)
        if lb[0] < kb[0] - 1e-10 or lb[-1] > kb[-1] + 1e-10:
            viol["interlacing_block"] += 1
        if np.linalg.det(Bfull) > np.linalg.det(Bd) * (1 + 1e-10):
            viol["block_determinant"] += 1
    return viol
