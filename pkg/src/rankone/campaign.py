"""Verification campaigns: configuration, the suite registry, and report assembly.

A suite is a list of independent cases. Each case gets its own generator
seeded from (config seed, suite, case index), so cases can run in any order
or in parallel and the assembled report is the same.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import __version__
from . import algebra as alg
from . import busemann as bm
from . import operators as op
from . import projection as pr
from . import quadrature as qd
from . import spaces as sp

SCHEMA = "v1"


class ConfigError(ValueError):
    """Invalid campaign configuration (exit code 2)."""


@dataclass(frozen=True)
class CampaignConfig:
    suite: str = "algebra"
    space: str = "CH2"
    n_samples: int | None = None
    seed: int = 0
    R: float = 2.0
    sigma: float = 0.1
    radius: float = 2.0
    tol_structure: float = 5e-3
    phi: tuple = ("random", 10)
    points: int = 100
    trials: int = 1000
    jobs: int = 1
    out: str | None = None

    def validate(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {sorted(SUITES)}")
        if self.space not in sp.SUPPORTED:
            raise ConfigError(f"unknown space {self.space!r}; choose from {sp.SUPPORTED}")
        if self.n_samples is not None and (self.n_samples < 2 or self.n_samples % 2):
            raise ConfigError("--n-samples must be even and at least 2")
        for name in ("R", "sigma", "radius", "tol_structure"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("points", "trials", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.phi_count < 1:
            raise ConfigError("phi specification yields no fields")
        return self

    @property
    def descriptor(self):
        return sp.get_space(self.space)

    @property
    def samples_size(self):
        if self.n_samples is not None:
            return self.n_samples
        return 16384 if self.space == "OH2" else 4096

    @property
    def phi_count(self):
        kind, arg = self.phi
        return arg if kind == "random" else len(arg)

    def report_config(self):
        """The fields that determine the report (jobs and output paths do not)."""
        d = asdict(self)
        d.pop("jobs")
        d.pop("out")
        d["n_samples"] = self.samples_size
        d["phi"] = phi_spec_to_json(self.phi)
        return d


def parse_phi(spec):
    """'random:K' or a list of dicts {"random": seed} / {"bump": {...}} / {"values": [...]}."""
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        if kind != "random" or not arg.isdigit():
            raise ConfigError(f"cannot parse phi spec {spec!r}; expected random:K")
        return ("random", int(arg))
    if isinstance(spec, list):
        items = []
        for item in spec:
            if not isinstance(item, dict) or len(item) != 1:
                raise ConfigError(f"bad phi entry {item!r}")
            (kind, arg), = item.items()
            if kind not in ("random", "bump", "values"):
                raise ConfigError(f"bad phi kind {kind!r}")
            items.append((kind, arg))
        return ("list", tuple(items))
    raise ConfigError(f"bad phi spec {spec!r}")


def phi_spec_to_json(phi):
    kind, arg = phi
    if kind == "random":
        return f"random:{arg}"
    return [{k: a} for k, a in arg]


_FLAG_KEYS = {"space", "n_samples", "seed", "R", "sigma", "radius", "tol_structure", "phi",
              "points", "trials", "jobs", "out"}


def build_config(suite, flags, config_path=None):
    """Merge a JSON config file with command-line flags; flags win when not None."""
    merged = {}
    if config_path is not None:
        try:
            with open(config_path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - _FLAG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        merged.update(data)
    merged.update({k: v for k, v in flags.items() if v is not None})
    if "phi" in merged:
        merged["phi"] = parse_phi(merged["phi"])
    try:
        cfg = CampaignConfig(suite=suite, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


# ---------------------------------------------------------------- records


def check(case, name, ref, residual, tolerance):
    residual = float(residual)
    return {"case": case, "name": name, "ref": ref, "residual": residual,
            "tolerance": float(tolerance),
            "pass": bool(math.isfinite(residual) and residual <= tolerance)}


def from_checks(case, checks):
    return [check(case, c.name, c.ref, c.residual, c.tolerance) for c in checks]


@dataclass
class CaseResult:
    checks: list = field(default_factory=list)
    spectra: list = field(default_factory=list)
    certificates: list = field(default_factory=list)

    def add(self, *records):
        self.checks.extend(records)


def case_rng(cfg, case_index):
    tag = sorted(SUITES).index(cfg.suite)
    return np.random.default_rng([cfg.seed, tag, case_index])


@lru_cache(maxsize=8)
def _samples(space_name, N, seed):
    return qd.generate_samples(sp.get_space(space_name), N, seed)


def samples_for(cfg):
    return _samples(cfg.space, cfg.samples_size, cfg.seed)


@lru_cache(maxsize=8)
def _ledger(space_name, R, sigma, N, seed):
    return op.ConstantsLedger(sp.get_space(space_name), R, sigma, samples=_samples(space_name, N, seed))


def ledger_for(cfg):
    return _ledger(cfg.space, cfg.R, cfg.sigma, cfg.samples_size, cfg.seed)


def max_abs(a):
    return float(np.max(np.abs(a)))


# ---------------------------------------------------------------- algebra


def _algebra_laws(cfg, rng):
    res = CaseResult()
    laws = alg.law_residuals(8, cfg.trials, int(rng.integers(2 ** 31)))
    for name, r in laws.items():
        res.add(check("random", f"law {name}", "octonion identity", r, 1e-12))
    for name, r in alg.basis_law_residuals().items():
        res.add(check("basis", f"law {name}", "octonion identity on basis units", r, 1e-12))
    a = rng.standard_normal((cfg.trials, 8))
    res.add(check("unit", "1 a = a = a 1", "unit element",
                  max(max_abs(alg.mul(alg.unit(8), a) - a), max_abs(alg.mul(a, alg.unit(8)) - a)), 0.0))
    e1e2 = alg.mul(alg.basis(8, 1), alg.basis(8, 2))
    res.add(check("table", "e1 e2 = +-e3", "multiplication table",
                  abs(abs(e1e2[3]) - 1.0) + max_abs(np.delete(e1e2, 3)), 0.0))
    for d in (1, 2, 4):
        r = alg.law_residuals(d, 200, int(rng.integers(2 ** 31)))
        res.add(check(f"d={d}", "all laws", "composition algebra identity", max(r.values()), 1e-12))
    return res


def _random_vector_payload(rng, scale=0.6):
    v = np.zeros((3, 8))
    v[0, 0] = 1.0
    v[1:] = rng.standard_normal((2, 8)) * scale / 4
    return v


def _algebra_jordan(cfg, rng):
    res = CaseResult()
    x0 = alg.JordanElement.from_diag_offdiag([1.0, 0.0, 0.0], np.zeros((3, 8)))
    res.add(check("x0", "x0 o x0 = x0", "special inner point", max_abs((x0 * x0).vec() - x0.vec()), 1e-15))
    res.add(check("x0", "x0 classified inner", "inner/outer classification",
                  0.0 if alg.classify_point(x0) == "inner" else 1.0, 0.0))
    worst_idem = worst_member = worst_pair = worst_round = 0.0
    wrong_class = 0
    space = sp.get_space("OH2")
    for _ in range(cfg.points):
        p = sp.random_point(space, rng, 3.0)
        q = sp.random_point(space, rng, 3.0)
        X = alg.JordanElement(alg.outer(p.payload, p.payload, False))
        Y = alg.JordanElement(alg.outer(q.payload, q.payload, False))
        scale = max(1.0, float(np.max(np.abs(X.mat))))
        worst_idem = max(worst_idem, max_abs((X * X).mat - X.mat) / scale ** 2)
        worst_member = max(worst_member, alg.membership_residual((X * Y).mat) / scale ** 2)
        if alg.classify_point(X) != "inner":
            wrong_class += 1
        v = _random_vector_payload(rng)
        w = _random_vector_payload(rng)
        tr = alg.trace_pairing(alg.outer(v, v, False), alg.outer(w, w, False))
        worst_pair = max(worst_pair, abs(tr - alg.vector_model_pairing(v, w)) / max(1.0, abs(tr)))
        sign, payload = alg.decompose_idempotent(X)
        worst_round = max(worst_round, max_abs(payload - p.payload) / scale + (sign != 1.0))
    res.add(check("random", "X o X = X for idempotents", "idempotent", worst_idem, 1e-12))
    res.add(check("random", "Jordan product stays in the algebra", "membership", worst_member, 1e-12))
    res.add(check("random", "idempotents classified inner", "inner/outer classification", wrong_class, 0))
    res.add(check("random", "trace pairing closed form", "vector-model pairing", worst_pair, 1e-10))
    res.add(check("random", "decompose o build = id", "idempotent uniqueness", worst_round, 1e-10))
    u = np.zeros((3, 8))
    u[1:] = rng.standard_normal((2, 8))
    Xu = alg.outer(u, u, False) / -(alg.inner(u[1], u[1]) + alg.inner(u[2], u[2]))
    res.add(check("outer", "normalized X_u with u0 = 0 classified outer", "inner/outer classification",
                  0.0 if alg.classify_point(Xu) == "outer" else 1.0, 0.0))
    N = alg.outer(np.array([alg.unit(8), alg.unit(8), np.zeros(8)]),
                  np.array([alg.unit(8), alg.unit(8), np.zeros(8)]), False)
    res.add(check("null", "null element classified nilpotent-class", "inner/outer classification",
                  0.0 if alg.classify_point(N) == "nilpotent-class" else 1.0, 0.0))
    return res


# ---------------------------------------------------------------- spaces


def _spaces_models(cfg, rng):
    space = cfg.descriptor
    res = CaseResult()
    x0 = sp.Point.base(space)
    norm_res = dist_res = round_res = tri = explog = floor_ratio = 0.0
    for _ in range(cfg.points):
        x = sp.random_point(space, rng, cfg.radius)
        y = sp.random_point(space, rng, cfg.radius)
        norm_res = max(norm_res, x.normalization_residual() / max(1.0, x.payload[0, 0] ** 2))
        d = sp.distance(x, y)
        other = sp.distance_vector_model(x, y) if space.field == "O" else sp.distance_projective(x, y)
        dist_res = max(dist_res, abs(sp.distance_trace(x, y) - other), abs(d - other))
        back = sp.Point.from_jvec(space, x.jvec)
        round_res = max(round_res, max_abs(back.payload - x.payload) / max(1.0, x.payload[0, 0]))
        z = sp.random_point(space, rng, 5.0)
        xx, yy = sp.random_point(space, rng, 5.0), sp.random_point(space, rng, 5.0)
        tri = max(tri, sp.distance(xx, yy) - sp.distance(xx, z) - sp.distance(z, yy))
        p = sp.random_point(space, rng, 10.0)
        err = sp.distance(sp.exp_point(x0, sp.log(x0, p)), p)
        r = float(np.linalg.norm(p.log0))
        if r <= 5.0:
            explog = max(explog, err)
        # a coordinate at x0 carries eps relative error, which moves the point by about exp(2r) eps
        floor_ratio = max(floor_ratio, err / (np.exp(2 * r) * np.finfo(float).eps))
    tag = "vector model" if space.field == "O" else "projective model"
    res.add(check("random", "normalization", "point normalization", norm_res, 1e-12))
    res.add(check("random", f"distance: trace formula vs {tag}", "model equivalence", dist_res, 1e-10))
    res.add(check("random", "payload round trip through the matrix model", "model equivalence", round_res, 1e-10))
    res.add(check("random", "triangle inequality in B(x0, 5)", "metric axiom", max(tri, 0.0), 1e-9))
    res.add(check("random", "exp o log = id in B(x0, 5)", "normal coordinates", explog, 1e-9))
    res.add(check("random", "exp o log in B(x0, 10) within 10 exp(2r) eps", "normal coordinates",
                  floor_ratio, 10.0))
    worst = 0.0
    for _ in range(20):
        v = sp.random_unit(space, rng) * rng.uniform(0, 20)
        worst = max(worst, max_abs(sp.log(x0, sp.Point.from_tangent(space, v)) - v))
    res.add(check("random", "log o exp = id for |v| <= 20", "normal coordinates", worst, 1e-9))
    x = sp.random_point(space, rng, cfg.radius)
    v = sp.random_unit(space, rng)
    res.add(check("geodesic", "unit speed d(g(0), g(2)) = 2", "geodesic",
                  abs(sp.distance(sp.geodesic(x, v, 0.0), sp.geodesic(x, v, 2.0)) - 2.0), 1e-9))
    res.add(check("geodesic", "g(0) = x", "geodesic", sp.distance(sp.geodesic(x, v, 0.0), x), 1e-12))
    if space.field == "O":
        e = np.zeros(16)
        e[0] = 1.0
        res.add(check("example", "d((cosh 1, sinh 1, 0), x0) = 1", "distance",
                      abs(sp.distance(sp.Point.from_tangent(space, e), x0) - 1.0), 1e-12))
    return res


def _line_pair(space, rng, same):
    """Unit vectors v, w at x0 in one K-line (same=True) or in orthogonal K-lines."""
    if space.field == "O":
        a, b = rng.standard_normal((2, 8))
        a /= alg.norm(a)
        b /= alg.norm(b)
        if same:
            theta = rng.uniform(0, np.pi / 2)
            c = rng.standard_normal(8)
            c /= alg.norm(c)
            base = np.concatenate([np.cos(theta) * alg.unit(8), np.sin(theta) * c])
            v = np.concatenate([alg.mul(a, base[:8]), alg.mul(a, base[8:])])
            w = np.concatenate([alg.mul(b, base[:8]), alg.mul(b, base[8:])])
            return v, w
        return np.concatenate([a, np.zeros(8)]), np.concatenate([np.zeros(8), b])
    v = sp.random_unit(space, rng)
    if same:
        t = int(rng.integers(1, space.d))
        return v, sp.J_structure(space, t, v)
    w = sp.random_unit(space, rng)
    w = w - sp.line_projection(space, v, w)
    return v, w / np.linalg.norm(w)


def _spaces_curvature(cfg, rng):
    space = cfg.descriptor
    res = CaseResult()
    ks, worst_exact = [], 0.0
    x0 = sp.Point.base(space)
    for i in range(500):
        x = sp.random_point(space, rng, 1.0)
        v, w = sp.random_unit(space, rng), sp.random_unit(space, rng)
        ks.append(sp.sectional_curvature_probe(x, v, w))
        if i < 50:
            worst_exact = max(worst_exact, abs(sp.sectional_curvature_probe(x0, v, w)
                                               - sp.curvature_exact(space, v, w)))
    ks = np.array(ks)
    res.add(check("random planes", "curvature >= -4.05", "curvature pinching", max(0.0, -4.05 - ks.min()), 0.0))
    res.add(check("random planes", "curvature <= -0.95", "curvature pinching", max(0.0, ks.max() + 0.95), 0.0))
    res.add(check("random planes", "probe vs closed form at x0", "curvature", worst_exact, 1e-3))
    same = max(abs(sp.sectional_curvature_probe(sp.random_point(space, rng, 1.0), *_line_pair(space, rng, True)) + 4)
               for _ in range(10))
    orth = max(abs(sp.sectional_curvature_probe(sp.random_point(space, rng, 1.0), *_line_pair(space, rng, False)) + 1)
               for _ in range(10))
    res.add(check("same line", "curvature -4 on a K-line", "curvature data", same, 0.05))
    res.add(check("orthogonal lines", "curvature -1 across orthogonal K-lines", "curvature data", orth, 0.05))
    if space.field == "C":
        v = sp.random_unit(space, rng)
        w = sp.random_unit(space, rng)
        # q(v, w) real: remove the J-component of w along v
        w = w - (w @ sp.J_structure(space, 1, v)) * sp.J_structure(space, 1, v) - (w @ v) * v
        k = sp.sectional_curvature_probe(x0, v, w / np.linalg.norm(w))
        res.add(check("real pairing", "curvature -1 when q(v, w) is real", "curvature data", abs(k + 1), 0.05))
    hinge_same = hinge_orth = 0.0
    for _ in range(50):
        v, w = _line_pair(space, rng, True)
        t1, t2 = rng.uniform(0.1, 3.0, 2)
        d = sp.distance(sp.Point.from_tangent(space, t1 * v), sp.Point.from_tangent(space, t2 * w))
        hinge_same = max(hinge_same, abs(d - sp.hinge_same_line(t1, t2, float(v @ w))))
        v, w = _line_pair(space, rng, False)
        d = sp.distance(sp.Point.from_tangent(space, t1 * v), sp.Point.from_tangent(space, t2 * w))
        hinge_orth = max(hinge_orth, abs(d - sp.hinge_orthogonal(t1, t2)))
    res.add(check("hinges", "same-line hinge matches curvature -4 law of cosines", "hinge exactness",
                  hinge_same, 1e-10))
    res.add(check("hinges", "orthogonal hinge matches curvature -1 law of cosines", "hinge exactness",
                  hinge_orth, 1e-10))
    return res


def _spaces_structures(cfg, rng):
    space = cfg.descriptor
    res = CaseResult()
    dim = space.dim
    if space.field != "O":
        worst_sq = worst_iso = 0.0
        for t in range(space.d):
            Jt = sp.J_matrices(space)[t]
            worst_iso = max(worst_iso, max_abs(Jt.T @ Jt - np.eye(dim)))
            if t >= 1:
                worst_sq = max(worst_sq, max_abs(Jt @ Jt + np.eye(dim)))
        res.add(check("J", "J_t isometric", "J-structures", worst_iso, 1e-14))
        res.add(check("J", "J_t J_t = -id", "J-structures", worst_sq, 1e-14))
    else:
        try:
            sp.J_structure(space, 1, np.ones(dim))
            raised = 0.0
        except ValueError:
            raised = 1.0
        res.add(check("J", "no global J over the octonions", "non-associativity", 1.0 - raised, 0.0))
        idem = orth = rq = lines = trans = 0.0
        for _ in range(50):
            v, w = sp.random_unit(space, rng, 2)
            pw = sp.cayley_line_projection(space, v, w)
            idem = max(idem, max_abs(sp.cayley_line_projection(space, v, pw) - pw))
            B = sp.line_basis(space, v)
            orth = max(orth, max_abs(B.T @ (w - pw)))
            # Rayleigh quotient <u, pi(u)>/|u|^2 over u in the Cayley line of w0
            w0 = sp.random_unit(space, rng)
            Bw = sp.line_basis(space, w0)
            us = rng.standard_normal((8, 8)) @ Bw.T
            q = np.einsum("ja,ja->j", us, sp.cayley_line_projection(space, v, us.T).T) / np.einsum("ja,ja->j", us, us)
            rq = max(rq, float(q.max() - q.min()))
            O = op.random_isotropy(rng)
            lines = max(lines, max_abs(sp.line_projector(space, O @ v) - O @ sp.line_projector(space, v) @ O.T))
            F = sp.rotation_to_first_factor(v)
            Fv = F @ v
            trans = max(trans, float(np.linalg.norm(Fv[8:])) + abs(float(np.linalg.norm(Fv)) - 1.0))
        res.add(check("Cayley", "projection idempotent", "Cayley-line projection", idem, 1e-12))
        res.add(check("Cayley", "residual orthogonal to the line", "Cayley-line projection", orth, 1e-12))
        res.add(check("Cayley", "Rayleigh quotient constant along a Cayley line", "Cayley-line Rayleigh constancy",
                      rq, 1e-10))
        res.add(check("Cayley", "isotropy maps Cayley lines to Cayley lines", "isotropy action", lines, 1e-12))
        res.add(check("Cayley", "every Cayley line moves onto the first factor", "isotropy transitivity",
                      trans, 1e-12))
        e = np.eye(16)
        res.add(check("Cayley", "(1,0) and (0,b) lines are orthogonal", "Cayley-line projection",
                      max_abs(sp.cayley_line_projection(space, e[0], e[8 + int(rng.integers(8))])), 1e-15))
    worst_end = 0.0
    distinct = math.inf
    for _ in range(20):
        s = sp.random_unit(space, rng)
        t = rng.uniform(0, 3)
        x = sp.Point.from_tangent(space, -t * s)
        worst_end = max(worst_end, max_abs(sp.boundary_endpoint(x, bm.busemann_gradient(s, x)) - s))
        y = sp.random_point(space, rng, cfg.radius)
        v1, v2 = sp.random_unit(space, rng, 2)
        distinct = min(distinct, float(np.linalg.norm(sp.boundary_endpoint(y, v1) - sp.boundary_endpoint(y, v2))))
    res.add(check("boundary", "endpoint of the gradient ray is s", "boundary identification", worst_end, 1e-9))
    res.add(check("boundary", "distinct directions give distinct endpoints", "boundary identification",
                  -distinct, -1e-6))
    return res


# ---------------------------------------------------------------- busemann


def _busemann_calculus(cfg, rng):
    space = cfg.descriptor
    res = CaseResult()
    x0 = sp.Point.base(space)
    s = sp.random_unit(space, rng, 50)
    res.add(check("x0", "Phi_s(x0) = 0", "normalization", max_abs(bm.busemann(s, x0)), 1e-15))
    ray = max(abs(float(bm.busemann(s[0], sp.Point.from_tangent(space, -t * s[0]))) + t) for t in (1.0, 2.5))
    res.add(check("ray", "Phi_s(ray(t)) = -t", "distance-like", ray, 1e-10))
    large = horo = lip = grad_norm = grad_dir = hess = pos = flow = 0.0
    for i in range(cfg.points):
        x = sp.random_point(space, rng, cfg.radius)
        y = sp.random_point(space, rng, cfg.radius)
        si = sp.random_unit(space, rng)
        if i < 20:
            large = max(large, abs(float(bm.busemann(si, x)) - bm.busemann_large_t(si, x)))
            horo = max(horo, abs(float(bm.busemann(si, x)) - bm.busemann_horosphere(si, x)))
        lip = max(lip, max_abs(bm.busemann(s, x) - bm.busemann(s, y)) - sp.distance(x, y))
        g = bm.busemann_gradient(si, x)
        fd = bm.fd_gradient(si, x)
        grad_norm = max(grad_norm, abs(float(np.linalg.norm(fd)) - 1.0))
        v = sp.random_unit(space, rng)
        grad_dir = max(grad_dir, abs(float(fd @ v - g @ v)))
        hess = max(hess, bm.hessian_check(si, x))
        if i < 20:
            H = bm.fd_hessian_busemann(si, x)
            pos = max(pos, -float(np.linalg.eigvalsh(H - np.exp(2 * float(bm.busemann(si, x))) * np.eye(space.dim))[0]))
            if i < 5:
                t = 0.7
                flow = max(flow, abs(float(bm.busemann(si, bm.gradient_flow(si, x, t)) - bm.busemann(si, x)) - t))
    res.add(check("random", "large-T limit oracle", "Busemann definition", large, 1e-8))
    res.add(check("random", "horosphere-distance oracle", "Busemann via horospheres", horo, 1e-6))
    res.add(check("random", "1-Lipschitz", "distance-like", max(lip, 0.0), 1e-12))
    res.add(check("random", "|grad Phi_s| = 1 by finite differences", "distance-like", grad_norm, 1e-8))
    res.add(check("random", "directional derivative matches gradient", "gradient", grad_dir, 1e-6))
    res.add(check("random", "Hessian identity", "Hessian formula", hess, 1e-4))
    res.add(check("random", "Hessian exceeds exp(2 Phi) g", "Hessian positivity", pos, 1e-4))
    res.add(check("random", "gradient flow raises Phi_s by t", "gradient flow", flow, 1e-6))
    tr = max(abs(np.trace(op.assemble_Axs(x0, si)) - space.weight_exponent) for si in s[:5])
    res.add(check("x0", "tr A_{x,s} = dn + d", "trace identity", tr, 1e-12))
    return res


def _busemann_density(cfg, rng):
    space = cfg.descriptor
    res = CaseResult()
    samples = samples_for(cfg)
    x0 = sp.Point.base(space)
    s = sp.random_unit(space, rng)
    res.add(check("x0", "lambda(x0, s) = 1", "visual density", abs(float(bm.visual_density(x0, s)) - 1.0), 1e-15))
    x1 = sp.Point.from_tangent(space, -s)
    res.add(check("ray", "lambda(ray(1), s) = e^delta", "visual density",
                  abs(float(bm.visual_density(x1, s)) / math.exp(space.entropy) - 1.0), 1e-12))
    point = max(bm.pushforward_residual(sp.random_point(space, rng, 1.0), sp.random_unit(space, rng))
                for _ in range(20))
    res.add(check("B(x0,1)", "lambda times sphere Jacobian of alpha_x = 1", "pushforward identity", point, 1e-6))
    mc = 0.0
    for _ in range(10):
        x = sp.random_point(space, rng, 0.3)
        mc = max(mc, abs(qd.integrate_density_form(qd.constant_field(1.0), x, samples) - 1.0))
    res.add(check("B(x0,0.3)", "quadrature of lambda(x, .) = 1", "pushforward identity", mc, 0.02))
    gap = worst_exact = 0.0
    for _ in range(10):
        x = sp.random_point(space, rng, 2.0)
        y = sp.random_point(space, rng, 2.0)
        sup, d = bm.embedding_gap(x, y, samples)
        gap = max(gap, sup - d)
        w = bm.sup_witness(x, y)
        worst_exact = max(worst_exact, abs(float(bm.busemann(w, y) - bm.busemann(w, x)) - d))
    res.add(check("B(x0,2)", "node sup-distance of embeddings <= d", "distance preservation", max(gap, 0.0), 1e-12))
    res.add(check("B(x0,2)", "sup over the boundary attains d at the ray endpoint", "distance preservation",
                  worst_exact, 1e-9))
    emb = bm.embed(x0, samples)
    res.add(check("x0", "embed(x0) = 0", "embedding", max_abs(emb), 1e-15))
    return res


# ---------------------------------------------------------------- quadrature


def _quadrature_case(cfg, rng):
    space = cfg.descriptor
    res = CaseResult()
    samples = samples_for(cfg)
    N, dim = samples.size, space.dim
    res.add(check("samples", "weights sum to 1", "probability weights", abs(samples.weights.sum() - 1.0), 1e-14))
    m1 = samples.weights @ samples.nodes
    res.add(check("samples", "first moment vanishes", "antithetic closure", max_abs(m1), 1e-15))
    res.add(check("samples", "second moment I/dn", "moment equidistribution",
                  max_abs(samples.moment2() - np.eye(dim) / dim), 3 / math.sqrt(N)))
    raw = qd.generate_samples(space, N, cfg.seed, scheme="antithetic")
    res.add(check("samples", "uncalibrated second moment I/dn", "moment equidistribution",
                  max_abs(raw.moment2() - np.eye(dim) / dim), 3 / math.sqrt(N)))
    two = qd.generate_samples(space, 2, cfg.seed)
    res.add(check("N=2", "{v, -v} with weights 1/2", "antithetic closure",
                  max_abs(two.nodes[0] + two.nodes[1]) + max_abs(two.weights - 0.5), 0.0))
    x = sp.random_point(space, rng, cfg.radius)
    x0 = sp.Point.base(space)
    res.add(check("mu_x", "integral of 1 = 1", "probability measure",
                  abs(qd.integrate_mu_x(qd.constant_field(1.0), x, samples) - 1.0), 1e-14))
    v = sp.random_unit(space, rng)
    odd = qd.integrate_mu_x(qd.Field(lambda s: s @ v, "linear"), x0, samples)
    res.add(check("mu_x0", "odd moment vanishes", "antithetic closure", abs(odd), 3 / math.sqrt(N)))
    metric0 = qd.MetricAtPhi(qd.embedding_field(x0), x0, samples)
    one = np.ones(N)
    res.add(check("G at Phi(x0)", "G(1, 1) = nd", "metric normalization",
                  abs(qd.g_phi_inner(one, one, metric0) - dim), 1e-12))
    phi, _ = pr.random_phi(space, rng, R=cfg.R)
    metric = qd.MetricAtPhi(phi, x, samples)
    X, Y, Z = rng.standard_normal((3, N))
    a, b = rng.standard_normal(2)
    lin = abs(qd.g_phi_inner(a * X + b * Y, Z, metric)
              - a * qd.g_phi_inner(X, Z, metric) - b * qd.g_phi_inner(Y, Z, metric))
    sym = abs(qd.g_phi_inner(X, Y, metric) - qd.g_phi_inner(Y, X, metric))
    res.add(check("G random", "bilinear and symmetric", "metric", lin + sym, 1e-12 * metric.inner(X, X)))
    frame = np.trace(metric.gram(samples.nodes.T))
    res.add(check("G random", "frame fields sum to dn", "trace identity", abs(frame - dim), 4 / math.sqrt(N)))
    return res


# ---------------------------------------------------------------- operators


def _random_bundle(cfg, rng, solver):
    phi, y = pr.random_phi(cfg.descriptor, rng, R=cfg.R)
    x = solver.project(phi, start=y).x
    return phi, x, op.assemble_bundle(phi, x, solver.samples)


def _operators_case(cfg, rng, case_index):
    space = cfg.descriptor
    res = CaseResult()
    samples = samples_for(cfg)
    solver = pr.ProjectionSolver(space, samples, R=cfg.R)
    case = f"phi{case_index}"
    phi, x, bundle = _random_bundle(cfg, rng, solver)
    res.add(*from_checks(case, op.spectral_checks(bundle)))
    res.add(*from_checks(case, op.verify_structure(bundle, tol=cfg.tol_structure,
                                                   seed=int(rng.integers(2 ** 31)))))
    rep = op.jacobian_report(bundle, tol=cfg.tol_structure)
    res.add(*from_checks(case, rep["checks"]))
    res.add(*from_checks(case, op.e_structure_checks(bundle, rng=rng)))
    ledger = ledger_for(cfg)
    ok, margin = op.eigen_floor(bundle, ledger)
    res.add(check(case, "lambda_1(Q) >= C_2 (log margin)", "eigenvalue floor", -margin, 0.0))
    res.add(check(case, "rho within [1/c_0, c_0]", "weight bracket",
                  0.0 if bundle.weights.bracket_ok(ledger.log("c_0")) else 1.0, 0.0))
    fields = [rng.standard_normal(samples.size) for _ in range(4)]
    res.add(check(case, "L2 norm bracket of the G-norm (log margin)", "norm comparison",
                  -op.norm_comparison(bundle, ledger, fields), 0.0))
    Vfields = bundle.directions
    X = Vfields @ rng.standard_normal(space.dim)
    refined = op.refined_jacobian_bound(bundle, X, Vfields, ledger)
    res.add(*from_checks(case, refined["checks"]))
    res.spectra = [{"case": case, "index": i, "lambda": float(l), "eta": float(e)}
                   for i, (l, e) in enumerate(zip(bundle.lam, bundle.eta))]
    if case_index == 0:
        y = sp.random_point(space, rng, cfg.radius)
        eq = op.assemble_bundle(qd.embedding_field(y), y, samples)
        chain, svd = op.jacobian_AE(eq)
        res.add(check("embedded", "Jacobian = 1 on the embedded image", "Jacobian ceiling equality",
                      max(abs(chain - 1.0), abs(svd - 1.0)), cfg.tol_structure))
        res.add(check("embedded", "Q = id", "equality case", max_abs(eq.Q - np.eye(space.dim)), 3 / math.sqrt(samples.size)))
        res.add(check("embedded", "A = ((n+1)/n) id", "equality case",
                      max_abs(eq.A - (space.n + 1) / space.n * np.eye(space.dim)), 3 / math.sqrt(samples.size)))
        for name, r in ledger.closed_form_residuals().items():
            res.add(check("ledger", f"closed form {name}", "constants ledger", r, 1e-12))
        cb, cq = ledger.cap_routes
        res.add(check("ledger", "cap fraction beta vs quadrature", "constants ledger", abs(cb - cq) / cb, 1e-8))
    return res


def _matrix_case(cfg, rng):
    res = CaseResult()
    viol = op.matrix_lemma_suite(int(rng.integers(2 ** 31)), trials=cfg.trials * 10)
    for name, count in viol.items():
        res.add(check("matrix", f"{name} violations", "matrix facts", count, 0))
    return res


# ---------------------------------------------------------------- projection


def _projection_points(cfg, rng):
    space = cfg.descriptor
    res = CaseResult()
    samples = samples_for(cfg)
    solver = pr.ProjectionSolver(space, samples, R=cfg.R)
    worst = iters = 0.0
    for _ in range(cfg.points):
        y = sp.random_point(space, rng, min(cfg.radius, cfg.R))
        r = solver.project(qd.embedding_field(y))
        worst = max(worst, sp.distance(r.x, y))
        iters = max(iters, r.iterations)
    res.add(check("embedded", "P(Phi(x)) = x", "projection contract", worst, 1e-8))
    res.add(check("embedded", "Newton iterations <= 20", "solver contract", iters, 20))
    y = sp.random_point(space, rng, 1.0)
    shift = min(0.5, cfg.R - float(np.linalg.norm(y.log0)))
    res.add(check("embedded", "P(Phi(x) + const) = x", "scale invariance",
                  sp.distance(solver(qd.embedding_field(y) + shift), y), 1e-8))
    base = qd.embedding_field(y)
    res.add(check("embedded", "height of Phi(x) = 0", "height",
                  pr.height(base, solver(base), samples), 1e-8))
    Y = pr.orthogonal_field(y, samples, rng)
    bundle = op.assemble_bundle(base, y, samples)
    vals = Y(bundle.metric.boundary)
    res.add(check("embedded", "dP kills G-orthogonal fields", "projection property",
                  float(np.linalg.norm(bundle.AinvE() @ vals)), 1e-8))
    v = sp.random_unit(space, rng)
    res.add(check("embedded", "dP(dPhi(v)) = v", "projection property",
                  float(np.linalg.norm(bundle.AinvE() @ (bundle.directions @ v) - v)), 1e-8))
    res.add(check("embedded", "critical point of Jac P along orthogonal fields", "critical point",
                  pr.critical_point_check(y, solver, rng), 1e-3))
    heights = []
    pert = qd.bump_field(sp.random_unit(space, rng), 4.0)
    for kappa in (0.01, 0.02, 0.04):
        phi = base + kappa * pert
        heights.append(pr.height(phi, solver.project(phi, start=y).x, samples))
    res.add(check("embedded", "height positive and increasing in bump size", "height",
                  0.0 if heights[0] > 0 and np.all(np.diff(heights) > 0) else 1.0, 0.0))
    cfgc = pr.CompressionConfig(cfg.sigma, cfg.R)
    worst_fd = 0.0
    for _ in range(5):
        p = sp.random_point(space, rng, 3.0)
        h = float(rng.uniform(0, 1))
        tau, _ = cfgc.scale(h)
        worst_fd = max(worst_fd, pr.compression_jacobian_fd(p, h, cfgc) - tau)
    res.add(check("compression", "FD Jacobian of Q_sigma <= 1/(1 + sigma h^2)", "homothety Jacobian",
                  worst_fd, 1e-3))
    res.add(check("compression", "h = 0 fixes p and x0 is fixed", "homothety",
                  sp.distance(pr.compress(y, 0.0, cfgc), y)
                  + float(np.linalg.norm(pr.compress(sp.Point.base(space), 0.7, cfgc).log0)), 1e-12))
    img, src = pr.volume_sanity(solver, cfgc, rng)
    res.add(check("compression", "volume of P_sigma o f <= 1.02 vol f", "volume", img / src - 1.0, 0.02))
    return res


def _phi_from_spec(cfg, rng, solver, case_index):
    kind, arg = cfg.phi
    space = cfg.descriptor
    if kind == "random":
        target = float(rng.uniform(0.05, 0.5))
        return pr.phi_with_height(space, rng, solver, target)
    kind, item = arg[case_index]
    if kind == "random":
        sub = np.random.default_rng(int(item))
        return pr.phi_with_height(space, sub, solver, float(sub.uniform(0.05, 0.5)))
    if kind == "bump":
        base = sp.Point.from_tangent(space, np.asarray(item.get("base", np.zeros(space.dim)), dtype=float))
        phi = qd.embedding_field(base) + qd.bump_field(item["center"], item.get("kappa", 4.0),
                                                       item.get("amplitude", 0.1))
    else:
        phi = qd.node_field(solver.samples, item)
    return phi, solver(phi)


def _projection_case(cfg, rng, case_index):
    space = cfg.descriptor
    res = CaseResult()
    samples = samples_for(cfg)
    solver = pr.ProjectionSolver(space, samples, R=cfg.R)
    case = f"phi{case_index}"
    phi, x = _phi_from_spec(cfg, rng, solver, case_index)
    r = solver.project(phi, start=x)
    res.add(check(case, "Newton residual", "solver contract", r.residual, 1e-8))
    cfgc = pr.CompressionConfig(cfg.sigma, cfg.R)
    cert = pr.certified_projection(phi, solver, cfgc, x=r.x, check_dh=True, rng=rng)
    res.add(check(case, "J <= 1 - c h^2 + slack", "compression certificate", cert.jacobian - cert.bound, 1e-2))
    res.add(check(case, "height differential by finite differences", "height differential",
                  cert.dh_fd_gap, 1e-5))
    tau, _ = cfgc.scale(cfg.sigma * cert.height)
    res.add(check(case, "FD Jacobian of Q_sigma at (P(phi), sigma h)", "homothety Jacobian",
                  pr.compression_jacobian_fd(r.x, cfg.sigma * cert.height, cfgc) - tau, 1e-3))
    res.add(check(case, "derivative identity dP = A^-1 E", "derivative identity",
                  pr.derivative_check(phi, solver, directions=10, rng=rng, x=r.x), 1e-4))
    xt = solver.project(pr.interpolation_family(phi, r.x, 0.5), start=r.x).x
    res.add(check(case, "P(phi_t) = P(phi) at t = 1/2", "interpolation invariance", sp.distance(xt, r.x), 1e-7))
    dA, dAh = pr.det_critical_check(phi, r.x, samples)
    res.add(check(case, "d/dt det A at t = 0 (central FD)", "critical determinant", abs(dA), 1e-3))
    res.add(check(case, "d/dt det A_hat at t = 0 (central FD)", "critical determinant", abs(dAh), 1e-3))
    exact = pr.det_critical_analytic(phi, r.x, samples)
    res.add(check(case, "d/dt det A at t = 0 (exact)", "critical determinant", max(map(abs, exact)), 1e-10))
    res.add(check(case, "P(Phi(P(phi))) = P(phi)", "idempotence",
                  sp.distance(solver(qd.embedding_field(r.x), start=r.x), r.x), 1e-7))
    if case_index < 3:
        _, spread = solver.multistart(phi, seeds=5, radius=min(cfg.R, 2.0), rng=rng)
        res.add(check(case, "multistart agrees", "uniqueness", spread, 1e-6))
    res.certificates = [{"case": case, "height": cert.height, "jacobian": cert.jacobian, "bound": cert.bound,
                         "margin": cert.margin, "tau": cert.tau,
                         "radius": float(np.linalg.norm(r.x.log0))}]
    res.add(check(case, "height in [0.05, 0.5]", "campaign design",
                  0.0 if 0.05 - 1e-3 <= cert.height <= 0.5 + 1e-3 or cfg.phi[0] != "random" else 1.0, 0.0))
    return res


# ---------------------------------------------------------------- registry and runner


def _fixed(*fns):
    return lambda cfg: [(fn, ()) for fn in fns]


SUITES = {
    "algebra": _fixed(_algebra_laws, _algebra_jordan),
    "spaces": _fixed(_spaces_models, _spaces_curvature, _spaces_structures),
    "busemann": _fixed(_busemann_calculus, _busemann_density),
    "quadrature": _fixed(_quadrature_case),
    "operators": lambda cfg: [(_operators_case, (i,)) for i in range(cfg.phi_count)],
    "matrix": _fixed(_matrix_case),
    "projection": lambda cfg: [(_projection_points, ())]
    + [(_projection_case, (i,)) for i in range(cfg.phi_count)],
}

SPACE_FREE = {"algebra", "matrix"}


def _run_case(cfg, index, fn, args):
    return fn(cfg, case_rng(cfg, index), *args)


def run_cases(cfg):
    cases = SUITES[cfg.suite](cfg)
    if cfg.jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            futures = [ex.submit(_run_case, cfg, i, fn, args) for i, (fn, args) in enumerate(cases)]
            return [f.result() for f in futures]
    return [_run_case(cfg, i, fn, args) for i, (fn, args) in enumerate(cases)]


def run_suite(cfg):
    """Run the configured suite; returns the report dict (deterministic in cfg)."""
    cfg.validate()
    results = run_cases(cfg)
    checks = [c for r in results for c in r.checks]
    failed = sum(not c["pass"] for c in checks)
    config = cfg.report_config()
    if cfg.suite in SPACE_FREE:
        config["space"] = None
    return {
        "schema": SCHEMA,
        "version": __version__,
        "suite": cfg.suite,
        "config": config,
        "checks": checks,
        "tables": {
            "spectra": [row for r in results for row in r.spectra],
            "certificates": [row for r in results for row in r.certificates],
        },
        "summary": {"checks": len(checks), "failed": failed, "pass": failed == 0},
    }


def ledger_report(space_name, R=2.0, sigma=0.1, n_samples=None, seed=0):
    space = sp.get_space(space_name)
    N = n_samples or (16384 if space.field == "O" else 4096)
    ledger = _ledger(space_name, R, sigma, N, seed)
    return {"schema": SCHEMA, "version": __version__, "suite": "ledger",
            "config": {"space": space_name, "R": R, "sigma": sigma, "n_samples": N, "seed": seed},
            "ledger": ledger.as_dict()["entries"]}


def with_overrides(cfg, **kw):
    return replace(cfg, **kw).validate()
