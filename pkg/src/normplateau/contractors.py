"""Density contractors: construction and certification.

A density contractor on an m-plane W is a finitely supported probability
measure on linear maps X -> W whose average never increases
H^m_{||.||} of subsets of m-planes, with equality on subsets of W.
Three constructions are provided (Hahn, m = 1; Busemann, m = n - 1;
Burago-Ivanov, m = 2) together with an exact-sum certifier.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .chains import (
    PolyhedralChain,
    direction,
    hausdorff_mass,
    merge_coplanar,
    pushforward_linear,
    slice_integral,
)
from .geometry import Polygon2D, Subspace, orthogonal_complement, sample_subspaces, wedge_norm
from .norms import (
    Norm,
    NormError,
    alpha,
    busemann_b,
    crystalline_approx,
    lipschitz_constant,
    norm_distance,
    norm_eval,
    psi,
    section_ball,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ContractorError",
    "DensityContractor",
    "ContractorCertificate",
    "TailRow",
    "hahn_projector",
    "busemann_projector",
    "burago_ivanov",
    "orthogonal_contractor",
    "refine_unit_vectors",
    "verify_contractor",
    "tail_check",
    "min_lipschitz_projector",
    "chain_mass_inequality",
    "set_inequality",
    "calibration_middle_inequality",
]

FLOAT_TOL = 1e-7
EXACT_TOL = 1e-12


class ContractorError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DensityContractor:
    target: Subspace
    weights: np.ndarray
    maps: np.ndarray
    kind: str = "custom"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        M = np.asarray(self.maps, dtype=float)
        if M.ndim != 3 or len(w) != len(M):
            raise ContractorError("weights and maps must have matching length")
        if (w <= 0).any():
            raise ContractorError("atom weights must be positive")
        P = self.target.projector
        for k, A in enumerate(M):
            if np.abs(P @ A - A).max() > 1e-9 * max(1.0, np.abs(A).max()):
                raise ContractorError(f"atom {k} does not map into the target subspace")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "maps", M)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def dim(self) -> int:
        return self.target.dim

    def __len__(self):
        return len(self.weights)

    def compact(self) -> "DensityContractor":
        """Merge atoms with identical maps (weights add)."""
        keys: dict[bytes, int] = {}
        w: list[float] = []
        M: list[np.ndarray] = []
        for wt, A in zip(self.weights, self.maps):
            key = (np.round(A, 12) + 0.0).tobytes()
            if key in keys:
                w[keys[key]] += wt
            else:
                keys[key] = len(w)
                w.append(float(wt))
                M.append(A)
        return DensityContractor(self.target, np.array(w), np.array(M), self.kind, dict(self.info))

    def scaled(self, factor: float) -> "DensityContractor":
        return DensityContractor(self.target, self.weights * factor, self.maps, self.kind, dict(self.info))

    def to_json(self) -> dict:
        return {
            "target": self.target.basis.T.tolist(),
            "atoms": [{"w": float(w), "matrix": A.tolist()} for w, A in zip(self.weights, self.maps)],
            "kind": self.kind,
            "info": _jsonable(self.info),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DensityContractor":
        basis = np.array(obj["target"], dtype=float).T
        atoms = obj["atoms"]
        return cls(
            Subspace(basis),
            np.array([a["w"] for a in atoms], dtype=float),
            np.array([a["matrix"] for a in atoms], dtype=float),
            obj.get("kind", "custom"),
            dict(obj.get("info", {})),
        )


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int, bool)):
        return x if isinstance(x, bool) else int(x)
    return x if x is None or isinstance(x, str) else str(x)


# ---------------------------------------------------------------------------
# constructions


def orthogonal_contractor(W: Subspace) -> DensityContractor:
    return DensityContractor(W, np.array([1.0]), W.projector[None], "orthogonal")


def _active_facet(norm: Norm, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Lexicographically smallest facet functional attaining max a_f.x."""
    A = norm.facet_matrix
    vals = A @ x
    top = vals.max()
    idx = int(np.flatnonzero(vals >= top - tol * max(1.0, abs(top)))[0])
    return A[idx]


def hahn_projector(norm: Norm, w) -> DensityContractor:
    """delta_pi with pi(x) = a(x) w, a a norming functional of w."""
    w = np.asarray(w, dtype=float)
    if norm.n < 2:
        raise ContractorError("need n >= 2")
    nw = norm_eval(norm, w)
    if abs(nw - 1.0) > 1e-9:
        raise ContractorError(f"w is not a unit vector (||w|| = {nw})")
    if norm.kind == "euclidean":
        a = w / float(w @ w)
    elif norm.is_polytope:
        a = _active_facet(norm, w)
    else:
        p = norm.p
        a = np.sign(w) * np.abs(w) ** (p - 1)
    W = Subspace(w[:, None] / np.linalg.norm(w))
    return DensityContractor(W, np.array([1.0]), np.outer(w, a)[None], "hahn")


_B_CACHE: dict = {}


def _sphere_samples(n: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _b_samples(norm: Norm, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    key = (id(norm), count, seed)
    hit = _B_CACHE.get(key)
    if hit is not None and hit[0] is norm:
        return hit[1], hit[2]
    U = _sphere_samples(norm.n, count, seed)
    bvals = np.array([busemann_b(norm, u) for u in U])
    _B_CACHE[key] = (norm, U, bvals)
    return U, bvals


def _local_cap(c: np.ndarray, radii=(1e-1, 1e-2, 1e-3, 1e-4), k: int = 24) -> np.ndarray:
    """Rings of unit vectors around ``c``; they pin the supporting functional near c."""
    C = orthogonal_complement(c[:, None])
    rng = np.random.default_rng(12345)
    out = []
    for r in radii:
        for _ in range(k):
            d = C @ rng.standard_normal(C.shape[1])
            u = c + r * d / np.linalg.norm(d)
            out.append(u / np.linalg.norm(u))
    return np.array(out)


def _sphere_param(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x)


def busemann_projector(
    norm: Norm,
    W: Subspace,
    samples: int = 10000,
    seed: int = 0,
    tol: float = 1e-8,
    max_rounds: int = 40,
) -> DensityContractor:
    """Area-contracting projector onto a hyperplane W.

    The kernel direction v is a supporting functional of Busemann's convex
    function b at the unit normal of W: <v, u> <= b(u) for all u and
    <v, n_W> = b(n_W).  It is found from the linear program over sampled
    sphere directions, then tightened by cutting planes at the worst
    local violations until none exceeds ``tol``.
    """
    n = norm.n
    if W.ambient != n or W.dim != n - 1:
        raise ContractorError("W must be a hyperplane of R^n")
    nW = W.normal()
    if norm.kind == "euclidean":
        v = nW.copy()
        rounds = 0
        worst = 0.0
    else:
        U, bU = _b_samples(norm, samples, seed)
        U = np.vstack([U, -U])
        bU = np.concatenate([bU, bU])
        bn = busemann_b(norm, nW)
        local = _local_cap(nW)
        cuts_U = [U, local]
        cuts_b = [bU, np.array([busemann_b(norm, u) for u in local])]
        v = None
        worst = math.inf
        rounds = 0
        for rounds in range(1, max_rounds + 1):
            A = np.vstack(cuts_U)
            b = np.concatenate(cuts_b)
            res = linprog(
                c=np.zeros(n),
                A_ub=A,
                b_ub=b,
                A_eq=nW[None],
                b_eq=[bn],
                bounds=[(None, None)] * n,
                method="highs",
            )
            if res.status != 0:
                raise ContractorError(f"supporting-functional LP failed: {res.message}")
            v = res.x
            worst, found = _worst_violations(norm, v, U, bU)
            if worst <= tol:
                break
            cuts_U.append(np.array([u for u, _ in found]))
            cuts_b.append(np.array([bu for _, bu in found]))
        if worst > 1e-7:
            raise ContractorError(f"supporting functional still violates b by {worst:.2e}")
    Pi = np.eye(n) - np.outer(v, nW) / float(nW @ v)
    # snap onto W (removes O(eps) drift in the image)
    Pi = W.projector @ Pi
    return DensityContractor(W, np.array([1.0]), Pi[None], "busemann", {"kernel": v.tolist(), "cut_rounds": rounds, "support_violation": float(max(worst, 0.0))})


def _worst_violations(norm: Norm, v: np.ndarray, U: np.ndarray, bU: np.ndarray, starts: int = 6):
    """Local maxima of <v,u> - b(u) on the unit sphere, seeded at the worst samples."""
    gap = U @ v - bU
    order = np.argsort(-gap)[:starts]
    found = []
    worst = float(gap[order[0]])

    def neg(x):
        u = _sphere_param(x)
        return -(float(u @ v) - busemann_b(norm, u))

    for i in order:
        res = minimize(neg, U[i], method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 400})
        u = _sphere_param(res.x)
        val = -res.fun
        worst = max(worst, val)
        if val > 0:
            found.append((u, busemann_b(norm, u)))
            found.append((-u, busemann_b(norm, -u)))
    return worst, found


def refine_unit_vectors(vertices: Sequence, tau_max: float = 2.0, max_points: int = 4096) -> list[np.ndarray]:
    """Add bisection points on polygon edges until max/min consecutive wedge <= tau_max.

    ``vertices`` are the consecutive (CCW) vertices of a centrally symmetric
    polygon.  Returns the full list u_1..u_{2p} with u_{p+i} = -u_i.
    """
    if tau_max < 1:
        raise ContractorError("tau_max must be >= 1")
    V = [np.asarray(v, dtype=float) for v in vertices]
    k = len(V)
    if k % 2:
        raise ContractorError("a symmetric polygon has an even number of vertices")
    half = V[: k // 2]
    if np.abs(V[k // 2] + V[0]).max() > 1e-9 * (1 + np.abs(V[0]).max()):
        raise ContractorError("polygon is not centrally symmetric")
    pts = list(half)
    while True:
        ring = pts + [-pts[0]]
        wedges = [wedge_norm(ring[i], ring[i + 1]) for i in range(len(pts))]
        if max(wedges) <= tau_max * min(wedges) * (1 + 1e-12):
            break
        if 2 * len(pts) >= max_points:
            raise ContractorError("refinement did not reach tau_max")
        i = int(np.argmax(wedges))
        mid = 0.5 * (ring[i] + ring[i + 1])
        pts.insert(i + 1, mid)
    return pts + [-u for u in pts]


def burago_ivanov(norm: Norm, W: Subspace, tau_max: float = 2.0, approx_delta: float = 1.01) -> DensityContractor:
    """Finitely supported density contractor on a 2-plane (crystalline construction).

    Non-polytope norms are first replaced by a crystalline approximation
    within distance ``approx_delta``; the approximation gap is recorded in
    ``info``.
    """
    if W.dim != 2:
        raise ContractorError("Burago-Ivanov contractors are 2-dimensional")
    if tau_max < 1:
        raise ContractorError("tau_max must be >= 1")
    info: dict = {}
    base = norm
    if not norm.is_polytope:
        k = 4
        while True:
            base = crystalline_approx(norm, k)
            gap = norm_distance(norm, base, samples=20000, seed=k)
            if gap <= approx_delta or k > 256:
                break
            k *= 2
        info["approximation"] = {"k": k, "delta": gap}
    try:
        poly = section_ball(base, W)
    except Exception as exc:  # pragma: no cover - defensive
        raise ContractorError(f"section polygon failed: {exc}") from exc
    if not isinstance(poly, Polygon2D):
        raise ContractorError("section polygon failed")
    verts = [np.array([float(x), float(y)]) for x, y in poly.vertices]
    us2 = refine_unit_vectors(verts, tau_max)
    p = len(us2) // 2
    Q = W.basis
    U = [Q @ u for u in us2[: p + 1]]
    area = abs(float(poly.area()))
    lam = np.array([wedge_norm(us2[i], us2[i + 1]) / area for i in range(p)])
    funcs = []
    for i in range(p):
        mid = 0.5 * (U[i] + U[i + 1])
        a = _active_facet(base, mid)
        if abs(a @ U[i] - 1) > 1e-8 or abs(a @ U[i + 1] - 1) > 1e-8:
            raise ContractorError("no facet supports a polygon edge")
        funcs.append(a)
    psiW = alpha(2) / area
    rho = math.sqrt(alpha(2) / (2 * psiW))
    n = norm.n
    weights = []
    maps = []
    for i in range(p):
        for j in range(p):
            weights.append(lam[i] * lam[j])
            if i == j:
                maps.append(np.zeros((n, n)))
                continue
            wij = wedge_norm(U[i], U[j])
            M = (rho / math.sqrt(wij)) * (np.outer(U[i], funcs[i]) + np.outer(U[j], funcs[j]))
            maps.append(M)
    wedges = [wedge_norm(us2[i], us2[i + 1]) for i in range(p)]
    info.update(
        {
            "p": p,
            "lambda": lam.tolist(),
            "rho": rho,
            "tau": max(wedges) / min(wedges),
            "Gamma": norm_distance(base, Norm.euclidean(n)),
            "psi_W": psiW,
            "unit_vectors": [u.tolist() for u in U[:p]],
            "functionals": [a.tolist() for a in funcs],
            "min_wedge": min(wedge_norm(U[i], U[j]) for i in range(p) for j in range(p) if i != j) if p > 1 else 0.0,
        }
    )
    return DensityContractor(W, np.array(weights), np.array(maps), "burago-ivanov", info)


def calibration_middle_inequality(mu: DensityContractor, norm: Norm, V: Subspace) -> tuple[float, float]:
    """(alpha(2) sum_{i<j} l_i l_j |<a_i ^ a_j, v1 ^ v2>|, psi(V)) for a BI contractor."""
    lam = np.asarray(mu.info["lambda"])
    F = np.asarray(mu.info["functionals"])
    v1, v2 = V.basis[:, 0], V.basis[:, 1]
    a1, a2 = F @ v1, F @ v2
    D = np.abs(np.outer(a1, a2) - np.outer(a2, a1))
    L = np.outer(lam, lam)
    s = float(np.sum(np.triu(L * D, 1)))
    return alpha(2) * s, psi(norm, V)


# ---------------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class TailRow:
    n: int
    mass: float
    mass_bound: float
    integral: float
    integral_bound: float

    @property
    def ok(self) -> bool:
        return self.mass <= self.mass_bound * (1 + 1e-12) and self.integral <= self.integral_bound * (1 + 1e-12)


@dataclass(frozen=True)
class ContractorCertificate:
    max_violation: float
    equality_gap: float
    samples_tested: int
    tolerance: float
    worst_subspace: list | None = None
    tail_bounds: tuple = ()

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance and self.equality_gap <= self.tolerance

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "maxViolation": self.max_violation,
            "equalityGapAtW": self.equality_gap,
            "samplesTested": self.samples_tested,
            "tolerance": self.tolerance,
            "worstSubspace": self.worst_subspace,
            "tailBounds": [
                {"n": r.n, "mass": r.mass, "massBound": r.mass_bound, "integral": r.integral, "integralBound": r.integral_bound}
                for r in self.tail_bounds
            ],
        }


def _image_volumes(maps: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """m-volume of each map's image of the unit cube spanned by ``basis`` columns."""
    img = maps @ basis  # (k, n, m)
    m = img.shape[2]
    if m == 1:
        return np.linalg.norm(img[:, :, 0], axis=1)
    if m == 2:
        # Pluecker minors; the Gram determinant loses sqrt(eps) on near rank-one maps
        a, b = img[:, :, 0], img[:, :, 1]
        minors = a[:, :, None] * b[:, None, :] - a[:, None, :] * b[:, :, None]
        return np.sqrt(0.5 * np.sum(minors**2, axis=(1, 2)))
    return np.prod(np.linalg.svd(img, compute_uv=False), axis=1)


def contractor_average(mu: DensityContractor, norm: Norm, V: Subspace, psi_W: float | None = None) -> float:
    """sum_atoms w H^m_{||.||}(pi(unit cube of V))."""
    psi_W = psi(norm, mu.target) if psi_W is None else psi_W
    return float(psi_W * (mu.weights @ _image_volumes(mu.maps, V.basis)))


def verify_contractor(
    mu: DensityContractor,
    norm: Norm,
    samples: int = 1000,
    seed: int = 0,
    tol: float = FLOAT_TOL,
    relative: bool = False,
) -> ContractorCertificate:
    """Test the density-contractor inequality on sampled planes V and equality at V = W.

    The test set in V is the unit cube of an orthonormal basis; both
    sides are exact (determinants times psi).  Violations are reported,
    never raised.
    """
    W = mu.target
    m, n = W.dim, W.ambient
    psi_W = psi(norm, W)
    comp = mu.compact()
    lhs_W = contractor_average(comp, norm, W, psi_W)
    gap = abs(lhs_W - psi_W) / (psi_W if relative else 1.0)
    worst = -math.inf
    worst_V = None
    Vs = sample_subspaces(n, m, samples, seed) if m < n else []
    for V in Vs:
        lhs = contractor_average(comp, norm, V, psi_W)
        rhs = psi(norm, V)
        viol = (lhs - rhs) / (rhs if relative else 1.0)
        if viol > worst:
            worst, worst_V = viol, V
    tails: tuple = ()
    if mu.kind == "burago-ivanov" and "Gamma" in mu.info:
        tails = tuple(tail_check(mu, norm, mu.info["Gamma"], mu.info["tau"], 100))
    return ContractorCertificate(
        max(worst, 0.0) if Vs else 0.0,
        gap,
        len(Vs) + 1,
        tol,
        worst_V.basis.T.tolist() if worst_V is not None else None,
        tails,
    )


def tail_check(mu: DensityContractor, norm: Norm, Gamma: float, tau: float, n_max: int) -> list[TailRow]:
    """Measured tail mass and tail integral of a BI contractor against their bounds.

    ``|||pi|||`` is the Euclidean operator norm; the integrand is
    H^2_{||.||} of the image of the unit square of W's basis.
    """
    opn = np.array([np.linalg.norm(A, 2) for A in mu.maps])
    psi_W = psi(norm, mu.target)
    areas = psi_W * _image_volumes(mu.maps, mu.target.basis)
    rows = []
    for k in range(1, n_max + 1):
        sel = opn >= k
        mass = float(mu.weights[sel].sum())
        integral = float(mu.weights[sel] @ areas[sel])
        rows.append(TailRow(k, mass, 4 * Gamma**4 * (2 + tau) / k**2, integral, alpha(2) * Gamma**5 * (2 + tau) / k**2))
    return rows


# ---------------------------------------------------------------------------


def _projector_from_params(W: Subspace, C: np.ndarray, params: np.ndarray) -> np.ndarray:
    m, k = W.dim, C.shape[1]
    M = params.reshape(m, k)
    return W.projector + W.basis @ M @ C.T


def min_lipschitz_projector(norm: Norm, W: Subspace, starts: int = 32, seed: int = 0) -> tuple[float, np.ndarray]:
    """Smallest Lip_{||.||} over projectors onto W (multi-start Nelder-Mead).

    Projectors are W W^T + W M C^T with C an orthonormal complement, so the
    search has m (n - m) free parameters.  For polytope norms the
    Lipschitz constant is exact and the optimum is also computed as a
    linear program; the better of the two is returned.
    """
    if W.dim >= W.ambient:
        raise ContractorError("W must be a proper subspace")
    C = orthogonal_complement(W.basis)
    dof = W.dim * C.shape[1]
    rng = np.random.default_rng(seed)

    def lip(x):
        return lipschitz_constant(norm, _projector_from_params(W, C, x), samples=600, seed=1)

    best_val, best_x = lip(np.zeros(dof)), np.zeros(dof)
    for s in range(starts):
        x0 = np.zeros(dof) if s == 0 else rng.normal(scale=0.5, size=dof)
        res = minimize(lip, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if res.fun < best_val:
            best_val, best_x = float(res.fun), res.x
    if norm.is_polytope:
        val, x = _lip_lp(norm, W, C)
        if val < best_val:
            best_val, best_x = val, x
    return best_val, _projector_from_params(W, C, best_x)


def _lip_lp(norm: Norm, W: Subspace, C: np.ndarray) -> tuple[float, np.ndarray]:
    """min t s.t. a_f . pi(v) <= t over facets f and ball vertices v (pi affine in params)."""
    V = np.asarray(norm.vertices)
    A = norm.facet_matrix
    m, k = W.dim, C.shape[1]
    P0 = W.projector
    rows, rhs = [], []
    for v in V:
        base = A @ (P0 @ v)
        cv = C.T @ v
        # d/dM_{ab} of a.(Q M C^T v) = (a.Q_a)(cv_b)
        AQ = A @ W.basis
        coeff = np.einsum("fa,b->fab", AQ, cv).reshape(len(A), m * k)
        rows.append(np.column_stack([coeff, -np.ones(len(A))]))
        rhs.append(-base)
    Aub = np.vstack(rows)
    bub = np.concatenate(rhs)
    c = np.zeros(m * k + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=Aub, b_ub=bub, bounds=[(None, None)] * (m * k + 1), method="highs")
    if res.status != 0:
        return math.inf, np.zeros(m * k)
    x = res.x[:-1]
    return lipschitz_constant(norm, _projector_from_params(W, C, x)), x


# ---------------------------------------------------------------------------
# inequalities for chains and sets


def chain_mass_inequality(mu: DensityContractor, T: PolyhedralChain, norm: Norm) -> tuple[float, float, float]:
    """(sum w * slice integral, sum w * M_H(pi_# T), M_H(T))."""
    if T.dim != mu.dim:
        raise ContractorError("chain dimension must equal the contractor dimension")
    comp = mu.compact()
    psi_W = psi(norm, mu.target)
    dens = lambda V: psi_W  # noqa: E731 - every image lies in the target plane
    lhs_slices = 0.0
    lhs_push = 0.0
    for w, A in zip(comp.weights, comp.maps):
        s = slice_integral(T, A, norm, target=mu.target, density=dens)
        if s == 0.0:
            continue
        lhs_slices += w * s
        pushed = pushforward_linear(T, A)
        if T.dim <= 2 and not pushed.is_zero():
            pushed = merge_coplanar(pushed)
        lhs_push += w * hausdorff_mass(pushed, density=dens)
    return lhs_slices, lhs_push, hausdorff_mass(T, norm)


def projected_union_measure(pieces: Sequence, A: np.ndarray, W: Subspace) -> float:
    """Euclidean m-measure of the union of A(sigma) over pieces (m in {1, 2})."""
    m = W.dim
    imgs = [np.asarray(p, dtype=float) @ A.T @ W.basis for p in pieces]
    if m == 1:
        iv = sorted((float(i.min()), float(i.max())) for i in imgs)
        total, cur_lo, cur_hi = 0.0, None, None
        for lo, hi in iv:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        if cur_hi is not None:
            total += cur_hi - cur_lo
        return total
    if m == 2:
        from shapely.geometry import Polygon
        from shapely.ops import unary_union

        polys = []
        for i in imgs:
            d = (i[1, 0] - i[0, 0]) * (i[2, 1] - i[0, 1]) - (i[1, 1] - i[0, 1]) * (i[2, 0] - i[0, 0])
            if abs(d) > 1e-15:
                polys.append(Polygon(i))
        if not polys:
            return 0.0
        return float(unary_union(polys).area)
    raise ContractorError("union measure is implemented for m in {1, 2}")


def set_inequality(mu: DensityContractor, pieces: Sequence, norm: Norm) -> tuple[float, float]:
    """(integral of H^m(pi(A)) dmu, H^m(A)) for A a union of nonoverlapping m-simplices."""
    comp = mu.compact()
    psi_W = psi(norm, mu.target)
    lhs = 0.0
    for w, A in zip(comp.weights, comp.maps):
        if not A.any():
            continue
        lhs += w * psi_W * projected_union_measure(pieces, A, mu.target)
    rhs = sum(hausdorff_mass(PolyhedralChain.simplex(p), norm) for p in pieces)
    return lhs, rhs
