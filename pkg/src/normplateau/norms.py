"""Norms on R^n, unit-ball sections and the Busemann-Hausdorff density.

A :class:`Norm` is Euclidean, l_p, or crystalline (a polytope unit ball
given by facet functionals ``a_f`` with ``B = {x : a_f.x <= 1}``).  l_1 and
l_inf are routed through their facet description wherever a section has to
be measured, so they get the exact polygon/polytope path.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Sequence

import numpy as np
from scipy.special import gamma

from .geometry import (
    GeometryError,
    Polygon2D,
    Subspace,
    halfplane_intersection,
    orthogonal_complement,
    polytope_volume,
)

__all__ = [
    "Norm",
    "NormError",
    "QuadratureError",
    "RadialSamples",
    "VolumeEstimate",
    "alpha",
    "norm_eval",
    "norm_distance",
    "norm_distance_is_exact",
    "section_ball",
    "section_volume",
    "section_volume_estimate",
    "section_volume_exact",
    "psi",
    "busemann_b",
    "crystalline_approx",
    "lipschitz_constant",
    "random_crystalline",
]

CIRCLE_POINTS = 2048
QUADRATURE_BUDGET = 1e-5


class NormError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


def alpha(m: int) -> float:
    """Lebesgue measure of the Euclidean unit m-ball."""
    if m == 0:
        return 1.0
    if m == 1:
        return 2.0
    if m == 2:
        return math.pi
    return math.pi ** (m / 2) / float(gamma(m / 2 + 1))


def _rational(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


@dataclass(frozen=True, eq=False)
class Norm:
    kind: str
    n: int
    p: float | None = None
    facets: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("euclidean", "lp", "crystalline"):
            raise NormError(f"unknown norm kind {self.kind!r}")
        if self.n < 1:
            raise NormError("dimension must be positive")
        if self.kind == "lp":
            if self.p is None or not (self.p >= 1):
                raise NormError("l_p norm needs p >= 1")
            if self.p == 2:
                object.__setattr__(self, "kind", "euclidean")
                object.__setattr__(self, "p", None)
        if self.kind == "crystalline":
            if not self.facets:
                raise NormError("crystalline norm needs facets")
            fac = tuple(tuple(Fraction(v) if _rational(v) else float(v) for v in f) for f in self.facets)
            if any(len(f) != self.n for f in fac):
                raise NormError("facet dimension mismatch")
            if all(_rational(v) for f in fac for v in f):
                fac = _symmetrize(fac, exact=True)
            else:
                fac = _symmetrize(tuple(tuple(float(v) for v in f) for f in fac), exact=False)
            if np.linalg.matrix_rank(np.array(fac, dtype=float)) < self.n:
                raise NormError("facet functionals do not span R^n (unit ball unbounded)")
            object.__setattr__(self, "facets", fac)

    # construction helpers
    @classmethod
    def euclidean(cls, n: int) -> "Norm":
        return cls("euclidean", n)

    @classmethod
    def lp(cls, p: float, n: int) -> "Norm":
        return cls("lp", n, p=float(p))

    @classmethod
    def linf(cls, n: int) -> "Norm":
        return cls("lp", n, p=math.inf)

    @classmethod
    def l1(cls, n: int) -> "Norm":
        return cls("lp", n, p=1.0)

    @classmethod
    def crystalline(cls, facets) -> "Norm":
        facets = [tuple(f) for f in facets]
        return cls("crystalline", len(facets[0]), facets=tuple(facets))

    @property
    def is_polytope(self) -> bool:
        return self.kind == "crystalline" or (self.kind == "lp" and self.p in (1.0, math.inf))

    @cached_property
    def facet_list(self) -> tuple:
        """Facet functionals (both signs); exact rationals where possible."""
        if self.kind == "crystalline":
            return self.facets
        if self.kind == "lp" and self.p == math.inf:
            out = []
            for i in range(self.n):
                for s in (1, -1):
                    out.append(tuple(s if j == i else 0 for j in range(self.n)))
            return tuple(out)
        if self.kind == "lp" and self.p == 1.0:
            return tuple(itertools.product((1, -1), repeat=self.n))
        raise NormError("norm has no facet description")

    @cached_property
    def facet_matrix(self) -> np.ndarray:
        a = np.array(self.facet_list, dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def exact(self) -> bool:
        return self.is_polytope and all(_rational(v) for f in self.facet_list for v in f)

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertices of the unit ball (polytope norms only)."""
        if not self.is_polytope:
            raise NormError("only polytope norms have vertices")
        if self.kind == "lp" and self.p == math.inf:
            v = np.array(list(itertools.product((1.0, -1.0), repeat=self.n)))
        elif self.kind == "lp":
            v = np.vstack([np.eye(self.n), -np.eye(self.n)])
        elif self.n == 2:
            poly = halfplane_intersection([((a[0], a[1]), 1) for a in self.facet_list])
            v = poly.as_array()
        else:
            from scipy.spatial import HalfspaceIntersection

            A = self.facet_matrix
            hs = HalfspaceIntersection(np.column_stack([A, -np.ones(len(A))]), np.zeros(self.n))
            pts = hs.intersections
            keep: list[np.ndarray] = []
            for p in pts:
                if all(np.abs(p - q).max() > 1e-9 for q in keep):
                    keep.append(p)
            v = np.array(keep)
        v.setflags(write=False)
        return v

    def __call__(self, x) -> float:
        return norm_eval(self, x)

    def to_json(self) -> dict:
        if self.kind == "euclidean":
            return {"kind": "euclidean", "n": self.n}
        if self.kind == "lp":
            return {"kind": "lp", "n": self.n, "p": "inf" if self.p == math.inf else self.p}
        return {"kind": "crystalline", "facets": [[_jsonnum(v) for v in f] for f in self.facets]}

    @classmethod
    def from_json(cls, obj: dict, n: int | None = None) -> "Norm":
        kind = obj.get("kind")
        if kind == "euclidean":
            return cls.euclidean(int(obj.get("n", n or 0)))
        if kind == "lp":
            p = obj["p"]
            p = math.inf if p in ("inf", "infinity", None) else float(p)
            return cls("lp", int(obj.get("n", n or 0)), p=p)
        if kind == "crystalline":
            return cls.crystalline([[_parse_num(v) for v in f] for f in obj["facets"]])
        raise NormError(f"unknown norm kind {kind!r}")

    def __repr__(self):
        if self.kind == "lp":
            return f"Norm(l{'inf' if self.p == math.inf else self.p:g}^{self.n})" if self.p != math.inf else f"Norm(linf^{self.n})"
        if self.kind == "euclidean":
            return f"Norm(l2^{self.n})"
        return f"Norm(crystalline^{self.n}, {len(self.facets)} facets)"


def _jsonnum(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(v)


def _parse_num(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return v
    return float(v)


def _symmetrize(fac, exact: bool):
    out = list(dict.fromkeys(fac))
    have = set(out) if exact else None
    for f in list(out):
        neg = tuple(-v for v in f)
        if exact:
            if neg not in have:
                out.append(neg)
                have.add(neg)
        elif not any(max(abs(a - b) for a, b in zip(neg, g)) <= 1e-12 for g in out):
            out.append(neg)
    return tuple(out)


def random_crystalline(n: int, k: int, seed: int, denominator: int = 8) -> Norm:
    """Symmetric crystalline norm with ``2k`` random rational facets (plus a cube cap)."""
    rng = np.random.default_rng(seed)
    facets = []
    for _ in range(k):
        v = rng.integers(-denominator, denominator + 1, size=n)
        while not v.any():
            v = rng.integers(-denominator, denominator + 1, size=n)
        # scale so the facet lies at Euclidean distance in [0.6, 1.2]
        s = float(np.linalg.norm(v)) * rng.uniform(0.6, 1.2)
        facets.append(tuple(Fraction(int(c)) / Fraction(s).limit_denominator(64) for c in v))
    for i in range(n):
        cap = Fraction(2, 3)
        facets.append(tuple(cap if j == i else Fraction(0) for j in range(n)))
    return Norm.crystalline(facets)


def norm_eval(norm: Norm, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != norm.n:
        raise NormError(f"expected a vector in R^{norm.n}")
    if norm.kind == "euclidean":
        return float(np.linalg.norm(x))
    if norm.kind == "lp":
        return float(np.linalg.norm(x, ord=norm.p))
    return float(max(0.0, (norm.facet_matrix @ x).max()))


def _norm_rows(norm: Norm, X: np.ndarray) -> np.ndarray:
    if norm.kind == "euclidean":
        return np.linalg.norm(X, axis=1)
    if norm.kind == "lp":
        return np.linalg.norm(X, ord=norm.p, axis=1)
    return np.maximum((X @ norm.facet_matrix.T).max(axis=1), 0.0)


def _sphere_points(n: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def norm_distance_is_exact(nu1: Norm, nu2: Norm) -> bool:
    def side(a: Norm, b: Norm) -> bool:
        # max of b over B_a is exact when B_a has vertices or b is a polytope norm and a is Euclidean
        return a.is_polytope or (a.kind == "euclidean" and (b.is_polytope or b.kind == "euclidean"))

    return side(nu1, nu2) and side(nu2, nu1)


def _max_over_ball(a: Norm, b: Norm, samples: int, seed: int) -> float:
    """max of b over the unit ball of a."""
    if a.is_polytope:
        return float(_norm_rows(b, np.asarray(a.vertices)).max())
    if a.kind == "euclidean" and b.is_polytope:
        return float(np.linalg.norm(b.facet_matrix, axis=1).max())
    if a.kind == "euclidean" and b.kind == "euclidean":
        return 1.0
    pts = _sphere_points(a.n, samples, seed)
    return float((_norm_rows(b, pts) / _norm_rows(a, pts)).max())


def norm_distance(nu1: Norm, nu2: Norm, samples: int = 20000, seed: int = 0) -> float:
    """delta(nu1, nu2) = inf{lam : B1 in lam B2 and B2 in lam B1}.

    Exact when both sides can be maximised over vertices (see
    :func:`norm_distance_is_exact`); otherwise a sampled lower bound.
    """
    if nu1.n != nu2.n:
        raise NormError("dimension mismatch")
    return max(1.0, _max_over_ball(nu1, nu2, samples, seed), _max_over_ball(nu2, nu1, samples, seed + 1))


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class RadialSamples:
    """Radial function r(theta) = 1/||u(theta)|| of a 2D section on a uniform circle grid."""

    theta: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    error: float
    exact: bool
    method: str


def _restricted_facets(norm: Norm, basis) -> list:
    """Facet functionals of B restricted to the column span of ``basis`` (in basis coords)."""
    rows = []
    if isinstance(basis, np.ndarray):
        A = norm.facet_matrix @ basis
        for r in A:
            rows.append(tuple(float(v) for v in r))
    else:
        cols = list(zip(*basis))
        for f in norm.facet_list:
            rows.append(tuple(sum(Fraction(a) * Fraction(c) for a, c in zip(f, col)) for col in cols))
    return rows


def section_ball(norm: Norm, W: Subspace) -> Polygon2D | RadialSamples:
    if W.ambient != norm.n:
        raise NormError("dimension mismatch")
    if W.dim == 2 and norm.is_polytope:
        rows = _restricted_facets(norm, W.basis)
        return halfplane_intersection([((a0, a1), 1.0) for a0, a1 in rows])
    if W.dim != 2:
        raise NormError("radial samples are provided for 2-dimensional sections only")
    theta = np.arange(CIRCLE_POINTS) * (2 * math.pi / CIRCLE_POINTS)
    U = np.column_stack([np.cos(theta), np.sin(theta)]) @ W.basis.T
    return RadialSamples(theta, 1.0 / _norm_rows(norm, U))


def section_volume_exact(norm: Norm, basis) -> Fraction | float:
    """Euclidean volume (in the coordinates of ``basis``) of {y : basis y in B}.

    ``basis`` may be any full-rank n x m matrix; rational input on an exact
    norm yields a Fraction.  The result is a true H^m only when the columns
    are orthonormal.
    """
    if not norm.is_polytope:
        raise NormError("exact sections need a polytope norm")
    if isinstance(basis, np.ndarray) and basis.dtype != object:
        B = np.asarray(basis, dtype=float)
        rows = _restricted_facets(norm, B)
        return polytope_volume(rows, [1.0] * len(rows))
    mat = [list(r) for r in basis]
    if norm.exact and all(_rational(v) for r in mat for v in r):
        rows = _restricted_facets(norm, mat)
        return polytope_volume(rows, [1] * len(rows))
    return section_volume_exact(norm, np.array(mat, dtype=float))


def section_volume_estimate(norm: Norm, W: Subspace, budget: float = QUADRATURE_BUDGET) -> VolumeEstimate:
    if W.ambient != norm.n:
        raise NormError("dimension mismatch")
    m = W.dim
    if norm.kind == "euclidean":
        return VolumeEstimate(alpha(m), 0.0, True, "closed-form")
    if m == 1:
        return VolumeEstimate(2.0 / norm_eval(norm, W.basis[:, 0]), 0.0, True, "closed-form")
    if norm.is_polytope:
        if m == norm.n and norm.exact:
            v = section_volume_exact(norm, [[int(i == j) for j in range(m)] for i in range(m)])
            return VolumeEstimate(float(v), 0.0, True, "exact-rational")
        return VolumeEstimate(float(section_volume_exact(norm, W.basis)), 0.0, True, "exact-polytope")
    if m == 2:
        return _circle_quadrature(norm, W.basis, budget)
    return _sphere_quadrature(norm, W.basis, budget)


def section_volume(norm: Norm, W: Subspace) -> float:
    """Euclidean m-volume of W intersected with the unit ball of ``norm``."""
    return section_volume_estimate(norm, W).value


def _circle_quadrature(norm: Norm, basis: np.ndarray, budget: float) -> VolumeEstimate:
    def trap(k: int) -> float:
        theta = np.arange(k) * (2 * math.pi / k)
        U = np.column_stack([np.cos(theta), np.sin(theta)]) @ basis.T
        r = 1.0 / _norm_rows(norm, U)
        return 0.5 * float(np.sum(r**2)) * (2 * math.pi / k)

    fine = trap(CIRCLE_POINTS)
    coarse = trap(CIRCLE_POINTS // 2)
    err = abs(fine - coarse)
    if err > budget * max(1.0, fine):
        raise QuadratureError(f"circle quadrature error {err:.2e} exceeds budget {budget:.0e}")
    return VolumeEstimate(fine, err, False, "trapezoid-2048")


def _hypersphere_integral(f, m: int, k: int) -> float:
    """Integral over S^{m-1} by product Gauss-Legendre (polar angles) x trapezoid (azimuth)."""
    x, w = np.polynomial.legendre.leggauss(k)
    angles = []
    weights = []
    for level in range(m - 2):
        phi = (x + 1) * (math.pi / 2)
        wt = w * (math.pi / 2) * np.sin(phi) ** (m - 2 - level)
        angles.append(phi)
        weights.append(wt)
    kaz = 2 * k
    az = np.arange(kaz) * (2 * math.pi / kaz)
    waz = np.full(kaz, 2 * math.pi / kaz)
    angles.append(az)
    weights.append(waz)
    grids = np.meshgrid(*angles, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for i, wt in enumerate(weights):
        shape = [1] * len(weights)
        shape[i] = -1
        wgrid = wgrid * wt.reshape(shape)
    # hyperspherical -> Cartesian
    pts = []
    sin_prod = np.ones_like(grids[0])
    for i in range(m - 2):
        pts.append(sin_prod * np.cos(grids[i]))
        sin_prod = sin_prod * np.sin(grids[i])
    pts.append(sin_prod * np.cos(grids[-1]))
    pts.append(sin_prod * np.sin(grids[-1]))
    Y = np.stack([p.ravel() for p in pts], axis=1)
    return float(np.sum(f(Y) * wgrid.ravel()))


def _sphere_quadrature(norm: Norm, basis: np.ndarray, budget: float) -> VolumeEstimate:
    m = basis.shape[1]

    def vol(k: int) -> float:
        return _hypersphere_integral(lambda Y: (1.0 / _norm_rows(norm, Y @ basis.T)) ** m, m, k) / m

    k = 32 if m <= 3 else 12
    prev = vol(k)
    while True:
        cur = vol(2 * k)
        err = abs(cur - prev)
        if err <= budget * max(1.0, cur):
            # Richardson-style estimate: the difference of successive halvings
            return VolumeEstimate(cur, err, False, f"product-quadrature-{2 * k}")
        k *= 2
        prev = cur
        if k > (512 if m <= 3 else 48):
            raise QuadratureError(f"sphere quadrature did not reach budget {budget:.0e} (last error {err:.2e})")


def psi(norm: Norm, W: Subspace) -> float:
    """Busemann-Hausdorff density alpha(m) / H^m(W cap B)."""
    return alpha(W.dim) / section_volume(norm, W)


def busemann_b(norm: Norm, u) -> float:
    """|u| alpha(n-1) / H^{n-1}(B cap u^perp); a norm on R^n by Busemann's theorem."""
    u = np.asarray(u, dtype=float)
    nu = float(np.linalg.norm(u))
    if nu == 0.0:
        return 0.0
    W = Subspace(orthogonal_complement((u / nu)[:, None]))
    return nu * psi(norm, W)


def busemann_b_many(norm: Norm, U: np.ndarray) -> np.ndarray:
    return np.array([busemann_b(norm, u) for u in np.asarray(U, dtype=float)])


# ---------------------------------------------------------------------------
# crystalline approximation


def _net_points(n: int, level: int) -> np.ndarray:
    """Deterministic direction grid on the Euclidean sphere; finer with ``level``."""
    if n == 2:
        k = 8 * level
        t = np.arange(k) * (2 * math.pi / k)
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        rings = 2 * level + 1
        pts = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
        for i in range(1, rings):
            phi = math.pi * i / rings
            k = max(4, int(round(2 * rings * math.sin(phi))))
            t = np.arange(k) * (2 * math.pi / k) + (0.5 * (i % 2)) * (2 * math.pi / k)
            ring = np.column_stack([math.sin(phi) * np.cos(t), math.sin(phi) * np.sin(t), np.full(k, math.cos(phi))])
            pts.extend(ring)
        return np.array(pts)
    g = np.linspace(-1.0, 1.0, level + 2)
    pts = []
    for i in range(n):
        for s in (-1.0, 1.0):
            for rest in itertools.product(g, repeat=n - 1):
                p = list(rest)
                p.insert(i, s)
                pts.append(p)
    P = np.unique(np.round(np.array(pts), 12), axis=0)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def _hull_facets(points: np.ndarray) -> list[tuple]:
    n = points.shape[1]
    if n == 2:
        from scipy.spatial import ConvexHull

        hull = ConvexHull(points)
    else:
        from scipy.spatial import ConvexHull

        hull = ConvexHull(points)
    facets: list[np.ndarray] = []
    for eq in hull.equations:
        a, c = eq[:-1], eq[-1]
        f = a / (-c)
        if all(np.abs(f - g).max() > 1e-9 for g in facets):
            facets.append(f)
    return [tuple(float(v) for v in f) for f in facets]


def crystalline_approx(norm: Norm, k: int) -> Norm:
    """Crystalline norm whose ball is conv(F ∪ -F) for a (1/k)-net F of the unit sphere.

    The net is a deterministic grid refined until its covering radius in
    ``norm`` (measured against a finer grid) is at most 1/k.  Ball vertices
    of polytope norms are always added to the net.
    """
    if k < 1:
        raise NormError("k must be >= 1")
    n = norm.n
    level = 1
    while True:
        D = _net_points(n, level)
        net = D / _norm_rows(norm, D)[:, None]
        if norm.is_polytope:
            net = np.vstack([net, norm.vertices])
        probe = _net_points(n, 2 * level + 1)
        probe = probe / _norm_rows(norm, probe)[:, None]
        diffs = probe[:, None, :] - net[None, :, :]
        dist = _norm_rows(norm, diffs.reshape(-1, n)).reshape(len(probe), len(net)).min(axis=1)
        if dist.max() <= 1.0 / k or level > 64:
            break
        level += 1
    net = np.vstack([net, -net])
    return Norm.crystalline(_hull_facets(net))


# ---------------------------------------------------------------------------


def lipschitz_constant(norm: Norm, M, samples: int = 4000, seed: int = 0) -> float:
    """Lip of x -> M x with respect to ``norm`` on both sides.

    Exact for polytope norms (max over ball vertices); otherwise a sampled
    lower bound refined by a local search around the best sample.
    """
    M = np.asarray(M, dtype=float)
    if norm.is_polytope:
        V = np.asarray(norm.vertices)
        return float(_norm_rows(norm, V @ M.T).max())
    if norm.kind == "euclidean":
        return float(np.linalg.norm(M, 2))
    pts = _sphere_points(norm.n, samples, seed)
    ratio = _norm_rows(norm, pts @ M.T) / _norm_rows(norm, pts)
    best = int(np.argmax(ratio))
    from scipy.optimize import minimize

    def neg(x):
        nx = norm_eval(norm, x)
        return -norm_eval(norm, M @ x) / nx if nx > 0 else 0.0

    res = minimize(neg, pts[best], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    return float(max(ratio[best], -res.fun))
