"""Low-dimensional convex and linear geometry.

Everything here is a pure function of its inputs.  Rational inputs
(``int``/``Fraction``) are kept rational by the halfplane and polytope
routines so that equality cases can be checked exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "RankDeficiencyError",
    "UnboundedRegionError",
    "EmptyRegionError",
    "Subspace",
    "Polygon2D",
    "simplex_volume",
    "wedge_norm",
    "orthonormalize",
    "orthogonal_complement",
    "halfplane_intersection",
    "polygon_area",
    "polytope_volume",
    "sample_subspaces",
]

FLOAT_EPS = 1e-12


class GeometryError(ValueError):
    pass


class RankDeficiencyError(GeometryError):
    def __init__(self, index: int):
        super().__init__(f"vector {index} is linearly dependent on the previous ones")
        self.index = index


class UnboundedRegionError(GeometryError):
    pass


class EmptyRegionError(GeometryError):
    pass


def _is_rational(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


DEGENERACY_TOL = 1e-10


def simplex_volume(points: Sequence[Sequence[float]]) -> float:
    """Euclidean m-volume of the simplex spanned by ``m+1`` points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise GeometryError("points must be a list of coordinate vectors")
    m = pts.shape[0] - 1
    if m < 0 or m > pts.shape[1]:
        raise GeometryError(f"{m + 1} points cannot span a simplex in R^{pts.shape[1]}")
    if m == 0:
        return 1.0
    edges = pts[1:] - pts[0]
    r = np.abs(np.diag(np.linalg.qr(edges.T, mode="r")))
    vol = float(np.prod(r)) / math.factorial(m)
    scale = float(np.prod(np.linalg.norm(edges, axis=1))) / math.factorial(m)
    # same relative cutoff as orthonormalize: a kept simplex always has a direction
    if scale == 0.0 or vol <= DEGENERACY_TOL * scale:
        return 0.0
    return vol


def wedge_norm(u: Sequence[float], v: Sequence[float]) -> float:
    """Area of the parallelogram spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise GeometryError("dimension mismatch")
    uu, vv, uv = float(u @ u), float(v @ v), float(u @ v)
    return math.sqrt(max(uu * vv - uv * uv, 0.0))


@dataclass(frozen=True, eq=False)
class Subspace:
    """An m-dimensional linear subspace of R^n, stored by an orthonormal basis (n x m)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, copy=True)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[1] > b.shape[0] or b.shape[1] < 1:
            raise GeometryError(f"bad basis shape {b.shape}")
        if not np.allclose(b.T @ b, np.eye(b.shape[1]), atol=1e-10):
            raise GeometryError("basis columns are not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def normal(self) -> np.ndarray:
        """Unit normal of a hyperplane (sign fixed so the first nonzero entry is positive)."""
        if self.dim != self.ambient - 1:
            raise GeometryError("normal() needs a hyperplane")
        nvec = orthogonal_complement(self.basis)[:, 0]
        k = int(np.flatnonzero(np.abs(nvec) > 1e-12)[0])
        return nvec if nvec[k] > 0 else -nvec

    def coords(self, x) -> np.ndarray:
        return self.basis.T @ np.asarray(x, dtype=float)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.projector @ x)) <= tol * max(1.0, float(np.linalg.norm(x)))

    def key(self, digits: int = 9) -> tuple:
        """Hashable key that depends only on the subspace, not the chosen basis."""
        proj = np.round(self.projector, digits) + 0.0
        return (self.ambient, self.dim, proj.tobytes())

    def distance(self, other: "Subspace") -> float:
        """Operator-norm distance between orthogonal projectors."""
        return float(np.linalg.norm(self.projector - other.projector, 2))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def span(cls, *vectors) -> "Subspace":
        return orthonormalize(vectors)

    @classmethod
    def hyperplane(cls, normal) -> "Subspace":
        nvec = np.asarray(normal, dtype=float)
        return cls(orthogonal_complement(nvec[:, None]))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, n={self.ambient})"


def orthonormalize(vectors: Iterable[Sequence[float]], tol: float = DEGENERACY_TOL) -> Subspace:
    """Modified Gram-Schmidt with a rank check on each incoming vector."""
    cols: list[np.ndarray] = []
    for i, v in enumerate(vectors):
        w = np.asarray(v, dtype=float).copy()
        scale = float(np.linalg.norm(w))
        for _ in range(2):
            for c in cols:
                w -= (c @ w) * c
        nw = float(np.linalg.norm(w))
        if scale == 0.0 or nw <= tol * scale:
            raise RankDeficiencyError(i)
        cols.append(w / nw)
    if not cols:
        raise GeometryError("no vectors given")
    return Subspace(np.column_stack(cols))


def orthogonal_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of the column span of ``basis``."""
    basis = np.asarray(basis, dtype=float)
    n, m = basis.shape
    u, _, _ = np.linalg.svd(basis, full_matrices=True)
    return u[:, m:]


# ---------------------------------------------------------------------------
# halfplanes and polygons


@dataclass(frozen=True)
class Polygon2D:
    """Convex polygon, CCW vertex order, coordinates in some 2D frame."""

    vertices: tuple

    def __len__(self):
        return len(self.vertices)

    @property
    def exact(self) -> bool:
        return all(_is_rational(c) for v in self.vertices for c in v)

    def area(self):
        return polygon_area(self.vertices)

    def as_array(self) -> np.ndarray:
        return np.array([[float(x), float(y)] for x, y in self.vertices])


def polygon_area(vertices) -> float | Fraction:
    """Signed shoelace area (positive for CCW)."""
    s = 0
    k = len(vertices)
    for i in range(k):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % k]
        s += x0 * y1 - x1 * y0
    return s / 2 if not isinstance(s, (int, Fraction)) else Fraction(s) / 2


def _recession_free(normals) -> bool:
    """True iff {x : a.x <= 0 for all a} is {0} (2D)."""
    if not normals:
        return False
    for a0, a1 in normals:
        for d in ((-a1, a0), (a1, -a0)):
            if all(b0 * d[0] + b1 * d[1] <= 0 for b0, b1 in normals):
                return False
    return True


def _ccw_sort(points):
    cx = sum(float(p[0]) for p in points) / len(points)
    cy = sum(float(p[1]) for p in points) / len(points)
    # angle about the origin when the origin is interior, else about the centroid
    if _point_strictly_inside(points, (0.0, 0.0), (cx, cy)):
        cx, cy = 0.0, 0.0

    def key(p):
        ang = math.atan2(float(p[1]) - cy, float(p[0]) - cx)
        if ang < 0:
            ang += 2 * math.pi
        rad = math.hypot(float(p[0]) - cx, float(p[1]) - cy)
        return (round(ang, 13), rad)

    return sorted(points, key=key)


def _point_strictly_inside(points, q, centre) -> bool:
    # convex hull of ``points`` sorted about ``centre``; origin test by cross products
    cx, cy = centre
    pts = sorted(points, key=lambda p: math.atan2(float(p[1]) - cy, float(p[0]) - cx))
    k = len(pts)
    for i in range(k):
        x0, y0 = (float(c) for c in pts[i])
        x1, y1 = (float(c) for c in pts[(i + 1) % k])
        cross = (x1 - x0) * (q[1] - y0) - (y1 - y0) * (q[0] - x0)
        if cross <= 1e-14:
            return False
    return True


def _drop_collinear(pts, exact: bool):
    out = list(pts)
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            p0, p1, p2 = out[i - 1], out[i], out[(i + 1) % len(out)]
            cross = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
            if (cross == 0) if exact else abs(cross) <= FLOAT_EPS * (1 + _span(p0, p2)):
                del out[i]
                changed = True
                break
    return out


def _span(p, q) -> float:
    return float(abs(p[0] - q[0]) + abs(p[1] - q[1])) ** 2


def _halfplane_vertices(cons, exact: bool):
    """All feasible pairwise line intersections, deduplicated."""
    if exact:
        pts = []
        k = len(cons)
        for i in range(k):
            a0, a1, b = cons[i]
            for j in range(i + 1, k):
                c0, c1, d = cons[j]
                det = a0 * c1 - a1 * c0
                if det == 0:
                    continue
                x = Fraction(b * c1 - a1 * d) / det
                y = Fraction(a0 * d - b * c0) / det
                if all(e0 * x + e1 * y <= f for e0, e1, f in cons):
                    pts.append((x, y))
        return list(dict.fromkeys(pts))
    arr = np.array(cons, dtype=float)
    A, b = arr[:, :2], arr[:, 2]
    k = len(arr)
    if k > 64 and (b > 0).all():
        # origin strictly inside: dual convex hull, avoids the k^2 pair enumeration
        from scipy.spatial import HalfspaceIntersection

        P = HalfspaceIntersection(np.column_stack([A, -b]), np.zeros(2)).intersections
        out: list[tuple[float, float]] = []
        for p in P[np.lexsort(P.T[::-1])]:
            if not out or abs(p[0] - out[-1][0]) + abs(p[1] - out[-1][1]) > 1e-10 * (1 + abs(p).max()):
                out.append((float(p[0]), float(p[1])))
        return [p for i, p in enumerate(out) if all(abs(p[0] - q[0]) + abs(p[1] - q[1]) > 1e-10 * (1 + max(map(abs, p))) for q in out[:i])]
    ii, jj = np.triu_indices(k, 1)
    det = A[ii, 0] * A[jj, 1] - A[ii, 1] * A[jj, 0]
    scale = np.linalg.norm(A[ii], axis=1) * np.linalg.norm(A[jj], axis=1)
    ok = np.abs(det) > 1e-13 * scale
    ii, jj, det = ii[ok], jj[ok], det[ok]
    x = (b[ii] * A[jj, 1] - A[ii, 1] * b[jj]) / det
    y = (A[ii, 0] * b[jj] - b[ii] * A[jj, 0]) / det
    P = np.column_stack([x, y])
    if len(P) == 0:
        return []
    slack = P @ A.T - b
    tol = 1e-10 * (1.0 + np.abs(b).max()) * (1.0 + np.abs(P).max(axis=1, keepdims=True))
    P = P[(slack <= tol).all(axis=1)]
    out: list[tuple[float, float]] = []
    for p in P:
        if all(abs(p[0] - q[0]) + abs(p[1] - q[1]) > 1e-10 * (1 + abs(p).max()) for q in out):
            out.append((float(p[0]), float(p[1])))
    return out


def _prepare(constraints):
    cons = []
    for c in constraints:
        (a0, a1), b = c
        cons.append((a0, a1, b))
    exact = all(_is_rational(v) for c in cons for v in c)
    if exact:
        cons = [tuple(Fraction(v) for v in c) for c in cons]
    else:
        cons = [tuple(float(v) for v in c) for c in cons]
    nonzero = []
    for a0, a1, b in cons:
        zero = (a0 == 0 and a1 == 0) if exact else (abs(a0) + abs(a1) <= 1e-300)
        if zero:
            if b < 0:
                raise EmptyRegionError("constraint 0 <= b with b < 0")
            continue
        nonzero.append((a0, a1, b))
    return nonzero, exact


def halfplane_intersection(constraints) -> Polygon2D:
    """Vertices of {x in R^2 : a.x <= b for all (a, b)} in CCW order.

    Raises ``UnboundedRegionError`` or ``EmptyRegionError``.  Redundant
    constraints do not contribute vertices.
    """
    cons, exact = _prepare(constraints)
    if not _recession_free([(a0, a1) for a0, a1, _ in cons]):
        raise UnboundedRegionError("halfplanes do not bound a region")
    pts = _halfplane_vertices(cons, exact)
    if len(pts) < 3:
        raise EmptyRegionError("intersection has empty interior")
    pts = _drop_collinear(_ccw_sort(pts), exact)
    poly = Polygon2D(tuple(pts))
    area = poly.area()
    if (area <= 0) if exact else area <= FLOAT_EPS:
        raise EmptyRegionError("intersection has empty interior")
    return poly


def _polygon_area_lenient(cons, exact: bool):
    try:
        cons2, exact2 = _prepare([((a0, a1), b) for a0, a1, b in cons])
    except EmptyRegionError:
        return Fraction(0) if exact else 0.0
    if not cons2:
        raise UnboundedRegionError("no constraints")
    pts = _halfplane_vertices(cons2, exact2)
    if len(pts) < 3:
        if not _recession_free([(a0, a1) for a0, a1, _ in cons2]):
            raise UnboundedRegionError("halfplanes do not bound a region")
        return Fraction(0) if exact2 else 0.0
    if not _recession_free([(a0, a1) for a0, a1, _ in cons2]):
        raise UnboundedRegionError("halfplanes do not bound a region")
    area = polygon_area(_ccw_sort(pts))
    return area if area > 0 else (Fraction(0) if exact2 else 0.0)


def polytope_volume(A, b):
    """Volume of the bounded polytope {y in R^k : A y <= b}.

    Uses the divergence identity vol = (1/k) sum_f h_f vol(F_f) with the
    origin as apex (signed heights), recursing on facets projected to a
    coordinate hyperplane.  Rational input gives an exact ``Fraction``.
    """
    rows = [list(r) for r in A]
    k = len(rows[0]) if rows else 0
    exact = all(_is_rational(v) for r in rows for v in r) and all(_is_rational(v) for v in b)
    if exact:
        rows = [[Fraction(v) for v in r] for r in rows]
        rhs = [Fraction(v) for v in b]
    else:
        rows = [[float(v) for v in r] for r in rows]
        rhs = [float(v) for v in b]
    return _polytope_volume(rows, rhs, k, exact)


def _dedupe(rows, rhs, exact):
    seen = {}
    out_r, out_b = [], []
    for r, d in zip(rows, rhs):
        mx = max(abs(v) for v in r)
        if (mx == 0) if exact else mx <= 1e-13:
            if d < (0 if exact else -1e-12):
                return None, None
            continue
        if exact:
            key = (tuple(v / mx for v in r), d / mx)
        else:
            key = (tuple(round(v / mx, 10) for v in r), round(d / mx, 10))
        if key in seen:
            continue
        seen[key] = True
        out_r.append(r)
        out_b.append(d)
    return out_r, out_b


def _polytope_volume(rows, rhs, k, exact):
    zero = Fraction(0) if exact else 0.0
    rows, rhs = _dedupe(rows, rhs, exact)
    if rows is None:
        return zero
    if k == 1:
        lo, hi = None, None
        for (c,), d in zip(rows, rhs):
            t = d / c
            if c > 0:
                hi = t if hi is None else min(hi, t)
            else:
                lo = t if lo is None else max(lo, t)
        if lo is None or hi is None:
            raise UnboundedRegionError("unbounded interval")
        return max(hi - lo, zero)
    if k == 2:
        return _polygon_area_lenient([(r[0], r[1], d) for r, d in zip(rows, rhs)], exact)
    total = zero
    for f, (cf, df) in enumerate(zip(rows, rhs)):
        if (df == 0) if exact else abs(df) <= 1e-15:
            continue
        i = max(range(k), key=lambda t: abs(cf[t]))
        cfi = cf[i]
        sub_rows, sub_rhs = [], []
        for g, (cg, dg) in enumerate(zip(rows, rhs)):
            if g == f:
                continue
            ratio = cg[i] / cfi
            sub_rows.append([cg[t] - ratio * cf[t] for t in range(k) if t != i])
            sub_rhs.append(dg - ratio * df)
        # the facet itself must stay bounded: add its own hyperplane slab as a no-op
        face = _polytope_volume(sub_rows, sub_rhs, k - 1, exact) if sub_rows else zero
        total += df * face / abs(cfi)
    return total / k


def sample_subspaces(n: int, m: int, count: int, seed: int) -> list[Subspace]:
    """Haar-distributed m-planes in R^n (QR of Gaussian matrices, sign-fixed)."""
    if not 1 <= m <= n - 1:
        raise GeometryError(f"need 1 <= m <= n-1, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        g = rng.standard_normal((n, m))
        q, r = np.linalg.qr(g)
        q = q * np.sign(np.diag(r))
        out.append(Subspace(q))
    return out
