"""Polyhedral G-chains: oriented simplices with coefficients in a normed group.

Chains are immutable.  The canonical form keys each simplex by its sorted
vertex tuple and folds the sorting permutation's parity into the
coefficient, so two chains are equal iff their normalized term tuples are.
Overlapping but non-identical coplanar pieces are only merged by
:func:`merge_coplanar` (dimension <= 2), which computes the planar
arrangement.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .geometry import GeometryError, Subspace, orthonormalize, simplex_volume, orthogonal_complement
from .norms import Norm, psi

__all__ = [
    "CoefficientGroup",
    "Z",
    "R",
    "Zq",
    "PolyhedralChain",
    "ChainError",
    "OverlapError",
    "SliceMass",
    "boundary",
    "hausdorff_mass",
    "pushforward_linear",
    "pushforward_affine",
    "slice_mass",
    "slice_integral",
    "cone",
    "edgewise_index_set",
    "edgewise_maps",
    "split_by_hyperplane",
    "merge_coplanar",
    "affine_plane_groups",
    "chains_equal",
    "direction",
    "LscStep",
    "lsc_sequence",
    "cone_cycle",
]

KEY_DIGITS = 11


class ChainError(ValueError):
    pass


class OverlapError(ChainError):
    pass


@dataclass(frozen=True)
class CoefficientGroup:
    """Z, Z_q or R with the norms |k|, min(k, q-k) and |x|."""

    tag: str
    q: int | None = None

    def __post_init__(self):
        if self.tag not in ("Z", "Zq", "R"):
            raise ChainError(f"unknown group {self.tag!r}")
        if self.tag == "Zq" and (self.q is None or self.q < 2):
            raise ChainError("Z_q needs q >= 2")

    def element(self, g):
        if self.tag == "Z":
            if isinstance(g, float) and not g.is_integer():
                raise ChainError(f"{g} is not an integer")
            return int(g)
        if self.tag == "Zq":
            return int(g) % self.q
        return float(g)

    def add(self, g, h):
        return self.element(g + h)

    def neg(self, g):
        return self.element(-g)

    def scale(self, g, k: int):
        return self.element(g * k)

    def is_zero(self, g) -> bool:
        if self.tag == "R":
            return abs(g) <= 1e-12
        return self.element(g) == 0

    def norm(self, g) -> float:
        if self.tag == "Z":
            return float(abs(int(g)))
        if self.tag == "Zq":
            k = int(g) % self.q
            return float(min(k, self.q - k))
        return abs(float(g))

    def to_json(self) -> dict:
        return {"tag": "Zq", "q": self.q} if self.tag == "Zq" else {"tag": self.tag}

    @classmethod
    def from_json(cls, obj: dict) -> "CoefficientGroup":
        return cls(obj["tag"], obj.get("q"))

    def __str__(self):
        return f"Z_{self.q}" if self.tag == "Zq" else self.tag


Z = CoefficientGroup("Z")
R = CoefficientGroup("R")


def Zq(q: int) -> CoefficientGroup:
    return CoefficientGroup("Zq", q)


def _vkey(v) -> tuple:
    return tuple(round(float(c), KEY_DIGITS) + 0.0 for c in v)


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _canonical(vertices) -> tuple[tuple, int]:
    keys = [_vkey(v) for v in vertices]
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    if len(set(keys)) < len(keys):
        return tuple(), 0
    return tuple(tuple(float(c) for c in vertices[i]) for i in order), _parity(order)


@dataclass(frozen=True, eq=False)
class PolyhedralChain:
    """sum_k g_k [[sigma_k]]; ``terms`` is a tuple of (g, vertices) in canonical form."""

    dim: int
    group: CoefficientGroup
    terms: tuple

    @classmethod
    def from_terms(cls, dim: int, group: CoefficientGroup, terms: Iterable, keep_degenerate: bool = False) -> "PolyhedralChain":
        acc: dict[tuple, list] = {}
        order: list[tuple] = []
        for g, verts in terms:
            verts = [tuple(float(c) for c in v) for v in verts]
            if len(verts) != dim + 1:
                raise ChainError(f"a {dim}-simplex needs {dim + 1} vertices, got {len(verts)}")
            canon, sign = _canonical(verts)
            if sign == 0:
                continue
            if dim > 0 and not keep_degenerate and simplex_volume(canon) == 0.0:
                continue
            g = group.element(g)
            if sign < 0:
                g = group.neg(g)
            key = tuple(_vkey(v) for v in canon)
            if key in acc:
                acc[key][0] = group.add(acc[key][0], g)
            else:
                acc[key] = [g, canon]
                order.append(key)
        out = tuple((acc[k][0], acc[k][1]) for k in sorted(order) if not group.is_zero(acc[k][0]))
        return cls(dim, group, out)

    @classmethod
    def simplex(cls, vertices, g=1, group: CoefficientGroup = Z) -> "PolyhedralChain":
        return cls.from_terms(len(vertices) - 1, group, [(g, vertices)])

    @classmethod
    def zero(cls, dim: int, group: CoefficientGroup = Z) -> "PolyhedralChain":
        return cls(dim, group, ())

    @property
    def ambient(self) -> int | None:
        return len(self.terms[0][1][0]) if self.terms else None

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def _check(self, other: "PolyhedralChain"):
        if self.dim != other.dim or self.group != other.group:
            raise ChainError("chains differ in dimension or group")

    def __add__(self, other: "PolyhedralChain") -> "PolyhedralChain":
        self._check(other)
        return PolyhedralChain.from_terms(self.dim, self.group, list(self.terms) + list(other.terms))

    def __neg__(self) -> "PolyhedralChain":
        return PolyhedralChain(self.dim, self.group, tuple((self.group.neg(g), v) for g, v in self.terms))

    def __sub__(self, other: "PolyhedralChain") -> "PolyhedralChain":
        return self + (-other)

    def scale(self, k: int) -> "PolyhedralChain":
        return PolyhedralChain.from_terms(self.dim, self.group, [(self.group.scale(g, k), v) for g, v in self.terms])

    def with_group(self, group: CoefficientGroup) -> "PolyhedralChain":
        return PolyhedralChain.from_terms(self.dim, group, [(g, v) for g, v in self.terms])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyhedralChain):
            return NotImplemented
        if self.dim != other.dim or self.group != other.group or len(self.terms) != len(other.terms):
            return False
        for (g, v), (h, w) in zip(self.terms, other.terms):
            if tuple(map(_vkey, v)) != tuple(map(_vkey, w)):
                return False
            if not self.group.is_zero(self.group.add(g, self.group.neg(h))):
                return False
        return True

    __hash__ = None

    def vertices(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, 0))
        return np.array([v for _, vs in self.terms for v in vs])

    def to_json(self) -> dict:
        def num(g):
            return g if self.group.tag != "R" else float(g)

        return {
            "dim": self.dim,
            "group": self.group.to_json(),
            "terms": [{"g": num(g), "vertices": [list(v) for v in vs]} for g, vs in self.terms],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PolyhedralChain":
        group = CoefficientGroup.from_json(obj["group"])
        return cls.from_terms(int(obj["dim"]), group, [(t["g"], t["vertices"]) for t in obj["terms"]])

    def __repr__(self):
        return f"PolyhedralChain(dim={self.dim}, group={self.group}, terms={len(self.terms)})"


ZeroChain = PolyhedralChain


def direction(vertices) -> Subspace:
    v = np.asarray(vertices, dtype=float)
    return orthonormalize(v[1:] - v[0])


def boundary(P: PolyhedralChain) -> PolyhedralChain:
    if P.dim < 1:
        raise ChainError("0-chains have no boundary")
    out = []
    for g, vs in P.terms:
        for i in range(len(vs)):
            face = vs[:i] + vs[i + 1:]
            out.append((g if i % 2 == 0 else P.group.neg(g), face))
    return PolyhedralChain.from_terms(P.dim - 1, P.group, out)


class _DensityCache:
    def __init__(self, density: Callable[[Subspace], float]):
        self.density = density
        self.cache: dict = {}

    def __call__(self, W: Subspace) -> float:
        k = W.key()
        if k not in self.cache:
            self.cache[k] = self.density(W)
        return self.cache[k]


def _density_for(norm: Norm | None, density) -> Callable[[Subspace], float]:
    if density is not None:
        return density if isinstance(density, _DensityCache) else _DensityCache(density)
    if norm is None:
        raise ChainError("need a norm or a density")
    if norm.kind == "euclidean":
        return lambda W: 1.0
    return _DensityCache(lambda W: psi(norm, W))


def hausdorff_mass(P: PolyhedralChain, norm: Norm | None = None, *, density=None, debug_overlap: bool = False) -> float:
    """sum ||g_k|| psi(W_k) vol(sigma_k).

    ``density`` replaces psi by an arbitrary positive function on
    m-planes (used for synthetic, non-Busemann densities).
    """
    if P.dim == 0:
        return float(sum(P.group.norm(g) for g, _ in P.terms))
    if debug_overlap:
        check_overlap(P)
    dens = _density_for(norm, density)
    total = 0.0
    for g, vs in P.terms:
        vol = simplex_volume(vs)
        if vol == 0.0:
            continue
        total += P.group.norm(g) * dens(direction(vs)) * vol
    return total


def check_overlap(P: PolyhedralChain, tol: float = 1e-9) -> None:
    """Pairwise test that distinct simplices have disjoint relative interiors (dim <= 2)."""
    if P.dim == 0 or P.dim > 2:
        return
    terms = [np.asarray(vs) for _, vs in P.terms]
    for i, j in itertools.combinations(range(len(terms)), 2):
        if _interiors_meet(terms[i], terms[j], tol):
            raise OverlapError(f"terms {i} and {j} overlap")


def _interiors_meet(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    m = a.shape[0] - 1
    Wa, Wb = direction(a), direction(b)
    if Wa.distance(Wb) > 1e-9 or not Wa.contains(b[0] - a[0], 1e-9):
        return False
    ya = (a - a[0]) @ Wa.basis
    yb = (b - a[0]) @ Wa.basis
    if m == 1:
        lo = max(ya.min(), yb.min())
        hi = min(ya.max(), yb.max())
        return hi - lo > tol
    from shapely.geometry import Polygon

    inter = Polygon(ya).intersection(Polygon(yb))
    return inter.area > tol


# ---------------------------------------------------------------------------
# maps


def pushforward_affine(P: PolyhedralChain, M, t=None) -> PolyhedralChain:
    M = np.asarray(M, dtype=float)
    t = np.zeros(M.shape[0]) if t is None else np.asarray(t, dtype=float)
    out = []
    for g, vs in P.terms:
        img = np.asarray(vs) @ M.T + t
        out.append((g, [tuple(p) for p in img]))
    return PolyhedralChain.from_terms(P.dim, P.group, out)


def pushforward_linear(P: PolyhedralChain, M) -> PolyhedralChain:
    return pushforward_affine(P, M)


def _image_subspace(pi: np.ndarray, target: Subspace | None) -> Subspace | None:
    if target is not None:
        return target
    u, s, _ = np.linalg.svd(pi)
    r = int((s > 1e-10 * max(1.0, s[0])).sum())
    if r == 0:
        return None
    return Subspace(u[:, :r])


@dataclass(frozen=True)
class SliceMass:
    value: float
    boundary_case: bool


def slice_mass(P: PolyhedralChain, pi, y, target: Subspace | None = None, tol: float = 1e-12) -> SliceMass:
    """Mass of the 0-dimensional slice <P, pi, y> (images counted separately, no cancellation)."""
    pi = np.asarray(pi, dtype=float)
    W = _image_subspace(pi, target)
    if W is None or W.dim != P.dim:
        return SliceMass(0.0, False)
    yw = W.coords(y)
    total = 0.0
    flagged = False
    for g, vs in P.terms:
        img = np.asarray(vs) @ pi.T @ W.basis
        E = (img[1:] - img[0]).T
        if abs(np.linalg.det(E)) <= 1e-14:
            continue
        lam = np.linalg.solve(E, yw - img[0])
        bary = np.concatenate([[1.0 - lam.sum()], lam])
        if (bary > tol).all():
            total += P.group.norm(g)
        elif (bary >= -tol).all():
            flagged = True
    return SliceMass(total, flagged)


def slice_integral(P: PolyhedralChain, pi, norm: Norm, target: Subspace | None = None, *, density=None) -> float:
    """sum ||g_k|| H^m(pi(sigma_k)) = integral over W of the slice masses."""
    pi = np.asarray(pi, dtype=float)
    W = _image_subspace(pi, target)
    if W is None or W.dim < P.dim:
        return 0.0
    dens = _density_for(norm, density)
    d = dens(W) if W.dim == P.dim else None
    total = 0.0
    for g, vs in P.terms:
        img = np.asarray(vs) @ pi.T
        vol = simplex_volume(img)
        if vol == 0.0:
            continue
        if d is None:
            total += P.group.norm(g) * dens(direction(img)) * vol
        else:
            total += P.group.norm(g) * d * vol
    return total


def cone(apex, P: PolyhedralChain) -> PolyhedralChain:
    a = tuple(float(c) for c in apex)
    return PolyhedralChain.from_terms(P.dim + 1, P.group, [(g, (a,) + tuple(vs)) for g, vs in P.terms])


def edgewise_index_set(m: int, j: int) -> list[tuple[int, ...]]:
    """{alpha in N^m : sum(alpha) <= j - 1}, lexicographic."""
    if j < 1:
        raise ChainError("j must be >= 1")
    return [a for a in itertools.product(range(j), repeat=m) if sum(a) <= j - 1]


def edgewise_maps(sigma, j: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Affine maps x -> A x + t shrinking sigma by 1/j onto its upright sub-simplices."""
    X = np.asarray(sigma, dtype=float)
    x0 = X[0]
    E = X[1:] - x0
    m = len(E)
    n = X.shape[1]
    out = []
    for alpha in edgewise_index_set(m, j):
        shift = x0 + (np.asarray(alpha, dtype=float) @ E) / j if m else x0
        A = np.eye(n) / j
        t = shift - x0 / j
        out.append((A, t))
    return out


# ---------------------------------------------------------------------------
# splitting


def _triangulate_piece(points: np.ndarray, frame: Subspace, origin: np.ndarray) -> list[np.ndarray]:
    """Triangulate the convex hull of ``points`` (lying in origin + frame)."""
    m = frame.dim
    Y = (points - origin) @ frame.basis
    if m == 1:
        order = np.argsort(Y[:, 0])
        lo, hi = points[order[0]], points[order[-1]]
        return [np.array([lo, hi])]
    from scipy.spatial import ConvexHull, Delaunay

    hull = ConvexHull(Y)
    Yv = Y[hull.vertices]
    Pv = points[hull.vertices]
    if m == 2:
        # hull.vertices are CCW for 2D: fan from the first vertex
        return [np.array([Pv[0], Pv[i], Pv[i + 1]]) for i in range(1, len(Pv) - 1)]
    tri = Delaunay(Yv)
    return [Pv[s] for s in tri.simplices]


def _orient_like(piece: np.ndarray, ref: np.ndarray, frame: Subspace) -> tuple[np.ndarray, int]:
    def det(s):
        E = (s[1:] - s[0]) @ frame.basis
        return np.linalg.det(E)

    return piece, (1 if det(piece) * det(ref) > 0 else -1)


def split_by_hyperplane(P: PolyhedralChain, a, b: float, tol: float = 1e-12) -> PolyhedralChain:
    """Subdivide each simplex so every piece lies on one side of {a.x = b}."""
    a = np.asarray(a, dtype=float)
    out = []
    for g, vs in P.terms:
        V = np.asarray(vs, dtype=float)
        s = V @ a - b
        scale = tol * (1.0 + np.abs(V).max()) * (1.0 + float(np.linalg.norm(a)))
        s = np.where(np.abs(s) <= scale, 0.0, s)
        if (s >= 0).all() or (s <= 0).all() or P.dim == 0:
            out.append((g, vs))
            continue
        cuts = []
        for i, k in itertools.combinations(range(len(V)), 2):
            if s[i] * s[k] < 0:
                lam = s[i] / (s[i] - s[k])
                cuts.append(V[i] + lam * (V[k] - V[i]))
        on = [V[i] for i in range(len(V)) if s[i] == 0]
        frame = direction(V)
        for side in (1, -1):
            pts = [V[i] for i in range(len(V)) if side * s[i] > 0] + on + cuts
            pts = np.array(pts)
            for piece in _triangulate_piece(pts, frame, V[0]):
                piece, sign = _orient_like(piece, V, frame)
                out.append((g if sign > 0 else P.group.neg(g), [tuple(p) for p in piece]))
    return PolyhedralChain.from_terms(P.dim, P.group, out)


# ---------------------------------------------------------------------------
# arrangement normalization for dimension <= 2


def affine_plane_groups(simplices: Iterable, tol: float = 1e-9, dim: int | None = None) -> list[tuple[Subspace, np.ndarray, list[int]]]:
    """Group simplices (or planar convex polygons, given ``dim``) lying in a common affine plane.

    Membership is decided by vertex distance to a group's plane (relative
    to the coordinate scale), never by rounding keys, so nearly equal
    directions cannot straddle a rounding boundary.
    """
    groups: list[tuple[Subspace, np.ndarray, np.ndarray, list[int]]] = []
    for idx, vs in enumerate(simplices):
        V = np.asarray(vs, dtype=float)
        k = len(V) - 1 if dim is None else dim
        scale = 1.0 + float(np.abs(V).max())
        for W, origin, comp, members in groups:
            if W.dim != k:
                continue
            if np.abs((V - origin) @ comp).max(initial=0.0) <= tol * scale:
                members.append(idx)
                break
        else:
            if len(V) == k + 1:
                W = direction(V)
            else:
                _, _, vt = np.linalg.svd(V - V.mean(axis=0))
                W = Subspace(np.linalg.qr(vt[:k].T)[0])
            comp = orthogonal_complement(W.basis) if W.dim < W.ambient else np.zeros((W.ambient, 0))
            groups.append((W, V[0], comp, [idx]))
    return [(W, origin, members) for W, origin, _, members in groups]


def merge_coplanar(P: PolyhedralChain, area_tol: float = 1e-12) -> PolyhedralChain:
    """Cancel and merge overlapping coplanar (collinear) pieces exactly as point functions."""
    if P.dim == 0 or not P.terms:
        return P
    if P.dim > 2:
        raise ChainError("arrangement merging is implemented for dimension <= 2")
    out = []
    for W, origin, members in affine_plane_groups(s for _, s in P.terms):
        items = [(P.terms[i][0], np.asarray(P.terms[i][1])) for i in members]
        if P.dim == 1:
            out.extend(_merge_line(items, W, origin, P.group))
        else:
            out.extend(_merge_plane(items, W, origin, P.group, area_tol))
    return PolyhedralChain.from_terms(P.dim, P.group, out)


def _merge_line(items, W: Subspace, origin, group):
    u = W.basis[:, 0]
    events = []
    original = {}
    for g, V in items:
        t0, t1 = round(float((V[0] - origin) @ u), 12), round(float((V[1] - origin) @ u), 12)
        original.setdefault(t0, tuple(V[0]))
        original.setdefault(t1, tuple(V[1]))
        if t0 > t1:
            t0, t1, g = t1, t0, group.neg(g)
        events.append((t0, t1, g))
    pts = sorted({t for e in events for t in e[:2]})

    def at(t):
        return original.get(t) or tuple(origin + t * u)

    out = []
    run_start, run_coef = None, None
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        c = group.element(0)
        for t0, t1, g in events:
            if t0 < mid < t1:
                c = group.add(c, g)
        if group.is_zero(c):
            c = None
        if c != run_coef or (c is None):
            if run_coef is not None:
                out.append((run_coef, [at(run_start), at(lo)]))
            run_start, run_coef = lo, c
    if run_coef is not None:
        out.append((run_coef, [at(run_start), at(pts[-1])]))
    return out


def _face_coefficient(pt, tris, group):
    c = group.element(0)
    x, y = pt
    for g, Y in tris:
        (x0, y0), (x1, y1), (x2, y2) = Y
        d1 = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
        d2 = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        d3 = (x0 - x2) * (y - y2) - (y0 - y2) * (x - x2)
        if (d1 > 0 and d2 > 0 and d3 > 0) or (d1 < 0 and d2 < 0 and d3 < 0):
            c = group.add(c, g)
    return c


def _merge_plane(items, W: Subspace, origin, group, area_tol):
    """Arrangement of all triangle edges; each face gets the signed sum of the triangles covering it."""
    import shapely
    from shapely.geometry import MultiLineString
    from shapely.ops import polygonize, unary_union

    # snap to a fine grid: float noise can leave distinct nodes 1e-16 apart and pinch faces
    scale = 1.0 + max(float(np.abs((V - origin) @ W.basis).max()) for _, V in items)
    grid = 1e-12 * scale
    tris = []
    segs = []
    # input vertices are reported back at their original coordinates
    original = {}
    for g, V in items:
        Y = np.round(((V - origin) @ W.basis) / grid) * grid
        for y, v in zip(Y, V):
            original.setdefault(_grid_key(y, grid), tuple(v))
        d = (Y[1, 0] - Y[0, 0]) * (Y[2, 1] - Y[0, 1]) - (Y[1, 1] - Y[0, 1]) * (Y[2, 0] - Y[0, 0])
        if d < 0:
            g = group.neg(g)
            Y = Y[[0, 2, 1]]
        tris.append((g, Y))
        segs += [(tuple(Y[a]), tuple(Y[b])) for a, b in ((0, 1), (1, 2), (2, 0))]
    noded = shapely.union_all(MultiLineString(segs), grid_size=grid)
    regions = []
    for face in polygonize(noded):
        if face.area <= area_tol:
            continue
        q = face.representative_point()
        c = _face_coefficient((q.x, q.y), tris, group)
        regions.append((face, c))
    bycoef: dict = {}
    for poly, c in regions:
        if group.is_zero(c):
            continue
        key = round(c, 10) if group.tag == "R" else c
        bycoef.setdefault(key, []).append(poly)
    out = []
    for c, polys in bycoef.items():
        merged = unary_union(polys)
        tris = shapely.constrained_delaunay_triangles(merged)
        for tri in getattr(tris, "geoms", []):
            if tri.area <= area_tol:
                continue
            xy = np.asarray(tri.exterior.coords)[:3]
            d = (xy[1, 0] - xy[0, 0]) * (xy[2, 1] - xy[0, 1]) - (xy[1, 1] - xy[0, 1]) * (xy[2, 0] - xy[0, 0])
            if d < 0:
                xy = xy[[0, 2, 1]]
            pts = origin + xy @ W.basis.T
            out.append((c, [original.get(_grid_key(y, grid)) or tuple(p) for y, p in zip(xy, pts)]))
    return out


def _grid_key(y, grid: float) -> tuple:
    return tuple(int(round(float(c) / grid)) for c in y)


def chains_equal(P: PolyhedralChain, Q: PolyhedralChain, tol: float = 1e-9) -> bool:
    """Equality as G-valued point functions (dimension <= 2), up to Euclidean mass ``tol``."""
    if P.dim != Q.dim:
        return False
    D = P - Q
    if D.is_zero():
        return True
    if D.dim <= 2:
        D = merge_coplanar(D)
    return hausdorff_mass(D, Norm.euclidean(D.ambient or 1)) <= tol


# ---------------------------------------------------------------------------
# the lower-semicontinuity counterexample sequence


@dataclass(frozen=True)
class LscStep:
    j: int
    chain: PolyhedralChain
    card: int
    mass: float
    flat_bound: float
    bookkeeping_bound: float


def _inverted_simplices(X: np.ndarray, j: int) -> list[np.ndarray]:
    """Downward sub-triangles of the edgewise j-subdivision of a triangle."""
    x0, e1, e2 = X[0], (X[1] - X[0]) / j, (X[2] - X[0]) / j
    out = []
    for a in range(j):
        for b in range(j):
            if a + b <= j - 2:
                p = x0 + (a + 1) * e1 + b * e2
                q = x0 + a * e1 + (b + 1) * e2
                r = x0 + (a + 1) * e1 + (b + 1) * e2
                out.append(np.array([p, q, r]))
    return out


def lsc_sequence(
    P: PolyhedralChain,
    Q: PolyhedralChain,
    R: PolyhedralChain | None,
    j: int,
    norm: Norm | None = None,
    *,
    density=None,
    filling_density=None,
) -> LscStep:
    """P_j = P + sum_alpha f_{j,alpha#}(Q - P) for P = g1 [[sigma1]].

    ``P - sum f#P`` is materialized as the complementary pieces of the
    edgewise subdivision (dimension 1 or 2), so the returned chain has
    nonoverlapping terms and its mass can be read off directly.
    """
    if len(P.terms) != 1:
        raise ChainError("P must be a single simplex g1 [[sigma1]]")
    if P.dim not in (1, 2):
        raise ChainError("lsc_sequence is implemented for m in {1, 2}")
    if not chains_equal(boundary(P), boundary(Q)):
        raise ChainError("Q - P is not a cycle")
    dens = _density_for(norm, density)
    g1, sigma = P.terms[0]
    X = np.asarray(sigma)
    maps = edgewise_maps(X, j)
    card = len(maps)
    terms = []
    if P.dim == 2:
        # orientation of the inverted pieces is fixed to match sigma
        W = direction(X)
        for tri in _inverted_simplices(X, j):
            _, s = _orient_like(tri, X, W)
            terms.append((g1 if s > 0 else P.group.neg(g1), [tuple(p) for p in tri]))
    for A, t in maps:
        img = pushforward_affine(Q, A, t)
        terms.extend(img.terms)
    Pj = PolyhedralChain.from_terms(P.dim, P.group, terms)
    mass = hausdorff_mass(Pj, density=dens)
    mP = hausdorff_mass(P, density=dens)
    mQ = hausdorff_mass(Q, density=dens)
    eta = mP - mQ
    mR = 0.0
    if R is not None and not R.is_zero():
        if filling_density is not None:
            mR = hausdorff_mass(R, density=filling_density)
        else:
            mR = hausdorff_mass(R, norm if norm is not None else Norm.euclidean(R.ambient))
    flat = mR * card / j ** (P.dim + 1)
    return LscStep(j, Pj, card, mass, flat, mP - eta * card / j**P.dim)


def cone_cycle(sigma, apex, g=1, group: CoefficientGroup = Z) -> tuple[PolyhedralChain, PolyhedralChain, PolyhedralChain]:
    """(P, Q, R) with P = g[[sigma]], Q = apex cone over dP, and Q - P = dR."""
    P = PolyhedralChain.from_terms(len(sigma) - 1, group, [(g, sigma)])
    Q = cone(apex, boundary(P))
    R = -cone(apex, P)
    return P, Q, R
