"""Discrete Plateau problems over simplicial complexes with normed-area weights.

Minimization is over chains carried by a user-supplied complex, which is a
deliberate discretization of the ambient problem: every optimum reported
here is optimal within the complex only.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .chains import (
    CoefficientGroup,
    PolyhedralChain,
    R as GROUP_R,
    Z as GROUP_Z,
    boundary,
    chains_equal,
    cone_cycle,
    direction,
    hausdorff_mass,
    lsc_sequence,
    merge_coplanar,
    pushforward_affine,
    split_by_hyperplane,
)
from .contractors import busemann_projector
from .geometry import Subspace, simplex_volume
from .lp import solve_exact_lp
from .norms import Norm, alpha, psi, section_volume_exact

logger = logging.getLogger(__name__)

__all__ = [
    "PlateauError",
    "InfeasibleBoundary",
    "SimplicialComplex",
    "ChainProgram",
    "PlateauSolution",
    "build_program",
    "solve",
    "simplicial_flat_norm",
    "support_reduction",
    "linf_graph_mass",
    "grid_triangulation",
    "random_admissible_pl",
    "lsc_harness",
    "cone_triangulation",
    "square_boundary",
]

EXACT_NNZ_LIMIT = 50_000
DISCRETIZATION_NOTE = "minimization over chains carried by the given complex (optimal within this complex)"


class PlateauError(ValueError):
    pass


class InfeasibleBoundary(PlateauError):
    """B is not a boundary in the complex; ``witness`` is a cocycle z with z.B != 0."""

    def __init__(self, msg: str, witness: list[float]):
        super().__init__(msg)
        self.witness = witness


def _parse_coord(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (int, Fraction)):
        return v
    return float(v)


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Vertices plus cells of every dimension (sorted vertex-index tuples), closed under faces."""

    vertices: tuple
    cells: dict

    @classmethod
    def from_cells(cls, vertices: Sequence, top_cells: Sequence[Sequence[int]] | dict) -> "SimplicialComplex":
        verts = tuple(tuple(_parse_coord(c) for c in v) for v in vertices)
        given = top_cells.values() if isinstance(top_cells, dict) else [top_cells]
        cells: dict[int, set] = {}
        for group in given:
            for cell in group:
                s = tuple(sorted(int(i) for i in cell))
                if len(set(s)) != len(s):
                    raise PlateauError(f"cell {cell} repeats a vertex")
                for k in range(1, len(s) + 1):
                    for face in itertools.combinations(s, k):
                        cells.setdefault(k - 1, set()).add(face)
        out = {d: tuple(sorted(c)) for d, c in sorted(cells.items())}
        cx = cls(verts, out)
        cx.validate()
        return cx

    @property
    def dim(self) -> int:
        return max(self.cells)

    @property
    def ambient(self) -> int:
        return len(self.vertices[0])

    def coords(self, cell) -> np.ndarray:
        return np.array([[float(c) for c in self.vertices[i]] for i in cell])

    def exact_coords(self, cell) -> list | None:
        rows = [self.vertices[i] for i in cell]
        if all(isinstance(c, (int, Fraction)) for r in rows for c in r):
            return rows
        return None

    def index(self, d: int) -> dict:
        cache = self.__dict__.setdefault("_index", {})
        if d not in cache:
            cache[d] = {c: i for i, c in enumerate(self.cells.get(d, ()))}
        return cache[d]

    def boundary_matrix(self, d: int) -> sparse.csr_matrix:
        """Signed incidence of d-cells (columns) to (d-1)-cells (rows)."""
        cache = self.__dict__.setdefault("_bd", {})
        if d in cache:
            return cache[d]
        rows, cols, vals = [], [], []
        idx = self.index(d - 1)
        for j, cell in enumerate(self.cells.get(d, ())):
            for i in range(len(cell)):
                face = cell[:i] + cell[i + 1 :]
                rows.append(idx[face])
                cols.append(j)
                vals.append(-1 if i % 2 else 1)
        M = sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.cells.get(d - 1, ())), len(self.cells.get(d, ()))), dtype=np.int64)
        cache[d] = M
        return M

    def validate(self) -> None:
        for d, cells in self.cells.items():
            if d == 0:
                continue
            for c in cells:
                if d > self.ambient or simplex_volume(self.coords(c)) == 0.0:
                    raise PlateauError(f"degenerate {d}-cell {c}")
        for d in range(2, self.dim + 1):
            if (self.boundary_matrix(d - 1) @ self.boundary_matrix(d)).count_nonzero():
                raise PlateauError("boundary of boundary is not zero")

    def chain(self, d: int, coeffs, group: CoefficientGroup = GROUP_Z) -> PolyhedralChain:
        terms = [(g, [tuple(p) for p in self.coords(c)]) for c, g in zip(self.cells[d], coeffs) if not group.is_zero(g)]
        return PolyhedralChain.from_terms(d, group, terms)

    def coefficients(self, P: PolyhedralChain) -> list:
        """Coefficient vector of a chain whose simplices are (oriented) cells of the complex."""
        d = P.dim
        lookup = {tuple(np.round([float(c) for c in v], 9) + 0.0): i for i, v in enumerate(self.vertices)}
        out = [P.group.element(0)] * len(self.cells.get(d, ()))
        idx = self.index(d)
        for g, s in P.terms:
            try:
                vi = [lookup[tuple(np.round(np.asarray(p, dtype=float), 9) + 0.0)] for p in s]
            except KeyError as exc:
                raise PlateauError("chain vertex is not a vertex of the complex") from exc
            order = sorted(range(len(vi)), key=lambda k: vi[k])
            cell = tuple(vi[k] for k in order)
            if cell not in idx:
                raise PlateauError(f"simplex {cell} is not a cell of the complex")
            inv = sum(1 for a in range(len(order)) for b in range(a + 1, len(order)) if order[a] > order[b])
            gg = g if inv % 2 == 0 else P.group.neg(g)
            k = idx[cell]
            out[k] = P.group.add(out[k], gg)
        return out

    def to_json(self) -> dict:
        def num(c):
            return str(c) if isinstance(c, Fraction) else c

        return {
            "vertices": [[num(c) for c in v] for v in self.vertices],
            "cells": {str(d): [list(c) for c in cells] for d, cells in self.cells.items() if d > 0},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SimplicialComplex":
        return cls.from_cells(obj["vertices"], {int(d): c for d, c in obj["cells"].items()})


def cell_weight(cx: SimplicialComplex, cell, norm: Norm) -> tuple[Fraction | None, float]:
    """(rational r with weight = alpha(m) r, or None; float weight psi(W) vol)."""
    m = len(cell) - 1
    pts = cx.coords(cell)
    if norm.kind == "euclidean":
        return None, simplex_volume(pts)
    ex = cx.exact_coords(cell)
    if ex is not None and norm.is_polytope and norm.exact:
        E = [[Fraction(ex[k + 1][i]) - Fraction(ex[0][i]) for k in range(m)] for i in range(len(ex[0]))]
        vol_y = section_volume_exact(norm, E)
        if isinstance(vol_y, Fraction):
            r = 1 / (math.factorial(m) * vol_y)
            return r, alpha(m) * float(r)
    W = direction(pts)
    return None, psi(norm, W) * simplex_volume(pts)


@dataclass(frozen=True, eq=False)
class ChainProgram:
    complex: SimplicialComplex
    norm: Norm
    group: CoefficientGroup
    m: int
    weights: tuple  # Fractions; objective = scale * sum w |g|
    scale: float
    exact_weights: bool
    target: tuple  # coefficients of B on (m-1)-cells

    @property
    def float_weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights]) * self.scale


def _is_cycle(cx: SimplicialComplex, m: int, B: Sequence, group: CoefficientGroup) -> bool:
    if m - 1 == 0:
        if group.tag in ("Z", "R"):
            return sum(B) == 0
        return group.is_zero(sum(int(b) for b in B) % group.q)
    D = cx.boundary_matrix(m - 1)
    vec = D @ np.array([float(b) if group.tag == "R" else int(b) for b in B])
    if group.tag == "Zq":
        return bool(np.all(np.round(vec).astype(np.int64) % group.q == 0))
    return bool(np.all(np.abs(vec) <= 1e-12))


def build_program(cx: SimplicialComplex, norm: Norm, group: CoefficientGroup, B, m: int | None = None) -> ChainProgram:
    """Weights w_sigma = psi(W_sigma) vol(sigma) on m-cells and the boundary target B.

    ``B`` is a PolyhedralChain of (m-1)-cells or a coefficient vector (then ``m`` is required).
    """
    if isinstance(B, PolyhedralChain):
        m = B.dim + 1 if m is None else m
        target = cx.coefficients(B.with_group(group) if B.group != group else B)
    else:
        if m is None:
            raise PlateauError("m is required when B is a coefficient vector")
        target = [group.element(b) for b in B]
    if m not in cx.cells:
        raise PlateauError(f"complex has no {m}-cells")
    if len(target) != len(cx.cells.get(m - 1, ())):
        raise PlateauError("B has the wrong length")
    if not _is_cycle(cx, m, target, group):
        raise PlateauError("B is not a cycle")
    ws = [cell_weight(cx, c, norm) for c in cx.cells[m]]
    if all(r is not None for r, _ in ws):
        weights, scale, exact = tuple(r for r, _ in ws), alpha(m), True
    else:
        weights, scale, exact = tuple(Fraction(w) for _, w in ws), 1.0, False
    if any(w <= 0 for w in weights):
        raise PlateauError("nonpositive cell weight")
    return ChainProgram(cx, norm, group, m, weights, scale, exact, tuple(target))


@dataclass(frozen=True)
class PlateauSolution:
    coefficients: tuple
    mass: float
    status: str  # optimal | optimalLPRelaxation | timeLimit
    dual_bound: float
    exact_mass: Fraction | None = None  # in units of the program scale
    exact_gap: Fraction | None = None
    chain: PolyhedralChain | None = field(default=None, repr=False)
    note: str = DISCRETIZATION_NOTE

    def support(self) -> frozenset:
        return frozenset(i for i, g in enumerate(self.coefficients) if g != 0)

    def to_json(self) -> dict:
        def num(g):
            return str(g) if isinstance(g, Fraction) else g

        return {
            "coefficients": [num(g) for g in self.coefficients],
            "mass": self.mass,
            "dualBound": self.dual_bound,
            "status": self.status,
            "exactMass": None if self.exact_mass is None else str(self.exact_mass),
            "exactGap": None if self.exact_gap is None else str(self.exact_gap),
            "note": self.note,
        }


def _dense_int(M: sparse.csr_matrix) -> list[list[int]]:
    return M.toarray().astype(int).tolist()


def _witness(D: np.ndarray, b: np.ndarray) -> list[float]:
    """Component of b orthogonal to the image of D: D^T z = 0 and z.b = |z|^2 > 0."""
    x, *_ = np.linalg.lstsq(D, b, rcond=None)
    return (b - D @ x).tolist()


def _relaxation(prog: ChainProgram, exact: bool):
    """Split-variable LP; returns (status, coefficients (Fraction or float), objective, dual bound, gap)."""
    D = prog.complex.boundary_matrix(prog.m)
    k = D.shape[1]
    b = [Fraction(g) if prog.group.tag != "R" else Fraction(g) for g in prog.target]
    if exact:
        Dd = _dense_int(D)
        A = [row + [-v for v in row] for row in Dd]
        c = list(prog.weights) * 2
        res = solve_exact_lp(c, A, b)
        if res.status != "optimal":
            return res.status, None, None, None, None
        g = [res.x[i] - res.x[k + i] for i in range(k)]
        dual = sum(bi * yi for bi, yi in zip(b, res.dual))
        return "optimal", g, res.objective, dual, res.objective - dual
    Df = D.astype(float)
    A = sparse.hstack([Df, -Df]).tocsr()
    c = np.concatenate([prog.float_weights] * 2)
    res = linprog(c, A_eq=A, b_eq=np.array([float(v) for v in b]), bounds=(0, None), method="highs")
    if res.status == 2:
        return "infeasible", None, None, None, None
    if res.status != 0:
        return "error", None, None, None, None
    g = res.x[:k] - res.x[k:]
    dual = float(np.dot([float(v) for v in b], res.eqlin.marginals))
    return "optimal", g.tolist(), res.fun / prog.scale, dual / prog.scale, (res.fun - dual) / prog.scale


def _exact_size(prog: ChainProgram) -> int:
    return 2 * prog.complex.boundary_matrix(prog.m).nnz


def solve(prog: ChainProgram, exact: bool | None = None, time_limit: float = 60.0) -> PlateauSolution:
    """Minimize sum w |g| subject to boundary(g) = B over the chosen coefficient group."""
    if exact is None:
        exact = _exact_size(prog) <= EXACT_NNZ_LIMIT
    cx, m, G = prog.complex, prog.m, prog.group
    k = len(cx.cells[m])
    if all(G.is_zero(b) for b in prog.target):
        zero = tuple(G.element(0) for _ in range(k))
        return PlateauSolution(zero, 0.0, "optimal", 0.0, Fraction(0), Fraction(0), PolyhedralChain.zero(m, G))
    D = cx.boundary_matrix(m)

    if G.tag in ("R", "Z"):
        status, g, obj, dual, gap = _relaxation(prog, exact)
        if status == "infeasible":
            w = _witness(D.toarray().astype(float), np.array([float(v) for v in prog.target]))
            raise InfeasibleBoundary("B is not a boundary in this complex", w)
        if status != "optimal":
            raise PlateauError(f"LP failed ({status})")
        if G.tag == "R":
            coeffs = tuple(g) if exact else tuple(float(v) for v in g)
            return _finish(prog, coeffs, "optimal", dual, obj if exact else None, gap if exact else None)
        integral = all((Fraction(v).denominator == 1) if exact else abs(v - round(v)) <= 1e-9 for v in g)
        if integral:
            coeffs = tuple(int(round(float(v))) for v in g)
            return _finish(prog, coeffs, "optimal", dual, obj if exact else None, gap if exact else None)
        return _solve_integer(prog, D, None, time_limit, float(dual))
    if G.tag == "Zq":
        return _solve_integer(prog, D, G.q, time_limit, 0.0)
    raise PlateauError(f"unsupported group {G}")


def _solve_integer(prog: ChainProgram, D, q: int | None, time_limit: float, lp_bound: float) -> PlateauSolution:
    """Integer program g = g+ - g- (Z), or g+ - g- - q s = B with 0 <= g+- <= q//2 (Z_q)."""
    nrow, k = D.shape
    Df = D.astype(float)
    w = prog.float_weights / prog.scale
    blocks = [Df, -Df]
    cost = [w, w]
    ub = [np.full(k, np.inf if q is None else q // 2)] * 2
    lb = [np.zeros(k)] * 2
    if q is not None:
        blocks.append(-q * sparse.identity(nrow, format="csr"))
        cost.append(np.zeros(nrow))
        lb.append(np.full(nrow, -np.inf))
        ub.append(np.full(nrow, np.inf))
    A = sparse.hstack(blocks).tocsr()
    b = np.array([float(int(t)) for t in prog.target])
    res = milp(
        np.concatenate(cost),
        constraints=LinearConstraint(A, b, b),
        integrality=np.ones(A.shape[1]),
        bounds=Bounds(np.concatenate(lb), np.concatenate(ub)),
        options={"time_limit": time_limit},
    )
    if res.x is None:
        if res.status == 1:
            raise PlateauError("time limit reached before a feasible integer chain was found")
        w_ = _witness(D.toarray().astype(float), b)
        raise InfeasibleBoundary("B is not a boundary over this group in the complex", w_)
    x = np.round(res.x).astype(np.int64)
    g = x[:k] - x[k : 2 * k]
    if q is not None:
        g = g % q
        if np.any((D @ g - b.astype(np.int64)) % q):
            raise PlateauError("integer solution violates the boundary constraint")
    elif np.any(D @ g != b.astype(np.int64)):
        raise PlateauError("integer solution violates the boundary constraint")
    status = "optimal" if res.status == 0 else "optimalLPRelaxation" if res.status == 1 else "timeLimit"
    bound = max(lp_bound, float(getattr(res, "mip_dual_bound", lp_bound) or lp_bound))
    coeffs = tuple(int(v) for v in g)
    exact_mass = sum((prog.weights[i] * Fraction(prog.group.norm(c)) for i, c in enumerate(coeffs) if c), Fraction(0))
    gap = exact_mass - Fraction(bound) if prog.exact_weights else None
    return _finish(prog, coeffs, status, bound, exact_mass, gap)


def _finish(prog: ChainProgram, coeffs, status, dual, exact_obj, gap) -> PlateauSolution:
    G = prog.group
    if exact_obj is not None:
        mass = prog.scale * float(exact_obj)
    else:
        mass = float(sum(float(w) * G.norm(c if G.tag != "R" else float(c)) for w, c in zip(prog.weights, coeffs))) * prog.scale
    chain_coeffs = [c if G.tag != "R" else float(c) for c in coeffs]
    chain = prog.complex.chain(prog.m, chain_coeffs, G)
    return PlateauSolution(tuple(coeffs), mass, status, prog.scale * float(dual), exact_obj, gap, chain)


# ---------------------------------------------------------------------------
# flat norm


def simplicial_flat_norm(cx: SimplicialComplex, norm: Norm, P, m: int | None = None, exact: bool | None = None) -> float:
    """min M(Q) + M(S) over real chains on the complex with P = Q + boundary(S)."""
    if isinstance(P, PolyhedralChain):
        m = P.dim
        p = [float(v) for v in cx.coefficients(P)]
    else:
        if m is None:
            raise PlateauError("m is required for a coefficient vector")
        p = list(P)
    if all(v == 0 for v in p):
        return 0.0
    wm = [cell_weight(cx, c, norm) for c in cx.cells[m]]
    top = cx.cells.get(m + 1, ())
    wt = [cell_weight(cx, c, norm) for c in top]
    D = cx.boundary_matrix(m + 1) if top else sparse.csr_matrix((len(cx.cells[m]), 0), dtype=np.int64)
    k, s = len(wm), len(wt)
    if exact is None:
        exact = (k + s) * (D.nnz + k) <= EXACT_NNZ_LIMIT * 20 and all(isinstance(v, (int, Fraction)) or float(v).is_integer() for v in p)
    if exact:
        if all(r is not None for r, _ in wm + wt):
            # the two dimensions carry different alpha factors; each is used as its exact double
            cm = [Fraction(alpha(m)) * r for r, _ in wm]
            ct = [Fraction(alpha(m + 1)) * r for r, _ in wt]
        else:
            cm = [Fraction(w) for _, w in wm]
            ct = [Fraction(w) for _, w in wt]
        Dd = _dense_int(D) if s else [[] for _ in range(k)]
        A = []
        for i in range(k):
            row = [0] * (2 * k)
            row[i], row[k + i] = 1, -1
            A.append(row + Dd[i] + [-v for v in Dd[i]])
        res = solve_exact_lp(cm * 2 + ct * 2, A, [Fraction(v) for v in p])
        if res.status != "optimal":
            raise PlateauError(f"flat-norm LP {res.status}")
        return float(res.objective)
    c = np.concatenate([[w for _, w in wm]] * 2 + [[w for _, w in wt]] * 2)
    A = sparse.hstack([sparse.identity(k), -sparse.identity(k), D.astype(float), -D.astype(float)]).tocsr()
    res = linprog(c, A_eq=A, b_eq=np.array(p, dtype=float), bounds=(0, None), method="highs")
    if res.status != 0:
        raise PlateauError(f"flat-norm LP failed: {res.message}")
    return float(res.fun)


# ---------------------------------------------------------------------------
# instances


def cone_triangulation(h=2, grid: int = 3, half_width=1) -> SimplicialComplex:
    """Triangulated square [-w, w]^2 (grid x grid vertices) with apexes (0,0,+-h).

    Cells: the flat triangles, the cone triangles over every flat edge from
    each apex, and the tetrahedra over every flat triangle from each apex.
    """
    if grid < 2:
        raise PlateauError("grid must be >= 2")
    w = Fraction(half_width)
    step = 2 * w / (grid - 1)
    verts = [(-w + i * step, -w + j * step, 0) for j in range(grid) for i in range(grid)]
    vid = lambda i, j: j * grid + i  # noqa: E731
    tris = []
    for j in range(grid - 1):
        for i in range(grid - 1):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris += [(a, b, c), (a, c, d)]
    top = len(verts)
    verts += [(0, 0, Fraction(h)), (0, 0, -Fraction(h))]
    edges = {tuple(sorted(e)) for t in tris for e in itertools.combinations(t, 2)}
    cone_tris = [e + (apex,) for e in sorted(edges) for apex in (top, top + 1)]
    tets = [t + (apex,) for t in tris for apex in (top, top + 1)]
    return SimplicialComplex.from_cells(verts, {2: tris + cone_tris, 3: tets})


def square_boundary(cx: SimplicialComplex, group: CoefficientGroup = GROUP_Z, half_width=1) -> PolyhedralChain:
    """Counterclockwise boundary cycle of the flat square, on the complex's edges."""
    w = float(half_width)
    pts = {i: np.array([float(c) for c in v]) for i, v in enumerate(cx.vertices)}
    on = [i for i, p in pts.items() if abs(p[2]) < 1e-12 and (abs(abs(p[0]) - w) < 1e-12 or abs(abs(p[1]) - w) < 1e-12)]
    ang = {i: math.atan2(pts[i][1], pts[i][0]) for i in on}
    ring = sorted(on, key=lambda i: ang[i])
    terms = [(1, [tuple(pts[ring[k]]), tuple(pts[ring[(k + 1) % len(ring)]])]) for k in range(len(ring))]
    return PolyhedralChain.from_terms(1, group, terms)


# ---------------------------------------------------------------------------
# support reduction


_PROJECTOR_CACHE: dict = {}


def _busemann_matrix(norm: Norm, W: Subspace) -> np.ndarray:
    key = (id(norm), W.key())
    hit = _PROJECTOR_CACHE.get(key)
    if hit is not None and hit[0] is norm:
        return hit[1]
    M = busemann_projector(norm, W).maps[0]
    _PROJECTOR_CACHE[key] = (norm, M)
    return M


def support_reduction(T: PolyhedralChain, halfspaces: Sequence, norm: Norm, tol: float = 1e-9, max_passes: int = 20) -> PolyhedralChain:
    """Push T into C = {a.x <= b for all (a, b)} one halfspace at a time.

    Each step keeps the part of T inside the halfspace and maps the part
    outside by the affine Busemann projector onto the bounding hyperplane;
    coplanar pieces are then merged so that cancelling sheets disappear.
    Mass may only decrease and the boundary is unchanged.
    """
    n = T.ambient
    if T.is_zero():
        return T
    if T.dim != n - 1:
        raise PlateauError("support reduction is for codimension-one chains")
    hs = [(np.asarray(a, dtype=float), float(b)) for a, b in halfspaces]
    dT = boundary(T)
    bv = dT.vertices()
    for a, b in hs:
        if len(bv) and (bv @ a).max() > b + tol * max(1.0, abs(b)):
            raise PlateauError("boundary of T is not supported in C")
    out = T
    # an oblique push onto one face can leave an earlier halfspace, so sweep until contained
    for _ in range(max_passes):
        moved = False
        for a, b in hs:
            if not len(out.vertices()) or (out.vertices() @ a).max() <= b + tol * max(1.0, abs(b)):
                continue
            moved = True
            W = Subspace.hyperplane(a)
            M = _busemann_matrix(norm, W)
            x0 = b * a / float(a @ a)
            cut = split_by_hyperplane(out, a, b)
            inside, outside = [], []
            for g, s in cut.terms:
                (outside if np.asarray(s).mean(axis=0) @ a > b else inside).append((g, s))
            pushed = pushforward_affine(PolyhedralChain.from_terms(T.dim, T.group, outside), M, x0 - M @ x0)
            merged = PolyhedralChain.from_terms(T.dim, T.group, inside) + pushed
            out = merge_coplanar(merged) if T.dim <= 2 else merged
        if not moved:
            break
    m0, m1 = hausdorff_mass(T, norm), hausdorff_mass(out, norm)
    if m1 > m0 + tol * max(1.0, m0):
        raise PlateauError(f"support reduction increased mass ({m0} -> {m1})")
    if not chains_equal(boundary(out), dT, tol):
        raise PlateauError("support reduction changed the boundary")
    V = out.vertices()
    for a, b in hs:
        if len(V) and (V @ a).max() > b + tol * max(1.0, abs(b)):
            raise PlateauError("support reduction left T outside C")
    return out


# ---------------------------------------------------------------------------
# the l-infinity graph example


def grid_triangulation(N: int, half_width: float = 1.0, pattern: str = "diagonal") -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    """(N+1)^2 grid on [-w, w]^2 with each square split into two triangles.

    ``pattern="diagonal"`` splits every square along its main diagonal;
    ``"unionjack"`` uses the diagonal pointing away from the centre, so that
    functions of max(|x|, |y|) are piecewise linear (N even).
    """
    if pattern not in ("diagonal", "unionjack"):
        raise PlateauError(f"unknown pattern {pattern!r}")
    t = np.linspace(-half_width, half_width, N + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(N):
        for i in range(N):
            a, b, c, d = j * (N + 1) + i, j * (N + 1) + i + 1, (j + 1) * (N + 1) + i + 1, (j + 1) * (N + 1) + i
            if pattern == "unionjack" and (2 * i + 1 - N) * (2 * j + 1 - N) < 0:
                tris += [(a, b, d), (b, c, d)]
            else:
                tris += [(a, b, c), (a, c, d)]
    return pts, tris


def _cell_gradients(pts: np.ndarray, tris, f: np.ndarray) -> np.ndarray:
    out = []
    for t in tris:
        P = pts[list(t)]
        A = P[1:] - P[0]
        rhs = f[list(t[1:])] - f[t[0]]
        out.append(np.linalg.solve(A, rhs))
    return np.array(out)


def random_admissible_pl(N: int, seed: int, half_width: float = 1.0) -> np.ndarray:
    """Vertex values of a random PL f, zero on the boundary, with l1 gradient <= 1 on every cell."""
    pts, tris = grid_triangulation(N, half_width)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(len(pts))
    edge = np.isclose(np.abs(pts).max(axis=1), half_width)
    f[edge] = 0.0
    g = _cell_gradients(pts, tris, f)
    s = np.abs(g).sum(axis=1).max()
    return f / s * rng.uniform(0.3, 1.0) if s > 0 else f


def linf_graph_mass(values, N: int, half_width: float = 1.0, tol: float = 1e-12, pattern: str = "diagonal") -> float:
    """Hausdorff mass under l-infinity of the graph chain of a PL function on the grid.

    f must vanish on the boundary of the square and be 1-Lipschitz for the
    l-infinity distance, i.e. each cell gradient has l1 norm at most 1.
    """
    pts, tris = grid_triangulation(N, half_width, pattern)
    f = np.asarray(values, dtype=float)
    if f.shape != (len(pts),):
        raise PlateauError("one value per grid vertex is required")
    edge = np.isclose(np.abs(pts).max(axis=1), half_width)
    if np.abs(f[edge]).max(initial=0.0) > tol:
        raise PlateauError("f must vanish on the boundary")
    g = _cell_gradients(pts, tris, f)
    worst = np.abs(g).sum(axis=1).max()
    if worst > 1 + tol:
        raise PlateauError(f"Lipschitz bound violated: cell slope {worst:.6g} > 1")
    norm = Norm.linf(3)
    P3 = np.column_stack([pts, f])
    T = PolyhedralChain.from_terms(2, GROUP_Z, [(1, [tuple(P3[i]) for i in t]) for t in tris])
    return hausdorff_mass(T, norm)


# ---------------------------------------------------------------------------
# lower semicontinuity harness


def synthetic_density(P: PolyhedralChain, Q: PolyhedralChain, eta: float, power: int = 8):
    """phi(W) = 1 + c |<n_W, e_last>|^power with c chosen so that M_phi(P) - M_phi(Q) = eta.

    Only meaningful for 2-chains in R^3 with P horizontal.
    """

    def parts(C):
        base = tilt = 0.0
        for g, s in C.terms:
            W = direction(s)
            a = simplex_volume(np.asarray(s)) * C.group.norm(g)
            base += a
            tilt += a * abs(W.normal()[-1]) ** power
        return base, tilt

    bP, tP = parts(P)
    bQ, tQ = parts(Q)
    denom = tP - tQ
    if denom <= 0:
        raise PlateauError("synthetic density needs P flatter than Q")
    c = (eta + bQ - bP) / denom
    if c <= -1:
        raise PlateauError("no admissible synthetic density for this eta")

    def phi(W: Subspace) -> float:
        return 1.0 + c * abs(W.normal()[-1]) ** power

    return phi, c


@dataclass(frozen=True)
class HarnessRow:
    j: int
    card: int
    mass: float
    flat_bound: float
    drop: float
    predicted_drop: float


def lsc_harness(norm: Norm | None, cycle_spec: dict, j_list: Sequence[int], tol: float = 1e-9) -> dict:
    """Table of M(P_j) and flat bounds along the edgewise sequence, with a verdict.

    ``cycle_spec``: {"sigma": simplex, "apex": point, "g": int, "eta": optional float}.
    With ``eta`` a synthetic density realizing that deficit replaces the norm density.
    """
    sigma = np.asarray(cycle_spec["sigma"], dtype=float)
    P, Q, R = cone_cycle(sigma, np.asarray(cycle_spec["apex"], dtype=float), cycle_spec.get("g", 1))
    m = P.dim
    density = None
    info: dict = {}
    if cycle_spec.get("eta") is not None:
        density, c = synthetic_density(P, Q, float(cycle_spec["eta"]), cycle_spec.get("power", 8))
        info["densityConstant"] = c
        mP = hausdorff_mass(P, density=density)
        mQ = hausdorff_mass(Q, density=density)
    else:
        norm = norm or Norm.euclidean(P.ambient)
        mP, mQ = hausdorff_mass(P, norm), hausdorff_mass(Q, norm)
    eta = mP - mQ
    rows = []
    for j in j_list:
        if density is not None:
            step = lsc_sequence(P, Q, R, j, density=density, filling_density=lambda W: 1.0)
        else:
            step = lsc_sequence(P, Q, R, j, norm)
        rows.append(HarnessRow(j, step.card, step.mass, step.flat_bound, mP - step.mass, eta * step.card / j**m))
    if eta <= tol:
        verdict = all(r.mass >= mP - tol * (1 + mP) for r in rows)
        kind = "no-drop"
    else:
        last = rows[-1]
        ratio = last.card / last.j**m
        verdict = abs(last.drop - eta * ratio) <= 0.05 * eta * ratio
        kind = "drop"
    return {"eta": eta, "massP": mP, "massQ": mQ, "rows": rows, "kind": kind, "verdict": bool(verdict), **info}
