"""Gross-type quantities: zeta on sets and chains, dyadic estimates of the Gross measure."""
from __future__ import annotations

import itertools
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chains import (
    PolyhedralChain,
    affine_plane_groups,
    direction,
    hausdorff_mass,
    lsc_sequence,
    merge_coplanar,
    pushforward_linear,
    split_by_hyperplane,
)
from .contractors import (
    ContractorError,
    DensityContractor,
    _image_volumes,
    burago_ivanov,
    busemann_projector,
    hahn_projector,
    orthogonal_contractor,
    projected_union_measure,
    verify_contractor,
)
from .geometry import Subspace, sample_subspaces, simplex_volume
from .norms import Norm, norm_eval, psi

logger = logging.getLogger(__name__)

__all__ = [
    "ContractorField",
    "RectifiableTestSet",
    "ZetaResult",
    "zeta_set",
    "gross_estimate",
    "zeta_chain",
    "gross_mass",
    "zeta_lsc_experiment",
    "restrict_to_ball",
    "default_provider",
]


def default_provider(norm: Norm) -> Callable[[Subspace], DensityContractor]:
    """Orthogonal projection for Euclidean norms, else Hahn (m=1), Burago-Ivanov (m=2), Busemann (m=n-1)."""

    def provide(W: Subspace) -> DensityContractor:
        if norm.kind == "euclidean":
            return orthogonal_contractor(W)
        if W.dim == 1:
            w = W.basis[:, 0]
            return hahn_projector(norm, w / norm_eval(norm, w))
        if W.dim == 2:
            return burago_ivanov(norm, W)
        if W.dim == W.ambient - 1:
            return busemann_projector(norm, W)
        raise ContractorError(f"no contractor construction for m={W.dim}, n={W.ambient}")

    return provide


class ContractorField:
    """Memoized W -> density contractor; each contractor is certified once, on first use.

    Lookups are thread safe and construct each key at most once.
    """

    def __init__(
        self,
        norm: Norm,
        provider: Callable[[Subspace], DensityContractor] | None = None,
        certify_samples: int = 200,
        tol: float = 1e-7,
        threads: int = 1,
    ):
        self.norm = norm
        self.provider = provider or default_provider(norm)
        self.certify_samples = certify_samples
        self.tol = tol
        self.threads = max(1, int(threads))
        self._cache: dict[bytes, tuple[DensityContractor, float]] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[bytes, threading.Lock] = {}
        self.certificates: dict[bytes, object] = {}

    def _key_lock(self, key: bytes) -> threading.Lock:
        with self._lock:
            lk = self._key_locks.get(key)
            if lk is None:
                lk = self._key_locks[key] = threading.Lock()
            return lk

    def get(self, W: Subspace) -> tuple[DensityContractor, float]:
        """(compacted contractor on W, psi(W))."""
        key = W.key()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        with self._key_lock(key):
            hit = self._cache.get(key)
            if hit is not None:
                return hit
            mu = self.provider(W)
            if mu.target.key() != key and mu.target.distance(W) > 1e-9:
                raise ContractorError("provider returned a contractor on the wrong subspace")
            if self.certify_samples:
                cert = verify_contractor(mu, self.norm, samples=self.certify_samples, seed=0, tol=self.tol)
                if not cert.passed:
                    raise ContractorError(
                        f"contractor on W failed certification (violation {cert.max_violation:.2e}, gap {cert.equality_gap:.2e})"
                    )
                self.certificates[key] = cert
            entry = (mu.compact(), psi(self.norm, W))
            self._cache[key] = entry
            return entry

    def __call__(self, W: Subspace) -> DensityContractor:
        return self.get(W)[0]

    def __len__(self):
        return len(self._cache)

    def map(self, fn, items):
        if self.threads == 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.threads) as ex:
            return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# sets


@dataclass(frozen=True)
class RectifiableTestSet:
    """Finite union of nonoverlapping m-simplices (or convex m-polytopes, given by vertices in order)."""

    pieces: tuple
    dim: int

    @classmethod
    def from_simplices(cls, simplices: Sequence) -> "RectifiableTestSet":
        arrs = tuple(np.asarray(s, dtype=float) for s in simplices)
        if not arrs:
            return cls((), 0)
        dims = {len(a) - 1 for a in arrs}
        if len(dims) != 1:
            raise ValueError("pieces must be simplices of one dimension")
        return cls(arrs, dims.pop())

    @property
    def ambient(self) -> int | None:
        return self.pieces[0].shape[1] if self.pieces else None

    def is_empty(self) -> bool:
        return not self.pieces

    def piece_measure(self, k: int) -> float:
        return _piece_measure(self.pieces[k], self.dim)

    def hausdorff(self, norm: Norm) -> float:
        return sum(psi(norm, direction(p[: self.dim + 1])) * _piece_measure(p, self.dim) for p in self.pieces if _piece_measure(p, self.dim) > 0)


def _piece_measure(p: np.ndarray, m: int) -> float:
    if len(p) == m + 1:
        return simplex_volume(p)
    if m == 2:
        # fan triangulation of a convex polygon
        return sum(simplex_volume(p[[0, i, i + 1]]) for i in range(1, len(p) - 1))
    raise ValueError("non-simplex pieces are supported for m = 2 only")


def _polygon_direction(p: np.ndarray) -> Subspace:
    c = p.mean(axis=0)
    u, s, vt = np.linalg.svd(p - c)
    return Subspace(np.linalg.qr(vt[:2].T)[0])


@dataclass(frozen=True)
class ZetaResult:
    value: float
    argmax: Subspace | None
    candidates: int
    values: tuple = field(default=(), repr=False)


def set_candidates(A: RectifiableTestSet, w_samples: int, seed: int, extra: Sequence[Subspace] = ()) -> list[Subspace]:
    """Sampled m-planes plus the direction planes of A's pieces, deduplicated."""
    if A.is_empty():
        return list(extra)
    n, m = A.ambient, A.dim
    cands: dict[bytes, Subspace] = {}
    for W in list(extra) + [_piece_direction(p, m) for p in A.pieces] + (sample_subspaces(n, m, w_samples, seed) if w_samples else []):
        cands.setdefault(W.key(), W)
    return list(cands.values())


def _piece_direction(p: np.ndarray, m: int) -> Subspace:
    return direction(p[: m + 1]) if len(p) == m + 1 else _polygon_direction(p)


def _zeta_W(pieces: list[np.ndarray], m: int, field_: ContractorField, W: Subspace) -> float:
    """integral of H^m(pi(A)) over the contractor on W."""
    mu, psi_W = field_.get(W)
    if len(affine_plane_groups(pieces, dim=m)) == 1:
        # injective or degenerate on one affine plane: no overlaps among images
        p0 = pieces[0]
        V = _piece_direction(p0, m)
        meas = sum(_piece_measure(p, m) for p in pieces)
        return float(psi_W * meas * (mu.weights @ _image_volumes(mu.maps, V.basis)))
    total = 0.0
    for w, A in zip(mu.weights, mu.maps):
        if not A.any():
            continue
        total += w * psi_W * projected_union_measure(pieces, A, W)
    return float(total)


def zeta_set(
    A: RectifiableTestSet,
    field_: ContractorField,
    norm: Norm,
    w_samples: int = 16,
    seed: int = 0,
    refine: bool = False,
    candidates: Sequence[Subspace] | None = None,
) -> ZetaResult:
    """Lower estimate of sup_W integral H^m(pi(A)) dmu_W(pi) over candidate planes."""
    if A.is_empty():
        return ZetaResult(0.0, None, 0)
    cands = list(candidates) if candidates is not None else set_candidates(A, w_samples, seed)
    pieces = [p for p in A.pieces if _piece_measure(p, A.dim) > 0]
    if not pieces:
        return ZetaResult(0.0, None, len(cands))
    vals = field_.map(lambda W: _zeta_W(pieces, A.dim, field_, W), cands)
    k = int(np.argmax(vals))
    best, bestW = float(vals[k]), cands[k]
    if refine:
        best, bestW = _coordinate_ascent(lambda W: _zeta_W(pieces, A.dim, field_, W), best, bestW, seed)
    return ZetaResult(best, bestW, len(cands), tuple(float(v) for v in vals))


def _coordinate_ascent(f, best: float, W: Subspace, seed: int, rounds: int = 3, step: float = 0.2) -> tuple[float, Subspace]:
    rng = np.random.default_rng(seed + 7)
    n, m = W.ambient, W.dim
    for _ in range(rounds):
        improved = False
        for _ in range(2 * m * (n - m)):
            B = W.basis + step * rng.standard_normal((n, m))
            cand = Subspace(np.linalg.qr(B)[0])
            val = f(cand)
            if val > best:
                best, W, improved = val, cand, True
        if not improved:
            step *= 0.5
    return best, W


# ---------------------------------------------------------------------------
# dyadic estimator


def _clip_polygon(poly: np.ndarray, axis: int, bound: float, upper: bool) -> np.ndarray:
    """Sutherland-Hodgman clip of a planar polygon against x_axis <= bound (or >=)."""
    if len(poly) == 0:
        return poly
    s = (poly[:, axis] - bound) if upper else (bound - poly[:, axis])
    out = []
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        sa, sb = s[i], s[(i + 1) % k]
        if sa <= 0:
            out.append(a)
        if (sa < 0 < sb) or (sb < 0 < sa):
            t = sa / (sa - sb)
            out.append(a + t * (b - a))
    return np.array(out) if out else np.zeros((0, poly.shape[1]))


def _clip_to_box(piece: np.ndarray, lo: np.ndarray, hi: np.ndarray, m: int) -> np.ndarray | None:
    if m == 1:
        a, b = piece
        d = b - a
        t0, t1 = 0.0, 1.0
        for i in range(len(a)):
            if abs(d[i]) < 1e-300:
                if a[i] < lo[i] or a[i] > hi[i]:
                    return None
                continue
            u0, u1 = (lo[i] - a[i]) / d[i], (hi[i] - a[i]) / d[i]
            if u0 > u1:
                u0, u1 = u1, u0
            t0, t1 = max(t0, u0), min(t1, u1)
            if t0 >= t1:
                return None
        return np.array([a + t0 * d, a + t1 * d])
    poly = piece
    for i in range(len(lo)):
        poly = _clip_polygon(poly, i, hi[i], True)
        poly = _clip_polygon(poly, i, lo[i], False)
        if len(poly) < 3:
            return None
    return poly if _piece_measure(poly, 2) > 1e-18 else None


def dyadic_side(delta: float, n: int, extent: float) -> float:
    """Largest h = extent * 2^-k with h * sqrt(n) <= delta (h = extent when delta is large)."""
    h = max(extent, 1e-300)
    while h * math.sqrt(n) > delta:
        h *= 0.5
    return h


def gross_estimate(
    A: RectifiableTestSet,
    field_: ContractorField,
    norm: Norm,
    delta: float,
    w_samples: int = 16,
    seed: int = 0,
    candidates: Sequence[Subspace] | None = None,
) -> float:
    """Sum of zeta over the cells of a dyadic cover of A with cell diameter <= delta.

    The grid is anchored at the lower corner of A's bounding box with root
    cell side a power of two covering A, so meshes are nested and a large
    delta gives the single-cell cover.  Cells meeting only one affine
    plane of A contribute area times the best contraction ratio for that
    plane, which avoids clipping away from creases.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if A.is_empty():
        return 0.0
    n, m = A.ambient, A.dim
    cands = list(candidates) if candidates is not None else set_candidates(A, w_samples, seed)
    pts = np.vstack(A.pieces)
    lo0 = pts.min(axis=0)
    span = float((pts.max(axis=0) - lo0).max())
    root = 2.0 ** math.ceil(math.log2(max(span, 1e-12) * (1 + 1e-12)))
    if root * math.sqrt(n) <= delta:
        return zeta_set(A, field_, norm, candidates=cands).value
    h = dyadic_side(delta, n, root)

    live = [i for i, p in enumerate(A.pieces) if _piece_measure(p, m) > 0]
    groups = {g: [live[k] for k in members] for g, (_, _, members) in enumerate(affine_plane_groups([A.pieces[i] for i in live], dim=m))}

    # best ratio per affine plane: zeta of a set in that plane = measure * ratio
    ratio: dict[tuple, float] = {}
    for g, idx in groups.items():
        V = _piece_direction(A.pieces[idx[0]], m)

        def r(W, V=V):
            mu, psi_W = field_.get(W)
            return float(psi_W * (mu.weights @ _image_volumes(mu.maps, V.basis)))

        ratio[g] = max(field_.map(r, cands))

    total = sum(ratio[g] * sum(_piece_measure(A.pieces[i], m) for i in idx) for g, idx in groups.items())
    if len(groups) == 1:
        return total

    # crease cells: meet at least two affine planes; replace the per-plane sum by the joint zeta
    cell_parts: dict[tuple, dict[tuple, list[np.ndarray]]] = {}
    for g, idx in groups.items():
        for i in idx:
            p = A.pieces[i]
            k0 = np.floor((p.min(axis=0) - lo0) / h).astype(int)
            k1 = np.floor((p.max(axis=0) - lo0) / h).astype(int)
            for cell in itertools.product(*[range(a, b + 1) for a, b in zip(k0, k1)]):
                c = np.array(cell)
                clo, chi = lo0 + c * h, lo0 + (c + 1) * h
                part = _clip_to_box(p, clo, chi, m)
                if part is not None:
                    cell_parts.setdefault(cell, {}).setdefault(g, []).append(part)
    for cell, parts in cell_parts.items():
        if len(parts) < 2:
            continue
        pieces = [q for g in parts for q in parts[g]]
        separate = sum(ratio[g] * sum(_piece_measure(q, m) for q in qs) for g, qs in parts.items())
        joint = max(field_.map(lambda W: _zeta_W(pieces, m, field_, W), cands))
        total += joint - separate
    return float(total)


# ---------------------------------------------------------------------------
# chains


def chain_candidates(T: PolyhedralChain, w_samples: int, seed: int, extra: Sequence[Subspace] = ()) -> list[Subspace]:
    cands: dict[bytes, Subspace] = {}
    for W in extra:
        cands.setdefault(W.key(), W)
    for _, s in T.terms:
        W = direction(s)
        cands.setdefault(W.key(), W)
    if w_samples and not T.is_zero():
        for W in sample_subspaces(T.ambient, T.dim, w_samples, seed):
            cands.setdefault(W.key(), W)
    return list(cands.values())


def _zeta_chain_W(T: PolyhedralChain, field_: ContractorField, W: Subspace) -> float:
    mu, psi_W = field_.get(W)
    dens = lambda V: psi_W  # noqa: E731 - images lie in W
    total = 0.0
    for w, A in zip(mu.weights, mu.maps):
        if not A.any():
            continue
        img = pushforward_linear(T, A)
        if img.is_zero():
            continue
        if T.dim <= 2:
            img = merge_coplanar(img)
        total += w * hausdorff_mass(img, density=dens)
    return total


def zeta_chain(
    T: PolyhedralChain,
    field_: ContractorField,
    norm: Norm,
    w_samples: int = 8,
    seed: int = 0,
    candidates: Sequence[Subspace] | None = None,
) -> ZetaResult:
    """Lower estimate of sup_W integral M_H(pi_# T) dmu_W(pi)."""
    if T.is_zero():
        return ZetaResult(0.0, None, 0)
    cands = list(candidates) if candidates is not None else chain_candidates(T, w_samples, seed)
    vals = field_.map(lambda W: _zeta_chain_W(T, field_, W), cands)
    k = int(np.argmax(vals))
    return ZetaResult(float(vals[k]), cands[k], len(cands), tuple(float(v) for v in vals))


def gross_mass(T: PolyhedralChain, field_: ContractorField, norm: Norm, delta: float, w_samples: int = 16, seed: int = 0) -> float:
    """sum_k |g_k| * gross_estimate(sigma_k)."""
    total = 0.0
    for g, s in T.terms:
        A = RectifiableTestSet.from_simplices([s])
        total += T.group.norm(g) * gross_estimate(A, field_, norm, delta, w_samples=w_samples, seed=seed)
    return total


def restrict_to_ball(T: PolyhedralChain, x, r: float, facets: int = 24) -> PolyhedralChain:
    """T restricted to a polytope inscribed in the Euclidean ball B(x, r).

    The polytope is cut by hyperplanes tangent to the ball of radius
    r cos(pi/facets) in directions of a net, so it lies inside B(x, r)
    and fills it as ``facets`` grows.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n == 2:
        t = np.arange(facets) * 2 * math.pi / facets
        dirs = np.column_stack([np.cos(t), np.sin(t)])
    else:
        rng = np.random.default_rng(0)
        g = rng.standard_normal((facets * n, n))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        # in-plane directions matter most for planar T
        if not T.is_zero():
            W = direction(T.terms[0][1])
            t = np.arange(facets) * 2 * math.pi / facets
            ring = np.cos(t)[:, None] * W.basis[:, 0] + np.sin(t)[:, None] * W.basis[:, 1] if W.dim >= 2 else W.basis.T
            dirs = np.vstack([ring, dirs])
    rr = r * math.cos(math.pi / facets)
    out = T
    for a in dirs:
        cut = split_by_hyperplane(out, a, float(a @ x) + rr)
        keep = [(g, s) for g, s in cut.terms if np.asarray(s).mean(axis=0) @ a <= a @ x + rr + 1e-12]
        out = PolyhedralChain.from_terms(T.dim, T.group, keep)
    return out


@dataclass(frozen=True)
class LscRow:
    j: int
    zeta: float
    flat_bound: float
    mass: float


def zeta_lsc_experiment(
    P: PolyhedralChain,
    Q: PolyhedralChain,
    R: PolyhedralChain | None,
    j_list: Sequence[int],
    field_: ContractorField,
    norm: Norm,
    w_samples: int = 4,
    seed: int = 0,
    tol: float = 1e-6,
) -> dict:
    """zeta(P_j) along the cone sequence, with the check zeta(P) <= min_j zeta(P_j) + tol (1 + F)."""
    cands = chain_candidates(P + Q, w_samples, seed)
    zP = zeta_chain(P, field_, norm, candidates=cands).value
    rows = []
    for j in j_list:
        step = lsc_sequence(P, Q, R, j, norm)
        cj = chain_candidates(step.chain, 0, seed, extra=cands)
        rows.append(LscRow(j, zeta_chain(step.chain, field_, norm, candidates=cj).value, step.flat_bound, step.mass))
    zmin = min((r.zeta for r in rows), default=math.inf)
    fmax = max((r.flat_bound for r in rows), default=0.0)
    return {
        "zetaP": zP,
        "rows": rows,
        "holds": bool(zP <= zmin + tol * (1 + fmax)),
    }
