from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from normplateau.chains import PolyhedralChain, R, Z, Zq, boundary, chains_equal, hausdorff_mass
from normplateau.norms import Norm, random_crystalline
from normplateau.plateau import (
    InfeasibleBoundary,
    PlateauError,
    SimplicialComplex,
    build_program,
    cell_weight,
    cone_triangulation,
    grid_triangulation,
    linf_graph_mass,
    lsc_harness,
    random_admissible_pl,
    simplicial_flat_norm,
    solve,
    square_boundary,
    support_reduction,
)

L2 = Norm.euclidean(3)
LINF = Norm.linf(3)


@pytest.fixture(scope="module")
def cone_cx():
    return cone_triangulation()


def test_cone_triangulation_counts(cone_cx):
    assert len(cone_cx.vertices) == 11
    assert [len(cone_cx.cells[d]) for d in range(4)] == [11, 34, 40, 16]


def test_complex_validation():
    with pytest.raises(PlateauError):
        SimplicialComplex.from_cells([(0, 0, 0), (1, 0, 0), (2, 0, 0)], {2: [(0, 1, 2)]})
    with pytest.raises(PlateauError):
        SimplicialComplex.from_cells([(0, 0), (1, 0)], {1: [(0, 0)]})


def test_rational_coordinates_roundtrip():
    cx = SimplicialComplex.from_cells([("1/3", 0, 0), (1, 0, 0), (0, "2/7", 0)], {2: [(0, 1, 2)]})
    assert cx.vertices[0][0] == Fraction(1, 3)
    back = SimplicialComplex.from_json(cx.to_json())
    assert back.vertices == cx.vertices and back.cells == cx.cells


def test_weights_euclidean_and_linf(cone_cx):
    for cell in cone_cx.cells[2]:
        r, w = cell_weight(cone_cx, cell, L2)
        assert r is None and w == pytest.approx(hausdorff_mass(PolyhedralChain.simplex(cone_cx.coords(cell)), L2))
    flat = [c for c in cone_cx.cells[2] if all(cone_cx.vertices[i][2] == 0 for i in c)]
    for cell in flat:
        r, w = cell_weight(cone_cx, cell, LINF)
        area = hausdorff_mass(PolyhedralChain.simplex(cone_cx.coords(cell)), L2)
        assert r is not None and w == pytest.approx(math.pi / 4 * area, abs=1e-14)


@pytest.mark.parametrize("norm, mass", [(L2, 4.0), (LINF, math.pi)], ids=["l2", "linf"])
def test_flat_filling(cone_cx, norm, mass):
    B = square_boundary(cone_cx, Z)
    sol = solve(build_program(cone_cx, norm, Z, B))
    assert sol.mass == pytest.approx(mass, abs=1e-12)
    assert chains_equal(boundary(sol.chain), B)
    assert all(max(abs(float(c)) for c in cone_cx.coords(cone_cx.cells[2][i])[:, 2]) == 0 for i in sol.support())


def test_z2_same_support(cone_cx):
    sz = solve(build_program(cone_cx, L2, Z, square_boundary(cone_cx, Z)))
    s2 = solve(build_program(cone_cx, L2, Zq(2), square_boundary(cone_cx, Zq(2))))
    assert sz.support() == s2.support()


def test_real_coefficients(cone_cx):
    sol = solve(build_program(cone_cx, LINF, R, square_boundary(cone_cx, R)))
    assert sol.mass == pytest.approx(math.pi) and sol.exact_gap == 0


def test_float_path_matches_exact(cone_cx):
    B = square_boundary(cone_cx, Z)
    N = random_crystalline(3, 3, seed=3)
    a = solve(build_program(cone_cx, N, Z, B), exact=True)
    b = solve(build_program(cone_cx, N, Z, B), exact=False)
    assert a.mass == pytest.approx(b.mass, rel=1e-9)


def test_zero_boundary(cone_cx):
    k = len(cone_cx.cells[1])
    sol = solve(build_program(cone_cx, LINF, Z, [0] * k, m=2))
    assert sol.mass == 0.0 and not sol.support()


def test_non_boundary_cycle_reports_witness():
    verts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (5, 0, 0), (6, 0, 0), (5, 1, 0)]
    cx = SimplicialComplex.from_cells(verts, {2: [(0, 1, 2)], 1: [(3, 4), (4, 5), (3, 5)]})
    B = [0, 0, 0, 1, -1, 1]
    with pytest.raises(InfeasibleBoundary) as info:
        solve(build_program(cx, L2, Z, B, m=2))
    w = np.array(info.value.witness)
    D = cx.boundary_matrix(2).toarray()
    assert np.allclose(D.T @ w, 0) and w @ np.array(B) > 0.5


def test_non_cycle_rejected(cone_cx):
    k = len(cone_cx.cells[1])
    with pytest.raises(PlateauError):
        build_program(cone_cx, L2, Z, [1] + [0] * (k - 1), m=2)


class TestFlatNorm:
    def test_zero(self, cone_cx):
        assert simplicial_flat_norm(cone_cx, L2, [0] * len(cone_cx.cells[1]), m=1) == 0.0

    def test_boundary_of_cell(self, cone_cx):
        tet = cone_cx.cells[3][0]
        S0 = PolyhedralChain.simplex(cone_cx.coords(tet))
        assert simplicial_flat_norm(cone_cx, LINF, boundary(S0)) <= hausdorff_mass(S0, LINF) + 1e-12

    def test_square_cycle(self, cone_cx):
        assert simplicial_flat_norm(cone_cx, LINF, square_boundary(cone_cx, R)) == pytest.approx(math.pi)


class TestSupportReduction:
    TENT = PolyhedralChain.from_terms(
        2,
        Z,
        [
            (1, [(-1, -1, 0), (1, -1, 0), (0, 0, 1.5)]),
            (1, [(1, -1, 0), (1, 1, 0), (0, 0, 1.5)]),
            (1, [(1, 1, 0), (-1, 1, 0), (0, 0, 1.5)]),
            (1, [(-1, 1, 0), (-1, -1, 0), (0, 0, 1.5)]),
        ],
    )

    def test_inside_unchanged(self):
        out = support_reduction(self.TENT, [((0, 0, 1), 2.0)], LINF)
        assert chains_equal(out, self.TENT)

    @pytest.mark.parametrize("norm", [LINF, L2, Norm.l1(3)], ids=["linf", "l2", "l1"])
    def test_tent_flattened(self, norm):
        out = support_reduction(self.TENT, [((0, 0, 1), 0.5)], norm)
        assert hausdorff_mass(out, norm) < hausdorff_mass(self.TENT, norm)
        assert chains_equal(boundary(out), boundary(self.TENT))
        assert out.vertices()[:, 2].max() <= 0.5 + 1e-9

    def test_boundary_outside_rejected(self):
        with pytest.raises(PlateauError):
            support_reduction(self.TENT, [((1, 0, 0), 0.5)], LINF)


class TestLinfGraph:
    def test_flat(self):
        assert linf_graph_mass(np.zeros(17 * 17), 16) == pytest.approx(math.pi, abs=1e-12)

    def test_pyramid(self):
        pts, _ = grid_triangulation(16, pattern="unionjack")
        f = 1 - np.abs(pts).max(axis=1)
        assert linf_graph_mass(f, 16, pattern="unionjack") == pytest.approx(math.pi, abs=1e-9)

    def test_random(self):
        assert linf_graph_mass(random_admissible_pl(8, seed=3), 8) == pytest.approx(math.pi, abs=1e-9)

    def test_steep_rejected(self):
        with pytest.raises(PlateauError):
            linf_graph_mass(3 * random_admissible_pl(8, seed=3), 8)


class TestLscHarness:
    SIGMA = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]

    def test_euclidean_no_drop(self):
        rep = lsc_harness(L2, {"sigma": self.SIGMA, "apex": (0.2, 0.3, 0.5)}, [4, 16])
        assert rep["eta"] <= 0 and rep["kind"] == "no-drop" and rep["verdict"]

    def test_synthetic_drop(self):
        rep = lsc_harness(None, {"sigma": self.SIGMA, "apex": (0.2, 0.3, 0.5), "eta": 0.2}, [16, 64])
        last = rep["rows"][-1]
        assert rep["eta"] == pytest.approx(0.2)
        assert last.drop == pytest.approx(0.2 * last.card / 64**2, rel=0.05)
        assert rep["verdict"]
