from __future__ import annotations

import math

import numpy as np
import pytest

from normplateau.chains import PolyhedralChain
from normplateau.contractors import (
    ContractorError,
    DensityContractor,
    burago_ivanov,
    busemann_projector,
    chain_mass_inequality,
    hahn_projector,
    min_lipschitz_projector,
    orthogonal_contractor,
    refine_unit_vectors,
    set_inequality,
    tail_check,
    verify_contractor,
)
from normplateau.geometry import Subspace, wedge_norm
from normplateau.norms import Norm, lipschitz_constant, random_crystalline

LINF = Norm.linf(3)
HEX = Subspace.hyperplane((1, 1, 1))
E12 = Subspace.span((1, 0, 0), (0, 1, 0))


@pytest.fixture(scope="module")
def bi_linf():
    return burago_ivanov(LINF, Subspace.span((1, 0.3, 0), (0, 1, -0.4)))


def test_orthogonal_is_exact_for_euclidean():
    cert = verify_contractor(orthogonal_contractor(HEX), Norm.euclidean(3), samples=200)
    assert cert.passed and cert.max_violation == 0.0 and cert.equality_gap < 1e-15


def test_hahn_square_facet_choice():
    N = Norm.linf(2)
    mu = hahn_projector(N, (1, 1))
    A = mu.maps[0]
    functional = A[0]  # pi(x) = a(x) w with w = (1, 1)
    assert tuple(functional) in {(1.0, 0.0), (0.0, 1.0)}
    assert lipschitz_constant(N, A) == pytest.approx(1.0)


def test_hahn_euclidean_is_orthogonal():
    mu = hahn_projector(Norm.euclidean(3), (1, 0, 0))
    assert np.allclose(mu.maps[0], np.diag([1.0, 0, 0]))


@pytest.mark.parametrize("norm", [LINF, Norm.l1(3), Norm.lp(3, 3)], ids=["linf", "l1", "l3"])
def test_hahn_certifies(norm):
    w = np.array([0.3, -1.0, 0.5])
    mu = hahn_projector(norm, w / norm(w))
    assert verify_contractor(mu, norm, samples=500).passed


def test_hahn_requires_unit_vector():
    with pytest.raises(ContractorError):
        hahn_projector(LINF, (2, 0, 0))


def test_busemann_euclidean_is_orthogonal():
    mu = busemann_projector(Norm.euclidean(3), HEX)
    assert np.allclose(mu.maps[0], HEX.projector, atol=1e-12)


def test_busemann_hexagon_plane():
    mu = busemann_projector(LINF, HEX)
    assert lipschitz_constant(LINF, mu.maps[0]) > 1
    cert = verify_contractor(mu, LINF, samples=2000, seed=5)
    assert cert.passed, cert.to_json()


def test_refine_regular_hexagon_unchanged():
    t = np.arange(6) * math.pi / 3
    hexagon = np.column_stack([np.cos(t), np.sin(t)])
    assert len(refine_unit_vectors(hexagon)) == 6


def test_refine_elongated_polygon():
    V = [(1, 0), (1, 8), (-1, 0), (-1, -8)]
    out = refine_unit_vectors(V, tau_max=2)
    half = out[: len(out) // 2] + [out[len(out) // 2]]
    w = [wedge_norm(half[i], half[i + 1]) for i in range(len(half) - 1)]
    assert max(w) / min(w) <= 2 + 1e-12


def test_bi_square_section_structure():
    mu = burago_ivanov(LINF, E12)
    assert mu.info["p"] == 2
    assert np.allclose(mu.info["lambda"], [0.5, 0.5])
    assert verify_contractor(mu, LINF, samples=300).passed


def test_bi_certifies(bi_linf):
    cert = verify_contractor(bi_linf, LINF, samples=1000, seed=2)
    assert cert.max_violation <= 1e-9 and cert.equality_gap <= 1e-10


def test_bi_non_polytope_norm_is_approximated():
    N = Norm.lp(3, 3)
    mu = burago_ivanov(N, E12)
    assert mu.info["approximation"]["delta"] <= 1.01
    assert verify_contractor(mu, N, samples=300).equality_gap < 0.05


def test_corrupted_weights_fail(bi_linf):
    bad = bi_linf.scaled(1.1)
    cert = verify_contractor(bad, LINF, samples=100, relative=True)
    assert not cert.passed
    assert cert.equality_gap == pytest.approx(0.1, abs=1e-9)


def test_tail_check(bi_linf):
    info = bi_linf.info
    rows = tail_check(bi_linf, LINF, info["Gamma"], info["tau"], 100)
    assert all(r.ok for r in rows)
    assert rows[0].mass <= 1.0 + 1e-12
    cutoff = 2 * info["Gamma"] ** 2 * info["rho"] / math.sqrt(info["min_wedge"])
    assert all(r.mass == 0.0 for r in rows if r.n > cutoff)


def test_contractor_json_roundtrip(bi_linf):
    mu = DensityContractor.from_json(bi_linf.to_json())
    assert np.allclose(mu.maps, bi_linf.maps) and mu.kind == "burago-ivanov"
    assert len(verify_contractor(mu, LINF, samples=10).tail_bounds) == 100


def test_atoms_must_map_into_target():
    with pytest.raises(ContractorError):
        DensityContractor(E12, np.array([1.0]), np.eye(3)[None])


@pytest.mark.parametrize(
    "norm, W",
    [(Norm.euclidean(3), HEX), (Norm.linf(3), Subspace.span((1, 0, 0))), (Norm.linf(3), E12)],
    ids=["euclidean", "axis", "coordinate-plane"],
)
def test_min_lipschitz_trivial_cases(norm, W):
    value, M = min_lipschitz_projector(norm, W, starts=4)
    assert value == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(M @ W.basis, W.basis)


class TestChainInequality:
    def test_planar_equality(self, bi_linf):
        W = bi_linf.target
        pts = np.array([[0, 0], [1, 0.2], [0.3, 1.1]]) @ W.basis.T
        T = PolyhedralChain.simplex(pts, g=2)
        s, p, m = chain_mass_inequality(bi_linf, T, LINF)
        assert s == pytest.approx(m, abs=1e-9) and p == pytest.approx(m, abs=1e-9)

    def test_tilted_triangle(self, bi_linf):
        T = PolyhedralChain.simplex([(0, 0, 0), (1, 0, 0.8), (0, 1, -0.5)])
        s, p, m = chain_mass_inequality(bi_linf, T, LINF)
        assert p <= s + 1e-12 <= m + 1e-8

    def test_euclidean_jacobian(self):
        tilt = 0.6
        T = PolyhedralChain.simplex([(0, 0, 0), (1, 0, math.tan(tilt)), (0, 1, 0)])
        s, _, m = chain_mass_inequality(orthogonal_contractor(E12), T, Norm.euclidean(3))
        assert s == pytest.approx(m * math.cos(tilt))


class TestSetInequality:
    def test_simplex_in_w(self, bi_linf):
        W = bi_linf.target
        A = [np.array([[0, 0], [1, 0], [0, 1]]) @ W.basis.T]
        lhs, rhs = set_inequality(bi_linf, A, LINF)
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_union_beats_sum(self):
        mu = orthogonal_contractor(E12)
        a = np.array([(0, 0, 0), (1, 0, 1), (0, 1, 1)], dtype=float)
        b = np.array([(0, 0, 0), (1, 0, -1), (0, 1, -1)], dtype=float)
        lhs, rhs = set_inequality(mu, [a, b], Norm.euclidean(3))
        single = set_inequality(mu, [a], Norm.euclidean(3))[0] + set_inequality(mu, [b], Norm.euclidean(3))[0]
        assert lhs < single - 0.1
        assert lhs <= rhs

    def test_random_set(self):
        N = random_crystalline(3, 3, seed=4)
        mu = burago_ivanov(N, Subspace.span((1, 0, 0.2), (0, 1, 0.1)))
        rng = np.random.default_rng(0)
        A = [rng.normal(size=(3, 3)) for _ in range(3)]
        lhs, rhs = set_inequality(mu, A, N)
        assert lhs <= rhs + 1e-8
