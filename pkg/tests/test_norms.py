from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from normplateau.geometry import Polygon2D, Subspace, sample_subspaces
from normplateau.norms import (
    Norm,
    NormError,
    alpha,
    busemann_b,
    busemann_b_many,
    crystalline_approx,
    lipschitz_constant,
    norm_distance,
    norm_eval,
    psi,
    random_crystalline,
    section_ball,
    section_volume,
    section_volume_estimate,
)

HEX = Subspace.hyperplane((1, 1, 1))
SQUARE_FACETS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]


@pytest.mark.parametrize("m, value", [(0, 1.0), (1, 2.0), (2, math.pi), (3, 4 * math.pi / 3), (4, math.pi**2 / 2)])
def test_alpha(m, value):
    assert alpha(m) == pytest.approx(value)


@pytest.mark.parametrize(
    "norm, x, expected",
    [
        (Norm.linf(3), (1, -2, 0.5), 2.0),
        (Norm.l1(2), (3, 4), 7.0),
        (Norm.crystalline(SQUARE_FACETS), (1, 0), 1.0),
        (Norm.lp(3, 2), (1, 1), 2 ** (1 / 3)),
        (Norm.euclidean(2), (3, 4), 5.0),
    ],
)
def test_norm_eval(norm, x, expected):
    assert norm_eval(norm, x) == pytest.approx(expected)


def test_crystalline_symmetrized():
    N = Norm.crystalline([(1, 0), (0, 1)])
    assert len(N.facet_list) == 4 and N.exact


def test_bad_norms():
    with pytest.raises(NormError):
        Norm.crystalline([(1, 0), (-1, 0)])
    with pytest.raises(NormError):
        Norm.lp(0.5, 2)


def test_lp2_is_euclidean():
    assert Norm.lp(2, 3).kind == "euclidean"


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (Norm.linf(2), Norm.linf(2), 1.0),
        (Norm.linf(2), Norm.l1(2), 2.0),
        (Norm.euclidean(2), Norm.linf(2), math.sqrt(2)),
    ],
)
def test_norm_distance(a, b, expected):
    assert norm_distance(a, b) == pytest.approx(expected, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_triangle_inequality_crystalline(x, y):
    N = random_crystalline(3, 4, seed=2)
    x, y = np.array(x), np.array(y)
    assert N(x + y) <= N(x) + N(y) + 1e-12


def test_hexagon_section():
    P = section_ball(Norm.linf(3), HEX)
    assert isinstance(P, Polygon2D) and len(P) == 6
    radii = np.linalg.norm(P.as_array(), axis=1)
    assert np.allclose(radii, math.sqrt(2))


def test_square_section():
    P = section_ball(Norm.linf(3), Subspace.span((1, 0, 0), (0, 1, 0)))
    pts = {tuple(np.round(np.abs(v), 12)) for v in P.as_array()}
    assert pts == {(1.0, 1.0)}


def test_euclidean_radial_samples():
    R = section_ball(Norm.euclidean(3), HEX)
    assert np.allclose(R.r, 1.0)


@pytest.mark.parametrize(
    "norm, W, volume",
    [
        (Norm.linf(3), Subspace.span((1, 0, 0), (0, 1, 0)), 4.0),
        (Norm.linf(3), HEX, 3 * math.sqrt(3)),
        (Norm.euclidean(4), Subspace.span((1, 0, 0, 0), (0, 1, 1, 0), (0, 0, 0, 1)), 4 * math.pi / 3),
        (Norm.l1(2), Subspace.full(2), 2.0),
    ],
)
def test_section_volume(norm, W, volume):
    assert section_volume(norm, W) == pytest.approx(volume, abs=1e-12)


def test_quadrature_path_reports_error():
    est = section_volume_estimate(Norm.lp(1.5, 3), HEX)
    assert not est.exact and est.error < 1e-5


@pytest.mark.parametrize("p", [1.5, 3.0, 60.0])
def test_quadrature_matches_lp_disk_area(p):
    est = section_volume_estimate(Norm.lp(p, 3), Subspace.span((1, 0, 0), (0, 1, 0)))
    closed = 4 * math.gamma(1 + 1 / p) ** 2 / math.gamma(1 + 2 / p)
    assert est.value == pytest.approx(closed, rel=1e-5)


@pytest.mark.parametrize(
    "norm, W, value",
    [
        (Norm.euclidean(3), HEX, 1.0),
        (Norm.linf(3), HEX, math.pi / (3 * math.sqrt(3))),
        (Norm.l1(2), Subspace.full(2), math.pi / 2),
    ],
)
def test_psi(norm, W, value):
    assert psi(norm, W) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize(
    "norm, u, value",
    [
        (Norm.euclidean(3), (0.6, 0.8, 0), 1.0),
        (Norm.linf(3), np.ones(3) / math.sqrt(3), math.pi / (3 * math.sqrt(3))),
        (Norm.linf(3), (0, 0, 1), math.pi / 4),
    ],
)
def test_busemann_b(norm, u, value):
    assert busemann_b(norm, u) == pytest.approx(value, abs=1e-12)


def test_busemann_b_homogeneous_and_vectorized():
    N = random_crystalline(3, 3, seed=5)
    u = np.array([0.3, -1.2, 0.7])
    assert busemann_b(N, 2.5 * u) == pytest.approx(2.5 * busemann_b(N, u))
    U = np.random.default_rng(0).normal(size=(20, 3))
    assert np.allclose(busemann_b_many(N, U), [busemann_b(N, x) for x in U])


@pytest.mark.parametrize("norm", [Norm.linf(3), Norm.l1(3), random_crystalline(3, 4, seed=11)], ids=["linf", "l1", "crys"])
def test_busemann_b_convex(norm):
    rng = np.random.default_rng(4)
    U, V = rng.normal(size=(2000, 3)), rng.normal(size=(2000, 3))
    bu, bv, buv = busemann_b_many(norm, U), busemann_b_many(norm, V), busemann_b_many(norm, U + V)
    assert np.all(buv <= bu + bv + 1e-7)


def test_psi_continuity():
    N = Norm.linf(3)
    Ws = sample_subspaces(3, 2, 40, seed=9)
    ratios = []
    for W in Ws:
        B = W.basis + 1e-4 * np.random.default_rng(1).normal(size=W.basis.shape)
        W2 = Subspace(np.linalg.qr(B)[0])
        ratios.append(abs(psi(N, W) - psi(N, W2)) / W.distance(W2))
    assert max(ratios) < 10


@pytest.mark.parametrize("k", [2, 4, 8])
def test_crystalline_approx_of_cube(k):
    out = crystalline_approx(Norm.linf(3), k)
    assert norm_distance(out, Norm.linf(3)) <= 1 + 2 / k + 1e-9


def test_crystalline_approx_of_disk():
    out = crystalline_approx(Norm.euclidean(2), 2)
    assert out.is_polytope
    bound = 1 / math.cos(math.pi / len(out.vertices))
    assert norm_distance(Norm.euclidean(2), out) <= bound + 1e-9


def test_lipschitz_constant_of_identity_and_projection():
    assert lipschitz_constant(Norm.linf(3), np.eye(3)) == pytest.approx(1.0)
    P = np.diag([1.0, 1.0, 0.0])
    assert lipschitz_constant(Norm.linf(3), P) == pytest.approx(1.0)


def test_json_roundtrip():
    for N in (Norm.linf(3), Norm.lp(1.5, 2), Norm.euclidean(4), random_crystalline(3, 2, seed=1)):
        M = Norm.from_json(N.to_json())
        x = np.array([0.3, -0.2, 0.9, 1.0][: N.n])
        assert M(x) == pytest.approx(N(x), abs=1e-15)
