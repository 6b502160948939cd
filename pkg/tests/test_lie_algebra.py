import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from gaugered import lie_algebra as la


def levi_civita(i, j, k):
    return float(np.linalg.det(np.eye(3)[[i, j, k]]))


def jacobi_by_loops(c):
    n = c.shape[0]
    worst = 0.0
    for r, s, k, l in itertools.product(range(n), repeat=4):
        tot = 0.0
        for m in range(n):
            tot += c[m, s, k] * c[r, m, l] + c[m, k, l] * c[r, m, s] + c[m, l, s] * c[r, m, k]
        worst = max(worst, abs(tot))
    return worst


def test_abelian_is_valid():
    rep = la.validate(la.abelian(3))
    assert rep.valid
    assert rep.violations == []


def test_so3_is_valid_and_matches_levi_civita():
    sc = la.so3()
    for r, s, k in itertools.product(range(3), repeat=3):
        assert sc.c[r, s, k] == levi_civita(s, k, r)
    assert jacobi_by_loops(sc.c) == 0.0
    assert la.validate(sc).valid


def test_heisenberg_is_valid():
    sc = la.heisenberg()
    assert jacobi_by_loops(sc.c) == 0.0
    assert la.validate(sc).valid
    assert not sc.is_abelian


def test_antisymmetry_violation_reported():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    rep = la.validate(la.StructureConstants(c))
    assert not rep.valid
    kinds = [v["kind"] for v in rep.violations]
    assert "antisymmetry" in kinds
    anti = [v for v in rep.violations if v["kind"] == "antisymmetry"][0]
    assert anti["max_residual"] == 1.0


def test_shape_error():
    with pytest.raises(la.ShapeError):
        la.StructureConstants(np.zeros((2, 3, 3)))
    with pytest.raises(la.ShapeError):
        la.bracket(la.so3(), [1.0, 0.0], [0.0, 1.0, 0.0])


def test_bracket_examples():
    sc = la.so3()
    e = np.eye(3)
    assert np.array_equal(la.bracket(sc, e[0], e[1]), e[2])
    a, b = np.array([0.3, -1.2, 2.0]), np.array([1.5, 0.4, -0.7])
    assert np.allclose(la.bracket(sc, a, b), np.cross(a, b), atol=1e-15)
    assert np.array_equal(la.bracket(la.abelian(2), [1.0, 2.0], [3.0, -1.0]), np.zeros(2))
    assert np.array_equal(la.bracket(sc, a, a), np.zeros(3))


def test_invariance_examples():
    assert np.array_equal(la.invariance_residual(la.abelian(2), la.DualElement([3.0, 5.0])), np.zeros((2, 2)))
    r = la.invariance_residual(la.so3(), la.DualElement([0.0, 0.0, 1.0]))
    assert r[0, 1] == 1.0
    assert not la.is_invariant(la.so3(), [0.0, 0.0, 1.0])
    for sc in (la.so3(), la.heisenberg(), la.abelian(4)):
        assert np.array_equal(la.invariance_residual(sc, np.zeros(sc.dim)), np.zeros((sc.dim, sc.dim)))


def test_from_triples_completes_antisymmetry():
    sc = la.StructureConstants.from_triples(3, [(3, 1, 2, 1.0)], name="h")
    assert np.array_equal(sc.c, la.heisenberg().c)


def test_preset_lookup():
    assert la.preset("so3").dim == 3
    assert la.preset("abelian").is_abelian
    with pytest.raises(KeyError):
        la.preset("e8")


vec3 = st.lists(st.floats(-10, 10), min_size=3, max_size=3)


@given(vec3, vec3, vec3)
def test_bracket_jacobi_property(a, b, c):
    for sc in (la.so3(), la.heisenberg()):
        br = lambda x, y: la.bracket(sc, x, y)  # noqa: E731
        J = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
        assert np.abs(J).max() <= 1e-12 * max(1.0, np.abs(a).max() * np.abs(b).max() * np.abs(c).max())


@given(vec3)
def test_invariance_residual_antisymmetric(e):
    for sc in (la.so3(), la.heisenberg()):
        r = la.invariance_residual(sc, e)
        assert np.array_equal(r, -r.T)


@given(st.integers(1, 5), st.data())
def test_abelian_every_xi_invariant(n, data):
    e = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n))
    assert la.is_invariant(la.abelian(n), e)


@given(st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3))
def test_coordinate_frame_against_matrix_exponential(u):
    # M(u) = z / (e^z - 1) at z = ad_u, so (e^z - I) M = z
    sc = la.so3()
    z = sc.ad(u)
    M = la.coordinate_frame(sc, u)
    assert np.abs((expm(z) - np.eye(3)) @ M - z).max() <= 1e-12


def test_coordinate_frame_vector_fields_close_under_bracket():
    # [X_s, X_k] = -c^r_sk X_r for the columns X_s of M(u)
    sc = la.so3()
    u = np.array([0.4, -0.3, 0.7])
    h = 1e-5

    def dM(u):
        out = np.zeros((3, 3, 3))
        for d in range(3):
            e = np.zeros(3)
            e[d] = h
            out[:, :, d] = (la.coordinate_frame(sc, u + e) - la.coordinate_frame(sc, u - e)) / (2 * h)
        return out

    M, D = la.coordinate_frame(sc, u), dM(u)
    for s, k in itertools.product(range(3), repeat=2):
        lie = D[:, k, :] @ M[:, s] - D[:, s, :] @ M[:, k]
        expected = -M @ sc.c[:, s, k]
        assert np.abs(lie - expected).max() <= 1e-8


def test_coordinate_frame_identity_cases():
    assert np.array_equal(la.coordinate_frame(la.abelian(2), [1.0, 2.0]), np.eye(2))
    assert np.array_equal(la.coordinate_frame(la.so3(), np.zeros(3)), np.eye(3))
