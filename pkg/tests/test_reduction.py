import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaugered import gauge_field as gf
from gaugered import lie_algebra as la
from gaugered import poisson as po
from gaugered import reduction as red
from gaugered import scenarios

ONE = la.DualElement([1.0])


def test_flat_field_gives_canonical_form():
    F = gf.zero_curvature(la.abelian(1))
    W = red.reduced_form(ONE, F, [0.3, 0.1, -0.2])
    expected = np.block([[np.zeros((3, 3)), -np.eye(3)], [np.eye(3), np.zeros((3, 3))]])
    assert np.array_equal(W, expected)


def test_uniform_b_position_block():
    b = 1.7
    W = red.reduced_form(la.DualElement([2.0]), gf.curvature_field(gf.uniform_b(b)), [0.5, 0.5, 0.5])
    assert np.allclose(W[:3, :3], 2.0 * np.array([[0, b, 0], [-b, 0, 0], [0, 0, 0]]), atol=1e-12)
    assert np.array_equal(W, -W.T)


def test_non_invariant_charge_is_rejected():
    F = gf.zero_curvature(la.so3())
    with pytest.raises(po.InvarianceError) as exc:
        red.reduced_form(la.DualElement([0.0, 0.0, 1.0]), F, np.zeros(3))
    assert exc.value.offending == (1, 2)
    assert exc.value.max_residual == pytest.approx(1.0)
    # zero is the only invariant element of so(3)
    assert red.reduced_form(la.DualElement([0.0, 0.0, 0.0]), F, np.zeros(3))[0, 3] == -1.0


def test_closedness_for_true_curvature(rng):
    alg = la.abelian(2)
    pot = gf.random_trig(alg, 4)
    F = gf.curvature_field(pot)
    pts = rng.uniform(-1, 1, (10, 3))
    xi = la.DualElement([0.5, -1.0])
    assert red.closedness_residual(xi, F, pot, pts) <= 1e-6
    assert red.closedness_residual(xi, gf.zero_curvature(alg), None, pts) == 0.0


def test_closedness_detects_perturbation():
    F = gf.curvature_field(gf.uniform_b()).perturbed(1.0, 0, 0, 1, 2)
    # F_12 = 1 + q3 has d_3 F_12 = 1
    assert red.closedness_residual(ONE, F, None, [np.zeros(3)]) == pytest.approx(1.0, abs=1e-6)


def test_exterior_derivative_matches_contracted_bianchi(rng):
    alg = la.abelian(2)
    pot = gf.random_trig(alg, 8)
    xi = la.DualElement([0.5, -1.0])
    for delta in (0.0, 0.3):
        F = gf.curvature_field(pot)
        if delta:
            F = F.perturbed(delta, 1, 0, 2, 1)
        for q in rng.uniform(-1, 1, (5, 3)):
            dw = red.exterior_derivative(xi, F, q)
            assert np.abs(dw[:3, :3, :3] - red.contracted_bianchi(xi, F, pot, q)).max() <= 1e-10
            # the form does not depend on p
            assert np.abs(dw[3:]).max() <= 1e-10


def test_bivector_consistency_cases(rng):
    pts = rng.uniform(-1, 1, (5, 3))
    cases = [
        (ONE, gf.zero_curvature(la.abelian(1))),
        (la.DualElement([-0.4]), gf.curvature_field(gf.uniform_b(2.0))),
        (la.DualElement([0.5, -1.0]), gf.curvature_field(gf.random_trig(la.abelian(2), 1))),
        (la.DualElement([0.0, 0.0, 0.0]), gf.curvature_field(gf.random_trig(la.so3(), 1))),
    ]
    for xi, F in cases:
        assert red.bivector_consistency(xi, F, pts) <= 1e-12


@given(st.floats(-3, 3), st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_reduced_form_is_nondegenerate(e, q):
    F = gf.curvature_field(gf.random_trig(la.abelian(1), 2))
    W = red.reduced_form(la.DualElement([e]), F, q)
    # det W = 1 for every charge: the p-block pairing alone fixes it
    assert np.linalg.det(W) == pytest.approx(1.0, abs=1e-9)


def test_charge_scaling():
    F = gf.curvature_field(gf.random_trig(la.abelian(1), 6))
    q = [0.2, -0.3, 0.4]
    W1 = red.reduced_form(la.DualElement([1.5]), F, q)
    W2 = red.reduced_form(la.DualElement([3.0]), F, q)
    assert np.allclose(W2[:3, :3], 2 * W1[:3, :3], atol=1e-14)
    assert np.array_equal(W2[:3, 3:], W1[:3, 3:])


def test_scenario_gap_helper():
    pot = gf.random_trig(la.abelian(2), 3)
    F = gf.curvature_field(pot).perturbed(0.5, 0, 0, 1, 2)
    xi = la.DualElement([1.0, 2.0])
    assert scenarios.closedness_bianchi_gap(xi, F, pot, np.zeros(3)) <= 1e-10


def test_verdict_records():
    pts = [np.zeros(3), np.ones(3) * 0.5]
    F = gf.curvature_field(gf.uniform_b())
    ok = red.verdict(ONE, F, None, pts, seed=3)
    assert ok["gate"] == "pass" and ok["samples"] == 2 and ok["seed"] == 3
    assert ok["closedness_residual"] <= 1e-6 and ok["bivector_deviation"] <= 1e-12
    bad = red.verdict(la.DualElement([1.0, 0.0, 0.0]), gf.zero_curvature(la.so3()), None, pts)
    assert bad["gate"] == "fail" and bad["closedness_residual"] is None
    assert bad["offending"] == [2, 3]
    json.dumps(ok)
    json.dumps(bad)
