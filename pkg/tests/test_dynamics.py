import csv

import numpy as np
import pytest

from gaugered import dynamics as dyn
from gaugered import gauge_field as gf
from gaugered import lie_algebra as la
from gaugered import poisson as po

FREE = dyn.HamiltonianSpec()


def larmor_spec(b=1.0):
    return po.BracketSpec("magnetic", curvature=gf.curvature_field(gf.uniform_b(b)))


def so3_free_spec():
    so3 = la.so3()
    return po.BracketSpec("extended_ym", curvature=gf.zero_curvature(so3), potential=gf.zero_potential(so3))


def test_canonical_free_vector_field():
    x = po.PhasePoint([1, 2, 3], [0.5, -0.25, 2.0])
    v = dyn.vector_field(po.BracketSpec("canonical"), FREE, x)
    assert np.array_equal(v, np.concatenate([x.p, np.zeros(3)]))


def test_magnetic_vector_field_matches_matrix_product():
    b = 0.8
    p = np.array([0.3, -1.1, 0.4])
    v = dyn.vector_field(larmor_spec(b), FREE, po.PhasePoint([0.1, 0.2, 0.0], p))
    # hand-derived: q' = p, p1' = {p1, p2} p2 = b p2, p2' = -b p1, p3' = 0
    expected = np.array([p[0], p[1], p[2], b * p[1], -b * p[0], 0.0])
    assert np.abs(v - expected).max() <= 1e-12


def test_extended_zero_potential_keeps_charge_fixed():
    x = po.PhasePoint([0.1, 0.2, 0.3], [1, 0, 0], [0.1, 0.2, 0.3], [0.5, -0.5, 1.0])
    v = dyn.vector_field(so3_free_spec(), FREE, x)
    assert np.array_equal(v[9:], np.zeros(3))


def test_larmor_orbit_against_analytic_solution():
    traj = dyn.integrate(larmor_spec(1.0), FREE, po.PhasePoint(np.zeros(3), [1.0, 0.0, 0.0]), 2 * np.pi, 1e-3)
    t = traj.times
    # p1' = p2, p2' = -p1: p = (cos t, -sin t, 0), q = (sin t, cos t - 1, 0)
    exact = np.stack([np.sin(t), np.cos(t) - 1, 0 * t, np.cos(t), -np.sin(t), 0 * t], axis=1)
    assert np.abs(traj.states - exact).max() <= 1e-6
    g = dyn.gyration_analysis(traj, [0.0, 0.0, 1.0])
    assert np.allclose(g["centre"], [0.0, -1.0, 0.0], atol=1e-15)
    assert np.abs(g["radius"] - 1.0).max() <= 1e-6
    assert g["period"] == pytest.approx(2 * np.pi, abs=1e-6)


def test_free_particle_straight_line():
    x0 = po.PhasePoint([0.1, -0.2, 0.3], [1.0, 0.5, -0.25])
    traj = dyn.integrate(po.BracketSpec("magnetic", curvature=gf.zero_curvature(la.abelian(1))), FREE, x0, 1.0, 0.01)
    expected = x0.q + np.outer(traj.times, x0.p)
    assert np.abs(traj.states[:, :3] - expected).max() <= 1e-14
    assert np.array_equal(traj.states[:, 3:], np.tile(x0.p, (len(traj.times), 1)))


def test_so3_charge_constant_and_casimir_conserved():
    x0 = po.PhasePoint([0, 0, 0], [0.2, 0.1, 0.0], [0.1, 0.2, 0.3], [0.3, -0.4, 1.2])
    traj = dyn.integrate(so3_free_spec(), FREE, x0, 1.0, 0.01)
    assert np.array_equal(traj.states[:, 9:], np.tile(x0.y, (len(traj.times), 1)))
    c = traj.casimirs["C_y2"]
    assert np.abs(c - c[0]).max() <= 1e-12


def test_casimir_examples():
    spec = so3_free_spec()
    assert dyn.casimirs(spec, po.PhasePoint(np.zeros(3), np.zeros(3), np.zeros(3), [0, 0, 2])) == {"C_y2": 4.0}
    ab = la.abelian(2)
    spec2 = po.BracketSpec("extended_ym", curvature=gf.zero_curvature(ab), potential=gf.zero_potential(ab))
    got = dyn.casimirs(spec2, po.PhasePoint(np.zeros(3), np.zeros(3), np.zeros(2), [3, 5]))
    assert got == {"C_y1": 3.0, "C_y2": 5.0}
    assert dyn.casimirs(po.BracketSpec("canonical"), po.PhasePoint(np.zeros(3), np.zeros(3))) == {}


def test_so3_casimir_commutes_with_charges():
    spec = so3_free_spec()
    x = po.PhasePoint([0.1, 0.2, 0.3], [1, 2, 3], [0.3, -0.2, 0.1], [0.7, -1.3, 0.4])
    C = po.Observable(lambda z: z[9:] @ z[9:], lambda z: np.concatenate([np.zeros(9), 2 * z[9:]]), name="C")
    for k in (1, 2, 3):
        assert po.bracket(spec, C, po.coordinate(spec, f"y{k}"), x) == pytest.approx(0.0, abs=1e-12)


def test_minimal_coupling_equivariance():
    so3 = la.so3()
    pot = gf.random_trig(so3, 11)
    ext = po.BracketSpec("extended_ym", curvature=gf.curvature_field(pot), potential=pot)
    can = po.BracketSpec("canonicalized_ym", algebra=so3)
    x0 = po.PhasePoint([0.1, -0.2, 0.3], [0.3, 0.1, -0.2], [0.2, 0.1, -0.1], [0.5, -0.4, 0.3])
    # H_coupled after the momentum shift is the free Hamiltonian
    a = dyn.integrate(ext, FREE, x0, 1.0, 1e-2)
    b = dyn.integrate(can, dyn.HamiltonianSpec("coupled", potential=pot), po.minimal_coupling(x0, pot), 1.0, 1e-2)
    mapped = np.array([po.minimal_coupling(a.point(k), pot).as_vector() for k in range(len(a.times))])
    assert np.abs(mapped - b.states).max() <= 1e-7
    assert np.ptp(a.states[:, 9:], axis=0).max() > 1e-3  # charges actually move


def test_boris_and_rk4_agree_to_second_order():
    spec = larmor_spec()
    x0 = po.PhasePoint(np.zeros(3), [1.0, 0.0, 0.0])
    gaps = []
    for h in (0.02, 0.01):
        a = dyn.integrate(spec, FREE, x0, 2 * np.pi, h)
        b = dyn.integrate(spec, FREE, x0, 2 * np.pi, h, "boris")
        phase = [np.unwrap(np.arctan2(t.states[:, 4], t.states[:, 3])) for t in (a, b)]
        gaps.append(np.abs(phase[0] - phase[1]).max())
        assert np.abs(np.linalg.norm(b.states[:, 3:], axis=1) - 1.0).max() <= 1e-13
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.05)


def test_energy_drift_bound_calibrated_on_larmor():
    spec = larmor_spec()
    x0 = po.PhasePoint(np.zeros(3), [1.0, 0.0, 0.0])
    T = 2 * np.pi

    def drift(h):
        tr = dyn.integrate(spec, FREE, x0, T, h)
        return np.abs(tr.energy - tr.energy[0]).max()

    C = drift(0.5) / (0.5 ** 4 * T)
    for h in (0.25, 0.1, 0.05):
        assert drift(h) <= C * h ** 4 * T


def test_energy_drift_order_on_smooth_field():
    spec = po.BracketSpec("magnetic", curvature=gf.curvature_field(gf.random_trig(la.abelian(1), 5)))
    x0 = po.PhasePoint([0.1, 0.2, 0.3], [0.5, -0.3, 0.2])
    d = []
    for h in (0.04, 0.02):
        tr = dyn.integrate(spec, FREE, x0, 2.0, h)
        d.append(np.abs(tr.energy - tr.energy[0]).max())
    assert d[0] / d[1] >= 2 ** 4


def test_integrate_errors():
    spec = larmor_spec()
    x0 = po.PhasePoint(np.zeros(3), [1, 0, 0])
    with pytest.raises(po.ConfigurationError):
        dyn.integrate(spec, FREE, x0, 1.0, 0.0)
    with pytest.raises(po.ConfigurationError):
        dyn.integrate(spec, FREE, x0, 0.01, 0.1)
    with pytest.raises(po.ConfigurationError):
        dyn.integrate(spec, FREE, x0, 1.0, 0.1, "leapfrog")
    with pytest.raises(po.ConfigurationError):
        dyn.integrate(po.BracketSpec("canonical"), FREE, x0, 1.0, 0.1, "boris")


def test_divergence_names_the_step():
    # q1' = q1^3 blows up at t = 1/2 from q1 = 1
    H = dyn.HamiltonianSpec("custom", func=lambda z: z[3] * z[0] ** 3,
                            grad=lambda z: np.array([3 * z[3] * z[0] ** 2, 0, 0, z[0] ** 3, 0, 0]))
    with pytest.raises(dyn.DivergenceError, match=r"step \d+"), np.errstate(all="ignore"):
        dyn.integrate(po.BracketSpec("canonical"), H, po.PhasePoint([1, 0, 0], [0, 0, 0]), 2.0, 0.01)


def test_vector_field_gradient_failure():
    H = dyn.HamiltonianSpec("custom", func=lambda z: np.sqrt(z[0]), grad=lambda z: np.full(6, np.nan))
    with pytest.raises(ArithmeticError):
        dyn.vector_field(po.BracketSpec("canonical"), H, po.PhasePoint([1, 0, 0], [0, 0, 0]))


def test_trajectory_csv_header(tmp_path):
    x0 = po.PhasePoint(np.zeros(3), [0.1, 0, 0], [0, 0, 0], [0, 0, 1.0])
    traj = dyn.integrate(so3_free_spec(), FREE, x0, 0.05, 0.01)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "q1", "q2", "q3", "p1", "p2", "p3", "u1", "u2", "u3", "y1", "y2", "y3", "H", "C_y2"]
    assert len(rows) == 1 + 6
    assert float(rows[-1][0]) == pytest.approx(0.05)
    assert np.allclose(traj.times[1:] - traj.times[:-1], 0.01)
