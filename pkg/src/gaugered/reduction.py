"""Reduced 2-forms on T*(D) for a coadjoint-invariant charge and their checks.

The reduced form is stored as the antisymmetric matrix ``W`` over ``(q1..q3, p1..p3)``
of ``omega = dp ^ dq + 1/2 sum_s e_s F^(s)_ij dq^i ^ dq^j``:

    W = [[sum_s e_s F^(s), -I],
         [I,                 0]]

whose inverse is the ``reduced_ym`` bivector.
"""

from __future__ import annotations

import numpy as np

from .gauge_field import CurvatureField, GaugePotential, bianchi_residual
from .lie_algebra import DualElement, invariance_residual
from .numerics import FD_STEP, fd_jacobian
from .poisson import INVARIANCE_TOL, BracketSpec, InvarianceError, NumericalError, PhasePoint, bivector


def _gate(xi: DualElement, F: CurvatureField) -> None:
    r = invariance_residual(F.algebra, xi)
    if np.abs(r).max() > INVARIANCE_TOL:
        raise InvarianceError(r)


def _form(e, F, q):
    W = np.zeros((6, 6))
    W[0:3, 0:3] = np.einsum("s,sij->ij", e, F(q))
    W[0:3, 3:6] = -np.eye(3)
    W[3:6, 0:3] = np.eye(3)
    return W


def reduced_form(xi: DualElement, F: CurvatureField, q) -> np.ndarray:
    _gate(xi, F)
    return _form(xi.e, F, np.asarray(q, dtype=float))


def exterior_derivative(xi: DualElement, F: CurvatureField, q, h=FD_STEP) -> np.ndarray:
    """``(d omega)_{abc} = d_a W_bc + d_b W_ca + d_c W_ab`` over all six coordinates."""
    _gate(xi, F)
    z0 = np.concatenate([np.asarray(q, dtype=float), np.zeros(3)])
    dW = fd_jacobian(lambda z: _form(xi.e, F, z[:3]), z0, h)  # [b, c, a]
    T = np.einsum("bca->abc", dW)
    return T + np.einsum("bca->abc", T) + np.einsum("cab->abc", T)


def closedness_residual(xi: DualElement, F: CurvatureField, pot: GaugePotential | None, points, h=FD_STEP) -> float:
    """Max ``|d omega|`` component over the sample points.

    ``pot`` is accepted for symmetry with the Bianchi check; the form itself only
    depends on the curvature.
    """
    worst = 0.0
    for q in points:
        worst = max(worst, float(np.abs(exterior_derivative(xi, F, q, h)).max()))
    return worst


def contracted_bianchi(xi: DualElement, F: CurvatureField, pot: GaugePotential | None, q) -> np.ndarray:
    """``sum_s e_s R^(s)_{ijl}`` from the field-equation residual."""
    return np.einsum("s,sijl->ijl", xi.e, bianchi_residual(F, pot, q))


def bivector_consistency(xi: DualElement, F: CurvatureField, points) -> float:
    """Max ``|inverse(W) - Pi_reduced|`` over the sample points."""
    spec = BracketSpec("reduced_ym", curvature=F, xi=xi)
    worst = 0.0
    for q in points:
        W = reduced_form(xi, F, q)
        try:
            inv = np.linalg.solve(W, np.eye(6))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"reduced form is singular at q = {list(q)}") from exc
        Pi = bivector(spec, PhasePoint(q, np.zeros(3)))
        worst = max(worst, float(np.abs(inv - Pi).max()))
    return worst


def verdict(xi: DualElement, F: CurvatureField, pot: GaugePotential | None, points, seed=None,
            closed_tol=1e-6, consistency_tol=1e-12) -> dict:
    """Verification record for one reduction scenario (JSON-serializable)."""
    r = invariance_residual(F.algebra, xi)
    out = {
        "gate": "pass" if np.abs(r).max() <= INVARIANCE_TOL else "fail",
        "invariance_residual": float(np.abs(r).max()),
        "closedness_residual": None,
        "bivector_deviation": None,
        "samples": len(points),
        "seed": seed,
        "tolerances": {"invariance": INVARIANCE_TOL, "closedness": closed_tol, "bivector": consistency_tol},
    }
    if out["gate"] == "fail":
        s, k = np.unravel_index(np.argmax(np.abs(r)), r.shape)
        out["offending"] = [int(s) + 1, int(k) + 1]
        return out
    out["closedness_residual"] = closedness_residual(xi, F, pot, points)
    out["bivector_deviation"] = bivector_consistency(xi, F, points)
    return out
