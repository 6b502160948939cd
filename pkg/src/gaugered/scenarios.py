"""Verification and simulation scenarios driven by a :class:`config.RunConfig`.

Each runner returns a :class:`ScenarioResult`: named checks with their measured
value and tolerance, per-sample rows for the CSV artifact, and optional extra
payloads (trajectories, Maxwell runs) for the plotting layer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from . import gauge_field as gf
from . import lie_algebra as la
from . import maxwell as mx
from . import poisson as po
from . import reduction as red
from .config import ConfigError, RunConfig

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    value: float | None
    tolerance: float
    comparison: str = "<="
    detail: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.value is None:
            return "skipped"
        v = float(self.value)
        ok = v <= self.tolerance if self.comparison == "<=" else v >= self.tolerance
        return "pass" if ok and np.isfinite(v) else "fail"

    def as_dict(self) -> dict:
        d = {"name": self.name, "value": None if self.value is None else float(self.value),
             "tolerance": float(self.tolerance), "comparison": self.comparison, "status": self.status}
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass
class ScenarioResult:
    mode: str
    checks: list
    columns: list
    rows: list
    info: dict = field(default_factory=dict)
    payload: object = None

    @property
    def failed(self) -> list:
        return [c.name for c in self.checks if c.status == "fail"]

    @property
    def status(self) -> str:
        return "fail" if self.failed else "pass"


# -- builders ----------------------------------------------------------------------------------

def build_algebra(cfg: RunConfig) -> la.StructureConstants:
    sec = cfg.section("algebra")
    if sec["preset"] == "abelian":
        return la.abelian(int(sec["dim"]))
    return la.preset(sec["preset"])


def build_potentials(cfg: RunConfig, algebra, rng) -> list:
    """Potentials for the scenario; ``random-trig`` draws ``count`` seeded tables."""
    sec = cfg.section("potential")
    name = sec["preset"]
    if name == "random-trig":
        seeds = rng.integers(0, 2 ** 31, size=int(sec["count"]))
        return [gf.random_trig(algebra, int(s), n_terms=int(sec["n_terms"]),
                               max_wavenumber=int(sec["max_wavenumber"])) for s in seeds]
    if name == "zero":
        return [gf.zero_potential(algebra)]
    if name == "uniform-b":
        if algebra.dim != 1:
            raise ConfigError("uniform-b needs the abelian algebra with dim = 1", key="potential.preset")
        return [gf.uniform_b(float(sec["b"]))]
    if name == "so3-constant":
        if algebra.name != "so3":
            raise ConfigError("so3-constant needs algebra preset so3", key="potential.preset")
        return [gf.so3_constant(float(sec["a"]))]
    # linear
    m = sec["matrix"]
    if m is None and algebra.dim != 1:
        raise ConfigError("the default linear potential is abelian with dim = 1", key="potential.matrix")
    if m is not None:
        m = np.asarray(m, dtype=float)
        if m.ndim == 2:
            m = m[None]
        if m.shape != (algebra.dim, 3, 3):
            raise ConfigError(f"expected shape ({algebra.dim}, 3, 3), got {m.shape}", key="potential.matrix")
    return [gf.linear(m, algebra)]


def build_curvature(cfg: RunConfig, pot: gf.GaugePotential) -> gf.CurvatureField:
    F = gf.curvature_field(pot)
    sec = cfg.section("perturbation")
    delta = float(sec["delta"])
    if delta:
        s, i, j = (int(v) - 1 for v in sec["component"])
        coord = int(sec["coordinate"]) - 1
        if not (0 <= s < pot.algebra.dim and 0 <= i < 3 and 0 <= j < 3 and i != j and 0 <= coord < 3):
            raise ConfigError("perturbation indices out of range", key="perturbation.component")
        F = F.perturbed(delta, s, i, j, coord)
    return F


def sample_points(rng, n_points: int, n_internal: int, box) -> list:
    lo, hi = box
    out = []
    for _ in range(n_points):
        q = rng.uniform(lo, hi, 3)
        p = rng.uniform(-1.0, 1.0, 3)
        if n_internal:
            out.append(po.PhasePoint(q, p, rng.uniform(-1.0, 1.0, n_internal), rng.uniform(-1.0, 1.0, n_internal)))
        else:
            out.append(po.PhasePoint(q, p))
    return out


def particle_bracket(algebra, pot, F):
    """``magnetic`` table for the single-charge abelian case, ``extended_ym`` otherwise."""
    if algebra.dim == 1 and algebra.is_abelian:
        return po.BracketSpec("magnetic", curvature=F)
    return po.BracketSpec("extended_ym", curvature=F, potential=pot)


def _tol(cfg, name, algebra=None):
    v = cfg.tolerances[name]
    if v is None and name == "jacobi":
        v = 1e-6 if algebra.is_abelian else 1e-5
    return float(v)


def _setup(cfg):
    rng = np.random.default_rng(cfg.seed)
    algebra = build_algebra(cfg)
    pots = build_potentials(cfg, algebra, rng)
    return rng, algebra, pots


def _box(cfg):
    box = cfg.section("sampling")["box"]
    if len(box) != 2 or not box[0] < box[1]:
        raise ConfigError(f"expected [lo, hi] with lo < hi, got {box!r}", key="sampling.box")
    return box


def _perturbed(cfg) -> bool:
    return bool(cfg.section("perturbation")["delta"])


# -- verification ------------------------------------------------------------------------------

def verify_jacobi(cfg: RunConfig) -> ScenarioResult:
    rng, algebra, pots = _setup(cfg)
    tol = _tol(cfg, "jacobi", algebra)
    rows = []
    worst, where = 0.0, None
    for k, pot in enumerate(pots):
        F = build_curvature(cfg, pot)
        spec = particle_bracket(algebra, pot, F)
        pts = sample_points(rng, int(cfg.section("sampling")["points"]), spec.n_internal, _box(cfg))
        for j, x in enumerate(pts):
            J = np.abs(po.jacobiator_tensor(spec, x))
            a, b, c = np.unravel_index(np.argmax(J), J.shape)
            names = spec.coordinate_names()
            rows.append([k, j, *x.q, float(J.max()), f"{names[a]}|{names[b]}|{names[c]}"])
            if J.max() >= worst:
                worst, where = float(J.max()), {"potential": k, "point": j, "triple": [names[a], names[b], names[c]]}
    check = Check("jacobi_max", worst, tol, detail=where or {})
    return ScenarioResult(cfg.mode, [check], ["potential", "point", "q1", "q2", "q3", "jacobiator_max", "worst_triple"],
                          rows, info={"bracket": spec.kind, "algebra": algebra.name, "perturbed": _perturbed(cfg)})


def verify_bianchi(cfg: RunConfig) -> ScenarioResult:
    """Field-equation residual of the curvature, and its agreement with the momentum-block jacobiator."""
    rng, algebra, pots = _setup(cfg)
    tol = _tol(cfg, "bianchi")
    tol_agree = _tol(cfg, "jacobi_bianchi_agreement")
    rows = []
    worst_R, worst_gap = 0.0, 0.0
    for k, pot in enumerate(pots):
        F = build_curvature(cfg, pot)
        spec = particle_bracket(algebra, pot, F)
        pts = sample_points(rng, int(cfg.section("sampling")["points"]), spec.n_internal, _box(cfg))
        for j, x in enumerate(pts):
            R = gf.bianchi_residual(F, pot, x.q)
            y = x.y if x.y is not None else np.ones(1)
            yR = po.BIANCHI_SIGN * np.einsum("s,sijl->ijl", y, R)
            J = po.jacobiator_tensor(spec, x)[3:6, 3:6, 3:6]
            gap = float(np.abs(J - yR).max())
            r = float(np.abs(R).max())
            worst_R, worst_gap = max(worst_R, r), max(worst_gap, gap)
            rows.append([k, j, *x.q, r, gap])
    checks = [Check("bianchi_max", worst_R, tol),
              Check("jacobi_bianchi_agreement", worst_gap, tol_agree,
                    detail={"sign": po.BIANCHI_SIGN})]
    return ScenarioResult(cfg.mode, checks, ["potential", "point", "q1", "q2", "q3", "bianchi_max", "jacobi_gap"],
                          rows, info={"algebra": algebra.name, "perturbed": _perturbed(cfg)})


def verify_minimal_coupling(cfg: RunConfig) -> ScenarioResult:
    rng, algebra, pots = _setup(cfg)
    tol = _tol(cfg, "minimal_coupling")
    rows = []
    worst = 0.0
    for k, pot in enumerate(pots):
        F = build_curvature(cfg, pot)
        pts = sample_points(rng, int(cfg.section("sampling")["points"]), algebra.dim, _box(cfg))
        for j, x in enumerate(pts):
            r = po.canonicalization_residual(pot, F, [x])
            worst = max(worst, r)
            rows.append([k, j, *x.q, r])
    check = Check("canonicalization_max", worst, tol)
    return ScenarioResult(cfg.mode, [check], ["potential", "point", "q1", "q2", "q3", "canonicalization_residual"],
                          rows, info={"algebra": algebra.name, "perturbed": _perturbed(cfg)})


def closedness_bianchi_gap(xi, F, pot, q) -> float:
    """Max ``|d omega_{ijl} - sum_s e_s R^(s)_{ijl}|`` over the position block."""
    dw = red.exterior_derivative(xi, F, q)[:3, :3, :3]
    return float(np.abs(dw - red.contracted_bianchi(xi, F, pot, q)).max())


def verify_reduction(cfg: RunConfig) -> ScenarioResult:
    rng, algebra, pots = _setup(cfg)
    xi_raw = cfg.section("reduction")["xi"]
    if len(xi_raw) != algebra.dim:
        raise ConfigError(f"expected {algebra.dim} components, got {len(xi_raw)}", key="reduction.xi")
    xi = la.DualElement(xi_raw)
    tols = {name: _tol(cfg, name) for name in ("invariance", "closedness", "bivector", "closedness_bianchi_agreement")}
    r = la.invariance_residual(algebra, xi)
    inv = Check("invariance_gate", float(np.abs(r).max()), tols["invariance"])
    if inv.status == "fail":
        s, k = np.unravel_index(np.argmax(np.abs(r)), r.shape)
        inv.detail = {"offending": [int(s) + 1, int(k) + 1]}
        skipped = [Check(n, None, tols[n]) for n in ("closedness", "bivector", "closedness_bianchi_agreement")]
        return ScenarioResult(cfg.mode, [inv, *skipped], ["potential", "point", "q1", "q2", "q3",
                                                          "closedness", "bivector_deviation", "bianchi_gap"],
                              [], info={"algebra": algebra.name, "gate": "fail"})
    rows = []
    worst = {"closedness": 0.0, "bivector": 0.0, "gap": 0.0}
    for k, pot in enumerate(pots):
        F = build_curvature(cfg, pot)
        for j, x in enumerate(sample_points(rng, int(cfg.section("sampling")["points"]), 0, _box(cfg))):
            c = red.closedness_residual(xi, F, pot, [x.q])
            b = red.bivector_consistency(xi, F, [x.q])
            g = closedness_bianchi_gap(xi, F, pot, x.q)
            worst["closedness"] = max(worst["closedness"], c)
            worst["bivector"] = max(worst["bivector"], b)
            worst["gap"] = max(worst["gap"], g)
            rows.append([k, j, *x.q, c, b, g])
    checks = [inv,
              Check("closedness", worst["closedness"], tols["closedness"]),
              Check("bivector", worst["bivector"], tols["bivector"]),
              Check("closedness_bianchi_agreement", worst["gap"], tols["closedness_bianchi_agreement"])]
    return ScenarioResult(cfg.mode, checks, ["potential", "point", "q1", "q2", "q3",
                                             "closedness", "bivector_deviation", "bianchi_gap"],
                          rows, info={"algebra": algebra.name, "gate": "pass", "xi": list(map(float, xi.e)),
                                      "perturbed": _perturbed(cfg)})


# -- simulation --------------------------------------------------------------------------------

def _vector(sec, key, n, default):
    v = sec[key]
    v = default if v is None else v
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ConfigError(f"expected {n} components, got {list(np.atleast_1d(v))}", key=f"particle.{key}")
    return v


def simulate_particle(cfg: RunConfig) -> ScenarioResult:
    rng, algebra, pots = _setup(cfg)
    pot = pots[0]
    sec = cfg.section("particle")
    kind = sec["bracket"]
    F = build_curvature(cfg, pot)
    try:
        if kind == "canonical":
            spec = po.BracketSpec("canonical")
        elif kind == "magnetic":
            spec = po.BracketSpec("magnetic", curvature=F)
        elif kind == "extended_ym":
            spec = po.BracketSpec("extended_ym", curvature=F, potential=pot)
        else:
            spec = po.BracketSpec("canonicalized_ym", algebra=algebra)
        H = dyn.HamiltonianSpec(sec["hamiltonian"], potential=pot if sec["hamiltonian"] == "coupled" else None)
    except po.ConfigurationError as exc:
        raise ConfigError(str(exc), key="particle.bracket") from exc
    n = spec.n_internal
    q0, p0 = _vector(sec, "q0", 3, None), _vector(sec, "p0", 3, None)
    x0 = po.PhasePoint(q0, p0, _vector(sec, "u0", n, np.zeros(n)), _vector(sec, "y0", n, np.ones(n))) if n \
        else po.PhasePoint(q0, p0)
    try:
        traj = dyn.integrate(spec, H, x0, float(sec["T"]), float(sec["h"]), sec["method"])
    except po.ConfigurationError as exc:
        raise ConfigError(str(exc), key="particle.method") from exc
    checks = [Check("energy_drift", float(np.abs(traj.energy - traj.energy[0]).max()), _tol(cfg, "energy_drift"))]
    for label, series in traj.casimirs.items():
        checks.append(Check(f"casimir_drift[{label}]", float(np.abs(series - series[0]).max()),
                            _tol(cfg, "casimir_drift")))
    info = {"bracket": spec.kind, "hamiltonian": H.kind, "method": sec["method"], "steps": len(traj.times) - 1}
    if (kind == "magnetic" and cfg.section("potential")["preset"] == "uniform-b" and H.kind == "free"
            and not _perturbed(cfg)):
        b = float(cfg.section("potential")["b"])
        B = np.array([0.0, 0.0, b])
        g = dyn.gyration_analysis(traj, B)
        r_exact = float(np.linalg.norm(p0[:2])) / abs(b)
        T_exact = 2 * np.pi / abs(b)
        checks.append(Check("larmor_radius_error", float(np.abs(g["radius"] - r_exact).max()),
                            _tol(cfg, "larmor_radius"), detail={"exact": r_exact}))
        period_err = abs(g["period"] - T_exact) if np.isfinite(g["period"]) else None
        checks.append(Check("larmor_period_error", period_err, _tol(cfg, "larmor_period"),
                            detail={"exact": T_exact, "measured": g["period"]}))
        if period_err is None:
            checks[-1].value = float("inf")
    return ScenarioResult(cfg.mode, checks, [], [], info=info, payload=traj)


def initial_field(cfg: RunConfig, grid: mx.GridSpec) -> mx.FieldState:
    name = cfg.section("maxwell")["initial"]
    if name == "plane-wave":
        return mx.plane_wave(grid)
    if name == "beltrami":
        B = mx.beltrami(grid)
        return mx.FieldState(E=np.zeros_like(B), B=B)
    return mx.random_solenoidal_state(grid, int(cfg.seed))


def simulate_maxwell(cfg: RunConfig) -> ScenarioResult:
    sec = cfg.section("maxwell")
    try:
        grid = mx.GridSpec(int(sec["N"]), float(sec["L"]))
    except ValueError as exc:
        raise ConfigError(str(exc), key="maxwell.N") from exc
    state = initial_field(cfg, grid)
    every = int(sec["snapshot_every"]) or None
    run = mx.evolve(grid, state, float(sec["T"]), float(sec["h"]), structure=sec["structure"], snapshot_every=every)
    checks = [
        Check("energy_drift", float(np.abs(run.energy - run.energy[0]).max()), _tol(cfg, "maxwell_energy_drift")),
        Check("helicity_drift", float(np.abs(run.helicity - run.helicity[0]).max()),
              _tol(cfg, "maxwell_helicity_drift")),
        Check("divB_max", float(run.divB.max()), _tol(cfg, "divB")),
    ]
    if sec["initial"] == "plane-wave":
        t_end = float(run.times[-1])
        exact = mx.plane_wave(grid, t_end)
        err = max(float(np.abs(run.final.E - exact.E).max()), float(np.abs(run.final.B - exact.B).max()))
        checks.append(Check("plane_wave_error", err, _tol(cfg, "plane_wave_error"), detail={"t": t_end}))
    info = {"grid": {"N": grid.N, "L": grid.L}, "structure": sec["structure"], "initial": sec["initial"],
            "steps": len(run.times) - 1, "warnings": run.warnings}
    return ScenarioResult(cfg.mode, checks, [], [], info=info, payload=(grid, run))


RUNNERS = {
    "verify-jacobi": verify_jacobi,
    "verify-bianchi": verify_bianchi,
    "verify-minimal-coupling": verify_minimal_coupling,
    "verify-reduction": verify_reduction,
    "simulate-particle": simulate_particle,
    "simulate-maxwell": simulate_maxwell,
}


def run(cfg: RunConfig) -> ScenarioResult:
    log.info("running %s (seed %s)", cfg.mode, cfg.seed)
    return RUNNERS[cfg.mode](cfg)
