"""Hamiltonian particle dynamics ``x' = Pi(x) grad H(x)`` under any bracket table."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .gauge_field import GaugePotential
from .numerics import fd_jacobian
from .poisson import BracketSpec, ConfigurationError, PhasePoint, _pi_from_vector

METHODS = ("rk4", "boris")


class DivergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class HamiltonianSpec:
    """``free``: H = |p|^2 / 2. ``coupled``: H = |p~ - sum_s y_s A^(s)(q)|^2 / 2 in the
    canonicalized coordinates. ``custom``: any function of the flattened state."""

    kind: str = "free"
    potential: GaugePotential | None = None
    func: object = None
    grad: object = None
    charge: float = 1.0

    def __post_init__(self):
        if self.kind not in ("free", "coupled", "custom"):
            raise ConfigurationError(f"unknown Hamiltonian kind {self.kind!r}")
        if self.kind == "coupled" and self.potential is None:
            raise ConfigurationError("coupled Hamiltonian needs a potential")
        if self.kind == "custom" and self.func is None:
            raise ConfigurationError("custom Hamiltonian needs a function")

    def _charges(self, z):
        n = (z.shape[0] - 6) // 2
        return z[6 + n:] if n else np.array([self.charge])

    def value(self, z) -> float:
        z = np.asarray(z, dtype=float)
        if self.kind == "free":
            return 0.5 * float(z[3:6] @ z[3:6])
        if self.kind == "coupled":
            v = z[3:6] - self._charges(z) @ self.potential.values(z[:3])
            return 0.5 * float(v @ v)
        return float(self.func(z))

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        g = np.zeros_like(z)
        if self.kind == "free":
            g[3:6] = z[3:6]
        elif self.kind == "coupled":
            y = self._charges(z)
            A = self.potential.values(z[:3])
            v = z[3:6] - y @ A
            g[3:6] = v
            g[0:3] = -np.einsum("i,s,sik->k", v, y, self.potential.jacobian(z[:3]))
            n = (z.shape[0] - 6) // 2
            if n:
                g[6 + n:] = -A @ v
        elif self.grad is not None:
            g = np.asarray(self.grad(z), dtype=float)
        else:
            g = fd_jacobian(lambda w: np.asarray(self.func(w), dtype=float), z)
        return g


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    coordinates: list
    energy: np.ndarray
    casimirs: dict = field(default_factory=dict)
    step: float = 0.0

    def point(self, k: int) -> PhasePoint:
        return PhasePoint.from_vector(self.states[k])

    def to_csv(self, path) -> None:
        """Columns: ``t``, the bracket's coordinate names, ``H``, then Casimir labels."""
        labels = list(self.casimirs)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *self.coordinates, "H", *labels])
            for k, t in enumerate(self.times):
                row = [t, *self.states[k], self.energy[k], *(self.casimirs[c][k] for c in labels)]
                w.writerow([f"{v:.17g}" for v in row])


def vector_field(spec: BracketSpec, H: HamiltonianSpec, x) -> np.ndarray:
    z = spec.state_vector(x) if isinstance(x, PhasePoint) else np.asarray(x, dtype=float)
    g = H.gradient(z)
    if not np.all(np.isfinite(g)):
        raise ArithmeticError(f"Hamiltonian gradient is not finite at {z.tolist()}")
    return _pi_from_vector(spec, z) @ g


def casimirs(spec: BracketSpec, x) -> dict:
    """Casimir functions of the Lie-Poisson block for the built-in algebras.

    so3: ``sum y^2``; abelian: each ``y_s``; heisenberg: the central ``y3``.
    Unsupported algebras and tables without internal variables give ``{}``.
    """
    if spec.n_internal == 0:
        return {}
    z = spec.state_vector(x) if isinstance(x, PhasePoint) else np.asarray(x, dtype=float)
    y = z[6 + spec.n_internal:]
    name = spec.algebra.name
    if name == "so3":
        return {"C_y2": float(y @ y)}
    if spec.algebra.is_abelian:
        return {f"C_y{s + 1}": float(v) for s, v in enumerate(y)}
    if name == "heisenberg":
        return {"C_y3": float(y[2])}
    return {}


def _boris_step(spec, z, h):
    q, p = z[:3], z[3:6]
    q_half = q + 0.5 * h * p
    F = spec.curvature(q_half)[0]
    # p' = F p integrated by the Cayley (Boris) rotation, exactly norm preserving
    p_new = np.linalg.solve(np.eye(3) - 0.5 * h * F, p + 0.5 * h * F @ p)
    return np.concatenate([q_half + 0.5 * h * p_new, p_new])


def integrate(spec: BracketSpec, H: HamiltonianSpec, x0: PhasePoint, T: float, h: float,
              method: str = "rk4") -> Trajectory:
    """Fixed-step integration sampled at ``t = 0, h, ..., n h`` with ``n = round(T / h)``."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown integrator {method!r}")
    if not h > 0 or T < h:
        raise ConfigurationError(f"need h > 0 and T >= h, got h = {h}, T = {T}")
    if method == "boris" and not (spec.kind == "magnetic" and H.kind == "free"):
        raise ConfigurationError("boris is only available for the magnetic table with the free Hamiltonian")
    n_steps = int(round(T / h))
    z = spec.state_vector(x0).copy()
    states = np.empty((n_steps + 1, z.shape[0]))
    states[0] = z

    def f(w):
        return _pi_from_vector(spec, w) @ H.gradient(w)

    for k in range(1, n_steps + 1):
        if method == "rk4":
            k1 = f(z)
            k2 = f(z + 0.5 * h * k1)
            k3 = f(z + 0.5 * h * k2)
            k4 = f(z + h * k3)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        else:
            z = _boris_step(spec, z, h)
        if not np.all(np.isfinite(z)):
            raise DivergenceError(f"state became non-finite at step {k} (t = {k * h:g})")
        states[k] = z

    energy = np.array([H.value(s) for s in states])
    cas_rows = [casimirs(spec, s) for s in states]
    cas = {key: np.array([row[key] for row in cas_rows]) for key in (cas_rows[0] if cas_rows else {})}
    return Trajectory(times=h * np.arange(n_steps + 1), states=states, coordinates=spec.coordinate_names(),
                      energy=energy, casimirs=cas, step=h)


def gyration_analysis(traj: Trajectory, B) -> dict:
    """Radius and period of a gyration orbit in a uniform field ``B`` (F_ij = eps_ijk B_k).

    The guiding centre ``q + p x B / |B|^2`` of the initial state fixes the orbit centre.
    The period is ``2 pi / omega`` with ``omega`` the least-squares slope of the
    unwrapped gyration phase, so it is defined for any run length.
    """
    B = np.asarray(B, dtype=float)
    b = np.linalg.norm(B)
    q, p = traj.states[:, :3], traj.states[:, 3:6]
    centre = q[0] + np.cross(p[0], B) / b ** 2
    radius = np.linalg.norm(q - centre, axis=1)
    e1 = p[0] / np.linalg.norm(p[0])
    e2 = np.cross(B / b, e1)
    phase = np.unwrap(np.arctan2(p @ e2, p @ e1))
    omega = np.polyfit(traj.times, phase, 1)[0]
    period = 2 * np.pi / abs(omega) if omega else np.inf
    return {"centre": centre, "radius": radius, "period": float(period), "omega": float(omega)}
