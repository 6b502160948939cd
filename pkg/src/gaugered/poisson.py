"""Point-dependent Poisson bivectors for particles in abelian and Yang-Mills fields.

Coordinates are ordered ``(q1..q3, p1..p3, u1..un, y1..yn)`` and the bivector is
``Pi[a, b] = {x_a, x_b}``. Sign conventions, fixed once here:

* ``{q^i, p_j} = delta^i_j`` and ``{y_s, y_k} = sum_r c^r_{sk} y_r``;
* ``{p_i, p_j} = sum_s y_s F^(s)_{ij}(q)`` (``F_ij`` itself for the magnetic table);
* the momentum shift ``p~ = p + sum_s y_s A^(s)(q)`` turns the extended table into
  the canonicalized one exactly when ``F`` is the curvature of ``A``.

With these, ``jacobiator`` on ``(p_i, p_j, p_l)`` equals ``+ sum_s y_s R^(s)_{ijl}``
where ``R`` is :func:`gauge_field.bianchi_residual` (``BIANCHI_SIGN``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gauge_field import CurvatureField, GaugePotential
from .lie_algebra import DualElement, StructureConstants, coordinate_frame, invariance_residual
from .numerics import FD_STEP, fd_jacobian

KINDS = ("canonical", "magnetic", "reduced_ym", "extended_ym", "canonicalized_ym")
BIANCHI_SIGN = 1.0
INVARIANCE_TOL = 1e-12


class ConfigurationError(ValueError):
    pass


class InvarianceError(ValueError):
    def __init__(self, residual: np.ndarray, tol: float = INVARIANCE_TOL):
        s, k = np.unravel_index(np.argmax(np.abs(residual)), residual.shape)
        self.residual = residual
        self.offending = (int(s) + 1, int(k) + 1)
        self.max_residual = float(np.abs(residual).max())
        super().__init__(
            f"dual element is not coadjoint-invariant: sum_r c^r_sk e_r = {residual[s, k]:.3g} "
            f"at (s, k) = {self.offending} (tolerance {tol:g})")


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray
    u: np.ndarray | None = None
    y: np.ndarray | None = None

    def __post_init__(self):
        for name in ("q", "p"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if v.shape != (3,):
                raise ValueError(f"{name} must have 3 components")
            object.__setattr__(self, name, v)
        if (self.u is None) != (self.y is None):
            raise ValueError("internal variables u and y must be both present or both absent")
        if self.u is not None:
            u = np.asarray(self.u, dtype=float).reshape(-1)
            y = np.asarray(self.y, dtype=float).reshape(-1)
            if u.shape != y.shape:
                raise ValueError("u and y must have equal length")
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "y", y)

    @property
    def n_internal(self) -> int:
        return 0 if self.u is None else self.u.shape[0]

    def as_vector(self) -> np.ndarray:
        parts = [self.q, self.p]
        if self.u is not None:
            parts += [self.u, self.y]
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        n = (z.shape[0] - 6) // 2
        if z.shape[0] != 6 + 2 * n:
            raise ValueError(f"state vector of length {z.shape[0]} is not 6 + 2n")
        if n == 0:
            return cls(z[:3], z[3:6])
        return cls(z[:3], z[3:6], z[6:6 + n], z[6 + n:])

    def replace(self, **kw) -> "PhasePoint":
        d = dict(q=self.q, p=self.p, u=self.u, y=self.y)
        d.update(kw)
        return PhasePoint(**d)


@dataclass(frozen=True)
class BracketSpec:
    kind: str
    curvature: CurvatureField | None = None
    potential: GaugePotential | None = None
    xi: DualElement | None = None
    algebra: StructureConstants | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown bracket kind {self.kind!r}; expected one of {KINDS}")
        if self.algebra is None:
            for src in (self.curvature, self.potential):
                if src is not None:
                    object.__setattr__(self, "algebra", src.algebra)
                    break
        if self.kind == "magnetic":
            if self.curvature is None or self.curvature.algebra.dim != 1:
                raise ConfigurationError("magnetic bracket needs an abelian (n = 1) curvature field")
        elif self.kind == "reduced_ym":
            if self.curvature is None or self.xi is None:
                raise ConfigurationError("reduced_ym needs a curvature field and a dual element")
            if len(self.xi) != self.curvature.algebra.dim:
                raise ConfigurationError("dual element length differs from the algebra dimension")
            r = invariance_residual(self.curvature.algebra, self.xi)
            if np.abs(r).max() > INVARIANCE_TOL:
                raise InvarianceError(r)
        elif self.kind == "extended_ym":
            if self.curvature is None or self.potential is None:
                raise ConfigurationError("extended_ym needs a curvature field and a potential")
            if self.curvature.algebra.dim != self.potential.algebra.dim:
                raise ConfigurationError("curvature and potential live in different algebras")
        elif self.kind == "canonicalized_ym":
            if self.algebra is None:
                raise ConfigurationError("canonicalized_ym needs structure constants")

    @property
    def n_internal(self) -> int:
        return self.algebra.dim if self.kind in ("extended_ym", "canonicalized_ym") else 0

    @property
    def dim(self) -> int:
        return 6 + 2 * self.n_internal

    def coordinate_names(self) -> list[str]:
        mom = "pt" if self.kind == "canonicalized_ym" else "p"
        names = [f"q{i}" for i in (1, 2, 3)] + [f"{mom}{i}" for i in (1, 2, 3)]
        n = self.n_internal
        names += [f"u{s}" for s in range(1, n + 1)] + [f"y{s}" for s in range(1, n + 1)]
        return names

    def state_vector(self, x: PhasePoint) -> np.ndarray:
        n = self.n_internal
        if n:
            if x.u is None:
                raise ConfigurationError(f"{self.kind} needs internal variables (u, y)")
            if x.n_internal != n:
                raise ConfigurationError(f"internal variables have length {x.n_internal}, algebra has {n}")
            return x.as_vector()
        return np.concatenate([x.q, x.p])


def _pi_from_vector(spec: BracketSpec, z: np.ndarray) -> np.ndarray:
    n = spec.n_internal
    d = 6 + 2 * n
    P = np.zeros((d, d))
    P[0:3, 3:6] = np.eye(3)
    q = z[0:3]
    iu = slice(6, 6 + n)
    iy = slice(6 + n, 6 + 2 * n)
    triu = np.triu(np.ones((3, 3), dtype=bool), 1)
    if spec.kind == "magnetic":
        P[3:6, 3:6] = np.where(triu, spec.curvature(q)[0], 0.0)
    elif spec.kind == "reduced_ym":
        P[3:6, 3:6] = np.where(triu, np.einsum("s,sij->ij", spec.xi.e, spec.curvature(q)), 0.0)
    elif spec.kind in ("extended_ym", "canonicalized_ym"):
        c = spec.algebra.c
        u, y = z[iu], z[iy]
        M = coordinate_frame(spec.algebra, u)
        P[iu, iy] = M
        lp = np.einsum("rsk,r->sk", c, y)
        P[iy, iy] = np.triu(lp, 1)
        if spec.kind == "extended_ym":
            F = spec.curvature(q)
            A = spec.potential.values(q)
            P[3:6, 3:6] = np.where(triu, np.einsum("s,sij->ij", y, F), 0.0)
            # {p_i, y_s} = -sum A^(r)_i c^m_{rs} y_m ; {p_i, u^k} = sum A^(r)_i M[k, r]
            P[3:6, iy] = -np.einsum("ri,mrs,m->is", A, c, y)
            P[3:6, iu] = np.einsum("ri,kr->ik", A, M)
    return P - P.T


def bivector(spec: BracketSpec, x: PhasePoint) -> np.ndarray:
    """Antisymmetric matrix ``Pi[a, b] = {x_a, x_b}`` at ``x``."""
    return _pi_from_vector(spec, spec.state_vector(x))


def bivector_derivative(spec: BracketSpec, x: PhasePoint, h=FD_STEP) -> np.ndarray:
    """``dPi[a, b, d] = d Pi[a, b] / d x_d`` by central differences."""
    return fd_jacobian(lambda z: _pi_from_vector(spec, z), spec.state_vector(x), h)


class Observable:
    """Smooth function of the flattened phase point, with optional analytic gradient."""

    def __init__(self, func, grad=None, *, h_obs=FD_STEP, name="f"):
        self.func = func
        self.grad = grad
        self.h_obs = h_obs
        self.name = name

    @property
    def gradient_mode(self) -> str:
        return "analytic" if self.grad is not None else "finite-difference"

    def __call__(self, z) -> float:
        return float(self.func(np.asarray(z, dtype=float)))

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.grad is not None:
            g = np.asarray(self.grad(z), dtype=float)
        else:
            g = fd_jacobian(lambda w: np.asarray(self.func(w), dtype=float), z, self.h_obs)
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"gradient of {self.name} is not finite at {z.tolist()}")
        return g

    def __mul__(self, other: "Observable") -> "Observable":
        return Observable(lambda z: self.func(z) * other.func(z), h_obs=self.h_obs,
                          name=f"({self.name}*{other.name})")

    @classmethod
    def coordinate(cls, index: int, dim: int, name: str | None = None) -> "Observable":
        e = np.zeros(dim)
        e[index] = 1.0
        return cls(lambda z: z[index], lambda z: e, name=name or f"x{index}")


def coordinate(spec: BracketSpec, name: str) -> Observable:
    names = spec.coordinate_names()
    if name not in names:
        raise ConfigurationError(f"unknown coordinate {name!r} for {spec.kind}; expected one of {names}")
    return Observable.coordinate(names.index(name), spec.dim, name)


def bracket(spec: BracketSpec, f: Observable, g: Observable, x: PhasePoint) -> float:
    """``{f, g}(x) = grad f . Pi(x) . grad g``."""
    z = spec.state_vector(x)
    return float(f.gradient(z) @ _pi_from_vector(spec, z) @ g.gradient(z))


def jacobiator_tensor(spec: BracketSpec, x: PhasePoint, h=FD_STEP) -> np.ndarray:
    """All coordinate jacobiators ``J[a, b, c] = sum_d Pi_da d_d Pi_bc + Pi_db d_d Pi_ca + Pi_dc d_d Pi_ab``."""
    Pi = bivector(spec, x)
    dPi = bivector_derivative(spec, x, h)
    T = np.einsum("da,bcd->abc", Pi, dPi)
    return T + np.einsum("bca->abc", T) + np.einsum("cab->abc", T)


def jacobiator(spec: BracketSpec, triple, x: PhasePoint, h=FD_STEP) -> float:
    names = spec.coordinate_names()
    idx = [names.index(t) if isinstance(t, str) else int(t) for t in triple]
    for i in idx:
        if not 0 <= i < spec.dim:
            raise IndexError(f"coordinate index {i} out of range for {spec.kind}")
    return float(jacobiator_tensor(spec, x, h)[tuple(idx)])


def max_jacobiator(spec: BracketSpec, points, h=FD_STEP) -> tuple[float, int]:
    """Largest ``|J[a, b, c]|`` over all triples and points, with the index of the worst point."""
    best, where = 0.0, -1
    for k, x in enumerate(points):
        m = float(np.abs(jacobiator_tensor(spec, x, h)).max())
        if m > best:
            best, where = m, k
    return best, where


def minimal_coupling(x: PhasePoint, pot: GaugePotential, *, inverse=False, charge=1.0) -> PhasePoint:
    """Momentum shift ``p~ = p + sum_s y_s A^(s)(q)`` (or its inverse).

    Abelian points without internal variables use ``y = charge``.
    """
    if x.y is not None:
        y = x.y
    elif pot.algebra.dim == 1:
        y = np.array([charge])
    else:
        raise ConfigurationError("non-abelian minimal coupling needs the internal variables y")
    shift = y @ pot.values(x.q)
    return x.replace(p=x.p - shift if inverse else x.p + shift)


def coupling_jacobian(x: PhasePoint, pot: GaugePotential) -> np.ndarray:
    """Jacobian of ``(q, p, u, y) -> (q, p~, u, y)``."""
    n = x.n_internal
    d = 6 + 2 * n
    Jm = np.eye(d)
    Jm[3:6, 0:3] = np.einsum("s,sik->ik", x.y, pot.jacobian(x.q))
    Jm[3:6, 6 + n:] = pot.values(x.q).T
    return Jm


def canonicalization_residual(pot: GaugePotential, F: CurvatureField, sample) -> float:
    """Max deviation of the pushed-forward extended table from the canonicalized table on ``sample``."""
    ext = BracketSpec("extended_ym", curvature=F, potential=pot)
    can = BracketSpec("canonicalized_ym", algebra=F.algebra)
    worst = 0.0
    for x in sample:
        Jm = coupling_jacobian(x, pot)
        pushed = Jm @ bivector(ext, x) @ Jm.T
        target = bivector(can, minimal_coupling(x, pot))
        worst = max(worst, float(np.abs(pushed - target).max()))
    return worst


def _slot(i: int, n: int) -> tuple[str, int]:
    if i < 3:
        return "q", i + 1
    if i < 6:
        return "p", i - 2
    if i < 6 + n:
        return "u", i - 5
    return "y", i - 5 - n


def symbolic_entry(spec: BracketSpec, a: int, b: int) -> str:
    """Human-readable formula for ``{x_a, x_b}``."""
    if a == b:
        return "0"
    if a > b:
        s = symbolic_entry(spec, b, a)
        return "0" if s == "0" else f"-({s})"
    n = spec.n_internal
    ga, ia = _slot(a, n)
    gb, ib = _slot(b, n)
    if (ga, gb) == ("q", "p"):
        return "1" if ia == ib else "0"
    if (ga, gb) == ("p", "p"):
        if spec.kind == "magnetic":
            return f"F_{ia}{ib}(q)"
        if spec.kind == "reduced_ym":
            return f"sum_s e_s F^(s)_{ia}{ib}(q)"
        if spec.kind == "extended_ym":
            return f"sum_s y_s F^(s)_{ia}{ib}(q)"
        return "0"
    if spec.kind == "extended_ym" and (ga, gb) == ("p", "u"):
        return f"sum_r A^(r)_{ia}(q) M_{ib}r(u)"
    if spec.kind == "extended_ym" and (ga, gb) == ("p", "y"):
        return f"-sum_rm A^(r)_{ia}(q) c^m_r{ib} y_m"
    if (ga, gb) == ("u", "y"):
        return f"M_{ia}{ib}(u)"
    if (ga, gb) == ("y", "y"):
        terms = [f"{'+' if v > 0 else '-'}{'' if abs(v) == 1 else f'{abs(v):g}*'}y{r + 1}"
                 for r, v in enumerate(spec.algebra.c[:, ia - 1, ib - 1]) if v]
        return "".join(terms).lstrip("+") or "0"
    return "0"


def table_json(spec: BracketSpec, points) -> dict:
    """Bracket table as coordinate names, formula strings and sampled values."""
    names = spec.coordinate_names()
    entries = []
    mats = [bivector(spec, x) for x in points]
    for a in range(spec.dim):
        for b in range(a + 1, spec.dim):
            formula = symbolic_entry(spec, a, b)
            values = [float(m[a, b]) for m in mats]
            if formula == "0" and not any(values):
                continue
            entries.append({"pair": [names[a], names[b]], "formula": formula, "values": values})
    return {
        "kind": spec.kind,
        "coordinates": names,
        "points": [spec.state_vector(x).tolist() for x in points],
        "entries": entries,
    }
