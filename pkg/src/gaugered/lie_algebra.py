"""Finite-dimensional Lie algebras given by structure constants.

The constants are stored as ``c[r, s, k]`` so that ``[a_s, a_k] = sum_r c[r, s, k] a_r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.special import bernoulli

VALID_TOL = 1e-12


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class StructureConstants:
    c: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise ShapeError(f"structure constants must have shape (n, n, n), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def is_abelian(self) -> bool:
        return not np.any(self.c)

    def ad(self, a) -> np.ndarray:
        """Matrix of ``ad_a`` acting on component vectors: ``(ad_a)[r, k] = sum_s c[r, s, k] a[s]``."""
        a = _vector(self, a)
        return np.einsum("rsk,s->rk", self.c, a)

    @classmethod
    def from_triples(cls, dim: int, triples, name: str = "custom") -> "StructureConstants":
        """Build from ``(r, s, k, value)`` entries (1-based), completing antisymmetrically in (s, k)."""
        c = np.zeros((dim, dim, dim))
        for entry in triples:
            if len(entry) != 4:
                raise ShapeError(f"structure constant entry must be (r, s, k, value), got {entry!r}")
            r, s, k, value = entry
            r, s, k = int(r) - 1, int(s) - 1, int(k) - 1
            if not all(0 <= i < dim for i in (r, s, k)):
                raise ShapeError(f"index out of range for dim {dim}: {entry!r}")
            if s == k and value != 0:
                raise ShapeError(f"diagonal entry c^{r + 1}_{{{s + 1}{k + 1}}} must vanish")
            c[r, s, k] = value
            c[r, k, s] = -value
        return cls(c, name=name)


@dataclass(frozen=True)
class DualElement:
    e: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float).reshape(-1)
        e.setflags(write=False)
        object.__setattr__(self, "e", e)

    def __len__(self):
        return self.e.shape[0]


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {"valid": self.valid, "violations": list(self.violations)}


def abelian(n: int = 1) -> StructureConstants:
    return StructureConstants(np.zeros((n, n, n)), name=f"abelian{n}" if n != 1 else "abelian")


def so3() -> StructureConstants:
    c = np.zeros((3, 3, 3))
    for s, k, r in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        c[r, s, k] = 1.0
        c[r, k, s] = -1.0
    return StructureConstants(c, name="so3")


def heisenberg() -> StructureConstants:
    # [x, y] = z, z central
    c = np.zeros((3, 3, 3))
    c[2, 0, 1] = 1.0
    c[2, 1, 0] = -1.0
    return StructureConstants(c, name="heisenberg")


def preset(name: str) -> StructureConstants:
    key = name.strip().lower().replace("-", "").replace("_", "").replace("(", "").replace(")", "")
    if key == "so3":
        return so3()
    if key in ("heisenberg", "heisenberg3"):
        return heisenberg()
    if key.startswith("abelian"):
        rest = key[len("abelian"):]
        return abelian(int(rest) if rest else 1)
    raise KeyError(name)


def _vector(sc: StructureConstants, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (sc.dim,):
        raise ShapeError(f"expected vector of length {sc.dim}, got shape {v.shape}")
    return v


def jacobi_tensor(sc: StructureConstants) -> np.ndarray:
    """``J[r, s, k, l] = sum_m c^m_{sk} c^r_{ml} + c^m_{kl} c^r_{ms} + c^m_{ls} c^r_{mk}``."""
    c = sc.c
    t = np.einsum("msk,rml->rskl", c, c)
    return t + np.einsum("mkl,rms->rskl", c, c) + np.einsum("mls,rmk->rskl", c, c)


def validate(sc: StructureConstants, tol: float = VALID_TOL) -> ValidationReport:
    report = ValidationReport()
    c = sc.c
    anti = np.abs(c + np.transpose(c, (0, 2, 1)))
    if anti.max() > tol:
        bad = np.argwhere(anti > tol)
        report.violations.append({
            "kind": "antisymmetry",
            "max_residual": float(anti.max()),
            "indices": [[int(i) + 1 for i in idx] for idx in bad[:10]],
        })
    jac = np.abs(jacobi_tensor(sc))
    if jac.max() > tol:
        bad = np.argwhere(jac > tol)
        report.violations.append({
            "kind": "jacobi",
            "max_residual": float(jac.max()),
            "indices": [[int(i) + 1 for i in idx] for idx in bad[:10]],
        })
    return report


def bracket(sc: StructureConstants, a, b) -> np.ndarray:
    a = _vector(sc, a)
    b = _vector(sc, b)
    return np.einsum("rsk,s,k->r", sc.c, a, b)


def invariance_residual(sc: StructureConstants, xi) -> np.ndarray:
    """``r[s, k] = sum_r c^r_{sk} e_r``; the dual element is coadjoint-invariant iff this vanishes."""
    e = xi.e if isinstance(xi, DualElement) else np.asarray(xi, dtype=float)
    e = _vector(sc, e)
    return np.einsum("rsk,r->sk", sc.c, e)


def is_invariant(sc: StructureConstants, xi, tol: float = VALID_TOL) -> bool:
    return bool(np.abs(invariance_residual(sc, xi)).max() <= tol)


_SERIES_TERMS = 40
_BERNOULLI = bernoulli(_SERIES_TERMS)
_BERNOULLI_COEF = np.array([_BERNOULLI[m] / factorial(m) for m in range(_SERIES_TERMS + 1)])


def coordinate_frame(sc: StructureConstants, u) -> np.ndarray:
    """Frame ``M(u)`` of the internal-coordinate block of the extended bracket.

    Column ``s`` holds the components of the vector field ``X_s`` on exponential
    coordinates ``u`` of the group; the fields satisfy ``[X_s, X_k] = -c^r_{sk} X_r``
    and ``M(0) = I``. Evaluated as the power series
    of ``z / (e^z - 1)`` in ``ad_u``, which converges for spectral radius below 2 pi.
    """
    u = _vector(sc, u)
    n = sc.dim
    if sc.is_abelian:
        return np.eye(n)
    z = sc.ad(u)
    # odd Bernoulli numbers beyond B_1 vanish: I - z/2 + sum_j B_2j/(2j)! z^2j
    out = np.eye(n) - 0.5 * z
    z2 = z @ z
    power = np.eye(n)
    for coef in _BERNOULLI_COEF[2::2]:
        power = power @ z2
        term = coef * power
        out += term
        if np.abs(term).max() <= 1e-18 * np.abs(out).max():
            break
    return out
