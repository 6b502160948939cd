"""Gauge potentials over a box in R^3, their curvatures and field-equation residuals.

Index layout used throughout:

* potential values ``A[s, j]`` = A^(s)_j(q)
* potential jacobian ``dA[s, j, i]`` = dA^(s)_j / dq^i
* curvature ``F[s, i, j]`` = F^(s)_{ij}(q), antisymmetric in (i, j)
* Bianchi residual ``R[s, i, j, l]``
"""

from __future__ import annotations

import numpy as np

from .lie_algebra import StructureConstants, abelian, so3
from .numerics import FD_STEP, fd_jacobian

DEFAULT_BOX = (-1.0, 1.0)


class DomainError(ValueError):
    pass


class MissingPotentialError(ValueError):
    pass


def _point(q):
    q = np.asarray(q, dtype=float)
    if q.shape != (3,):
        raise ValueError(f"expected a point in R^3, got shape {q.shape}")
    return q


class GaugePotential:
    """Smooth Lie-algebra valued potential ``q -> A^(s)_j(q)``.

    ``func`` maps a point to an ``(n, 3)`` array. When ``jac`` is given it must
    return ``dA[s, j, i]``; otherwise derivatives use fourth-order central
    differences with step ``h_fd``.
    """

    def __init__(self, algebra: StructureConstants, func, jac=None, *, h_fd=FD_STEP,
                 box=DEFAULT_BOX, name="custom"):
        self.algebra = algebra
        self._func = func
        self._jac = jac
        self.h_fd = h_fd
        self.box = box
        self.name = name

    @property
    def derivative_mode(self) -> str:
        return "analytic" if self._jac is not None else "finite-difference"

    def values(self, q) -> np.ndarray:
        return np.asarray(self._func(np.asarray(q, dtype=float)), dtype=float).reshape(self.algebra.dim, 3)

    def jacobian(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self._jac is not None:
            return np.asarray(self._jac(q), dtype=float)
        return fd_jacobian(self.values, q, self.h_fd)

    def fd_jacobian(self, q) -> np.ndarray:
        return fd_jacobian(self.values, np.asarray(q, dtype=float), self.h_fd)

    def in_domain(self, q) -> bool:
        lo, hi = self.box
        q = np.asarray(q)
        return bool(np.all(q >= lo - 1e-12) and np.all(q <= hi + 1e-12))

    def check_derivatives(self, points) -> float:
        """Max deviation between the analytic and finite-difference jacobians on ``points``."""
        if self._jac is None:
            return 0.0
        return max(float(np.abs(self.jacobian(q) - self.fd_jacobian(q)).max()) for q in points)

    def __add__(self, other: "GaugePotential") -> "GaugePotential":
        if other.algebra.dim != self.algebra.dim:
            raise ValueError("potentials live in algebras of different dimension")
        jac = None
        if self._jac is not None and other._jac is not None:
            jac = lambda q: self.jacobian(q) + other.jacobian(q)  # noqa: E731
        return GaugePotential(self.algebra, lambda q: self.values(q) + other.values(q), jac,
                              h_fd=self.h_fd, box=self.box, name=f"{self.name}+{other.name}")

    def __repr__(self):
        return f"GaugePotential({self.name!r}, n={self.algebra.dim}, {self.derivative_mode})"


class TrigPotential(GaugePotential):
    """Trigonometric coefficient table.

    ``A^(s)_j(q) = sum_t cos_coef[s, j, t] cos(K[s, j, t] . q) + sin_coef[s, j, t] sin(K[s, j, t] . q)``
    with integer (or real) wavevectors ``K`` of shape ``(n, 3, T, 3)``.
    """

    def __init__(self, algebra, wavevectors, cos_coef, sin_coef, **kw):
        self.K = np.asarray(wavevectors, dtype=float)
        self.C = np.asarray(cos_coef, dtype=float)
        self.S = np.asarray(sin_coef, dtype=float)
        n = algebra.dim
        if self.K.shape[:2] != (n, 3) or self.K.shape[-1] != 3 or self.C.shape != self.K.shape[:3] \
                or self.S.shape != self.C.shape:
            raise ValueError("trig coefficient tables have inconsistent shapes")
        kw.setdefault("name", "trig")
        super().__init__(algebra, self._eval, self._eval_jac, **kw)

    def _eval(self, q):
        phase = self.K @ q
        return (self.C * np.cos(phase) + self.S * np.sin(phase)).sum(axis=-1)

    def _eval_jac(self, q):
        phase = self.K @ q
        w = -self.C * np.sin(phase) + self.S * np.cos(phase)
        return np.einsum("sjt,sjti->sji", w, self.K)

    def to_dict(self) -> dict:
        return {"kind": "trig", "wavevectors": self.K.tolist(), "cos": self.C.tolist(), "sin": self.S.tolist()}


class PolynomialPotential(GaugePotential):
    """Polynomial coefficient table of ``(s, j, coefficient, (e1, e2, e3))`` rows, 1-based ``s, j``;
    each row contributes ``coefficient * q1**e1 * q2**e2 * q3**e3`` to ``A^(s)_j``."""

    def __init__(self, algebra, terms, **kw):
        self.terms = [(int(s) - 1, int(j) - 1, float(c), tuple(int(e) for e in exps))
                      for s, j, c, exps in terms]
        for s, j, _, exps in self.terms:
            if not (0 <= s < algebra.dim and 0 <= j < 3 and len(exps) == 3 and min(exps) >= 0):
                raise ValueError(f"bad polynomial term for component ({s + 1}, {j + 1})")
        kw.setdefault("name", "polynomial")
        super().__init__(algebra, self._eval, self._eval_jac, **kw)

    def _eval(self, q):
        out = np.zeros((self.algebra.dim, 3))
        for s, j, c, e in self.terms:
            out[s, j] += c * q[0] ** e[0] * q[1] ** e[1] * q[2] ** e[2]
        return out

    def _eval_jac(self, q):
        out = np.zeros((self.algebra.dim, 3, 3))
        for s, j, c, e in self.terms:
            for i in range(3):
                if e[i] == 0:
                    continue
                d = list(e)
                d[i] -= 1
                out[s, j, i] += c * e[i] * q[0] ** d[0] * q[1] ** d[1] * q[2] ** d[2]
        return out


def zero_potential(algebra: StructureConstants) -> GaugePotential:
    n = algebra.dim
    return GaugePotential(algebra, lambda q: np.zeros((n, 3)), lambda q: np.zeros((n, 3, 3)), name="zero")


def uniform_b(b: float = 1.0) -> PolynomialPotential:
    """Abelian ``A = (0, b q1, 0)``, so ``F_12 = b``."""
    return PolynomialPotential(abelian(1), [(1, 2, b, (1, 0, 0))], name="uniform-b")


def linear(matrix=None, algebra: StructureConstants | None = None) -> PolynomialPotential:
    """``A^(s)_j = sum_i M[s, j, i] q^i``; default is the symmetric gauge ``A = (-q2, q1, 0) / 2``."""
    if matrix is None:
        matrix = np.zeros((1, 3, 3))
        matrix[0, 0, 1] = -0.5
        matrix[0, 1, 0] = 0.5
    m = np.asarray(matrix, dtype=float)
    if m.ndim == 2:
        m = m[None]
    algebra = algebra or abelian(m.shape[0])
    terms = []
    for s, j, i in zip(*np.nonzero(m)):
        e = [0, 0, 0]
        e[i] = 1
        terms.append((s + 1, j + 1, m[s, j, i], tuple(e)))
    return PolynomialPotential(algebra, terms, name="linear")


def so3_constant(a: float = 1.0) -> GaugePotential:
    """``A^(k)_i = a delta^k_i`` over so(3)."""
    val = a * np.eye(3)
    return GaugePotential(so3(), lambda q: val.copy(), lambda q: np.zeros((3, 3, 3)), name="so3-constant")


def random_trig(algebra: StructureConstants, seed: int, n_terms: int = 3, max_wavenumber: int = 3) -> TrigPotential:
    rng = np.random.default_rng(seed)
    n = algebra.dim
    K = rng.integers(-max_wavenumber, max_wavenumber + 1, size=(n, 3, n_terms, 3))
    C = rng.uniform(-1.0, 1.0, size=(n, 3, n_terms))
    S = rng.uniform(-1.0, 1.0, size=(n, 3, n_terms))
    return TrigPotential(algebra, K, C, S, name=f"random-trig[{seed}]")


class CurvatureField:
    """Evaluator ``q -> F[s, i, j]``, antisymmetric in (i, j).

    ``provenance`` is ``"derived-from-potential"`` when built by :func:`curvature_field`,
    otherwise ``"free-standing"``.
    """

    def __init__(self, algebra: StructureConstants, func, *, provenance="free-standing",
                 potential: GaugePotential | None = None, h_fd=FD_STEP, name="custom"):
        self.algebra = algebra
        self._func = func
        self.provenance = provenance
        self.potential = potential
        self.h_fd = h_fd
        self.name = name

    def __call__(self, q) -> np.ndarray:
        F = np.asarray(self._func(np.asarray(q, dtype=float)), dtype=float).reshape(self.algebra.dim, 3, 3)
        if not np.array_equal(F, -np.swapaxes(F, 1, 2)):
            raise ValueError("curvature components are not antisymmetric in (i, j)")
        return F

    def derivative(self, q) -> np.ndarray:
        """``dF[s, i, j, l] = dF^(s)_{ij} / dq^l``."""
        return fd_jacobian(self.__call__, np.asarray(q, dtype=float), self.h_fd)

    def perturbed(self, delta: float, s: int = 0, i: int = 0, j: int = 1, coord: int = 2) -> "CurvatureField":
        """Free-standing copy with ``delta * q[coord]`` added to ``F^(s)_{ij}`` (0-based indices)."""
        def func(q):
            F = self(q).copy()
            F[s, i, j] += delta * q[coord]
            F[s, j, i] -= delta * q[coord]
            return F
        return CurvatureField(self.algebra, func, potential=self.potential, h_fd=self.h_fd,
                              name=f"{self.name}+{delta:g}q{coord + 1}")


def _curvature_from(algebra, A, dA):
    dA_ij = np.swapaxes(dA, 1, 2)  # [s, i, j] = d_i A_j
    F = dA_ij - np.swapaxes(dA_ij, 1, 2)
    if not algebra.is_abelian:
        F = F + np.einsum("skr,ki,rj->sij", algebra.c, A, A)
    # exact antisymmetry despite rounding in the quadratic term
    return 0.5 * (F - np.swapaxes(F, 1, 2))


def curvature(pot: GaugePotential, q) -> np.ndarray:
    """``F^(s)_{ij} = d_i A^(s)_j - d_j A^(s)_i + sum_{k,r} c^s_{kr} A^(k)_i A^(r)_j``."""
    q = _point(q)
    if not pot.in_domain(q):
        raise DomainError(f"point {q.tolist()} outside domain box {pot.box}")
    return _curvature_from(pot.algebra, pot.values(q), pot.jacobian(q))


def curvature_field(pot: GaugePotential) -> CurvatureField:
    return CurvatureField(pot.algebra, lambda q: _curvature_from(pot.algebra, pot.values(q), pot.jacobian(q)),
                          provenance="derived-from-potential", potential=pot, h_fd=pot.h_fd,
                          name=f"curv({pot.name})")


def free_curvature(algebra: StructureConstants, func, name="free") -> CurvatureField:
    return CurvatureField(algebra, func, name=name)


def zero_curvature(algebra: StructureConstants) -> CurvatureField:
    n = algebra.dim
    return CurvatureField(algebra, lambda q: np.zeros((n, 3, 3)), name="zero")


def q3_curvature(delta: float = 1.0) -> CurvatureField:
    """Abelian free-standing field with ``F_12 = delta * q3`` and all other components zero."""
    return zero_curvature(abelian(1)).perturbed(delta)


def bianchi_residual(F: CurvatureField, pot: GaugePotential | None, q) -> np.ndarray:
    """Cyclic covariant-derivative residual ``R[s, i, j, l]``.

    ``R = d_l F_ij + d_i F_jl + d_j F_li + sum c^s_{kr} (A^(k)_l F^(r)_ij + A^(k)_i F^(r)_jl + A^(k)_j F^(r)_li)``.
    Vanishes identically for curvatures of smooth potentials. The potential is
    ignored for abelian algebras.
    """
    q = _point(q)
    dF = F.derivative(q)
    R = dF + np.einsum("sjli->sijl", dF) + np.einsum("slij->sijl", dF)
    if not F.algebra.is_abelian:
        if pot is None:
            raise MissingPotentialError("non-abelian Bianchi residual needs the potential")
        A = pot.values(q)
        Fq = F(q)
        c = F.algebra.c
        R = R + (np.einsum("skr,kl,rij->sijl", c, A, Fq)
                 + np.einsum("skr,ki,rjl->sijl", c, A, Fq)
                 + np.einsum("skr,kj,rli->sijl", c, A, Fq))
    return R
