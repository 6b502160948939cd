"""Vacuum Maxwell fields on a periodic cube with Fourier-spectral derivatives.

Vector fields are arrays of shape ``(3, N, N, N)`` indexed ``[component, x, y, z]``;
scalar fields are ``(N, N, N)``. Inner products ``(a, b)`` are grid sums times the
cell volume.

Two Hamiltonian routes produce the same flow ``E' = rot B, B' = -rot E``:

* canonical: potentials ``A = rot^-1 B`` and ``Y = E_SIGN * E`` with
  ``H(A, Y) = ((Y, Y) + (rot A, rot A)) / 2``, ``A' = dH/dY``, ``Y' = -dH/dA``;
* helicity: ``Hbar(B, E) = ((rot E, E) + (rot B, B)) / 2`` with
  ``E' = dHbar/dB``, ``B' = -dHbar/dE``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as sfft

log = logging.getLogger(__name__)

# Y = E_SIGN * E identifies the canonical momentum of the (A, Y) formulation
E_SIGN = -1.0
DIV_TOL = 1e-8
MEAN_TOL = 1e-10


class NotInRangeError(ValueError):
    def __init__(self, message, defect: float):
        self.defect = float(defect)
        super().__init__(f"{message} (measured defect {defect:.3e})")


@dataclass(frozen=True)
class GridSpec:
    N: int = 32
    L: float = 2 * np.pi

    def __post_init__(self):
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.dx ** 3

    def coordinates(self):
        x = np.arange(self.N) * self.dx
        return np.meshgrid(x, x, x, indexing="ij")

    def wavenumbers(self):
        """Angular wavenumbers for ``rfftn`` layout, Nyquist modes zeroed."""
        k = 2 * np.pi * np.fft.fftfreq(self.N, d=self.dx)
        k[self.N // 2] = 0.0
        kr = 2 * np.pi * np.fft.rfftfreq(self.N, d=self.dx)
        kr[-1] = 0.0
        kx, ky, kz = np.meshgrid(k, k, kr, indexing="ij")
        return np.stack([kx, ky, kz])

    def nyquist_mask(self):
        n = self.N
        shape = (n, n, n // 2 + 1)
        m = np.zeros(shape, dtype=bool)
        m[n // 2, :, :] = True
        m[:, n // 2, :] = True
        m[:, :, -1] = True
        return m


@dataclass(frozen=True)
class FieldState:
    E: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        for name in ("E", "B"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 4 or a.shape[0] != 3:
                raise ValueError(f"{name} must have shape (3, N, N, N)")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite values")
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class PotentialState:
    A: np.ndarray
    Y: np.ndarray
    S: np.ndarray | None = None


class SpectralOps:
    """Spectral div/curl/inverse-curl on one grid."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.k = grid.wavenumbers()
        self.k2 = np.sum(self.k ** 2, axis=0)
        self.inv_k2 = np.zeros_like(self.k2)
        nz = self.k2 > 0
        self.inv_k2[nz] = 1.0 / self.k2[nz]
        self.nyquist = grid.nyquist_mask()

    def fft(self, f):
        return sfft.rfftn(f, axes=(-3, -2, -1))

    def ifft(self, fh):
        n = self.grid.N
        return sfft.irfftn(np.ascontiguousarray(fh), s=(n, n, n), axes=(-3, -2, -1))

    def curl_hat(self, fh):
        k = self.k
        return 1j * np.stack([k[1] * fh[2] - k[2] * fh[1],
                              k[2] * fh[0] - k[0] * fh[2],
                              k[0] * fh[1] - k[1] * fh[0]])

    def div_hat(self, fh):
        return 1j * np.sum(self.k * fh, axis=0)

    def grad_hat(self, sh):
        return 1j * self.k * sh

    def inverse_curl_hat(self, fh):
        return self.curl_hat(fh) * self.inv_k2

    def curl(self, f):
        return self.ifft(self.curl_hat(self.fft(f)))

    def div(self, f):
        return self.ifft(self.div_hat(self.fft(f)))

    def grad(self, s):
        return self.ifft(self.grad_hat(self.fft(s)))

    def laplacian(self, s):
        return self.ifft(-self.k2 * self.fft(s))

    def inverse_laplacian(self, s):
        """Mean-free solution of ``lap phi = s``; ``s`` must have zero mean."""
        return self.ifft(-self.inv_k2 * self.fft(s))

    def range_defect(self, f) -> tuple[float, float, float]:
        """(max |div f|, max |mean f_i|, max Nyquist amplitude) of a vector field."""
        fh = self.fft(f)
        div = float(np.abs(self.ifft(self.div_hat(fh))).max())
        mean = float(np.abs(f.mean(axis=(1, 2, 3))).max())
        nyq = float(np.abs(fh[:, self.nyquist]).max()) / self.grid.N ** 3 if np.any(self.nyquist) else 0.0
        return div, mean, nyq

    def inverse_curl(self, f, tol=DIV_TOL):
        """Unique mean-free, divergence-free ``A`` with ``rot A = f``."""
        div, mean, nyq = self.range_defect(f)
        if div > tol:
            raise NotInRangeError("field is not divergence-free", div)
        if mean > MEAN_TOL:
            raise NotInRangeError("field has a non-zero mean (harmonic part on the torus)", mean)
        if nyq > MEAN_TOL:
            raise NotInRangeError("field has content on the Nyquist planes", nyq)
        return self.ifft(self.inverse_curl_hat(self.fft(f)))


_OPS_CACHE: dict = {}


def ops(grid: GridSpec) -> SpectralOps:
    if grid not in _OPS_CACHE:
        _OPS_CACHE[grid] = SpectralOps(grid)
    return _OPS_CACHE[grid]


def inner(grid: GridSpec, a, b) -> float:
    return float(np.sum(a * b) * grid.cell_volume)


def curl(grid, f):
    return ops(grid).curl(f)


def div(grid, f):
    return ops(grid).div(f)


def inverse_curl(grid, f):
    return ops(grid).inverse_curl(f)


def energy(grid: GridSpec, state: FieldState) -> float:
    return 0.5 * (inner(grid, state.B, state.B) + inner(grid, state.E, state.E))


def helicity_hamiltonian(grid: GridSpec, state: FieldState) -> float:
    o = ops(grid)
    return 0.5 * (inner(grid, o.curl(state.E), state.E) + inner(grid, o.curl(state.B), state.B))


def potential_energy(grid: GridSpec, pot: PotentialState) -> float:
    """``((rot^-1 Y, rot^-1 Y) + (rot A, rot A)) / 2``."""
    o = ops(grid)
    Yi = o.ifft(o.inverse_curl_hat(o.fft(pot.Y)))
    rA = o.curl(pot.A)
    return 0.5 * (inner(grid, Yi, Yi) + inner(grid, rA, rA))


def potential_helicity(grid: GridSpec, pot: PotentialState) -> float:
    """``((rot^3 A, A) + (rot^-1 Y, Y)) / 2``."""
    o = ops(grid)
    r3 = o.curl(o.curl(o.curl(pot.A)))
    Yi = o.ifft(o.inverse_curl_hat(o.fft(pot.Y)))
    return 0.5 * (inner(grid, r3, pot.A) + inner(grid, Yi, pot.Y))


def momentum_maps(grid: GridSpec, state: FieldState | None = None, rho=None,
                  potentials: PotentialState | None = None) -> dict:
    """Gauge momentum maps and constraint residuals.

    ``l(B, E) = (div E, -div B)`` with residuals ``max |div E - rho|``, ``max |div B|``;
    ``l(A, Y) = -div Y`` with residual ``max |div Y|``.
    """
    o = ops(grid)
    out = {}
    if state is not None:
        dE = o.div(state.E)
        dB = o.div(state.B)
        r = np.zeros_like(dE) if rho is None else np.asarray(rho, dtype=float)
        out["l_BE"] = (dE, -dB)
        out["divE_minus_rho"] = float(np.abs(dE - r).max())
        out["divB"] = float(np.abs(dB).max())
    if potentials is not None:
        dY = o.div(potentials.Y)
        out["l_AY"] = -dY
        out["divY"] = float(np.abs(dY).max())
    return out


def potential_representation(grid: GridSpec, state: FieldState, with_S=True, tol=DIV_TOL) -> PotentialState:
    """``A = rot^-1 B``, ``Y = -rot E`` and, for vacuum states, ``S = rot^-1(-E)``."""
    o = ops(grid)
    A = o.inverse_curl(state.B, tol)
    Y = -o.curl(state.E)
    S = o.inverse_curl(-state.E, tol) if with_S else None
    return PotentialState(A=A, Y=Y, S=S)


# -- right-hand sides in Fourier space -----------------------------------------------------

def rhs_canonical_hat(o: SpectralOps, Eh, Bh):
    """Flow from the (A, Y) structure: ``A' = dH/dY = Y``, ``Y' = -dH/dA = -rot rot A``."""
    Ah = o.inverse_curl_hat(Bh)
    Yh = E_SIGN * Eh
    dH_dY = Yh
    dH_dA = o.curl_hat(o.curl_hat(Ah))
    dB = o.curl_hat(dH_dY)
    dE = -dH_dA / E_SIGN
    return dE, dB


def rhs_helicity_hat(o: SpectralOps, Eh, Bh):
    """Flow from the helicity structure: ``E' = dHbar/dB = rot B``, ``B' = -dHbar/dE = -rot E``."""
    dHbar_dB = o.curl_hat(Bh)
    dHbar_dE = o.curl_hat(Eh)
    return dHbar_dB, -dHbar_dE


def rhs(grid: GridSpec, state: FieldState, structure="canonical") -> FieldState:
    o = ops(grid)
    f = {"canonical": rhs_canonical_hat, "helicity": rhs_helicity_hat}[structure]
    dE, dB = f(o, o.fft(state.E), o.fft(state.B))
    return FieldState(E=o.ifft(dE), B=o.ifft(dB))


@dataclass
class MaxwellRun:
    times: np.ndarray
    energy: np.ndarray
    helicity: np.ndarray
    divE: np.ndarray
    divB: np.ndarray
    final: FieldState
    snapshots: dict
    warnings: list

    def to_csv(self, path) -> None:
        """Columns: ``t, energy, helicity, divE_max, divB_max``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "energy", "helicity", "divE_max", "divB_max"])
            for row in zip(self.times, self.energy, self.helicity, self.divE, self.divB):
                w.writerow([f"{v:.17g}" for v in row])


def mode_operator(o: SpectralOps, structure="canonical") -> np.ndarray:
    """Per-mode matrix ``L[m]`` (shape ``(M, 6, 6)``) of the linear map ``(E^, B^) -> (E^', B^')``.

    Assembled column by column by feeding unit vectors through the structure's
    right-hand side, so each route keeps its own functional-derivative chain.
    """
    f = {"canonical": rhs_canonical_hat, "helicity": rhs_helicity_hat}[structure]
    shape = o.k.shape[1:]
    L = np.empty((6, 6) + shape, dtype=complex)
    for j in range(6):
        u = np.zeros((6,) + shape, dtype=complex)
        u[j] = 1.0
        dE, dB = f(o, u[:3], u[3:])
        L[:3, j] = dE
        L[3:, j] = dB
    return np.moveaxis(L, (0, 1), (-2, -1)).reshape(-1, 6, 6)


def rk4_propagator(L: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step for ``u' = L u``: ``sum_{m<=4} (h L)^m / m!`` per mode.

    For a linear autonomous system this is the four-stage scheme itself, only
    with the stages multiplied out once instead of every step.
    """
    Z = h * L
    S = np.eye(L.shape[-1]) + Z
    P = Z
    for m in (2, 3, 4):
        P = P @ Z / m
        S = S + P
    return S


def evolve(grid: GridSpec, state: FieldState, T: float, h: float, structure="canonical",
           rho=None, snapshot_every: int | None = None) -> MaxwellRun:
    """RK4 integration of the vacuum Maxwell flow in Fourier space.

    Diagnostics are recorded every step; ``snapshots`` maps step index to field
    states when ``snapshot_every`` is set.
    """
    if structure not in ("canonical", "helicity"):
        raise ValueError(f"unknown structure {structure!r}")
    if rho is not None and np.any(np.asarray(rho)):
        raise ValueError("evolution is vacuum only (rho = 0)")
    if not h > 0 or T < h:
        raise ValueError(f"need h > 0 and T >= h, got h = {h}, T = {T}")
    o = ops(grid)
    n_steps = int(round(T / h))
    shape = o.k.shape[1:]
    S = rk4_propagator(mode_operator(o, structure), h)
    M = S.shape[0]

    # per-mode diagnostic rows applied to the advanced state: rot E, rot B, div E, div B
    ik = 1j * o.k.reshape(3, -1).T
    rot = np.zeros((M, 3, 3), dtype=complex)
    rot[:, 0, 1], rot[:, 0, 2] = -ik[:, 2], ik[:, 1]
    rot[:, 1, 0], rot[:, 1, 2] = ik[:, 2], -ik[:, 0]
    rot[:, 2, 0], rot[:, 2, 1] = -ik[:, 1], ik[:, 0]
    D = np.zeros((M, 8, 6), dtype=complex)
    D[:, 0:3, 0:3] = rot
    D[:, 3:6, 3:6] = rot
    D[:, 6, 0:3] = ik
    D[:, 7, 3:6] = ik
    step = np.concatenate([S, D @ S], axis=1)  # (M, 14, 6)

    # rfft half-spectrum: double every mode except kz = 0 and the last plane
    wz = np.full(shape[-1], 2.0)
    wz[0] = 1.0
    wz[-1] = 1.0
    sw = np.sqrt(np.broadcast_to(wz, shape).ravel() * grid.cell_volume / grid.N ** 3)[:, None]

    def diag(U, R):
        Uw = sw * U
        en = 0.5 * float(np.vdot(Uw, Uw).real)
        he = 0.5 * float(np.vdot(Uw, sw * R[:, :6]).real)
        div = o.ifft(R[:, 6:].T.reshape((2,) + shape))
        dE = float(np.abs(div[0]).max())
        dB = float(np.abs(div[1]).max())
        return en, he, dE, dB

    def fields(U):
        F = o.ifft(U.T.reshape((6,) + shape))
        return FieldState(E=F[:3], B=F[3:])

    # state as (modes, 6): columns E^x, E^y, E^z, B^x, B^y, B^z
    U = np.concatenate([o.fft(state.E), o.fft(state.B)]).reshape(6, -1).T.copy()
    rows = [diag(U, (D @ U[..., None])[..., 0])]
    snaps = {0: state} if snapshot_every else {}
    for k in range(1, n_steps + 1):
        V = (step @ U[..., None])[..., 0]
        U = V[:, :6]
        rows.append(diag(U, V[:, 6:]))
        if snapshot_every and k % snapshot_every == 0:
            snaps[k] = fields(U)
    rows = np.array(rows)
    warnings = []
    drift_E = float(np.abs(rows[:, 2] - rows[0, 2]).max())
    if rows[:, 3].max() > DIV_TOL or drift_E > DIV_TOL:
        warnings.append(f"divergence constraint drift beyond {DIV_TOL:g}: "
                        f"max divB = {rows[:, 3].max():.3e}, divE drift = {drift_E:.3e}")
        log.warning(warnings[-1])
    return MaxwellRun(times=h * np.arange(n_steps + 1), energy=rows[:, 0], helicity=rows[:, 1],
                      divE=rows[:, 2], divB=rows[:, 3], final=fields(U),
                      snapshots=snaps, warnings=warnings)


# -- fixtures --------------------------------------------------------------------------------

def plane_wave(grid: GridSpec, t: float = 0.0, amplitude: float = 1.0) -> FieldState:
    """``E = (0, cos(x - t), 0)``, ``B = (0, 0, cos(x - t))`` (wavenumber one on L = 2 pi)."""
    X, _, _ = grid.coordinates()
    k = 2 * np.pi / grid.L
    wave = amplitude * np.cos(k * X - k * t)
    zero = np.zeros_like(X)
    return FieldState(E=np.stack([zero, wave, zero]), B=np.stack([zero, zero, wave]))


def random_solenoidal(grid: GridSpec, rng, max_wavenumber: int = 3) -> np.ndarray:
    """Curl of a random trigonometric field (Fourier coefficients in [-1, 1], ``|k_i| <= max_wavenumber``),
    scaled to unit RMS. Mean-free, divergence-free and free of Nyquist content."""
    o = ops(grid)
    n, m = grid.N, max_wavenumber
    if 2 * m >= n:
        raise ValueError("max_wavenumber must be below N / 2")
    idx = np.r_[0:m + 1, n - m:n]
    sel = np.ix_(idx, idx, np.arange(m + 1))
    shape = (len(idx), len(idx), m + 1)
    wh = np.zeros((3, n, n, n // 2 + 1), dtype=complex)
    for comp in range(3):
        wh[comp][sel] = rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)
    f = o.curl(o.ifft(wh))
    return f / np.sqrt(np.mean(f ** 2))


def random_solenoidal_state(grid: GridSpec, seed: int) -> FieldState:
    rng = np.random.default_rng(seed)
    return FieldState(E=random_solenoidal(grid, rng), B=random_solenoidal(grid, rng))


def beltrami(grid: GridSpec, amplitude: float = 1.0) -> np.ndarray:
    """ABC-type field with ``rot B = B`` (wavenumber one)."""
    X, Yc, Z = grid.coordinates()
    k = 2 * np.pi / grid.L
    a = amplitude
    return np.stack([a * (np.sin(k * Z) + np.cos(k * Yc)),
                     a * (np.sin(k * X) + np.cos(k * Z)),
                     a * (np.sin(k * Yc) + np.cos(k * X))])


def gauge_action(grid: GridSpec, state: FieldState, psi, chi) -> FieldState:
    """``(B, E) -> (B + grad psi, E + grad chi)``."""
    o = ops(grid)
    return FieldState(E=state.E + o.grad(chi), B=state.B + o.grad(psi))


# -- snapshots -------------------------------------------------------------------------------

def write_snapshot(path, grid: GridSpec, state: FieldState, t: float = 0.0) -> Path:
    """Flat little-endian float64 array ``[E_x, E_y, E_z, B_x, B_y, B_z]`` (C order over x, y, z)
    plus a ``.json`` sidecar describing the layout."""
    path = Path(path)
    data = np.concatenate([state.E, state.B]).astype("<f8")
    path.write_bytes(data.tobytes(order="C"))
    meta = {
        "grid": {"N": grid.N, "L": grid.L},
        "components": ["Ex", "Ey", "Ez", "Bx", "By", "Bz"],
        "shape": [6, grid.N, grid.N, grid.N],
        "order": "C",
        "dtype": "float64",
        "endianness": "little",
        "t": t,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_snapshot(path) -> tuple[GridSpec, FieldState, float]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    if meta.get("dtype") != "float64" or meta.get("endianness") != "little":
        raise ValueError("unsupported snapshot encoding")
    grid = GridSpec(N=int(meta["grid"]["N"]), L=float(meta["grid"]["L"]))
    data = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(meta["shape"])
    return grid, FieldState(E=data[:3].copy(), B=data[3:].copy()), float(meta.get("t", 0.0))
