"""Run configuration: one TOML file fully determines a scenario.

Example::

    seed = 7

    [algebra]
    preset = "so3"

    [potential]
    preset = "random-trig"
    count = 20

    [sampling]
    points = 50

    [tolerances]
    jacobi = 1e-5
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import tomli

MODES = (
    "verify-jacobi",
    "verify-bianchi",
    "verify-minimal-coupling",
    "verify-reduction",
    "simulate-particle",
    "simulate-maxwell",
)
ALGEBRAS = ("abelian", "so3", "heisenberg")
POTENTIALS = ("zero", "uniform-b", "linear", "so3-constant", "random-trig")
BRACKETS = ("canonical", "magnetic", "extended_ym", "canonicalized_ym")
HAMILTONIANS = ("free", "coupled")
INITIAL_FIELDS = ("plane-wave", "random-solenoidal", "beltrami")

SECTIONS = ("algebra", "potential", "sampling", "perturbation", "reduction", "particle",
            "maxwell", "tolerances", "output")

DEFAULT_TOLERANCES = {
    "jacobi": None,  # 1e-6 abelian, 1e-5 otherwise
    "bianchi": 1e-6,
    "jacobi_bianchi_agreement": 1e-6,
    "minimal_coupling": 1e-6,
    "invariance": 1e-12,
    "closedness": 1e-6,
    "bivector": 1e-12,
    "closedness_bianchi_agreement": 1e-10,
    "energy_drift": 1e-8,
    "casimir_drift": 1e-12,
    "larmor_radius": 1e-6,
    "larmor_period": 1e-6,
    "maxwell_energy_drift": 1e-10,
    "maxwell_helicity_drift": 1e-9,
    "divB": 1e-12,
    "plane_wave_error": 1e-6,
}

DEFAULTS = {
    "algebra": {"preset": "abelian", "dim": 1},
    "potential": {"preset": "random-trig", "count": 20, "n_terms": 3, "max_wavenumber": 3,
                  "b": 1.0, "a": 1.0, "matrix": None},
    "sampling": {"points": 50, "box": [-1.0, 1.0]},
    "perturbation": {"delta": 0.0, "component": [1, 1, 2], "coordinate": 3},
    "reduction": {"xi": None},
    "particle": {"bracket": "magnetic", "hamiltonian": "free", "method": "rk4",
                 "q0": [0.0, 0.0, 0.0], "p0": [1.0, 0.0, 0.0], "u0": None, "y0": None,
                 "T": 6.283185307179586, "h": 1e-3},
    "maxwell": {"N": 32, "L": 6.283185307179586, "T": 1.0, "h": 1e-3, "structure": "canonical",
                "initial": "plane-wave", "snapshot_every": 0},
    "output": {"dir": "out"},
}


class ConfigError(ValueError):
    """Usage or configuration problem (exit status 2). ``key`` names the offending entry."""

    def __init__(self, message, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


@dataclass
class RunConfig:
    mode: str
    seed: int | None
    sections: dict = field(default_factory=dict)
    source: str | None = None

    def section(self, name: str) -> dict:
        return self.sections[name]

    @property
    def tolerances(self) -> dict:
        return self.sections["tolerances"]

    @property
    def out_dir(self) -> Path:
        return Path(self.sections["output"]["dir"])

    def as_dict(self) -> dict:
        """Every input that affects results; the output location is left out so
        reports do not depend on where they were written."""
        sections = {k: v for k, v in self.sections.items() if k != "output"}
        return {"mode": self.mode, "seed": self.seed, **sections}


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file ({exc.strerror})", key=str(path)) from exc
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML ({exc})", key=str(path)) from exc


def _choice(value, allowed, key):
    if value not in allowed:
        raise ConfigError(f"unknown preset {value!r}; expected one of {list(allowed)}", key=key)
    return value


def _number(sec, name, key, positive=False, integer=False):
    v = sec[name]
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok:
        raise ConfigError(f"expected a {'integer' if integer else 'number'}, got {v!r}", key=key)
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {v!r}", key=key)


def build(data: dict, mode: str | None = None, seed: int | None = None, out: str | None = None,
          source: str | None = None) -> RunConfig:
    """Merge a parsed config table over the defaults and validate it for ``mode``.

    ``mode`` (from the subcommand) must agree with a ``mode`` key in the file when
    both are given. ``seed`` and ``out`` override the file.
    """
    if not data and mode is None:
        raise ConfigError("configuration is empty")
    data = copy.deepcopy(data)
    file_mode = data.pop("mode", None)
    if file_mode is not None and file_mode not in MODES:
        raise ConfigError(f"unknown mode {file_mode!r}; expected one of {list(MODES)}", key="mode")
    if mode is not None and file_mode is not None and mode != file_mode:
        raise ConfigError(f"config is for {file_mode!r} but the command asks for {mode!r}", key="mode")
    mode = mode or file_mode
    if mode is None:
        raise ConfigError("no mode given in the config or on the command line", key="mode")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}", key="mode")
    file_seed = data.pop("seed", None)
    for key in data:
        if key not in SECTIONS:
            raise ConfigError("unknown section", key=key)
        if not isinstance(data[key], dict):
            raise ConfigError("expected a table", key=key)

    sections = copy.deepcopy(DEFAULTS)
    sections["tolerances"] = dict(DEFAULT_TOLERANCES)
    for name, table in data.items():
        for k, v in table.items():
            if k not in sections[name]:
                raise ConfigError("unknown key", key=f"{name}.{k}")
            sections[name][k] = v
    if out is not None:
        sections["output"]["dir"] = str(out)

    seed = seed if seed is not None else file_seed
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}", key="seed")

    alg, pot = sections["algebra"], sections["potential"]
    _choice(alg["preset"], ALGEBRAS, "algebra.preset")
    _number(alg, "dim", "algebra.dim", positive=True, integer=True)
    _choice(pot["preset"], POTENTIALS, "potential.preset")
    for name in ("count", "n_terms", "max_wavenumber"):
        _number(pot, name, f"potential.{name}", positive=True, integer=True)
    _number(sections["sampling"], "points", "sampling.points", positive=True, integer=True)
    _number(sections["perturbation"], "delta", "perturbation.delta")
    for name, v in sections["tolerances"].items():
        if v is not None:
            _number(sections["tolerances"], name, f"tolerances.{name}", positive=True)

    randomized = (mode.startswith("verify-")
                  or (mode == "simulate-particle" and pot["preset"] == "random-trig")
                  or (mode == "simulate-maxwell" and sections["maxwell"]["initial"] == "random-solenoidal"))
    if randomized and seed is None:
        raise ConfigError("a seed is required for randomized scenarios (config or --seed)", key="seed")

    if mode == "simulate-particle":
        part = sections["particle"]
        _choice(part["bracket"], BRACKETS, "particle.bracket")
        _choice(part["hamiltonian"], HAMILTONIANS, "particle.hamiltonian")
        _choice(part["method"], ("rk4", "boris"), "particle.method")
        for name in ("T", "h"):
            _number(part, name, f"particle.{name}", positive=True)
    if mode == "simulate-maxwell":
        mx = sections["maxwell"]
        _choice(mx["structure"], ("canonical", "helicity"), "maxwell.structure")
        _choice(mx["initial"], INITIAL_FIELDS, "maxwell.initial")
        _number(mx, "N", "maxwell.N", positive=True, integer=True)
        for name in ("L", "T", "h"):
            _number(mx, name, f"maxwell.{name}", positive=True)
    if mode == "verify-reduction" and sections["reduction"]["xi"] is None:
        raise ConfigError("verify-reduction needs a dual element", key="reduction.xi")
    return RunConfig(mode=mode, seed=seed, sections=sections, source=source)
