"""Run configuration: JSON loading, schema validation and construction of the
bracket, plant and constants records."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import bracket as bk
from .errors import ConfigError
from .synth import PlantConfig

SCHEMA_NAME = "run_config.schema.json"

DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "synthesis": {"beta_init": 0.5, "young": "half", "max_halvings": 40, "simplified": False},
    "check": {"cmc_samples": 512, "cmc_tol": 1e-9, "gosl_pairs": 10_000,
              "norm_transfer_cases": 100, "norm_transfer_max_n": 3},
    "simulation": {"dt": 1e-3, "t_end": 10.0, "boundary_layer": 1e-4, "control_on": True,
                   "convergence_horizon": 0.2, "convergence_dt": 1e-2},
    "reference": {},
}


def schema():
    text = resources.files("quatsmc").joinpath("schema", SCHEMA_NAME).read_text()
    return json.loads(text)


def bundled(name):
    """Path of a config shipped with the package, e.g. ``bundled("test_system")``."""
    return Path(str(resources.files("quatsmc").joinpath("configs", f"{name}.json")))


def validate(raw):
    """Raise ConfigError naming the offending path on schema violations."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {e.message}")


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    name: str
    seed: int
    workers: int
    spec: bk.BracketSpec
    plant: PlantConfig
    constants_mode: str
    samples: int
    eps_star_choice: str
    synthesis: dict = field(default_factory=dict)
    check: dict = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    @property
    def fingerprint(self):
        """SHA-256 of the canonical JSON form of the raw config."""
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def declared_constants(self):
        c = self.raw["constants"]
        try:
            A, C1, C2 = float(c["A"]), float(c.get("C1", 0.0)), float(c["C2"])
        except KeyError as exc:
            raise ConfigError(f"config error at constants: declared mode needs {exc.args[0]!r}") from exc
        return bk.constants_from_values(A, C1, C2, self.spec.epsilon0, self.spec.antisymmetric)

    def bracket_constants(self):
        if self.constants_mode == "declared":
            return self.declared_constants()
        return bk.bracket_constants(self.spec, self.samples, self.seed, self.workers)

    def eps_star(self, constants):
        if self.eps_star_choice == "antisymmetric":
            return constants.eps_star_antisym
        return constants.eps_star_generic


def _bracket(b):
    kind, n = b["kind"], b["n"]
    eps_b = b.get("eps_b", 0.1)
    eps0 = b.get("epsilon0", 0.5)
    if kind == "test":
        return bk.test_bracket(eps_b, eps0, n)
    if kind == "coordinate":
        return bk.coordinate_bracket(n, b.get("index", 0), eps_b, eps0)
    if kind == "commutator":
        return bk.commutator_bracket(n, b.get("scale", 1.0), eps0)
    return bk.zero_bracket(n, eps0)


def _arr(v):
    return None if v is None else np.asarray(v, dtype=float)


def _merge(raw, key):
    out = dict(DEFAULTS[key])
    out.update(raw.get(key, {}))
    return out


def from_dict(raw, seed=None, samples=None, workers=None):
    validate(raw)
    spec = _bracket(raw["bracket"])
    p = raw["plant"]
    try:
        plant = PlantConfig(
            bracket=spec, B=_arr(p["B"]), C=_arr(p["C"]), K=_arr(p["K"]), x0=_arr(p["x0"]),
            s0=_arr(p["s0"]), eta0=float(p["eta0"]), margin=float(p["margin"]), D=_arr(p.get("D")),
            drift=_arr(p.get("drift")), A_s=_arr(p.get("A_s")), alpha_s=p.get("alpha_s"),
            L_r=float(p.get("L_r", 0.0)), w_max=float(p.get("w_max", 0.0)), L_L=p.get("L_L"))
    except ValueError as exc:
        raise ConfigError(f"config error at plant: {exc}") from exc
    c = raw["constants"]
    return RunConfig(
        raw=raw,
        name=raw["name"],
        seed=int(raw.get("seed", 0) if seed is None else seed),
        workers=int(raw.get("workers", 1) if workers is None else workers),
        spec=spec,
        plant=plant,
        constants_mode=c["mode"],
        samples=int(c.get("samples", 50_000) if samples is None else samples),
        eps_star_choice=c.get("eps_star", "generic"),
        synthesis=_merge(raw, "synthesis"),
        check=_merge(raw, "check"),
        simulation=_merge(raw, "simulation"),
        reference=_merge(raw, "reference"),
    )


def load(path, seed=None, samples=None, workers=None):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config error: {path} is not valid JSON ({exc})") from exc
    return from_dict(raw, seed, samples, workers)
