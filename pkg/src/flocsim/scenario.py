"""Scenario files: versioned JSON describing a model, initial state, and
requested analyses. Validation is strict: unknown fields are rejected so a
typo cannot silently change a run.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ConfigError
from .models import (
    Constant,
    Freter,
    FullModel,
    GrowthLaw,
    MassAction,
    Monod,
    MultiSpeciesModel,
    SubstrateDependent,
    TotalDensity,
    Zero,
)

SCHEMA_VERSION = 1

ANALYSES = ("equilibria", "nullclines", "hypotheses", "tikhonov",
            "separatrix", "multispecies")


def _require_keys(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"{where}: missing fields {missing}")


def _number(obj, where, key, default=None):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _growth_from_json(obj, where) -> GrowthLaw:
    _require_keys(obj, where, ("type",), ("mu_max", "K"))
    kind = obj["type"]
    if kind == "zero":
        if len(obj) > 1:
            raise ConfigError(f"{where}: zero growth takes no parameters")
        return Zero()
    if kind == "monod":
        _require_keys(obj, where, ("type", "mu_max", "K"))
        return Monod(_number(obj, where, "mu_max"), _number(obj, where, "K"))
    raise ConfigError(f"{where}.type: unknown growth law {kind!r}")


def _kinetics_from_json(obj, where):
    _require_keys(obj, where, ("type",), ("a", "b", "v_max", "alpha", "beta"))
    kind = obj["type"]
    if kind == "constant":
        _require_keys(obj, where, ("type", "a", "b"))
        return Constant(_number(obj, where, "a"), _number(obj, where, "b"))
    if kind == "mass_action":
        _require_keys(obj, where, ("type", "a", "b"))
        return MassAction(_number(obj, where, "a"), _number(obj, where, "b"))
    if kind == "total_density":
        _require_keys(obj, where, ("type", "a", "b"))
        return TotalDensity(_number(obj, where, "a"), _number(obj, where, "b"))
    if kind == "substrate_dependent":
        _require_keys(obj, where, ("type", "alpha", "beta"))
        return SubstrateDependent(
            _growth_from_json(obj["alpha"], f"{where}.alpha"),
            _growth_from_json(obj["beta"], f"{where}.beta"),
        )
    if kind == "freter":
        _require_keys(obj, where, ("type", "a", "b", "v_max"))
        return Freter(_number(obj, where, "a"), _number(obj, where, "b"),
                      _number(obj, where, "v_max"))
    raise ConfigError(f"{where}.type: unknown kinetics {kind!r}")


def _model_from_json(obj):
    _require_keys(obj, "model", ("type",),
                  ("D", "S_in", "D0", "D1", "f", "g", "kinetics", "epsilon",
                   "species", "A", "B"))
    kind = obj["type"]
    if kind == "single":
        _require_keys(obj, "model", ("type", "D", "S_in", "D0", "D1", "f", "g",
                                     "kinetics"), ("epsilon",))
        return FullModel(
            D=_number(obj, "model", "D"),
            S_in=_number(obj, "model", "S_in"),
            D0=_number(obj, "model", "D0"),
            D1=_number(obj, "model", "D1"),
            f=_growth_from_json(obj["f"], "model.f"),
            g=_growth_from_json(obj["g"], "model.g"),
            kinetics=_kinetics_from_json(obj["kinetics"], "model.kinetics"),
            epsilon=_number(obj, "model", "epsilon", 1.0),
        )
    if kind == "multi":
        _require_keys(obj, "model", ("type", "D", "S_in", "species", "A", "B"),
                      ("epsilon",))
        species = obj["species"]
        if not isinstance(species, list) or not species:
            raise ConfigError("model.species: expected a non-empty list")
        f, g, D0, D1 = [], [], [], []
        for i, sp in enumerate(species):
            where = f"model.species[{i}]"
            _require_keys(sp, where, ("f", "g", "D0", "D1"))
            f.append(_growth_from_json(sp["f"], f"{where}.f"))
            g.append(_growth_from_json(sp["g"], f"{where}.g"))
            D0.append(_number(sp, where, "D0"))
            D1.append(_number(sp, where, "D1"))
        return MultiSpeciesModel(
            D=_number(obj, "model", "D"),
            S_in=_number(obj, "model", "S_in"),
            f=tuple(f), g=tuple(g), D0=tuple(D0), D1=tuple(D1),
            A=np.array(obj["A"], dtype=float),
            B=np.array(obj["B"], dtype=float),
            epsilon=_number(obj, "model", "epsilon", 1.0),
        )
    raise ConfigError(f"model.type: expected 'single' or 'multi', got {kind!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    model: Union[FullModel, MultiSpeciesModel]
    initial: np.ndarray          # (S, u, v) or (S, u_1..u_n, v_1..v_n)
    horizon: float
    t0: float
    epsilons: tuple
    analyses: tuple
    output_dir: Optional[str]

    @property
    def is_multi(self) -> bool:
        return isinstance(self.model, MultiSpeciesModel)

    @classmethod
    def from_dict(cls, obj) -> "Scenario":
        _require_keys(obj, "scenario", ("schema", "model", "initial", "horizon"),
                      ("name", "t0", "epsilons", "analyses", "output_dir"))
        if obj["schema"] != SCHEMA_VERSION:
            raise ConfigError(
                f"scenario.schema: expected {SCHEMA_VERSION}, got {obj['schema']!r}"
            )
        model = _model_from_json(obj["model"])
        init = obj["initial"]
        if isinstance(model, MultiSpeciesModel):
            _require_keys(init, "initial", ("S", "u", "v"))
            u = np.array(init["u"], dtype=float)
            v = np.array(init["v"], dtype=float)
            if u.shape != (model.n,) or v.shape != (model.n,):
                raise ConfigError(f"initial.u and .v must have length {model.n}")
            initial = np.concatenate(([_number(init, "initial", "S")], u, v))
        else:
            _require_keys(init, "initial", ("S", "u", "v"))
            initial = np.array([_number(init, "initial", "S"),
                                _number(init, "initial", "u"),
                                _number(init, "initial", "v")])
        if np.any(initial < 0.0):
            raise ConfigError("initial state components must be nonnegative")
        horizon = _number(obj, "scenario", "horizon")
        if horizon <= 0.0:
            raise ConfigError(f"horizon must be positive, got {horizon}")
        t0 = _number(obj, "scenario", "t0", horizon / 20.0)
        if not (0.0 < t0 < horizon):
            raise ConfigError(f"t0 must lie in (0, horizon), got {t0}")
        epsilons = obj.get("epsilons", [1e-1, 1e-2, 1e-3])
        if (not isinstance(epsilons, list) or not epsilons
                or any(isinstance(e, bool) or not isinstance(e, (int, float))
                       for e in epsilons)):
            raise ConfigError("epsilons must be a non-empty list of numbers")
        analyses = obj.get("analyses", [])
        if not isinstance(analyses, list):
            raise ConfigError("analyses must be a list")
        for a in analyses:
            if a not in ANALYSES:
                raise ConfigError(f"unknown analysis {a!r}; valid: {ANALYSES}")
        out_dir = obj.get("output_dir")
        if out_dir is not None and not isinstance(out_dir, str):
            raise ConfigError("output_dir must be a string")
        return cls(
            name=obj.get("name", "scenario"),
            model=model,
            initial=initial,
            horizon=horizon,
            t0=t0,
            epsilons=tuple(float(e) for e in epsilons),
            analyses=tuple(analyses),
            output_dir=out_dir,
        )

    @classmethod
    def from_file(cls, path) -> "Scenario":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(obj)


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (by file stem)."""
    path = Path(__file__).parent / "scenarios" / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return path
