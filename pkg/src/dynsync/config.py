"""Experiment configuration: JSON schema and translation into model objects."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any

import jsonschema
import numpy as np

from .dynamics import TimeGrid, TrajectoryConfig
from .exceptions import ConfigError
from .hilbert import Operator, StateVector
from .models import (
    HubbardParams,
    LindbladModel,
    SpinChainParams,
    build_hubbard,
    build_spin1_chain,
    detuned_omegas,
    local_observable,
    product_state,
    random_product_state,
)

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1}
_SITES = {"oneOf": [{"const": "all"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}]}

_DETUNING = {
    "type": "object",
    "additionalProperties": False,
    "required": ["delta"],
    "properties": {
        "delta": _NONNEG,
        "distribution": {"enum": ["linear", "uniform_random"]},
        "seed": _SEED,
    },
}

_COMMON_MODEL = {
    "n_sites": {"type": "integer", "minimum": 1},
    "omega": _NUM,
    "omegas": {"type": "array", "items": _NUM, "minItems": 1},
    "dephasing_rate": _NONNEG,
    "detuning": _DETUNING,
}

_SPIN1_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "n_sites"],
    "properties": {
        "kind": {"const": "spin1"},
        **_COMMON_MODEL,
        "hopping": _NUM,
        "anisotropy": _NUM,
    },
}

_HUBBARD_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "n_sites"],
    "properties": {
        "kind": {"const": "hubbard"},
        **_COMMON_MODEL,
        "tunneling": _NUM,
        "interaction": _NUM,
        "chem_potentials": {
            "oneOf": [
                {"type": "array", "items": _NUM},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["uniform"],
                    "properties": {
                        "uniform": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                        "seed": _SEED,
                    },
                },
            ]
        },
    },
}


def _analysis(type_name: str, required=(), **props) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["type", *required],
        "properties": {"type": {"const": type_name}, **props},
    }


_RANGE = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_DELTAS = {"type": "array", "items": _NONNEG, "minItems": 1}
_INITIAL = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["labels"],
            "properties": {"labels": {"type": "array", "items": {"type": "string"}}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["random_product"],
            "properties": {
                "random_product": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"seed": _SEED, "zero_mean_sx": {"type": "boolean"}},
                }
            },
        },
    ]
}

_GRID = {
    "type": "object",
    "additionalProperties": False,
    "required": ["t_end", "n_steps"],
    "properties": {"t_start": _NUM, "t_end": _NUM, "n_steps": {"type": "integer", "minimum": 1}},
}

_ANALYSES = [
    _analysis("spectrum"),
    _analysis("density_matrix", support_threshold=_POS),
    _analysis("pearson", ["observable", "width"], observable={"type": "string"}, width=_POS, t_min=_NUM),
    _analysis("correlators", ["observable"], observable={"type": "string"}, t_min=_NUM),
    _analysis(
        "fourier", ["series"], series={"type": "string"}, t_min=_NUM,
        expected={"type": "array", "items": _NUM},
    ),
    _analysis(
        "prevalence", ["observable"], observable={"type": "string"}, t_max=_NUM,
        bins={"type": "integer", "minimum": 1}, range=_RANGE, expected=_NUM,
    ),
    _analysis("witnesses"),
    _analysis(
        "symmetry", ["operator"],
        operator={"enum": ["spin1_ladder", "sm_B", "hubbard_raising"]},
        m={"type": "integer"},
    ),
    _analysis("shift_scan", ["deltas"], deltas=_DELTAS, fit_range=_RANGE),
    _analysis(
        "detuning_scan", ["deltas", "grid"], deltas=_DELTAS, grid=_GRID,
        distribution={"enum": ["linear", "uniform_random"]},
        instances={"type": "integer", "minimum": 1},
        fit_window=_RANGE, profile_time=_NUM, power_range=_RANGE,
        overrides={"type": "object"}, initial_state=_INITIAL,
    ),
]

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "dynsync experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "notes": {"type": "string"},
        "model": {"oneOf": [_SPIN1_MODEL, _HUBBARD_MODEL]},
        "initial_state": _INITIAL,
        "grid": _GRID,
        "method": {"enum": ["dense", "trajectories"]},
        "trajectories": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_traj": {"type": "integer", "minimum": 1},
                "jump_bisection_tol": _POS,
            },
        },
        "observables": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {"name": {"type": "string"}, "sites": _SITES},
            },
        },
        "analyses": {"type": "array", "items": {"oneOf": _ANALYSES}},
        "output_dir": {"type": "string"},
        "seed": _SEED,
        "threads": {"type": "integer", "minimum": 1},
    },
}


def validate_config(cfg: dict) -> None:
    """Raise ConfigError describing the first schema violation."""
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {err.message}")


# --------------------------------------------------------------------------------------
# translation
# --------------------------------------------------------------------------------------

def resolve_omegas(model_cfg: dict, seed: int) -> list[float]:
    """Natural frequencies from explicit values or a centre plus detuning spec."""
    n = model_cfg["n_sites"]
    if "omegas" in model_cfg:
        omegas = [float(w) for w in model_cfg["omegas"]]
        if len(omegas) != n:
            raise ConfigError(f"expected {n} omegas, got {len(omegas)}")
        return omegas
    center = float(model_cfg.get("omega", 1.0))
    det = model_cfg.get("detuning")
    if not det or det["delta"] == 0:
        return [center] * n
    if det.get("distribution", "linear") == "linear":
        return detuned_omegas(det["delta"], n, center)
    # omega_j = center * (1 + eps_j), eps_j uniform on [0, delta]
    rng = np.random.default_rng(det.get("seed", seed))
    return list(center * (1.0 + rng.uniform(0.0, det["delta"], n)))


def resolve_chem_potentials(model_cfg: dict, seed: int) -> list[float]:
    n = model_cfg["n_sites"]
    spec = model_cfg.get("chem_potentials", [0.0] * n)
    if isinstance(spec, dict):
        lo, hi = spec["uniform"]
        rng = np.random.default_rng(spec.get("seed", seed))
        return list(rng.uniform(lo, hi, n))
    if len(spec) != n:
        raise ConfigError(f"expected {n} chemical potentials, got {len(spec)}")
    return [float(x) for x in spec]


def build_model(model_cfg: dict, seed: int = 0) -> LindbladModel:
    n = model_cfg["n_sites"]
    omegas = resolve_omegas(model_cfg, seed)
    if model_cfg["kind"] == "spin1":
        params = SpinChainParams(
            n,
            tuple(omegas),
            hopping=model_cfg.get("hopping", 1.0),
            anisotropy=model_cfg.get("anisotropy", 0.5),
            dephasing_rate=model_cfg.get("dephasing_rate", 1.0),
        )
        return build_spin1_chain(params)
    params = HubbardParams(
        n,
        tuple(omegas),
        tuple(resolve_chem_potentials(model_cfg, seed)),
        tunneling=model_cfg.get("tunneling", 1.0),
        interaction=model_cfg.get("interaction", 1.0),
        dephasing_rate=model_cfg.get("dephasing_rate", 2.5),
    )
    return build_hubbard(params)


def build_initial_state(cfg: dict, seed: int = 0) -> StateVector:
    model_cfg = cfg["model"]
    kind, n = model_cfg["kind"], model_cfg["n_sites"]
    spec = cfg.get("initial_state", {"random_product": {}})
    if "labels" in spec:
        if len(spec["labels"]) != n:
            raise ConfigError(f"initial state needs {n} labels")
        return product_state(spec["labels"], kind)
    rp = spec["random_product"]
    return random_product_state(n, rp.get("seed", seed), kind, rp.get("zero_mean_sx", False))


def build_observables(cfg: dict) -> dict[str, Operator]:
    model_cfg = cfg["model"]
    kind, n = model_cfg["kind"], model_cfg["n_sites"]
    out = {}
    for spec in cfg.get("observables", []):
        sites = range(n) if spec.get("sites", "all") == "all" else spec["sites"]
        for j in sites:
            if j >= n:
                raise ConfigError(f"site {j} out of range for {n} sites")
            out[f"{spec['name']}_{j}"] = local_observable(kind, spec["name"], j, n)
    return out


def build_grid(grid_cfg: dict) -> TimeGrid:
    return TimeGrid(float(grid_cfg.get("t_start", 0.0)), float(grid_cfg["t_end"]), int(grid_cfg["n_steps"]))


def build_trajectory_config(cfg: dict, seed: int) -> TrajectoryConfig:
    tcfg = cfg.get("trajectories", {})
    return TrajectoryConfig(tcfg.get("n_traj", 1000), seed, tcfg.get("jump_bisection_tol", 1e-10))


@dataclass
class Experiment:
    """A validated configuration with the master seed and thread cap resolved."""

    config: dict
    seed: int
    threads: int

    @classmethod
    def from_dict(cls, cfg: dict, seed: int | None = None, threads: int | None = None) -> "Experiment":
        cfg = copy.deepcopy(cfg)
        if seed is not None:
            cfg["seed"] = seed
        if threads is not None:
            cfg["threads"] = threads
        validate_config(cfg)
        return cls(cfg, int(cfg.get("seed", 0)), int(cfg.get("threads", 1)))
