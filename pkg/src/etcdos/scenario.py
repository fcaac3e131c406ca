"""Scenario files: one JSON document binding plant, synthesis parameters,
initial state, horizon, uncertainty and DoS source.

Validation is strict — unknown keys are rejected and every error names
the offending field by dotted path — so a scenario either loads
completely or fails before any computation.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .dos import DosSignal
from .errors import SchemaError, SignalFormatError, ToolkitError
from .simulator import (
    DosRequest,
    PlantModel,
    ScenarioConfig,
    SimulationOptions,
    UncertaintySpec,
)
from .synthesis import SynthesisInputs

_TOP_KEYS = {"name", "description", "plant", "synthesis", "x0", "horizon_steps",
             "sample_period", "uncertainty", "dos", "options", "reference_gains",
             "output_dir"}
_PLANT_KEYS = {"A", "B"}
_SYNTH_KEYS = {"Q", "F", "R1", "R2", "alpha", "epsilon", "sigma", "eta1", "eta2"}
_OPTION_KEYS = {"enforce_zok1", "require_valid_certificate",
                "mu_formula", "gamma_formula"}
_REFERENCE_KEYS = {"K", "L"}


def _reject_unknown(obj: dict, allowed: set, path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"{path}.{sorted(unknown)[0]}", "unknown key")


def _get(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required key")
    return obj[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _string(value, path: str, choices=None) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {type(value).__name__}")
    if choices is not None and value not in choices:
        raise SchemaError(path, f"expected one of {sorted(choices)}, got {value!r}")
    return value


def _matrix(value, path: str) -> np.ndarray:
    if (not isinstance(value, list) or not value
            or not all(isinstance(row, list) for row in value)):
        raise SchemaError(path, "expected a non-empty list of rows")
    width = len(value[0])
    for i, row in enumerate(value):
        if len(row) != width:
            raise SchemaError(f"{path}[{i}]", f"row length {len(row)} != {width}")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise SchemaError(f"{path}[{i}][{j}]", "expected a number")
    return np.array(value, dtype=float)


def _vector(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise SchemaError(path, "expected a non-empty list of numbers")
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SchemaError(f"{path}[{i}]", "expected a number")
    return np.array(value, dtype=float)


@dataclass(frozen=True)
class ReferenceGains:
    K: np.ndarray
    L: np.ndarray | None


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario file plus its auxiliary data."""

    name: str
    config: ScenarioConfig
    synthesis: SynthesisInputs
    reference_gains: ReferenceGains | None
    source_path: str | None
    output_dir: str | None = None


def _parse_uncertainty(obj, path: str) -> UncertaintySpec:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    mode = _string(_get(obj, "mode", path), f"{path}.mode",
                   {"fixed", "per-step", "custom"})
    if mode == "fixed":
        _reject_unknown(obj, {"mode", "p", "p_min", "p_max"}, path)
        kwargs = {"p": _number(_get(obj, "p", path), f"{path}.p")}
        if "p_min" in obj or "p_max" in obj:
            kwargs["p_min"] = _number(_get(obj, "p_min", path), f"{path}.p_min")
            kwargs["p_max"] = _number(_get(obj, "p_max", path), f"{path}.p_max")
        return UncertaintySpec(mode="fixed", **kwargs)
    if mode == "per-step":
        _reject_unknown(obj, {"mode", "p_min", "p_max", "seed"}, path)
        return UncertaintySpec(
            mode="per-step",
            p_min=_number(_get(obj, "p_min", path), f"{path}.p_min"),
            p_max=_number(_get(obj, "p_max", path), f"{path}.p_max"),
            seed=_integer(obj.get("seed", 0), f"{path}.seed"),
        )
    _reject_unknown(obj, {"mode", "matrices"}, path)
    mats = _get(obj, "matrices", path)
    if not isinstance(mats, list):
        raise SchemaError(f"{path}.matrices", "expected a list of matrices")
    return UncertaintySpec(
        mode="custom",
        matrices=tuple(_matrix(m, f"{path}.matrices[{i}]") for i, m in enumerate(mats)),
    )


def _parse_dos(obj, path: str, base_dir: str):
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object or null")
    source = _string(_get(obj, "source", path), f"{path}.source",
                     {"budget", "file", "inline"})
    if source == "budget":
        _reject_unknown(obj, {"source", "seed", "style"}, path)
        return DosRequest(
            seed=_integer(obj.get("seed", 0), f"{path}.seed"),
            style=_string(obj.get("style", "uniform-random"), f"{path}.style",
                          {"uniform-random", "burst", "adversarial-greedy"}),
        )
    if source == "file":
        _reject_unknown(obj, {"source", "path"}, path)
        rel = _string(_get(obj, "path", path), f"{path}.path")
        full = rel if os.path.isabs(rel) else os.path.join(base_dir, rel)
        try:
            return DosSignal.load(full)
        except (OSError, json.JSONDecodeError, SignalFormatError) as exc:
            raise SchemaError(f"{path}.path", f"cannot load signal: {exc}") from None
    _reject_unknown(obj, {"source", "signal"}, path)
    sig = _get(obj, "signal", path)
    if not isinstance(sig, dict):
        raise SchemaError(f"{path}.signal", "expected an object")
    try:
        return DosSignal.from_json_dict(sig)
    except SignalFormatError as exc:
        raise SchemaError(f"{path}.signal", str(exc)) from None


def _parse_options(obj, path: str) -> SimulationOptions:
    if obj is None:
        return SimulationOptions()
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    _reject_unknown(obj, _OPTION_KEYS, path)
    kwargs = {}
    if "enforce_zok1" in obj:
        kwargs["enforce_zok1"] = _string(obj["enforce_zok1"],
                                         f"{path}.enforce_zok1", {"warn", "error"})
    if "require_valid_certificate" in obj:
        v = obj["require_valid_certificate"]
        if not isinstance(v, bool):
            raise SchemaError(f"{path}.require_valid_certificate", "expected a boolean")
        kwargs["require_valid_certificate"] = v
    if "mu_formula" in obj:
        kwargs["mu_formula"] = _string(obj["mu_formula"], f"{path}.mu_formula",
                                       {"derivation", "as_printed"})
    if "gamma_formula" in obj:
        kwargs["gamma_formula"] = _string(obj["gamma_formula"], f"{path}.gamma_formula",
                                          {"derivation", "as_printed"})
    return SimulationOptions(**kwargs)


def parse_scenario(doc: dict, base_dir: str = ".",
                   source_path: str | None = None) -> Scenario:
    if not isinstance(doc, dict):
        raise SchemaError("$", "scenario document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "$")

    plant_obj = _get(doc, "plant", "$")
    if not isinstance(plant_obj, dict):
        raise SchemaError("plant", "expected an object")
    _reject_unknown(plant_obj, _PLANT_KEYS, "plant")
    a = _matrix(_get(plant_obj, "A", "plant"), "plant.A")
    b = _matrix(_get(plant_obj, "B", "plant"), "plant.B")

    syn_obj = _get(doc, "synthesis", "$")
    if not isinstance(syn_obj, dict):
        raise SchemaError("synthesis", "expected an object")
    _reject_unknown(syn_obj, _SYNTH_KEYS, "synthesis")
    try:
        synthesis = SynthesisInputs(
            A=a, B=b,
            Q=_matrix(_get(syn_obj, "Q", "synthesis"), "synthesis.Q"),
            F=_matrix(_get(syn_obj, "F", "synthesis"), "synthesis.F"),
            R1=_matrix(_get(syn_obj, "R1", "synthesis"), "synthesis.R1"),
            R2=_matrix(_get(syn_obj, "R2", "synthesis"), "synthesis.R2"),
            alpha=_number(syn_obj.get("alpha", 1.0), "synthesis.alpha"),
            epsilon=_number(_get(syn_obj, "epsilon", "synthesis"), "synthesis.epsilon"),
            sigma=_number(_get(syn_obj, "sigma", "synthesis"), "synthesis.sigma"),
            eta1=_number(_get(syn_obj, "eta1", "synthesis"), "synthesis.eta1"),
            eta2=_number(_get(syn_obj, "eta2", "synthesis"), "synthesis.eta2"),
        )
    except ToolkitError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError("synthesis", str(exc)) from None

    try:
        plant = PlantModel(A=a, B=b, F=synthesis.F, epsilon=synthesis.epsilon)
        config = ScenarioConfig(
            plant=plant,
            x0=_vector(_get(doc, "x0", "$"), "x0"),
            horizon_steps=_integer(_get(doc, "horizon_steps", "$"), "horizon_steps"),
            sample_period=_number(_get(doc, "sample_period", "$"), "sample_period"),
            synthesis=synthesis,
            uncertainty=_parse_uncertainty(_get(doc, "uncertainty", "$"), "uncertainty"),
            dos=_parse_dos(doc.get("dos"), "dos", base_dir),
            options=_parse_options(doc.get("options"), "options"),
        )
    except ToolkitError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError("$", str(exc)) from None

    reference = None
    if "reference_gains" in doc:
        ref_obj = doc["reference_gains"]
        if not isinstance(ref_obj, dict):
            raise SchemaError("reference_gains", "expected an object")
        _reject_unknown(ref_obj, _REFERENCE_KEYS, "reference_gains")
        reference = ReferenceGains(
            K=_matrix(_get(ref_obj, "K", "reference_gains"), "reference_gains.K"),
            L=(_matrix(ref_obj["L"], "reference_gains.L") if "L" in ref_obj else None),
        )

    name = doc.get("name")
    if name is not None:
        name = _string(name, "name")
    if "description" in doc:
        _string(doc["description"], "description")
    output_dir = doc.get("output_dir")
    if output_dir is not None:
        output_dir = _string(output_dir, "output_dir")
    return Scenario(name=name or "scenario", config=config, synthesis=synthesis,
                    reference_gains=reference, source_path=source_path,
                    output_dir=output_dir)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; SchemaError names bad fields."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaError("$", f"cannot read scenario file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_scenario(doc, base_dir=os.path.dirname(os.path.abspath(path)),
                          source_path=str(path))
