"""JSON readers and writers for model systems and model spaces.

Complex arrays are stored as nested lists whose innermost entries are
``[re, im]`` pairs. Every document carries ``"schema_version": 1``.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from qedcc.errors import ModelFormatError, QedccError
from qedcc.model import IntegralSet, ModelSystem, PhysicalConstants, SpinorLevel

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "constants", "levels", "integrals", "n_electrons"}
_LEVEL_KEYS = {"index", "energy", "sector", "occupied_in_reference", "f", "spin", "lamb_shift"}
_INTEGRAL_KEYS = {"h_ext", "h_hf", "v_coulomb", "v_breit", "lamb_terms"}
_CONSTANT_KEYS = {"alpha", "c", "m", "z_scale"}
_SPACE_KEYS = {"schema_version", "references", "target_root"}


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ModelFormatError(f"{path}: unsupported schema_version {version!r}")
    return data


def _check_keys(data, allowed, where):
    if not isinstance(data, dict):
        raise ModelFormatError(f"{where} must be an object")
    extra = set(data) - allowed
    if extra:
        raise ModelFormatError(f"{where}: unknown keys {sorted(extra)}")


def complex_array(raw, ndim, name):
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ModelFormatError(f"{name} is not a numeric [re, im] array") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise ModelFormatError(f"{name} must be a {ndim}-d array of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def complex_to_nested(arr):
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def model_from_dict(data: dict) -> ModelSystem:
    _check_keys(data, _TOP_KEYS, "model")
    for key in ("levels", "integrals", "n_electrons"):
        if key not in data:
            raise ModelFormatError(f"model: missing key {key!r}")
    consts = data.get("constants", {})
    _check_keys(consts, _CONSTANT_KEYS, "constants")
    try:
        constants = PhysicalConstants(**{k: float(v) for k, v in consts.items()})
        levels = []
        for i, rec in enumerate(data["levels"]):
            _check_keys(rec, _LEVEL_KEYS, f"levels[{i}]")
            levels.append(SpinorLevel(
                index=int(rec["index"]),
                energy=float(rec["energy"]),
                sector=rec.get("sector", "positive"),
                occupied_in_reference=bool(rec.get("occupied_in_reference", False)),
                f=None if rec.get("f") is None else float(rec["f"]),
                spin=None if rec.get("spin") is None else float(rec["spin"]),
                lamb_shift=float(rec.get("lamb_shift", 0.0)),
            ))
    except KeyError as exc:
        raise ModelFormatError(f"level record missing key {exc}") from None
    except (TypeError, ValueError, QedccError) as exc:
        raise ModelFormatError(f"bad level or constant value: {exc}") from None

    ints = data["integrals"]
    _check_keys(ints, _INTEGRAL_KEYS, "integrals")
    for key in ("h_ext", "v_coulomb"):
        if key not in ints:
            raise ModelFormatError(f"integrals: missing key {key!r}")
    lamb = ints.get("lamb_terms")
    if lamb is not None:
        try:
            lamb = tuple((float(w), float(de)) for w, de in lamb)
        except (TypeError, ValueError):
            raise ModelFormatError("lamb_terms must be [weight, dE] pairs") from None
    integrals = IntegralSet(
        h_ext=complex_array(ints["h_ext"], 2, "h_ext"),
        v_coulomb=complex_array(ints["v_coulomb"], 4, "v_coulomb"),
        h_hf=None if ints.get("h_hf") is None else complex_array(ints["h_hf"], 2, "h_hf"),
        v_breit=None if ints.get("v_breit") is None else complex_array(ints["v_breit"], 4, "v_breit"),
        lamb_terms=lamb,
    )
    try:
        n_el = float(data["n_electrons"])
    except (TypeError, ValueError):
        raise ModelFormatError("n_electrons must be a number") from None
    try:
        return ModelSystem(constants, levels, integrals, n_el)
    except QedccError as exc:
        raise ModelFormatError(str(exc)) from None


def model_to_dict(system: ModelSystem) -> dict:
    levels = []
    for lv in system.levels:
        rec = {"index": lv.index, "energy": lv.energy, "sector": lv.sector,
               "occupied_in_reference": lv.occupied_in_reference, "f": lv.f}
        if lv.spin is not None:
            rec["spin"] = lv.spin
        if lv.lamb_shift:
            rec["lamb_shift"] = lv.lamb_shift
        levels.append(rec)
    ints = system.integrals
    out_ints = {"h_ext": complex_to_nested(ints.h_ext), "v_coulomb": complex_to_nested(ints.v_coulomb)}
    if ints.h_hf is not None:
        out_ints["h_hf"] = complex_to_nested(ints.h_hf)
    if ints.v_breit is not None:
        out_ints["v_breit"] = complex_to_nested(ints.v_breit)
    if ints.lamb_terms is not None:
        out_ints["lamb_terms"] = [list(t) for t in ints.lamb_terms]
    return {
        "schema_version": SCHEMA_VERSION,
        "constants": asdict(system.constants),
        "levels": levels,
        "integrals": out_ints,
        "n_electrons": system.n_electrons,
    }


def load_model(path) -> ModelSystem:
    return model_from_dict(read_json(path))


def save_model(system: ModelSystem, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(system), fh)
        fh.write("\n")


def load_model_space(path):
    """``{"references": ["0111", ...], "target_root": 0}`` as a ``ModelSpace``."""
    from qedcc.mrcc import ModelSpace

    data = read_json(path)
    _check_keys(data, _SPACE_KEYS, "model space")
    refs = data.get("references")
    if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
        raise ModelFormatError("model space: references must be a list of '0'/'1' strings")
    root = data.get("target_root", 0)
    if not isinstance(root, int):
        raise ModelFormatError("model space: target_root must be an integer")
    try:
        return ModelSpace.from_strings(refs, root)
    except QedccError as exc:
        raise ModelFormatError(str(exc)) from None
