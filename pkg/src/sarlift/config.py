"""Experiment configuration: JSON schema, defaults, and object builders.

A single JSON document drives an experiment.  All physical quantities
carry their unit in the field name (Hz, m, rad); frequencies are given
in Hz and converted to angular frequency internally, once.  The resolved
configuration (after CLI overrides) is hashed with sha-256 and the hash
is embedded in every output file for provenance.
"""

import copy
import hashlib
import json
import math
import os

import jsonschema

from .errors import InvalidConfigError
from . import scene as scene_mod
from . import forward as forward_mod
from .solver import SolverConfig

SCHEMA_VERSION = 1

MEM_BUDGET_ENV = "SAR_LRMR_MEM_BUDGET_BYTES"

_TRAJECTORY_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "circular-arc"},
                "radius_m": {"type": "number", "exclusiveMinimum": 0},
                "altitude_m": {"type": "number"},
                "aperture_start_rad": {"type": "number"},
                "aperture_end_rad": {"type": "number"},
                "offset_rad": {"type": "number"},
            },
            "required": ["kind", "radius_m", "altitude_m"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "linear"},
                "start_m": {"type": "array", "items": {"type": "number"},
                            "minItems": 3, "maxItems": 3},
                "end_m": {"type": "array", "items": {"type": "number"},
                          "minItems": 3, "maxItems": 3},
            },
            "required": ["kind", "start_m", "end_m"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "waypoint-table"},
                "parameters": {"type": "array", "items": {"type": "number"},
                               "minItems": 2},
                "positions_m": {"type": "array",
                                "items": {"type": "array",
                                          "items": {"type": "number"},
                                          "minItems": 3, "maxItems": 3},
                                "minItems": 2},
            },
            "required": ["kind", "parameters", "positions_m"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "mode": {"enum": ["cross", "auto"]},
        "scene": {
            "type": "object",
            "properties": {
                "pixels_per_side": {"type": "integer", "minimum": 1},
                "pixel_spacing_m": {"type": "number", "exclusiveMinimum": 0},
                "origin_offset_m": {"type": "array", "items": {"type": "number"},
                                    "minItems": 2, "maxItems": 2},
                "phantom": {
                    "oneOf": [
                        {
                            "type": "object",
                            "properties": {
                                "kind": {"const": "three-level"},
                                "levels": {"type": "array",
                                           "items": {"type": "number"},
                                           "minItems": 3, "maxItems": 3},
                            },
                            "required": ["kind"],
                            "additionalProperties": False,
                        },
                        {
                            "type": "object",
                            "properties": {
                                "kind": {"const": "csv"},
                                "path": {"type": "string"},
                            },
                            "required": ["kind", "path"],
                            "additionalProperties": False,
                        },
                    ]
                },
            },
            "required": ["pixels_per_side", "pixel_spacing_m"],
            "additionalProperties": False,
        },
        "geometry": {
            "type": "object",
            "properties": {
                "receiver1": _TRAJECTORY_SCHEMA,
                "receiver2": _TRAJECTORY_SCHEMA,
                "transmitter_location_m": {"type": "array",
                                           "items": {"type": "number"},
                                           "minItems": 3, "maxItems": 3},
            },
            "required": ["receiver1", "receiver2", "transmitter_location_m"],
            "additionalProperties": False,
        },
        "waveform": {
            "type": "object",
            "properties": {
                "center_frequency_hz": {"type": "number", "exclusiveMinimum": 0},
                "bandwidth_hz": {"type": "number", "exclusiveMinimum": 0},
                "spectrum": {"enum": ["flat"]},
            },
            "required": ["center_frequency_hz", "bandwidth_hz"],
            "additionalProperties": False,
        },
        "sampling": {
            "type": "object",
            "properties": {
                "num_frequencies": {"type": "integer", "minimum": 1},
                "num_slow_times": {"type": "integer", "minimum": 1},
            },
            "required": ["num_frequencies", "num_slow_times"],
            "additionalProperties": False,
        },
        "model": {
            "type": "object",
            "properties": {
                "amplitude_mode": {"enum": ["unit", "geometric"]},
                "transmitter_model": {"enum": ["exact", "far_field"]},
                "normalize_operator": {"type": "boolean"},
                "noise_std": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "lambda": {"type": "number", "exclusiveMinimum": 0},
                "step_rule": {"enum": ["auto", "scaled", "fixed"]},
                "step_size": {"type": "number", "exclusiveMinimum": 0},
                "step_safety": {"type": "number", "exclusiveMinimum": 0},
                "max_iterations": {"type": "integer", "minimum": 1},
                "data_tolerance": {"type": "number", "minimum": 0},
                "rank_threshold": {"type": "number", "exclusiveMinimum": 0},
                "log_stride": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "analysis": {
            "type": "object",
            "properties": {
                "resolution_margin": {"type": "number", "exclusiveMinimum": 0},
                "ric_rank": {"type": "integer", "minimum": 1},
                "ric_samples": {"type": "integer", "minimum": 2},
                "ric_num_frequencies": {"type": "integer", "minimum": 1},
                "ric_num_slow_times": {"type": "integer", "minimum": 1},
                "kernel_quads": {"type": "integer", "minimum": 1},
                "kernel_num_frequencies": {"type": "integer", "minimum": 2},
                "kernel_num_slow_times": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "directory": {"type": "string"},
                "write_pgm": {"type": "boolean"},
                "write_binary": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["schema_version", "scene", "geometry", "waveform",
                 "sampling"],
    "additionalProperties": False,
}


def default_config():
    """Reference experiment: 11x11 scene, semi-circular aperture."""
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": 7,
        "mode": "cross",
        "scene": {
            "pixels_per_side": 11,
            "pixel_spacing_m": 10.0,
            "origin_offset_m": [0.0, 0.0],
            "phantom": {"kind": "three-level", "levels": [1.0, 0.8, 0.4]},
        },
        "geometry": {
            "receiver1": {
                "kind": "circular-arc",
                "radius_m": 7000.0,
                "altitude_m": 5000.0,
                "aperture_start_rad": 0.0,
                "aperture_end_rad": math.pi / 2,
                "offset_rad": 0.0,
            },
            "receiver2": {
                "kind": "circular-arc",
                "radius_m": 7000.0,
                "altitude_m": 5000.0,
                "aperture_start_rad": 0.0,
                "aperture_end_rad": math.pi / 2,
                "offset_rad": math.pi / 4,
            },
            "transmitter_location_m": [12000.0, 12000.0, 5000.0],
        },
        "waveform": {
            "center_frequency_hz": 2.0e9,
            "bandwidth_hz": 8.0e6,
            "spectrum": "flat",
        },
        # Slow-time-dense sampling: the recovery theory holds in the
        # many-samples limit, and the trace-minimization solution is only
        # certified to coincide with the true scene once the slow-time
        # axis is well resolved (see README).
        "sampling": {"num_frequencies": 8, "num_slow_times": 512},
        "model": {
            "amplitude_mode": "unit",
            "transmitter_model": "far_field",
            "normalize_operator": False,
            "noise_std": 0.0,
        },
        "solver": {
            "lambda": 20.0,
            "step_rule": "scaled",
            "step_size": 4.0,
            "max_iterations": 5000,
            "data_tolerance": 1.0e-5,
            "rank_threshold": 1.0e-3,
            "log_stride": 10,
        },
        "analysis": {
            "resolution_margin": 5.0,
            "ric_rank": 1,
            "ric_samples": 200,
            "ric_num_frequencies": 8,
            "ric_num_slow_times": 2048,
            "kernel_quads": 200,
            "kernel_num_frequencies": 65,
            "kernel_num_slow_times": 513,
        },
        "output": {"directory": "out", "write_pgm": True, "write_binary": True},
    }


def validate_config(config):
    """Raise InvalidConfigError listing every violation with its JSON path."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for err in errors:
            pointer = "/" + "/".join(str(p) for p in err.absolute_path)
            msgs.append(f"{pointer}: {err.message}")
        raise InvalidConfigError("invalid configuration:\n  " + "\n  ".join(msgs))


def load_config(path=None, overrides=None):
    """Load, override, validate, and normalize a configuration.

    overrides is a flat dict with optional keys fc_hz, mode, seed,
    output_dir; they are applied before validation so the hash reflects
    what actually ran.
    """
    if path is None:
        config = default_config()
    else:
        with open(path) as fh:
            config = json.load(fh)
    config = copy.deepcopy(config)
    overrides = overrides or {}
    if overrides.get("fc_hz") is not None:
        config.setdefault("waveform", {})["center_frequency_hz"] = float(
            overrides["fc_hz"])
    if overrides.get("mode") is not None:
        config["mode"] = overrides["mode"]
    if overrides.get("seed") is not None:
        config["seed"] = int(overrides["seed"])
    if overrides.get("output_dir") is not None:
        config.setdefault("output", {})["directory"] = overrides["output_dir"]
    validate_config(config)
    # fill optional blocks with their defaults so the hash is canonical
    base = default_config()
    for block in ("model", "solver", "analysis", "output"):
        merged = dict(base[block])
        merged.update(config.get(block, {}))
        config[block] = merged
    config.setdefault("seed", base["seed"])
    config.setdefault("mode", base["mode"])
    config["scene"].setdefault("origin_offset_m", [0.0, 0.0])
    config["scene"].setdefault("phantom", base["scene"]["phantom"])
    return config


def config_hash(config):
    """sha-256 over the canonical JSON form, minus the output block.

    Where artifacts land does not change what was computed, so two runs
    that differ only in output directory share a hash (and must produce
    byte-identical artifacts).
    """
    stripped = {k: v for k, v in config.items() if k != "output"}
    canonical = json.dumps(stripped, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def memory_budget():
    value = os.environ.get(MEM_BUDGET_ENV)
    if value is None:
        return forward_mod.DEFAULT_MEMORY_BUDGET
    try:
        return int(value)
    except ValueError as exc:
        raise InvalidConfigError(
            f"{MEM_BUDGET_ENV} must be an integer byte count") from exc


# ---------------------------------------------------------------------------
# builders: config dict -> domain objects


def build_trajectory(block):
    kind = block["kind"]
    if kind == "circular-arc":
        return scene_mod.CircularArcTrajectory(
            radius=block["radius_m"],
            altitude=block["altitude_m"],
            interval=(block.get("aperture_start_rad", 0.0),
                      block.get("aperture_end_rad", math.pi / 2)),
            offset=block.get("offset_rad", 0.0),
        )
    if kind == "linear":
        return scene_mod.LinearTrajectory(block["start_m"], block["end_m"])
    return scene_mod.WaypointTrajectory(block["parameters"], block["positions_m"])


def build_scene_grid(config):
    blk = config["scene"]
    return scene_mod.build_scene_grid(
        blk["pixels_per_side"], blk["pixel_spacing_m"],
        blk.get("origin_offset_m", (0.0, 0.0)))


def build_phantom(config, grid):
    blk = config["scene"].get("phantom", {"kind": "three-level"})
    if blk["kind"] == "three-level":
        levels = blk.get("levels", list(scene_mod.DEFAULT_PHANTOM_LEVELS))
        return scene_mod.default_phantom(grid, tuple(levels))
    from .io_formats import load_reflectivity_csv
    values = load_reflectivity_csv(blk["path"])
    return scene_mod.ReflectivityImage(grid, values)


def build_geometry(config):
    """Imaging geometry; auto mode collocates the receivers."""
    blk = config["geometry"]
    rx1 = build_trajectory(blk["receiver1"])
    if config.get("mode", "cross") == "auto":
        rx2 = rx1
    else:
        rx2 = build_trajectory(blk["receiver2"])
    tx = scene_mod.TransmitterModel(blk["transmitter_location_m"])
    return forward_mod.ImagingGeometry(rx1, rx2, tx)


def build_sampling(config, num_frequencies=None, num_slow_times=None):
    wf = config["waveform"]
    smp = config["sampling"]
    geometry_interval = build_trajectory(
        config["geometry"]["receiver1"]).interval
    return forward_mod.SamplingGrid(
        center_frequency=2.0 * math.pi * wf["center_frequency_hz"],
        bandwidth=2.0 * math.pi * wf["bandwidth_hz"],
        num_frequencies=num_frequencies or smp["num_frequencies"],
        aperture_interval=geometry_interval,
        num_slow_times=num_slow_times or smp["num_slow_times"],
    )


def build_solver_config(config):
    blk = config.get("solver", {})
    return SolverConfig(
        trace_weight=blk.get("lambda", 20.0),
        step_rule=blk.get("step_rule", "auto"),
        step_size=blk.get("step_size"),
        step_safety=blk.get("step_safety", 0.9),
        max_iterations=blk.get("max_iterations", 5000),
        data_tolerance=blk.get("data_tolerance", 0.0),
        rank_threshold=blk.get("rank_threshold", 1e-3),
        log_stride=blk.get("log_stride", 10),
    )
