"""Declarative run configuration.

One YAML document with fixed sections describes a run: grid, container
geometry, surface-tension anisotropy, kernel, tension expressions, scheme
parameters, the initial phase, the experiment to perform, output location
and the seed for randomized suites.  Loading is strict — unknown keys are
rejected by name together with their section, so typos cannot silently
fall back to defaults.

The sections stay plain data on the :class:`RunConfig`; the ``build_*``
helpers at the bottom turn them into live objects from the other modules.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import yaml

from .anisotropy import Anisotropy, make_anisotropy
from .energy import PhaseField, ShapeSpec
from .errors import ConfigError
from .geometry import Band, Geometry, build_geometry, make_shape
from .grid import TorusGrid
from .io import read_field
from .kernel import Kernel, make_kernel
from .scheme import SchemeConfig
from .tensions import (
    ModifiedTensions,
    RawTensions,
    TensionError,
    extend_substrate,
    validate_raw_tensions,
    verify_triangle,
)

__all__ = [
    "EXPERIMENTS",
    "RunConfig",
    "apply_overrides",
    "build_anisotropy_from",
    "build_geometry_from",
    "build_initial",
    "build_kernel_from",
    "build_raw_tensions",
    "build_scheme_config",
    "build_tensions",
    "config_from_mapping",
    "load_config",
]

EXPERIMENTS = (
    "run",
    "energy",
    "converge",
    "monotonic",
    "inequalities",
    "angle",
    "validate",
)

_TOP_KEYS = {
    "grid",
    "geometry",
    "anisotropy",
    "kernel",
    "tensions",
    "scheme",
    "initial",
    "experiment",
    "output",
    "seed",
}

_GEOMETRY_KINDS = {
    "disk": {"center", "radius"},
    "ellipse": {"center", "a", "b"},
    "band": {"lo", "hi", "axis"},
    "rounded_polygon": {"vertices", "rho"},
    "full": set(),
}
_ANISOTROPY_KINDS = {
    "isotropic": set(),
    "elliptic": {"matrix"},
    "table": {"values"},
    "crystalline_l1": set(),
}
_KERNEL_KINDS = {
    "gaussian": set(),
    "elliptic_gaussian": {"matrix"},
    "triangular": {"radius"},
}
_INITIAL_KINDS = {
    "disk": {"center", "radius"},
    "ellipse": {"center", "a", "b"},
    "cap": {"angle", "radius", "center_x"},
    "field": {"path"},
    "empty": set(),
}

_EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "run": {},
    "energy": {},
    "converge": {"h_values": [4.0e-3, 1.0e-3, 2.5e-4]},
    "monotonic": {
        "factors": [2, 3, 4],
        "h_values": [2.5e-4, 1.0e-3],
        "n_fields": 100,
        "levels": 16,
        "include_disk": True,
    },
    "inequalities": {
        "h_values": [4.0e-3, 1.0e-3, 2.5e-4],
        "n_fields": 100,
        "levels": 16,
    },
    "angle": {
        "sigma_ratio": 0.0,
        "coarse_h": 1.0e-3,
        "fine_h": 2.5e-4,
        "max_steps": 400,
        "initial_angle": 90.0,
        "initial_radius": 0.16,
        "window_cells": 12,
    },
    "validate": {},
}

_FLOAT_PARAMS = {
    "sigma_ratio",
    "coarse_h",
    "fine_h",
    "initial_angle",
    "initial_radius",
}
_INT_PARAMS = {"max_steps", "window_cells", "n_fields", "levels"}
_BOOL_PARAMS = {"include_disk"}
_FLOAT_LIST_PARAMS = {"h_values"}
_INT_LIST_PARAMS = {"factors"}


def _fail(source: str, message: str) -> ConfigError:
    return ConfigError(f"{source}: {message}")


def _as_float(value, key: str, section: str, source: str) -> float:
    if isinstance(value, bool) or value is None:
        raise _fail(source, f"key '{key}' in section '{section}' must be a number")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise _fail(
            source, f"key '{key}' in section '{section}' must be a number, got {value!r}"
        ) from None


def _as_int(value, key: str, section: str, source: str) -> int:
    if isinstance(value, bool):
        raise _fail(source, f"key '{key}' in section '{section}' must be an integer")
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise _fail(
            source,
            f"key '{key}' in section '{section}' must be an integer, got {value!r}",
        ) from None
    if out != _as_float(value, key, section, source):
        raise _fail(source, f"key '{key}' in section '{section}' must be an integer")
    return out


def _as_bool(value, key: str, section: str, source: str) -> bool:
    if isinstance(value, bool):
        return value
    raise _fail(
        source, f"key '{key}' in section '{section}' must be true or false, got {value!r}"
    )


def _mapping_section(doc: dict, name: str, source: str) -> dict:
    raw = doc.get(name) or {}
    if not isinstance(raw, dict):
        raise _fail(source, f"section '{name}' must be a mapping")
    return dict(raw)


def _check_keys(raw: dict, allowed, name: str, source: str) -> None:
    for key in raw:
        if key not in allowed:
            raise _fail(
                source,
                f"unknown key '{key}' in section '{name}' "
                f"(allowed: {sorted(allowed)})",
            )


_EXTRA_SECTION_KEYS = {"geometry": {"delta"}}


def _kinded_section(
    doc: dict, name: str, kinds: dict, default_kind: str, source: str
) -> dict:
    raw = _mapping_section(doc, name, source)
    kind = raw.get("kind", default_kind)
    if kind not in kinds:
        raise _fail(
            source,
            f"unknown kind '{kind}' in section '{name}' (have {sorted(kinds)})",
        )
    _check_keys(
        {k: v for k, v in raw.items() if k != "kind"},
        kinds[kind] | _EXTRA_SECTION_KEYS.get(name, set()),
        name,
        source,
    )
    raw["kind"] = kind
    return raw


@dataclass(frozen=True)
class RunConfig:
    """Validated plain-data description of one experiment."""

    d: int
    n: int
    geometry: dict
    anisotropy: dict
    kernel: dict
    tensions: dict
    scheme: dict
    initial: dict
    experiment: str
    experiment_params: dict
    output_dir: str
    snapshot_every: int
    seed: int

    def document(self) -> dict:
        """Canonical nested mapping (echoed into summaries, hashed)."""
        return {
            "grid": {"d": self.d, "n": self.n},
            "geometry": dict(self.geometry),
            "anisotropy": dict(self.anisotropy),
            "kernel": dict(self.kernel),
            "tensions": dict(self.tensions),
            "scheme": dict(self.scheme),
            "initial": dict(self.initial),
            "experiment": {"kind": self.experiment, **self.experiment_params},
            "output": {"dir": self.output_dir, "snapshot_every": self.snapshot_every},
            "seed": self.seed,
        }


def apply_overrides(doc: dict, overrides: dict) -> dict:
    """Set dotted-path keys (e.g. ``scheme.h``) on a copy of the document.

    ``None`` values are skipped so optional command-line flags can be
    passed through unconditionally.
    """
    out = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        if value is None:
            continue
        parts = dotted.split(".")
        node = out
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        node[parts[-1]] = value
    return out


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a YAML config file."""
    try:
        with open(path, "r", encoding="utf-8") as src:
            doc = yaml.safe_load(src)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping at the top level")
    if overrides:
        doc = apply_overrides(doc, overrides)
    return config_from_mapping(doc, source=str(path))


def config_from_mapping(doc: dict, source: str = "<config>") -> RunConfig:
    """Validate a nested mapping into a :class:`RunConfig`."""
    _check_keys(doc, _TOP_KEYS, "top level", source)

    grid = _mapping_section(doc, "grid", source)
    _check_keys(grid, {"d", "n"}, "grid", source)
    d = _as_int(grid.get("d", 2), "d", "grid", source)
    n = _as_int(grid.get("n", 256), "n", "grid", source)
    if d not in (2, 3):
        raise _fail(source, f"key 'd' in section 'grid' must be 2 or 3, got {d}")

    geometry = _kinded_section(doc, "geometry", _GEOMETRY_KINDS, "disk", source)
    if geometry["kind"] == "disk":
        geometry.setdefault("center", [0.5, 0.5] if d == 2 else [0.5, 0.5, 0.5])
        geometry.setdefault("radius", 0.3)
    anisotropy = _kinded_section(doc, "anisotropy", _ANISOTROPY_KINDS, "isotropic", source)
    kernel = _kinded_section(doc, "kernel", _KERNEL_KINDS, "gaussian", source)

    tensions = _mapping_section(doc, "tensions", source)
    _check_keys(
        tensions, {"mode", "gamma_pv", "gamma_sp", "gamma_sv", "delta"}, "tensions", source
    )
    mode = tensions.get("mode", "direct")
    if mode not in ("direct", "extend"):
        raise _fail(
            source, f"key 'mode' in section 'tensions' must be direct or extend, got {mode!r}"
        )
    tensions = {
        "mode": mode,
        "gamma_pv": str(tensions.get("gamma_pv", "1")),
        "gamma_sp": str(tensions.get("gamma_sp", "1")),
        "gamma_sv": str(tensions.get("gamma_sv", "1")),
        "delta": (
            None
            if tensions.get("delta") is None
            else _as_float(tensions["delta"], "delta", "tensions", source)
        ),
    }

    scheme = _mapping_section(doc, "scheme", source)
    _check_keys(
        scheme,
        {"h", "preserve_volume", "target_volume", "max_steps", "stationarity_window"},
        "scheme",
        source,
    )
    scheme = {
        "h": _as_float(scheme.get("h", 1.0e-3), "h", "scheme", source),
        "preserve_volume": _as_bool(
            scheme.get("preserve_volume", False), "preserve_volume", "scheme", source
        ),
        "target_volume": (
            None
            if scheme.get("target_volume") is None
            else _as_float(scheme["target_volume"], "target_volume", "scheme", source)
        ),
        "max_steps": _as_int(scheme.get("max_steps", 200), "max_steps", "scheme", source),
        "stationarity_window": _as_int(
            scheme.get("stationarity_window", 3), "stationarity_window", "scheme", source
        ),
    }

    initial = _kinded_section(doc, "initial", _INITIAL_KINDS, "disk", source)
    if initial["kind"] == "disk":
        initial.setdefault("center", [0.5, 0.5] if d == 2 else [0.5, 0.5, 0.5])
        initial.setdefault("radius", 0.15)

    experiment_raw = doc.get("experiment") or {}
    if isinstance(experiment_raw, str):
        experiment_raw = {"kind": experiment_raw}
    if not isinstance(experiment_raw, dict):
        raise _fail(source, "section 'experiment' must be a mapping or a name")
    kind = experiment_raw.get("kind", "run")
    if kind not in EXPERIMENTS:
        raise _fail(
            source,
            f"unknown kind '{kind}' in section 'experiment' (have {sorted(EXPERIMENTS)})",
        )
    params = {k: v for k, v in experiment_raw.items() if k != "kind"}
    _check_keys(params, set(_EXPERIMENT_DEFAULTS[kind]), "experiment", source)
    merged = {**_EXPERIMENT_DEFAULTS[kind], **params}
    experiment_params = {}
    for key, value in merged.items():
        if key in _FLOAT_PARAMS:
            value = _as_float(value, key, "experiment", source)
        elif key in _INT_PARAMS:
            value = _as_int(value, key, "experiment", source)
        elif key in _BOOL_PARAMS:
            value = _as_bool(value, key, "experiment", source)
        elif key in _FLOAT_LIST_PARAMS:
            if not isinstance(value, (list, tuple)) or not value:
                raise _fail(
                    source, f"key '{key}' in section 'experiment' must be a non-empty list"
                )
            value = [_as_float(v, key, "experiment", source) for v in value]
        elif key in _INT_LIST_PARAMS:
            if not isinstance(value, (list, tuple)) or not value:
                raise _fail(
                    source, f"key '{key}' in section 'experiment' must be a non-empty list"
                )
            value = [_as_int(v, key, "experiment", source) for v in value]
        experiment_params[key] = value

    output = _mapping_section(doc, "output", source)
    _check_keys(output, {"dir", "snapshot_every"}, "output", source)
    output_dir = str(output.get("dir", "out"))
    snapshot_every = _as_int(
        output.get("snapshot_every", 0), "snapshot_every", "output", source
    )
    if snapshot_every < 0:
        raise _fail(source, "key 'snapshot_every' in section 'output' must be >= 0")

    seed = _as_int(doc.get("seed", 0), "seed", "top level", source)

    return RunConfig(
        d=d,
        n=n,
        geometry=geometry,
        anisotropy=anisotropy,
        kernel=kernel,
        tensions=tensions,
        scheme=scheme,
        initial=initial,
        experiment=kind,
        experiment_params=experiment_params,
        output_dir=output_dir,
        snapshot_every=snapshot_every,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

_SCALAR_SHAPE_KEYS = {"radius", "lo", "hi", "a", "b", "rho"}


def build_geometry_from(config: RunConfig) -> Geometry:
    grid = TorusGrid(config.d, config.n)
    params = {
        k: (float(v) if k in _SCALAR_SHAPE_KEYS else v)
        for k, v in config.geometry.items()
        if k not in ("kind", "delta")
    }
    if "axis" in params:
        params["axis"] = int(params["axis"])
    shape = make_shape(config.geometry["kind"], **params)
    delta = config.geometry.get("delta")
    return build_geometry(shape, grid, delta=None if delta is None else float(delta))


def build_anisotropy_from(config: RunConfig) -> Anisotropy:
    params = {k: v for k, v in config.anisotropy.items() if k != "kind"}
    return make_anisotropy(config.anisotropy["kind"], dim=config.d, **params)


def build_kernel_from(config: RunConfig) -> Kernel:
    params = {k: v for k, v in config.kernel.items() if k != "kind"}
    if "radius" in params:
        params["radius"] = float(params["radius"])
    return make_kernel(config.kernel["kind"], **params)


def build_raw_tensions(config: RunConfig) -> RawTensions:
    t = config.tensions
    return RawTensions.from_values(t["gamma_pv"], t["gamma_sp"], t["gamma_sv"])


def build_tensions(
    config: RunConfig, geometry: Geometry, gamma: Anisotropy
) -> tuple[ModifiedTensions, dict]:
    """Tension fields plus admissibility flags for the summary.

    ``direct`` mode evaluates the three expressions cellwise as the
    modified tensions themselves; ``extend`` treats them as raw boundary
    data and runs the full extension construction.
    """
    raw = build_raw_tensions(config)
    grid = geometry.grid
    if config.tensions["mode"] == "direct":
        pv = raw.sample("pv", grid)
        sp = raw.sample("sp", grid)
        sv = raw.sample("sv", grid)
        lo = min(pv.min(), sp.min(), sv.min())
        if not lo > 0.0:
            raise TensionError(
                f"direct tensions must be positive everywhere (min {lo!r})"
            )
        t = ModifiedTensions.from_fields(grid, pv, sp, sv)
        audit = verify_triangle(t)
        return t, {"tensions": True, "triangle": audit.ok}
    report = validate_raw_tensions(raw, geometry, gamma)
    t = extend_substrate(raw, geometry, gamma, delta=config.tensions["delta"])
    audit = verify_triangle(t, tol=1e-12 * t.upper)
    return t, {"tensions": report.admissible, "triangle": audit.ok}


def build_initial(config: RunConfig, geometry: Geometry) -> PhaseField:
    spec = config.initial
    kind = spec["kind"]
    if kind == "empty":
        return PhaseField.zeros(geometry)
    if kind == "field":
        if "path" not in spec:
            raise ConfigError("initial kind 'field' needs key 'path'")
        values = read_field(spec["path"])
        return PhaseField(geometry, values)
    if kind == "disk":
        shape = ShapeSpec.disk(tuple(map(float, spec["center"])), float(spec["radius"]))
    elif kind == "ellipse":
        shape = ShapeSpec.ellipse(
            tuple(map(float, spec["center"])), float(spec["a"]), float(spec["b"])
        )
    elif kind == "cap":
        band = geometry.shape
        if not isinstance(band, Band):
            raise ConfigError("initial kind 'cap' needs a band geometry")
        shape = ShapeSpec.cap(
            float(spec.get("angle", 90.0)),
            float(spec["radius"]),
            substrate_y=band.lo % 1.0,
            center_x=float(spec.get("center_x", 0.5)),
        )
    else:  # pragma: no cover - guarded by section validation
        raise ConfigError(f"unknown initial kind '{kind}'")
    return shape.indicator(geometry)


def build_scheme_config(config: RunConfig, **overrides) -> SchemeConfig:
    params = {**config.scheme, **overrides}
    return SchemeConfig(
        h=params["h"],
        preserve_volume=params["preserve_volume"],
        target_volume=params["target_volume"],
        max_steps=params["max_steps"],
        stationarity_window=params["stationarity_window"],
    )
