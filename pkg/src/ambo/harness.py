"""Experiment drivers.

Each experiment builds the configured problem, runs the matching study
from the core modules and writes its outputs: a schema-validated JSON
summary (always), plus CSV tables and field/PGM snapshots where they
apply.  Summaries carry a metadata block — configuration hash (output
location excluded), full parameter echo, admissibility flags from the
kernel/anisotropy/tension validators — so every result file is
self-describing.  Nothing time- or host-dependent goes into the outputs:
identical config and seed reproduce them byte for byte.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .anisotropy import Anisotropy, induced_anisotropy, validate_anisotropy
from .config import (
    RunConfig,
    build_anisotropy_from,
    build_geometry_from,
    build_initial,
    build_kernel_from,
    build_scheme_config,
    build_tensions,
)
from .energy import (
    PhaseField,
    ShapeSpec,
    approx_energy,
    convergence_study,
    indicator_defect,
    inequality_suite,
    monotonicity_check,
    sharp_energy,
)
from .errors import ConfigError, NumericalError, ResolutionWarning
from .geometry import Band, Geometry
from .kernel import Kernel, scale_kernel, validate_kernel
from .scheme import (
    SchemeConfig,
    SchemeError,
    Trajectory,
    measure_contact_angle,
    run as run_scheme,
)
from .tensions import ModifiedTensions, TensionError, verify_triangle

__all__ = ["Workspace", "prepare", "run_experiment", "STEP_COLUMNS"]

STEP_COLUMNS = ("step", "energy", "volume", "interface_cells", "lambda", "defect")


@dataclass
class Workspace:
    """Everything an experiment needs, built once from the config."""

    config: RunConfig
    geometry: Geometry
    gamma: Anisotropy
    kernel: Kernel
    tensions: ModifiedTensions | None
    flags: dict
    detail: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.geometry.grid


def prepare(config: RunConfig, *, tensions_required: bool = True) -> Workspace:
    """Build and validate the configured problem.

    The kernel and anisotropy validators only set flags; an inadmissible
    tension set raises unless ``tensions_required`` is off (the validate
    experiment wants the failure as a report, not a crash).
    """
    geometry = build_geometry_from(config)
    gamma = build_anisotropy_from(config)
    kernel = build_kernel_from(config)
    kreport = validate_kernel(kernel, config.d)
    areport = validate_anisotropy(gamma)
    flags = {"kernel": kreport.admissible, "anisotropy": areport.admissible}
    detail = {
        "kernel": {
            "mass": kreport.mass,
            "decay_constant": kreport.decay_constant,
            "positivity": list(kreport.positivity),
            "failures": kreport.failures,
        },
        "anisotropy": {
            "bounds": list(areport.bounds),
            "min_hessian_eig": areport.min_hessian_eig,
            "failures": areport.failures,
        },
    }
    tensions = None
    try:
        tensions, tflags = build_tensions(config, geometry, gamma)
        flags.update(tflags)
        audit = verify_triangle(tensions)
        detail["tensions"] = {
            "mode": config.tensions["mode"],
            "bounds": [tensions.lower, tensions.upper],
            "worst_triangle_slack": min(audit.worst_slack.values()),
            "failures": [],
        }
    except (TensionError, ConfigError) as exc:
        if tensions_required:
            raise
        flags.update({"tensions": False, "triangle": None})
        detail["tensions"] = {
            "mode": config.tensions["mode"],
            "failures": [str(exc)],
        }
    return Workspace(config, geometry, gamma, kernel, tensions, flags, detail)


def _base_summary(ws: Workspace, results: dict, outputs: dict) -> dict:
    doc = ws.config.document()
    # The output section says where results land, not what was computed, so
    # it is excluded from both the hash and the echo: rerunning the same
    # configuration into a different directory yields byte-identical files.
    hashed = {k: v for k, v in doc.items() if k != "output"}
    return {
        "experiment": ws.config.experiment,
        "config_hash": io.config_hash(hashed),
        "seed": ws.config.seed,
        "parameters": hashed,
        "admissibility": dict(ws.flags),
        "results": results,
        "outputs": outputs,
    }


def _write_summary(ws: Workspace, out: Path, results: dict, outputs: dict) -> dict:
    outputs = {"summary": "summary.json", **outputs}
    summary = _base_summary(ws, results, outputs)
    return io.write_summary(out / "summary.json", summary)


def _maybe_angles(u: PhaseField, geometry: Geometry, **kwargs):
    """Contact angles when they are defined for this state, else None."""
    if geometry.grid.d != 2 or not isinstance(geometry.shape, Band):
        return None
    try:
        return measure_contact_angle(u, geometry, **kwargs)
    except SchemeError:
        return None


def _snapshot_writer(out: Path, every: int, d: int):
    if every <= 0:
        return None, {}
    outputs = {"snapshots": "u_NNNNNN.bin" + (" / .pgm" if d == 2 else "")}

    def write(state):
        if state.step % every == 0:
            stem = f"u_{state.step:06d}"
            io.write_field(out / f"{stem}.bin", state.u.values)
            if d == 2:
                io.write_pgm(out / f"{stem}.pgm", state.u.values, lo=0.0, hi=1.0)

    return write, outputs


def _dump_final(out: Path, traj: Trajectory, d: int) -> dict:
    outputs = {"final_field": "final_u.bin"}
    io.write_field(out / "final_u.bin", traj.final.u.values)
    if d == 2:
        io.write_pgm(out / "final_u.pgm", traj.final.u.values, lo=0.0, hi=1.0)
        outputs["final_image"] = "final_u.pgm"
    if traj.oscillating:
        for name, state in zip(("cycle_a", "cycle_b"), traj.cycle_states):
            io.write_field(out / f"{name}.bin", state.u.values)
            outputs[name] = f"{name}.bin"
    return outputs


def _initial_shape_spec(config: RunConfig, geometry: Geometry) -> ShapeSpec | None:
    """The analytic counterpart of the configured initial phase, if any."""
    spec = config.initial
    kind = spec["kind"]
    if kind == "disk":
        return ShapeSpec.disk(tuple(map(float, spec["center"])), float(spec["radius"]))
    if kind == "ellipse":
        return ShapeSpec.ellipse(
            tuple(map(float, spec["center"])), float(spec["a"]), float(spec["b"])
        )
    if kind == "cap" and isinstance(geometry.shape, Band):
        return ShapeSpec.cap(
            float(spec.get("angle", 90.0)),
            float(spec["radius"]),
            substrate_y=geometry.shape.lo % 1.0,
            center_x=float(spec.get("center_x", 0.5)),
        )
    return None


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _experiment_validate(ws: Workspace, out: Path) -> dict:
    config = ws.config
    flags = ws.flags
    resolution_notes: list[str] = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            scale_kernel(ws.kernel, ws.grid, config.scheme["h"])
        for w in caught:
            if issubclass(w.category, ResolutionWarning):
                resolution_notes.append(str(w.message))
        flags["resolution"] = True
    except (ValueError, NumericalError) as exc:
        flags["resolution"] = False
        resolution_notes.append(str(exc))

    # The anisotropy the kernel actually produces on free interfaces,
    # probed at a few directions (the full sweep lives in the tests).
    if config.d == 2:
        induced = induced_anisotropy(ws.kernel, 2)
        theta = np.linspace(0.0, math.pi, 16, endpoint=False)
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        vals = induced(dirs)
        ws.detail["kernel"]["induced"] = {
            "e1": float(vals[0]),
            "spread": float(vals.max() - vals.min()),
        }

    # Cross-check the two convolution routes on grids small enough for
    # the direct route (it visits every cell pair).
    convolution: dict = {}
    if flags["resolution"] and ws.grid.cell_count <= 4096:
        kh = scale_kernel(ws.kernel, ws.grid, config.scheme["h"])
        rng = np.random.default_rng(config.seed)
        probe = rng.uniform(size=ws.grid.shape)
        diff = float(
            np.abs(kh.convolve(probe) - kh.convolve(probe, method="direct")).max()
        )
        flags["convolution"] = diff <= 1e-10
        convolution = {"max_abs_diff": diff, "tol": 1e-10}
    else:
        flags["convolution"] = None
        convolution = {"skipped": "grid too large for the direct route"}

    results = {
        **ws.detail,
        "resolution": {"h": config.scheme["h"], "notes": resolution_notes},
        "convolution": convolution,
        "geometry": {
            "omega_cells": ws.geometry.omega_cell_count,
            "omega_volume": ws.geometry.omega_volume,
            "delta": ws.geometry.delta,
            "has_substrate": ws.geometry.has_substrate,
        },
        "all_ok": all(v is None or v for v in flags.values()),
    }
    summary = _write_summary(ws, out, results, {})
    if not results["all_ok"]:
        failing = sorted(k for k, v in flags.items() if v is not None and not v)
        notes = []
        for key in failing:
            notes.extend(ws.detail.get(key, {}).get("failures", []))
        notes.extend(resolution_notes if not flags["resolution"] else [])
        raise ConfigError(
            "validation failed for: " + ", ".join(failing)
            + ("; " + "; ".join(notes) if notes else "")
        )
    return summary


def _experiment_run(ws: Workspace, out: Path) -> dict:
    config = ws.config
    initial = build_initial(config, ws.geometry)
    scheme_config = build_scheme_config(config)
    writer, outputs = _snapshot_writer(out, config.snapshot_every, config.d)
    traj = run_scheme(initial, scheme_config, ws.tensions, ws.kernel, on_state=writer)
    io.write_csv(out / "steps.csv", STEP_COLUMNS, traj.diagnostics_rows())
    outputs["steps"] = "steps.csv"
    outputs.update(_dump_final(out, traj, config.d))
    final = traj.final
    results = {
        "stationary": traj.stationary,
        "oscillating": traj.oscillating,
        "steps": final.step,
        "final_energy": final.energy,
        "final_volume": final.volume,
        "interface_cells": final.interface_cells,
        "defect": final.defect,
        "angles": _maybe_angles(final.u, ws.geometry),
    }
    return _write_summary(ws, out, results, outputs)


def _experiment_energy(ws: Workspace, out: Path) -> dict:
    config = ws.config
    initial = build_initial(config, ws.geometry)
    h = config.scheme["h"]
    kh = scale_kernel(ws.kernel, ws.grid, h)
    e_h = approx_energy(initial, ws.tensions, kh)
    w = kh.convolve(initial.values)
    defect = indicator_defect(w, ws.geometry)

    sharp = None
    spec = _initial_shape_spec(config, ws.geometry)
    if (
        spec is not None
        and not spec.wetted
        and np.ptp(ws.tensions.pv) == 0.0
    ):
        induced = induced_anisotropy(ws.kernel, config.d)
        sharp = sharp_energy(spec, float(ws.tensions.pv.flat[0]), induced)
    results = {
        "h": h,
        "energy": e_h,
        "volume": initial.volume(),
        "defect": defect,
        "sharp": sharp,
        "rel_err": None if sharp is None else abs(e_h - sharp) / abs(sharp),
    }
    return _write_summary(ws, out, results, {})


def _experiment_converge(ws: Workspace, out: Path) -> dict:
    config = ws.config
    spec = _initial_shape_spec(config, ws.geometry)
    if spec is None or spec.wetted:
        raise ConfigError(
            "converge needs an analytic free-boundary initial shape (disk/ellipse)"
        )
    if np.ptp(ws.tensions.pv) != 0.0:
        raise ConfigError("converge needs a spatially constant gamma_pv")
    induced = induced_anisotropy(ws.kernel, config.d)
    table = convergence_study(
        spec,
        ws.tensions,
        ws.kernel,
        ws.config.experiment_params["h_values"],
        ws.geometry,
        induced,
    )
    io.write_csv(
        out / "convergence.csv",
        ("h", "energy", "reference", "rel_err"),
        table.as_rows(),
    )
    errs = [r.rel_err for r in table.rows]
    results = {
        "order": table.order,
        "h_values": [r.h for r in table.rows],
        "rel_errs": errs,
        "final_rel_err": errs[-1],
        "strictly_decreasing": True,  # convergence_study raised otherwise
    }
    return _write_summary(ws, out, results, {"table": "convergence.csv"})


def _ensemble(ws: Workspace, n_fields: int, levels: int, include_disk: bool):
    rng = np.random.default_rng(ws.config.seed)
    fields = [
        (f"random_{i:03d}", PhaseField.random(ws.geometry, rng, levels=levels))
        for i in range(n_fields)
    ]
    if include_disk:
        spec = _initial_shape_spec(ws.config, ws.geometry)
        if spec is not None and not spec.wetted:
            fields.append(("indicator", spec.indicator(ws.geometry)))
    return fields


def _experiment_monotonic(ws: Workspace, out: Path) -> dict:
    p = ws.config.experiment_params
    fields = _ensemble(ws, p["n_fields"], p["levels"], p["include_disk"])
    constant = ws.tensions.is_spatially_constant
    rows = []
    c_by_combo: dict[tuple, list] = {}
    for h in p["h_values"]:
        for N in p["factors"]:
            for name, u in fields:
                res = monotonicity_check(u, ws.tensions, ws.kernel, h, N)
                rows.append((name, h, N, res.lhs, res.rhs, res.c_est))
                c_by_combo.setdefault((h, N), []).append(res.c_est)
    io.write_csv(
        out / "monotonicity.csv",
        ("field", "h", "factor", "lhs", "rhs", "c_est"),
        rows,
    )
    combos = [
        {
            "h": h,
            "factor": N,
            "c_max": max(cs),
            "c_mean": float(np.mean(cs)),
        }
        for (h, N), cs in sorted(c_by_combo.items())
    ]
    c_maxima = [c["c_max"] for c in combos]
    positive = [c for c in c_maxima if c > 0.0]
    results = {
        "constant_tensions": constant,
        "n_fields": len(fields),
        "combos": combos,
        "c_overall_max": max(c_maxima),
        "c_spread": (max(positive) / min(positive)) if positive else None,
    }
    return _write_summary(ws, out, results, {"table": "monotonicity.csv"})


def _experiment_inequalities(ws: Workspace, out: Path) -> dict:
    p = ws.config.experiment_params
    fields = _ensemble(ws, p["n_fields"], p["levels"], include_disk=False)
    rows = []
    worst = math.inf
    all_ok = True
    for h in p["h_values"]:
        for name, v in fields:
            report = inequality_suite(v, ws.kernel, h)
            for res in report.results:
                scale = max(abs(res.lhs), abs(res.rhs), 1.0)
                worst = min(worst, res.slack / scale)
                all_ok = all_ok and res.ok()
                rows.append((name, h, res.name, res.lhs, res.rhs, res.ok()))
    io.write_csv(
        out / "inequalities.csv",
        ("field", "h", "inequality", "lhs", "rhs", "ok"),
        rows,
    )
    results = {
        "n_fields": len(fields),
        "h_values": p["h_values"],
        "checks": len(rows),
        "worst_relative_slack": worst,
        "all_ok": all_ok,
    }
    return _write_summary(ws, out, results, {"table": "inequalities.csv"})


def _experiment_angle(ws: Workspace, out: Path) -> dict:
    config = ws.config
    p = config.experiment_params
    rho = p["sigma_ratio"]
    if not -1.0 <= rho <= 1.0:
        raise ConfigError(
            f"sigma_ratio must lie in [-1, 1] for a wetting equilibrium, got {rho}"
        )
    if not isinstance(ws.geometry.shape, Band) or config.d != 2:
        raise ConfigError("the angle experiment needs a 2-d band geometry")

    # Unit particle-vapor tension; the wetting contrast is rho by
    # construction, so the equilibrium satisfies cos(theta) = -rho.
    tensions = ModifiedTensions.constant(
        ws.grid, 1.0, 1.0 + 0.5 * rho, 1.0 - 0.5 * rho
    )
    ws.flags["triangle"] = verify_triangle(tensions).ok
    ws.flags["tensions"] = True

    band = ws.geometry.shape
    cap = ShapeSpec.cap(
        p["initial_angle"],
        p["initial_radius"],
        substrate_y=band.lo % 1.0,
        center_x=0.5,
    )
    initial = cap.indicator(ws.geometry)

    # Coarse stage first: at the target step size the contact line moves
    # below one cell per step and pins short of the equilibrium.
    stages = []
    u = initial
    traj = None
    for label, h in (("coarse", p["coarse_h"]), ("fine", p["fine_h"])):
        scheme_config = SchemeConfig(
            h=h,
            preserve_volume=True,
            target_volume=None,
            max_steps=p["max_steps"],
            stationarity_window=config.scheme["stationarity_window"],
        )
        traj = run_scheme(u, scheme_config, tensions, ws.kernel)
        io.write_csv(out / f"steps_{label}.csv", STEP_COLUMNS, traj.diagnostics_rows())
        stages.append(
            {
                "label": label,
                "h": h,
                "steps": traj.final.step,
                "stationary": traj.stationary,
                "oscillating": traj.oscillating,
            }
        )
        u = traj.final.u

    spacing = ws.grid.spacing
    skip = max(3, math.ceil(3.0 * math.sqrt(2.0 * p["fine_h"]) / spacing))
    angles = _maybe_angles(
        u, ws.geometry, window_cells=p["window_cells"], skip_cells=skip
    )
    target = math.degrees(math.acos(max(-1.0, min(1.0, -rho))))
    outputs = {
        "steps_coarse": "steps_coarse.csv",
        "steps_fine": "steps_fine.csv",
    }
    outputs.update(_dump_final(out, traj, config.d))
    results = {
        "sigma_ratio": rho,
        "target_angle": target,
        "angles": angles,
        "mean_angle": None if not angles else float(np.mean(angles)),
        "stages": stages,
        "final_volume": traj.final.volume,
        "skip_cells": skip,
    }
    return _write_summary(ws, out, results, outputs)


_HANDLERS = {
    "validate": _experiment_validate,
    "run": _experiment_run,
    "energy": _experiment_energy,
    "converge": _experiment_converge,
    "monotonic": _experiment_monotonic,
    "inequalities": _experiment_inequalities,
    "angle": _experiment_angle,
}


def run_experiment(config: RunConfig) -> dict:
    """Execute the configured experiment; returns the written summary."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ws = prepare(config, tensions_required=(config.experiment != "validate"))
    return _HANDLERS[config.experiment](ws, out)
