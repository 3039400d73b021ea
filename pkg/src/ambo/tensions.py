"""Torus-wide extension of the three surface tensions.

The raw data are a particle-vapor tension ``gamma_pv`` defined on the
closed container and substrate-particle / substrate-vapor tensions
``gamma_sp``, ``gamma_sv`` defined on the container boundary.  The
convolution energy needs all three defined on the whole torus, bounded,
Lipschitz and satisfying pointwise triangle inequalities.  The
construction:

* ``gamma_pv`` is kept on the container and extended discretely
  harmonically outside, with Dirichlet data ``gamma_pv`` on the boundary
  layer and ``min gamma_pv`` on the torus seam cells;
* the substrate tensions are divided by the anisotropy of the container
  normal on the boundary layer, transported through thin strips on both
  sides of the boundary as ratios ``g_sp / g_delta`` of two harmonic
  strip solutions, and set to the constant ``C_gamma * C_pv / (2 c_gamma)``
  everywhere else.

Strict triangle inequalities between the strip solutions are checked a
posteriori; if they fail the strip width is halved and the solves are
repeated (the construction only guarantees that *some* small width
works).

All boundary value problems use the cell-centered 5-point (d=2) /
7-point (d=3) Laplacian, whose discrete maximum principle the
construction's inequalities rely on, solved by conjugate gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .anisotropy import Anisotropy
from .errors import NumericalError
from .expressions import Expression, parse_expression
from .geometry import Geometry, band_mask, boundary_layer_mask
from .grid import TorusGrid

__all__ = [
    "RawTensions",
    "ModifiedTensions",
    "TensionError",
    "laplace_solve",
    "extend_pv",
    "extend_substrate",
    "validate_raw_tensions",
    "verify_triangle",
]


class TensionError(ValueError):
    """Raised for inadmissible tension data or ill-posed extension problems."""


@dataclass(frozen=True)
class RawTensions:
    """Analytic tension data: particle-vapor on the container, substrate
    tensions on its boundary."""

    gamma_pv: Expression
    gamma_sp: Expression
    gamma_sv: Expression

    @classmethod
    def from_values(cls, pv, sp, sv) -> "RawTensions":
        return cls(
            gamma_pv=parse_expression(pv),
            gamma_sp=parse_expression(sp),
            gamma_sv=parse_expression(sv),
        )

    def sample(self, which: str, grid: TorusGrid) -> np.ndarray:
        """Sample one expression at every cell centre."""
        expr = getattr(self, f"gamma_{which}")
        if expr.max_coordinate > grid.d:
            raise TensionError(
                f"gamma_{which} uses x{expr.max_coordinate} on a {grid.d}-d grid"
            )
        coords = tuple(grid.meshgrid())
        return np.broadcast_to(
            np.asarray(expr(coords), dtype=np.float64), grid.shape
        ).copy()


@dataclass
class RawTensionsReport:
    """Admissibility of raw tensions against an anisotropy."""

    admissible: bool
    c_s: float
    C_s: float
    pv_range: tuple
    min_strict_slack: float
    failures: list = field(default_factory=list)


def validate_raw_tensions(
    raw: RawTensions, geometry: Geometry, gamma: Anisotropy
) -> RawTensionsReport:
    """Check positivity, substrate bounds and strict triangle inequalities.

    The strict inequalities are required at every boundary-layer sample:

        C_gamma * g_pv < g_sp + g_sv,
        g_sp < c_gamma * g_pv + g_sv,
        g_sv < c_gamma * g_pv + g_sp.
    """
    grid = geometry.grid
    failures: list[str] = []
    layer = boundary_layer_mask(geometry)
    if not layer.any():
        raise TensionError("geometry has no boundary layer to validate on")

    pv = raw.sample("pv", grid)
    sp_ = raw.sample("sp", grid)
    sv = raw.sample("sv", grid)
    closure = geometry.omega_mask | layer

    pv_on = pv[closure]
    if np.any(pv_on <= 0.0):
        failures.append("gamma_pv must be positive on the closed container")
    sp_b, sv_b, pv_b = sp_[layer], sv[layer], pv[layer]
    if np.any(sp_b <= 0.0) or np.any(sv_b <= 0.0):
        failures.append("substrate tensions must be positive on the boundary")
    c_s = float(min(sp_b.min(), sv_b.min()))
    C_s = float(max(sp_b.max(), sv_b.max()))

    c_g, C_g = gamma.bounds()
    slacks = np.minimum.reduce(
        [
            sp_b + sv_b - C_g * pv_b,
            c_g * pv_b + sv_b - sp_b,
            c_g * pv_b + sp_b - sv_b,
        ]
    )
    min_slack = float(slacks.min())
    if not min_slack > 0.0:
        failures.append(
            f"strict triangle inequalities fail at {int((slacks <= 0).sum())} "
            f"boundary samples (worst slack {min_slack:.3e})"
        )

    return RawTensionsReport(
        admissible=not failures,
        c_s=c_s,
        C_s=C_s,
        pv_range=(float(pv_on.min()), float(pv_on.max())),
        min_strict_slack=min_slack,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# Discrete Dirichlet problems
# ---------------------------------------------------------------------------

def laplace_solve(
    grid: TorusGrid,
    unknown_mask: np.ndarray,
    dirichlet_values: np.ndarray,
    *,
    x0: np.ndarray | None = None,
    maxiter: int | None = None,
) -> np.ndarray:
    """Solve the discrete Laplace equation on ``unknown_mask`` cells.

    Cells outside the mask are Dirichlet cells carrying
    ``dirichlet_values``; the 2d+1-point Laplacian vanishes on every
    unknown cell.  Returns the full-grid solution array.  The system is
    symmetric positive definite and solved with conjugate gradients to a
    residual infinity-norm below ``1e-10 * (range of referenced data)``
    plus a floating-point floor ``~eps * |A| * |x|`` (without the floor,
    constant data — range zero — would demand an unattainable residual);
    the discrete maximum principle is asserted (1e-8 slack).
    """
    unknown_mask = np.asarray(unknown_mask, dtype=bool)
    if unknown_mask.shape != grid.shape:
        raise TensionError("unknown_mask shape does not match grid")
    values = np.array(dirichlet_values, dtype=np.float64)
    if values.shape != grid.shape:
        raise TensionError("dirichlet_values shape does not match grid")

    n_unknown = int(unknown_mask.sum())
    if n_unknown == 0:
        return values

    index = np.full(grid.shape, -1, dtype=np.int64)
    index[unknown_mask] = np.arange(n_unknown)

    rows, cols, known_touch = [], [], np.zeros(n_unknown, dtype=bool)
    rhs = np.zeros(n_unknown)
    ref_min, ref_max = math.inf, -math.inf
    center = index[unknown_mask]
    for axis in range(grid.d):
        for shift in (1, -1):
            nb_index = np.roll(index, shift, axis=axis)[unknown_mask]
            nb_value = np.roll(values, shift, axis=axis)[unknown_mask]
            interior = nb_index >= 0
            rows.append(center[interior])
            cols.append(nb_index[interior])
            if np.any(~interior):
                rhs_vals = nb_value[~interior]
                np.add.at(rhs, center[~interior], rhs_vals)
                known_touch[center[~interior]] = True
                ref_min = min(ref_min, float(rhs_vals.min()))
                ref_max = max(ref_max, float(rhs_vals.max()))

    two_d = 2 * grid.d
    adjacency = sp.csr_matrix(
        (
            np.ones(sum(len(r) for r in rows)),
            (np.concatenate(rows), np.concatenate(cols)),
        ),
        shape=(n_unknown, n_unknown),
    )
    if not known_touch.all():
        n_comp, labels = connected_components(adjacency, directed=False)
        dataless = set(range(n_comp)) - set(labels[known_touch])
        if dataless:
            raise TensionError(
                f"{len(dataless)} connected component(s) of the unknown "
                "region touch no Dirichlet cell; the problem is singular"
            )
    matrix = sp.identity(n_unknown, format="csr") * two_d - adjacency

    data_range = ref_max - ref_min
    scale = max(abs(ref_min), abs(ref_max), 1e-30)
    eps = float(np.finfo(np.float64).eps)
    floor = 64.0 * eps * grid.d * scale * math.sqrt(n_unknown)
    tol = 1e-10 * data_range + floor
    if maxiter is None:
        maxiter = 20 * grid.n + 200
    x0_vec = None if x0 is None else np.asarray(x0, dtype=np.float64)[unknown_mask]
    solution, info = cg(
        matrix, rhs, x0=x0_vec, rtol=0.0, atol=tol, maxiter=maxiter
    )
    residual = float(np.abs(matrix @ solution - rhs).max())
    if info != 0 or residual > tol:
        raise NumericalError(
            f"Dirichlet solve did not converge: residual {residual:.3e} "
            f"(tolerance {tol:.3e}, cg status {info})"
        )

    slack = 1e-8 * max(1.0, data_range, abs(ref_min), abs(ref_max))
    if solution.min() < ref_min - slack or solution.max() > ref_max + slack:
        raise NumericalError(
            "discrete maximum principle violated: solution range "
            f"[{solution.min():.6g}, {solution.max():.6g}] vs data range "
            f"[{ref_min:.6g}, {ref_max:.6g}]"
        )

    out = values.copy()
    out[unknown_mask] = solution
    return out


def _seam_mask(grid: TorusGrid) -> np.ndarray:
    """Cells whose centre lies on a torus seam plane (index 0 on any axis)."""
    mask = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.d):
        sl = [slice(None)] * grid.d
        sl[axis] = 0
        mask[tuple(sl)] = True
    return mask


def extend_pv(
    raw: RawTensions, geometry: Geometry
) -> tuple[np.ndarray, float, float]:
    """Extend gamma_pv to the torus; returns (field, c_pv, C_pv).

    The field equals gamma_pv on the container, is discretely harmonic
    outside with Dirichlet data gamma_pv on the boundary layer, and is
    pinned to ``min gamma_pv`` on the torus seam cells.  ``c_pv`` / ``C_pv``
    are the min/max of gamma_pv over the boundary layer; the extension
    stays inside [c_pv, C_pv] by the maximum principle.
    """
    grid = geometry.grid
    if not geometry.has_substrate:
        raise TensionError("tension extension requires a geometry with boundary")
    layer = boundary_layer_mask(geometry)
    seam = _seam_mask(grid)
    if (seam & (geometry.omega_mask | layer)).any():
        raise TensionError(
            "container reaches the torus seam; rebuild with a seam margin"
        )

    pv = raw.sample("pv", grid)
    c_pv = float(pv[layer].min())
    C_pv = float(pv[layer].max())

    known = geometry.omega_mask | layer | seam
    values = pv.copy()
    values[seam] = c_pv
    values[~known] = 0.0  # ignored; overwritten by the solve
    out = laplace_solve(grid, ~known, values)
    # The exact discrete solution satisfies the maximum principle; clip
    # away solver residual so the advertised bounds hold exactly (the
    # far-field triangle inequality can be tight and must not be broken
    # by 1e-13 noise).
    out[~known] = np.clip(out[~known], c_pv, C_pv)
    return out, c_pv, C_pv


@dataclass(frozen=True)
class ModifiedTensions:
    """The three torus-wide tension fields with their global bounds."""

    grid: TorusGrid
    pv: np.ndarray
    sp: np.ndarray
    sv: np.ndarray
    lower: float
    upper: float
    delta_used: float = math.nan
    halvings: int = 0
    strict_slack: float = math.nan

    def __post_init__(self) -> None:
        for name in ("pv", "sp", "sv"):
            arr = getattr(self, name)
            if arr.shape != self.grid.shape:
                raise TensionError(f"{name} field shape does not match grid")

    @classmethod
    def constant(cls, grid: TorusGrid, pv: float, sp: float, sv: float):
        vals = (pv, sp, sv)
        if min(vals) <= 0.0:
            raise TensionError(f"tension constants must be positive, got {vals}")
        return cls(
            grid=grid,
            pv=np.full(grid.shape, float(pv)),
            sp=np.full(grid.shape, float(sp)),
            sv=np.full(grid.shape, float(sv)),
            lower=float(min(vals)),
            upper=float(max(vals)),
        )

    @classmethod
    def from_fields(cls, grid: TorusGrid, pv, sp, sv, **extra):
        pv, sp, sv = (np.asarray(a, dtype=np.float64) for a in (pv, sp, sv))
        lo = float(min(pv.min(), sp.min(), sv.min()))
        hi = float(max(pv.max(), sp.max(), sv.max()))
        return cls(grid=grid, pv=pv, sp=sp, sv=sv, lower=lo, upper=hi, **extra)

    @property
    def is_spatially_constant(self) -> bool:
        return all(
            np.ptp(getattr(self, name)) == 0.0 for name in ("pv", "sp", "sv")
        )

    def sigma(self) -> np.ndarray:
        """The wetting contrast gamma_sp - gamma_sv."""
        return self.sp - self.sv


@dataclass
class TriangleReport:
    """Cellwise triangle-inequality audit of a :class:`ModifiedTensions`."""

    worst_slack: dict
    violations: dict
    total_cells: int

    @property
    def ok(self) -> bool:
        return all(v == 0 for v in self.violations.values())


def verify_triangle(t: ModifiedTensions, tol: float = 0.0) -> TriangleReport:
    """Evaluate the three non-strict triangle inequalities cellwise.

    ``slack >= -tol`` counts as satisfied; the default is exact.  Reports
    the worst slack and the number of violating cells per inequality.
    """
    combos = {
        "pv<=sp+sv": t.sp + t.sv - t.pv,
        "sp<=pv+sv": t.pv + t.sv - t.sp,
        "sv<=pv+sp": t.pv + t.sp - t.sv,
    }
    worst = {name: float(s.min()) for name, s in combos.items()}
    viol = {name: int((s < -tol).sum()) for name, s in combos.items()}
    return TriangleReport(
        worst_slack=worst, violations=viol, total_cells=t.pv.size
    )


def extend_substrate(
    raw: RawTensions,
    geometry: Geometry,
    gamma: Anisotropy,
    *,
    delta: float | None = None,
    max_halvings: int = 4,
) -> ModifiedTensions:
    """Build the full :class:`ModifiedTensions` triple.

    On the boundary layer the substrate tensions become
    ``gamma_s(x) / gamma(normal(x))``; on the two strips of width delta
    they are the ratio of two harmonic strip solutions (data gamma_s on
    the boundary, ``C_gamma C_pv / 2`` on the outer strip edge, against
    the reference solution with data gamma(normal) and ``c_gamma``);
    everywhere else they take the constant ``C_gamma C_pv / (2 c_gamma)``.

    Strictness of the strip triangle inequalities (against the extended
    particle-vapor tension) is verified a posteriori; on failure delta is
    halved, up to ``max_halvings`` times.
    """
    grid = geometry.grid
    report = validate_raw_tensions(raw, geometry, gamma)
    if not report.admissible:
        raise TensionError(
            "raw tensions are not admissible: " + "; ".join(report.failures)
        )

    pv_field, c_pv, C_pv = extend_pv(raw, geometry)
    c_g, C_g = gamma.bounds()
    far = C_g * C_pv / (2.0 * c_g)
    outer_s = 0.5 * C_g * C_pv

    layer = boundary_layer_mask(geometry)
    normals = geometry.normal_band[(slice(None),) + np.nonzero(layer)]
    gamma_nu_layer = gamma(np.moveaxis(normals, 0, -1))

    sp_data = raw.sample("sp", grid)[layer]
    sv_data = raw.sample("sv", grid)[layer]

    delta0 = geometry.delta if delta is None else float(delta)
    last_failure = ""
    for halving in range(max_halvings + 1):
        delta_k = delta0 / 2**halving
        strips = {}
        ok = True
        slack_min = math.inf
        for sign in (+1, -1):
            strip = band_mask(geometry, sign, delta=delta_k) & ~layer
            if not strip.any():
                strips[sign] = (strip, None, None, None)
                continue
            g_delta = _strip_solve(grid, strip, layer, gamma_nu_layer, c_g)
            g_sp = _strip_solve(grid, strip, layer, sp_data, outer_s)
            g_sv = _strip_solve(grid, strip, layer, sv_data, outer_s)
            pv_s = pv_field[strip]
            slacks = np.minimum.reduce(
                [
                    g_sp + g_sv - C_g * pv_s,
                    c_g * pv_s + g_sv - g_sp,
                    c_g * pv_s + g_sp - g_sv,
                ]
            )
            slack_min = min(slack_min, float(slacks.min()))
            if not slacks.min() > 0.0:
                ok = False
                last_failure = (
                    f"delta={delta_k:.3g}: strict strip inequalities fail at "
                    f"{int((slacks <= 0).sum())} cells "
                    f"(worst slack {float(slacks.min()):.3e})"
                )
                break
            strips[sign] = (strip, g_delta, g_sp, g_sv)
        if ok:
            break
    else:
        raise NumericalError(
            f"strip construction failed after {max_halvings} halvings: "
            + last_failure
        )

    sp_field = np.full(grid.shape, far)
    sv_field = np.full(grid.shape, far)
    sp_field[layer] = sp_data / gamma_nu_layer
    sv_field[layer] = sv_data / gamma_nu_layer
    ratio_lo, ratio_hi = [], []
    for sign, (strip, g_delta, g_sp, g_sv) in strips.items():
        if g_delta is None:
            continue
        sp_field[strip] = g_sp / g_delta
        sv_field[strip] = g_sv / g_delta
        lo_d, hi_d = _data_range(gamma_nu_layer, c_g)
        for g_num in (sp_data, sv_data):
            lo_n, hi_n = _data_range(g_num, outer_s)
            ratio_lo.append(lo_n / hi_d)
            ratio_hi.append(hi_n / lo_d)

    # A-priori bounds: every assembled value is either a layer ratio, a
    # strip ratio (bounded by data-range ratios via the maximum
    # principle), or the far constant.
    lo_cand = [far, float((sp_data / gamma_nu_layer).min()),
               float((sv_data / gamma_nu_layer).min())] + ratio_lo
    hi_cand = [far, float((sp_data / gamma_nu_layer).max()),
               float((sv_data / gamma_nu_layer).max())] + ratio_hi
    apriori_lo, apriori_hi = min(lo_cand), max(hi_cand)
    for name, arr in (("sp", sp_field), ("sv", sv_field)):
        if arr.min() < apriori_lo * (1.0 - 1e-6) - 1e-12 or arr.max() > (
            apriori_hi * (1.0 + 1e-6) + 1e-12
        ):
            raise NumericalError(
                f"assembled {name} field escapes its a-priori range "
                f"[{apriori_lo:.6g}, {apriori_hi:.6g}]"
            )

    result = ModifiedTensions.from_fields(
        grid,
        pv_field,
        sp_field,
        sv_field,
        delta_used=delta_k,
        halvings=halving,
        strict_slack=slack_min,
    )
    audit = verify_triangle(result, tol=4.0 * np.finfo(np.float64).eps * result.upper)
    if not audit.ok:
        raise NumericalError(
            "assembled tensions violate the triangle inequalities: "
            f"{audit.violations} (worst slacks {audit.worst_slack})"
        )
    return result


def _data_range(inner: np.ndarray, outer: float) -> tuple[float, float]:
    return (
        min(float(inner.min()), outer),
        max(float(inner.max()), outer),
    )


def _strip_solve(
    grid: TorusGrid,
    strip: np.ndarray,
    layer: np.ndarray,
    layer_values: np.ndarray,
    outer_value: float,
) -> np.ndarray:
    """Solve one strip problem; returns values on the strip cells only."""
    values = np.full(grid.shape, outer_value)
    values[layer] = layer_values
    out = laplace_solve(grid, strip, values)
    return out[strip]
