"""Thresholding dynamics for the obstacle problem.

One step linearises the convolution energy at the current binary phase
``u`` and minimises the linearisation over binary fields supported on
the container, optionally under an exact volume constraint:

* the comparison field ``phi`` is the discrete first variation of the
  energy (both tension placements appear because the tensions multiply
  the *target* point of the convolution);
* the new phase is the sublevel set ``{phi < lambda}`` intersected with
  the container — the obstacle is enforced structurally, cells inside
  the substrate can never activate;
* ``lambda = 0`` for unconstrained descent; with volume preservation it
  is the order statistic that selects exactly ceil(m / cell) cells,
  ties broken by ascending lexicographic cell order (deterministic).

The run driver detects exact stationarity over a window, flags 2-cycles
(both states are kept), and — without the volume constraint — asserts
that the energy never increases beyond a small relative slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .energy import PhaseField, approx_energy, indicator_defect
from .errors import NumericalError
from .geometry import Band, Geometry
from .grid import TorusGrid
from .kernel import GaussianKernel, Kernel, SampledKernel, scale_kernel
from .tensions import ModifiedTensions

__all__ = [
    "SchemeConfig",
    "SchemeState",
    "Trajectory",
    "SchemeError",
    "comparison_field",
    "volume_threshold",
    "threshold",
    "step",
    "run",
    "measure_contact_angle",
    "best_fit_disk_mismatch",
    "periodic_components",
]


class SchemeError(ValueError):
    """Raised for invalid scheme configurations or measurement inputs."""


@dataclass(frozen=True)
class SchemeConfig:
    """Time step, volume target and stopping rules for a run."""

    h: float
    preserve_volume: bool = False
    target_volume: float | None = None
    max_steps: int = 100
    stationarity_window: int = 3
    volume_tol_cells: float = 1.0

    def __post_init__(self) -> None:
        if not self.h > 0.0:
            raise SchemeError(f"h must be positive, got {self.h}")
        if self.max_steps < 1:
            raise SchemeError("max_steps must be at least 1")
        if self.stationarity_window < 1:
            raise SchemeError("stationarity window must be at least 1")
        if self.target_volume is not None and not self.target_volume > 0.0:
            raise SchemeError("target volume must be positive")


@dataclass(frozen=True)
class SchemeState:
    """One snapshot of the evolution (immutable)."""

    step: int
    u: PhaseField
    lam: float
    phi: np.ndarray | None
    energy: float
    volume: float
    interface_cells: int
    defect: float


@dataclass
class Trajectory:
    """Per-step diagnostics plus the retained states of a run.

    ``states`` holds every snapshot when the run was asked to keep them,
    otherwise only the final one (plus both cycle states on oscillation).
    ``diagnostics`` always covers every step.
    """

    diagnostics: list = field(default_factory=list)
    states: list = field(default_factory=list)
    stationary: bool = False
    oscillating: bool = False
    cycle_states: tuple = ()

    @property
    def final(self) -> SchemeState:
        return self.states[-1]

    def diagnostics_rows(self):
        """(step, energy, volume, interface cells, lambda, defect) rows."""
        return list(self.diagnostics)


# ---------------------------------------------------------------------------
# One step
# ---------------------------------------------------------------------------

def comparison_field(
    u: PhaseField,
    t: ModifiedTensions,
    kh: SampledKernel,
    *,
    _conv: dict | None = None,
) -> np.ndarray:
    """First variation of the energy at u (up to the 1/sqrt(h) factor).

    phi(x) = g_pv(x) (K_h * (1_container - u))(x) - (K_h * (g_pv u))(x)
           + (g_sp(x) - g_sv(x)) (K_h * 1_substrate)(x).

    Meaningful on container cells; evaluated everywhere for convenience.
    """
    geo = u.geometry
    if not (u.grid == t.grid == kh.grid):
        raise SchemeError("phase field, tensions and kernel grids differ")
    conv = _conv if _conv is not None else {}
    conv_omega = conv.get("omega")
    if conv_omega is None:
        conv_omega = conv["omega"] = kh.convolve(geo.omega_field())
    conv_s = conv.get("substrate")
    if conv_s is None:
        conv_s = conv["substrate"] = kh.convolve(geo.substrate_field())
    conv_u = kh.convolve(u.values)
    conv["u"] = conv_u
    if np.ptp(t.pv) == 0.0:
        conv_pv_u = t.pv.flat[0] * conv_u
    else:
        conv_pv_u = kh.convolve(t.pv * u.values)
    return t.pv * (conv_omega - conv_u) - conv_pv_u + (t.sp - t.sv) * conv_s


def _cells_needed(m: float, grid: TorusGrid) -> int:
    # ceil with a relative guard so that m = k * cell_measure (computed in
    # floating point) maps to k, not k+1.
    ratio = m / grid.cell_measure
    return int(math.ceil(ratio - 1e-9 * max(1.0, ratio)))


def volume_threshold(phi: np.ndarray, geometry: Geometry, m: float) -> float:
    """Threshold level whose sublevel set has measure ~m (one-cell accuracy).

    Returns the k-th smallest value of phi over container cells for
    k = ceil(m / cell measure); +inf when every container cell is needed.
    """
    k = _cells_needed(m, geometry.grid)
    values = phi[geometry.omega_mask]
    if not np.all(np.isfinite(values)):
        raise SchemeError("comparison field is not finite on the container")
    if k > values.size:
        raise SchemeError(
            f"target volume {m} needs {k} cells but the container has "
            f"{values.size}"
        )
    if k <= 0:
        return -math.inf
    if k == values.size:
        return math.inf
    return float(np.partition(values, k - 1)[k - 1])


def threshold(phi: np.ndarray, lam: float, geometry: Geometry) -> PhaseField:
    """Binary field 1 on {phi < lam} within the container, 0 elsewhere."""
    mask = (phi < lam) & geometry.omega_mask
    return PhaseField.from_mask(geometry, mask)


def _select_by_volume(
    phi: np.ndarray, geometry: Geometry, m: float
) -> tuple[float, np.ndarray]:
    """Exactly k cells of smallest phi (ties by C-order cell index)."""
    grid = geometry.grid
    k = _cells_needed(m, grid)
    omega_flat = geometry.omega_mask.ravel()
    values = phi.ravel()[omega_flat]
    if k > values.size:
        raise SchemeError(
            f"target volume {m} needs {k} cells but the container has "
            f"{values.size}"
        )
    mask = np.zeros(grid.cell_count, dtype=bool)
    if k > 0:
        order = np.argsort(values, kind="stable")  # stable = lexicographic ties
        chosen = np.flatnonzero(omega_flat)[order[:k]]
        mask[chosen] = True
        lam = float(values[order[k - 1]])
    else:
        lam = -math.inf
    return lam, mask.reshape(grid.shape)


def _make_state(
    k: int,
    u: PhaseField,
    lam: float,
    phi: np.ndarray | None,
    t: ModifiedTensions,
    kh: SampledKernel,
    conv: dict,
) -> SchemeState:
    conv_u = kh.convolve(u.values)
    conv_for_energy = dict(conv)
    conv_for_energy["u"] = conv_u
    energy = approx_energy(u, t, kh, _conv=conv_for_energy)
    return SchemeState(
        step=k,
        u=u,
        lam=lam,
        phi=phi,
        energy=energy,
        volume=u.volume(),
        interface_cells=u.interface_cell_count(),
        defect=indicator_defect(conv_u, u.geometry),
    )


def step(
    state: SchemeState,
    config: SchemeConfig,
    t: ModifiedTensions,
    kh: SampledKernel,
    *,
    _conv: dict | None = None,
) -> SchemeState:
    """Advance one thresholding step."""
    conv = _conv if _conv is not None else {}
    phi = comparison_field(state.u, t, kh, _conv=conv)
    geometry = state.u.geometry
    if config.preserve_volume:
        m = config.target_volume
        if m is None:
            m = state.u.volume()
        lam, mask = _select_by_volume(phi, geometry, m)
        u_next = PhaseField.from_mask(geometry, mask)
        tol = config.volume_tol_cells * geometry.grid.cell_measure
        if abs(u_next.volume() - m) > tol:
            raise NumericalError(
                f"volume drifted: |{u_next.volume()} - {m}| > {tol}"
            )
    else:
        lam = 0.0
        u_next = threshold(phi, lam, geometry)
    return _make_state(state.step + 1, u_next, lam, phi, t, kh, conv)


def run(
    initial: PhaseField,
    config: SchemeConfig,
    t: ModifiedTensions,
    kernel_or_sampled,
    *,
    keep_states: bool = False,
    on_state=None,
) -> Trajectory:
    """Iterate the scheme until stationarity, a 2-cycle, or max_steps.

    ``keep_states`` retains every intermediate phase field (memory!);
    otherwise only diagnostics plus the fields needed for reporting are
    kept; ``on_state`` is called with each state as it is produced (for
    streaming snapshots to disk).  Without volume preservation the
    energy must be non-increasing up to ``1e-8 * E(u0)`` slack —
    violation raises, since it would mean the linearisation argument
    failed numerically.
    """
    geometry = initial.geometry
    grid = geometry.grid
    if isinstance(kernel_or_sampled, SampledKernel):
        kh = kernel_or_sampled
        if kh.h != config.h:
            raise SchemeError("sampled kernel h differs from config h")
    else:
        kh = scale_kernel(kernel_or_sampled, grid, config.h)
    if not initial.is_binary():
        raise SchemeError("initial phase field must be binary")
    if config.preserve_volume:
        m = config.target_volume
        if m is not None:
            if not m < geometry.omega_volume:
                raise SchemeError("target volume must be below the container's")
            if abs(initial.volume() - m) > grid.cell_measure:
                raise SchemeError(
                    f"initial volume {initial.volume()} misses the target "
                    f"{m} by more than one cell"
                )

    def diag_row(s: SchemeState):
        return (s.step, s.energy, s.volume, s.interface_cells, s.lam, s.defect)

    conv: dict = {}
    traj = Trajectory()
    state = _make_state(0, initial, math.nan, None, t, kh, conv)
    traj.diagnostics.append(diag_row(state))
    if keep_states:
        traj.states.append(state)
    if on_state is not None:
        on_state(state)
    e0_slack = 1e-8 * max(abs(state.energy), 1.0)
    prev_values = None
    streak = 0
    for _ in range(config.max_steps):
        new_state = step(state, config, t, kh, _conv=conv)
        traj.diagnostics.append(diag_row(new_state))
        if keep_states:
            traj.states.append(new_state)
        if on_state is not None:
            on_state(new_state)
        if not config.preserve_volume and (
            new_state.energy > state.energy + e0_slack
        ):
            raise NumericalError(
                f"energy increased at step {new_state.step}: "
                f"{state.energy!r} -> {new_state.energy!r}"
            )
        unchanged = np.array_equal(new_state.u.values, state.u.values)
        if (
            prev_values is not None
            and not unchanged
            and np.array_equal(new_state.u.values, prev_values)
        ):
            traj.oscillating = True
            traj.cycle_states = (state, new_state)
            if not keep_states:
                traj.states = [state, new_state]
            return traj
        prev_values = state.u.values
        streak = streak + 1 if unchanged else 0
        state = new_state
        if streak >= config.stationarity_window:
            traj.stationary = True
            break
    if not keep_states:
        traj.states = [state]
    return traj


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------

def periodic_components(mask: np.ndarray) -> tuple[int, np.ndarray]:
    """Connected components of a binary mask with periodic wrapping."""
    labels, n = ndimage.label(mask)
    if n == 0:
        return 0, labels
    parent = list(range(n + 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for axis in range(mask.ndim):
        first = np.take(labels, 0, axis=axis)
        last = np.take(labels, -1, axis=axis)
        both = (first > 0) & (last > 0)
        for a, b in zip(first[both].ravel(), last[both].ravel()):
            union(int(a), int(b))
    roots = {find(i) for i in range(1, n + 1)}
    remap = {r: i + 1 for i, r in enumerate(sorted(roots))}
    out = np.zeros_like(labels)
    nz = labels > 0
    out[nz] = [remap[find(int(v))] for v in labels[nz]]
    return len(roots), out


def best_fit_disk_mismatch(u: PhaseField) -> tuple[float, np.ndarray, float]:
    """Symmetric-difference fraction of u against its best-fit disk (d=2).

    The centre is the torus-aware centroid (circular mean per axis), the
    radius matches the volume.  Returns (fraction of area, centre, R).
    """
    grid = u.grid
    if grid.d != 2:
        raise SchemeError("best-fit disk is a 2-d measurement")
    vals = u.values
    total = vals.sum()
    if total == 0.0:
        raise SchemeError("empty phase has no best-fit disk")
    center = np.empty(2)
    for axis in range(2):
        coords = grid.axis_coords()
        weights = vals.sum(axis=1 - axis)
        angles = 2.0 * math.pi * coords
        mean_angle = math.atan2(
            float((weights * np.sin(angles)).sum()),
            float((weights * np.cos(angles)).sum()),
        )
        center[axis] = (mean_angle / (2.0 * math.pi)) % 1.0
    area = total * grid.cell_measure
    radius = math.sqrt(area / math.pi)
    pts = np.stack(grid.meshgrid(), axis=-1)
    disk = grid.torus_distance(pts, center) < radius
    mismatch = float(np.logical_xor(vals > 0.5, disk).sum() * grid.cell_measure)
    return mismatch / area, center, radius


def measure_contact_angle(
    u: PhaseField,
    geometry: Geometry,
    *,
    level_field: np.ndarray | None = None,
    level: float = 0.0,
    smoothing_h: float | None = None,
    window_cells: int = 12,
    skip_cells: int | None = None,
    fit: str = "circle",
) -> list[float]:
    """Interior contact angles (degrees) of a droplet on a flat substrate.

    The two contact points come from the wetted cells (phase cells one
    row above the substrate).  Near each contact the free boundary is
    sampled at subpixel accuracy from the zero level of ``level_field``
    (negative inside the phase; by default a mildly smoothed indicator).
    A circle is fitted through the ``window_cells`` interface points and
    the angle is taken between its tangent at substrate height and the
    substrate line.  ``fit="line"`` falls back to a straight-line fit
    through the same points.

    ``skip_cells`` rows nearest the substrate are excluded: there the
    level set is bent by the substrate truncation, over a layer about
    three standard deviations of the smoothing kernel thick.  The
    default skip is computed from ``smoothing_h`` (the square width of
    the kernel that produced ``level_field``, or of the built-in
    smoothing).  Pass it when supplying a comparison field from a run.
    """
    grid = u.grid
    if grid.d != 2:
        raise SchemeError("contact angles are measured in d=2")
    if not isinstance(geometry.shape, Band):
        raise SchemeError("contact angles need a flat (band) substrate")
    if not u.is_binary():
        raise SchemeError("phase field must be binary")

    n_comp, labels = periodic_components(u.values > 0.5)
    if n_comp == 0:
        raise SchemeError("empty phase: no contact points")

    axis = geometry.shape.axis
    if axis != 1:
        raise SchemeError("flat substrate must bound the x2 coordinate")
    y0 = geometry.shape.lo % 1.0
    spacing = grid.spacing
    coords = grid.axis_coords()
    # First cell row whose centre lies above the substrate line.
    j0 = int(np.searchsorted(coords, y0 + 0.5 * spacing - 1e-12))

    wetted_cols = np.flatnonzero(u.values[:, j0] > 0.5)
    if wetted_cols.size == 0:
        raise SchemeError("phase does not touch the substrate")
    touching = set(labels[wetted_cols, j0].tolist())
    if len(touching) > 1:
        raise SchemeError("more than one component touches the substrate")
    if wetted_cols[0] == 0 and wetted_cols[-1] == grid.n - 1:
        raise SchemeError("droplet wraps around the torus seam; recentre it")

    if level_field is None:
        if smoothing_h is None:
            smoothing_h = (3.0 * spacing) ** 2
        w = scale_kernel(GaussianKernel(), grid, smoothing_h).convolve(u.values)
        f = 0.5 - w  # negative inside the phase
    else:
        f = np.asarray(level_field, dtype=np.float64) - level
    if skip_cells is None:
        if smoothing_h is not None:
            # sigma of the kernel K_h is sqrt(2 h); clear three of them.
            skip_cells = max(3, math.ceil(3.0 * math.sqrt(2.0 * smoothing_h) / spacing))
        else:
            skip_cells = 3

    pts_left = _trace_interface(
        f, grid, start_col=int(wetted_cols[0]), start_row=j0, side="left",
        skip=skip_cells, count=window_cells,
    )
    pts_right = _trace_interface(
        f, grid, start_col=int(wetted_cols[-1]), start_row=j0, side="right",
        skip=skip_cells, count=window_cells,
    )
    if fit == "line":
        return [
            _line_contact_angle(pts_left, "left"),
            _line_contact_angle(pts_right, "right"),
        ]
    if fit != "circle":
        raise SchemeError(f"unknown fit kind {fit!r}")
    # The free boundary of a capillary droplet is a single circular arc,
    # so one circle is fitted through both branches: the joint fit pins
    # the centre and radius far better than two short per-side arcs.
    circle = _kasa_circle(np.vstack([pts_left, pts_right]))
    left = _circle_contact_angle(circle, y0, "left")
    right = _circle_contact_angle(circle, y0, "right")
    if left is None or right is None:
        # Fitted circle misses the substrate line; fall back to lines.
        return [
            _line_contact_angle(pts_left, "left"),
            _line_contact_angle(pts_right, "right"),
        ]
    return [left, right]


def _trace_interface(
    f: np.ndarray,
    grid: TorusGrid,
    *,
    start_col: int,
    start_row: int,
    side: str,
    skip: int,
    count: int,
    max_step_cells: float = 1.5,
) -> np.ndarray:
    """Subpixel zero crossings of f row by row above one contact point.

    Tracing stops early when the crossing jumps more than
    ``max_step_cells`` columns between consecutive rows — there the
    interface has turned nearly horizontal (droplet apex) and row scans
    cut it at grazing incidence.
    """
    n = grid.n
    coords = grid.axis_coords()
    pts = []
    guess = float(coords[start_col])
    for j in range(start_row + skip, start_row + skip + count):
        if j >= n:
            break
        row = f[:, j]
        # Crossings between consecutive cells (periodic in the column index).
        nxt = np.roll(row, -1)
        cross = np.flatnonzero((row < 0.0) & (nxt >= 0.0) | (row >= 0.0) & (nxt < 0.0))
        if cross.size == 0:
            break
        xs = []
        for i in cross:
            x0, f0 = coords[i], row[i]
            f1 = nxt[i]
            frac = f0 / (f0 - f1)
            xs.append((x0 + frac * grid.spacing) % 1.0)
        xs = np.asarray(xs)
        deltas = (xs - guess + 0.5) % 1.0 - 0.5
        pick = int(np.argmin(np.abs(deltas)))
        if pts and abs(deltas[pick]) > max_step_cells * grid.spacing:
            break
        x = guess + deltas[pick]
        pts.append((x, coords[j]))
        guess = x
    if len(pts) < 3:
        raise SchemeError(
            f"could not trace the {side} interface ({len(pts)} points); "
            "the phase may be too small for the fit window"
        )
    return np.asarray(pts)


def _kasa_circle(pts: np.ndarray) -> tuple[float, float, float]:
    """Algebraic circle fit: minimise sum (x^2+y^2 + D x + E y + F)^2."""
    x, y = pts[:, 0], pts[:, 1]
    a_mat = np.stack([x, y, np.ones_like(x)], axis=-1)
    b_vec = -(x * x + y * y)
    (d_coef, e_coef, f_coef), *_ = np.linalg.lstsq(a_mat, b_vec, rcond=None)
    xc, yc = -0.5 * d_coef, -0.5 * e_coef
    r2 = xc * xc + yc * yc - f_coef
    if r2 <= 0.0:
        raise SchemeError("degenerate circle fit through the interface points")
    return float(xc), float(yc), math.sqrt(r2)


def _circle_contact_angle(
    circle: tuple[float, float, float], y0: float, side: str
) -> float | None:
    """Interior angle of the circle's tangent against the line y = y0."""
    xc, yc, radius = circle
    under = radius * radius - (y0 - yc) ** 2
    if under <= 0.0:
        return None
    half = math.sqrt(under)
    x_contact = xc + half if side == "right" else xc - half
    radial = np.asarray([(x_contact - xc) / radius, (y0 - yc) / radius])
    tangent = np.asarray([-radial[1], radial[0]])
    if tangent[1] < 0:
        tangent = -tangent
    if side == "right":
        return math.degrees(math.atan2(tangent[1], -tangent[0]))
    return math.degrees(math.atan2(tangent[1], tangent[0]))


def _line_contact_angle(pts: np.ndarray, side: str) -> float:
    """Interior angle of the principal line through the points."""
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    t = vt[0]
    if t[1] < 0:
        t = -t
    if side == "right":
        return math.degrees(math.atan2(t[1], -t[0]))
    return math.degrees(math.atan2(t[1], t[0]))
