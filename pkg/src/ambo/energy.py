"""The approximate convolution energy, its sharp limit, and the lemma checks.

The central object is

    E_h(u) = (1/sqrt(h)) * integral over the container of
        g_pv * u * K_h*(1_container - u)
      + g_sp * u * K_h*(1_substrate)
      + g_sv * (1_container - u) * K_h*(1_substrate),

discretised with the cell-measure midpoint rule, so that E_h is exactly
the quadratic form the thresholding scheme linearises.  Three groups of
verification routines accompany it:

* :func:`sharp_energy` evaluates the limiting interfacial energy of a
  parametric shape by adaptive quadrature (never from grid gradients);
* :func:`monotonicity_check` compares E at time steps h and N^2 h;
* :func:`inequality_suite` evaluates four discrete integral inequalities
  exactly (integer shift-counts via per-level FFT correlations), so the
  asserted slack tolerances are pure floating-point allowances.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .anisotropy import Anisotropy
from .errors import NumericalError
from .expressions import Expression, parse_expression
from .geometry import Geometry
from .grid import TorusGrid
from .kernel import (
    Kernel,
    SampledKernel,
    TriangularKernel,
    scale_kernel,
    scale_kernel_gradient,
)
from .tensions import ModifiedTensions

__all__ = [
    "PhaseField",
    "ShapeSpec",
    "EnergyError",
    "approx_energy",
    "sharp_energy",
    "convergence_study",
    "monotonicity_check",
    "inequality_suite",
    "shift_weighted_sum",
    "indicator_defect",
]


class EnergyError(ValueError):
    """Raised for inadmissible phase fields or shape descriptions."""


# ---------------------------------------------------------------------------
# Phase fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseField:
    """A [0,1]-valued field supported on the container."""

    geometry: Geometry
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.geometry.grid.shape:
            raise EnergyError(
                f"values shape {vals.shape} != grid {self.geometry.grid.shape}"
            )
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise EnergyError(
                f"phase values must lie in [0,1]; got range "
                f"[{vals.min()}, {vals.max()}]"
            )
        if np.any(vals[~self.geometry.omega_mask] != 0.0):
            raise EnergyError("phase field must vanish outside the container")
        object.__setattr__(self, "values", vals)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zeros(cls, geometry: Geometry) -> "PhaseField":
        return cls(geometry, np.zeros(geometry.grid.shape))

    @classmethod
    def from_mask(cls, geometry: Geometry, mask: np.ndarray) -> "PhaseField":
        vals = np.where(mask & geometry.omega_mask, 1.0, 0.0)
        return cls(geometry, vals)

    @classmethod
    def from_shape(cls, geometry: Geometry, shape) -> "PhaseField":
        inside = shape.signed_distance(geometry.grid) > 0.0
        return cls.from_mask(geometry, inside)

    @classmethod
    def random(
        cls,
        geometry: Geometry,
        rng: np.random.Generator,
        levels: int | None = None,
    ) -> "PhaseField":
        """Uniform random values on the container, optionally quantised.

        With ``levels=L`` the values are snapped to {0, 1/(L-1), ..., 1},
        which keeps the number of distinct values small — the exact
        layer-cake evaluation in :func:`shift_weighted_sum` needs that.
        """
        vals = rng.uniform(0.0, 1.0, size=geometry.grid.shape)
        if levels is not None:
            if levels < 2:
                raise EnergyError(f"levels must be >= 2, got {levels}")
            vals = np.round(vals * (levels - 1)) / (levels - 1)
        vals[~geometry.omega_mask] = 0.0
        return cls(geometry, vals)

    # -- properties ----------------------------------------------------------
    @property
    def grid(self) -> TorusGrid:
        return self.geometry.grid

    def volume(self) -> float:
        return float(self.values.sum() * self.grid.cell_measure)

    def is_binary(self) -> bool:
        v = self.values
        return bool(np.all((v == 0.0) | (v == 1.0)))

    def interface_cell_count(self) -> int:
        """Cells of {u=1} with at least one zero neighbour (binary u)."""
        v = self.values
        boundary = np.zeros(v.shape, dtype=bool)
        for axis in range(v.ndim):
            for shift in (1, -1):
                boundary |= np.roll(v, shift, axis=axis) != v
        return int((boundary & (v == 1.0)).sum())

    def with_values(self, values: np.ndarray) -> "PhaseField":
        return PhaseField(self.geometry, values)


# ---------------------------------------------------------------------------
# Approximate energy
# ---------------------------------------------------------------------------

def _check_same_grid(u: PhaseField, t: ModifiedTensions, kh: SampledKernel):
    if not (u.grid == t.grid == kh.grid):
        raise EnergyError("phase field, tensions and kernel use different grids")


def approx_energy(
    u: PhaseField,
    t: ModifiedTensions,
    kh: SampledKernel,
    *,
    _conv: dict | None = None,
) -> float:
    """Evaluate E_h(u); always nonnegative.

    ``_conv`` lets the scheme pass precomputed convolutions of the
    container and substrate indicators (keys "omega", "substrate").
    """
    _check_same_grid(u, t, kh)
    geo = u.geometry
    grid = u.grid
    omega = geo.omega_mask.astype(np.float64)
    conv = _conv or {}
    conv_omega = conv.get("omega")
    if conv_omega is None:
        conv_omega = kh.convolve(omega)
    conv_s = conv.get("substrate")
    if conv_s is None:
        conv_s = kh.convolve(geo.substrate_field())
    conv_u = conv.get("u")
    if conv_u is None:
        conv_u = kh.convolve(u.values)

    inside = geo.omega_mask
    complement = omega - u.values
    pv_term = (t.pv * u.values * (conv_omega - conv_u))[inside].sum()
    sp_term = (t.sp * u.values * conv_s)[inside].sum()
    sv_term = (t.sv * complement * conv_s)[inside].sum()
    return float(
        (pv_term + sp_term + sv_term) * grid.cell_measure / math.sqrt(kh.h)
    )


# ---------------------------------------------------------------------------
# Sharp energy of parametric shapes
# ---------------------------------------------------------------------------

class Arc:
    """A smooth parametric boundary piece, traversed with the phase on
    its left (so the outward normal is the tangent rotated clockwise)."""

    def point(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def velocity(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray([0.0, 1.0])
        pts = self.point(t)
        return pts[0], pts[1]


@dataclass(frozen=True)
class CircleArc(Arc):
    center: tuple
    radius: float
    angle0: float = 0.0
    angle1: float = 2.0 * math.pi

    def point(self, t):
        a = self.angle0 + (self.angle1 - self.angle0) * np.asarray(t)
        c = np.asarray(self.center)
        return c + self.radius * np.stack([np.cos(a), np.sin(a)], axis=-1)

    def velocity(self, t):
        a = self.angle0 + (self.angle1 - self.angle0) * np.asarray(t)
        da = self.angle1 - self.angle0
        return self.radius * da * np.stack([-np.sin(a), np.cos(a)], axis=-1)


@dataclass(frozen=True)
class EllipseArc(Arc):
    center: tuple
    semi_x: float
    semi_y: float
    angle0: float = 0.0
    angle1: float = 2.0 * math.pi

    def point(self, t):
        a = self.angle0 + (self.angle1 - self.angle0) * np.asarray(t)
        c = np.asarray(self.center)
        return c + np.stack(
            [self.semi_x * np.cos(a), self.semi_y * np.sin(a)], axis=-1
        )

    def velocity(self, t):
        a = self.angle0 + (self.angle1 - self.angle0) * np.asarray(t)
        da = self.angle1 - self.angle0
        return da * np.stack(
            [-self.semi_x * np.sin(a), self.semi_y * np.cos(a)], axis=-1
        )


@dataclass(frozen=True)
class Segment(Arc):
    start: tuple
    end: tuple

    def point(self, t):
        p0, p1 = np.asarray(self.start), np.asarray(self.end)
        t = np.asarray(t)[..., None]
        return p0 + t * (p1 - p0)

    def velocity(self, t):
        p0, p1 = np.asarray(self.start), np.asarray(self.end)
        return np.broadcast_to(p1 - p0, np.asarray(t).shape + (2,)).copy()


@dataclass(frozen=True)
class ShapeSpec:
    """Parametric description of a phase region for sharp-energy quadrature.

    ``free`` arcs form the particle-vapor boundary; ``wetted`` arcs lie
    on the container boundary under the particle; ``dry`` arcs are the
    rest of the container boundary.  The free chain must close up to the
    contact points (validated).
    """

    free: tuple
    wetted: tuple = ()
    dry: tuple = ()

    def __post_init__(self) -> None:
        if not self.free:
            raise EnergyError("a shape needs at least one free arc")
        chain = list(self.free) + list(self.wetted)
        starts = [arc.endpoints()[0] for arc in chain]
        ends = [arc.endpoints()[1] for arc in chain]
        # Each arc's end must be some arc's start (closed loop through
        # contact points); greedy matching with a 1e-9 gap tolerance.
        for e in ends:
            gaps = [float(np.linalg.norm(e - s)) for s in starts]
            if min(gaps) > 1e-9:
                raise EnergyError(
                    f"boundary is not closed: arc endpoint {e} is not matched "
                    f"(smallest gap {min(gaps):.2e})"
                )

    # -- common constructions ------------------------------------------------
    @classmethod
    def disk(cls, center, radius: float) -> "ShapeSpec":
        return cls(free=(CircleArc(tuple(center), radius),))

    @classmethod
    def ellipse(cls, center, semi_x: float, semi_y: float) -> "ShapeSpec":
        return cls(free=(EllipseArc(tuple(center), semi_x, semi_y),))

    @classmethod
    def cap(
        cls,
        contact_angle_deg: float,
        radius: float,
        substrate_y: float,
        center_x: float = 0.5,
        dry_span: tuple | None = None,
    ) -> "ShapeSpec":
        """Circular cap standing on the horizontal line y = substrate_y.

        The interior contact angle fixes the circle centre at height
        ``substrate_y - radius*cos(theta)``; the free arc runs counter-
        clockwise from the right contact point to the left one.
        """
        theta = math.radians(contact_angle_deg)
        if not 0.0 < theta < math.pi:
            raise EnergyError("contact angle must be strictly between 0 and 180")
        yc = substrate_y - radius * math.cos(theta)
        # Contact points subtend angles -+(pi/2 - (pi/2 - theta)) about the
        # centre: the radial direction at the right contact is
        # (sin(theta), cos(theta)).
        a_right = math.atan2(math.cos(theta), math.sin(theta))
        a_left = math.pi - a_right
        free = CircleArc((center_x, yc), radius, a_right, a_left)
        right = free.point(np.asarray(0.0))
        left = free.point(np.asarray(1.0))
        wetted = Segment(tuple(left), tuple(right))
        dry_arcs = ()
        if dry_span is not None:
            dry_arcs = (
                Segment((dry_span[0], substrate_y), tuple(left)),
                Segment(tuple(right), (dry_span[1], substrate_y)),
            )
        return cls(free=(free,), wetted=(wetted,), dry=dry_arcs)

    def cap_parameters(self):
        """(radius, center, contact points) for cap-shaped specs."""
        arc = self.free[0]
        if not isinstance(arc, CircleArc):
            raise EnergyError("not a cap spec")
        return arc.radius, np.asarray(arc.center)

    # -- rasterisation --------------------------------------------------------
    def indicator(self, geometry: Geometry) -> PhaseField:
        """Binary phase field of the enclosed region (built-in specs only)."""
        grid = geometry.grid
        arc = self.free[0]
        pts = np.stack(grid.meshgrid(), axis=-1)
        if isinstance(arc, CircleArc) and not self.wetted:
            dist = grid.torus_distance(pts, np.asarray(arc.center))
            return PhaseField.from_mask(geometry, dist < arc.radius)
        if isinstance(arc, EllipseArc):
            delta = grid.wrap_delta(pts - np.asarray(arc.center))
            val = (delta[..., 0] / arc.semi_x) ** 2 + (
                delta[..., 1] / arc.semi_y
            ) ** 2
            return PhaseField.from_mask(geometry, val < 1.0)
        if isinstance(arc, CircleArc) and self.wetted:
            seg = self.wetted[0]
            y0 = float(np.asarray(seg.start)[1])
            dist = grid.torus_distance(pts, np.asarray(arc.center))
            above = pts[..., 1] >= y0
            return PhaseField.from_mask(geometry, (dist < arc.radius) & above)
        raise EnergyError(f"no indicator rule for arc type {type(arc).__name__}")


def _adaptive_arc_quadrature(func, arc: Arc, rel_tol: float = 1e-8):
    """Composite Simpson on the arc parameter with panel doubling.

    ``func(points, normals)`` returns the scalar line density; the
    outward normal is the unit tangent rotated clockwise.  Returns
    (value, error estimate); raises if 2^20 panels do not reach the
    tolerance.
    """

    def evaluate(m: int) -> float:
        t = np.linspace(0.0, 1.0, 2 * m + 1)
        pts = arc.point(t)
        vel = arc.velocity(t)
        speed = np.linalg.norm(vel, axis=-1)
        if np.any(speed == 0.0):
            raise EnergyError("arc has a stationary point; reparameterise")
        tangent = vel / speed[:, None]
        normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=-1)
        density = func(pts, normal) * speed
        weights = np.ones(2 * m + 1)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        return float((weights * density).sum() / (6.0 * m))

    m = 8
    prev = evaluate(m)
    while m <= 1 << 20:
        m *= 2
        cur = evaluate(m)
        err = abs(cur - prev)
        if err <= rel_tol * max(abs(cur), 1e-300) + 1e-15:
            return cur, err
        prev = cur
    raise NumericalError(
        f"arc quadrature did not reach rel tol {rel_tol} (last err {err:.3e})"
    )


def sharp_energy(
    shape: ShapeSpec,
    raw_or_pv,
    gamma: Anisotropy,
    *,
    gamma_sp=None,
    gamma_sv=None,
    rel_tol: float = 1e-8,
) -> float:
    """Limiting interfacial energy of a parametric shape (d=2).

    integral over the free boundary of g_pv(x) gamma(normal)
    + integral of g_sp over the wetted arcs
    + integral of g_sv over the dry arcs.

    ``raw_or_pv`` is a RawTensions-like object with ``gamma_pv`` etc., or
    a number/expression for g_pv alone (then ``gamma_sp``/``gamma_sv``
    supply the substrate densities when wetted/dry arcs are present).
    """
    if hasattr(raw_or_pv, "gamma_pv"):
        pv_expr = raw_or_pv.gamma_pv
        sp_expr = raw_or_pv.gamma_sp
        sv_expr = raw_or_pv.gamma_sv
    else:
        pv_expr = parse_expression(raw_or_pv)
        sp_expr = parse_expression(gamma_sp) if gamma_sp is not None else None
        sv_expr = parse_expression(gamma_sv) if gamma_sv is not None else None

    def eval_expr(expr: Expression, pts: np.ndarray) -> np.ndarray:
        return np.broadcast_to(
            np.asarray(expr((pts[:, 0], pts[:, 1])), dtype=np.float64),
            pts.shape[:1],
        )

    total = 0.0
    for arc in shape.free:
        val, _ = _adaptive_arc_quadrature(
            lambda p, n: eval_expr(pv_expr, p) * gamma(n), arc, rel_tol
        )
        total += val
    for arcs, expr, name in (
        (shape.wetted, sp_expr, "gamma_sp"),
        (shape.dry, sv_expr, "gamma_sv"),
    ):
        if arcs and expr is None:
            raise EnergyError(f"shape has substrate arcs but no {name} given")
        for arc in arcs:
            val, _ = _adaptive_arc_quadrature(
                lambda p, n: eval_expr(expr, p), arc, rel_tol
            )
            total += val
    return total


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------

@dataclass
class StudyRow:
    h: float
    approx: float
    sharp: float
    rel_err: float


@dataclass
class StudyTable:
    rows: list
    order: float

    def as_rows(self):
        return [(r.h, r.approx, r.sharp, r.rel_err) for r in self.rows]


def convergence_study(
    shape: ShapeSpec,
    tensions: ModifiedTensions,
    kernel: Kernel,
    h_seq,
    geometry: Geometry,
    gamma: Anisotropy,
    *,
    pv_value=None,
) -> StudyTable:
    """Tabulate E_h against the sharp energy over a decreasing h sequence.

    Entries with sqrt(h) < 3 * spacing are dropped with a warning; the
    remaining errors must decrease monotonically (else an error is
    raised) and an empirical order is fitted from the log-log slope.
    """
    grid = geometry.grid
    h_list = [float(h) for h in h_seq]
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise EnergyError("h sequence must be strictly decreasing")
    usable = []
    for h in h_list:
        if math.sqrt(h) < 3.0 * grid.spacing:
            warnings.warn(
                f"dropping under-resolved study entry h={h:.3g} "
                f"(sqrt(h) < 3 spacings)",
                stacklevel=2,
            )
        else:
            usable.append(h)
    if len(usable) < 2:
        raise EnergyError("need at least two resolvable h values")

    u = shape.indicator(geometry)
    pv = pv_value if pv_value is not None else float(tensions.pv.flat[0])
    sharp = sharp_energy(shape, pv, gamma)
    rows = []
    for h in usable:
        kh = scale_kernel(kernel, grid, h)
        eh = approx_energy(u, tensions, kh)
        rows.append(StudyRow(h=h, approx=eh, sharp=sharp,
                             rel_err=abs(eh - sharp) / abs(sharp)))
    errs = [r.rel_err for r in rows]
    if any(b >= a for a, b in zip(errs, errs[1:])):
        raise NumericalError(
            f"convergence study error not decreasing: {errs}"
        )
    logs = np.polyfit(np.log([r.h for r in rows]), np.log(errs), 1)
    return StudyTable(rows=rows, order=float(logs[0]))


# ---------------------------------------------------------------------------
# Approximate monotonicity
# ---------------------------------------------------------------------------

@dataclass
class MonotonicityResult:
    lhs: float
    rhs: float
    c_est: float
    signed_c: float

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.c_est))


def monotonicity_check(
    u: PhaseField,
    tensions: ModifiedTensions,
    kernel: Kernel,
    h: float,
    N: int,
) -> MonotonicityResult:
    """Compare E_{N^2 h}(u) against (1 + c N sqrt(h)) E_h(u).

    Returns the two energies and ``c_est``, the smallest nonnegative
    constant making the bound hold (0 when the energy already decreased).
    ``signed_c`` keeps the raw signed slack for diagnostics.  For
    spatially constant tensions the bound must hold with c = 0 up to
    1e-10 relative — a genuine assertion of the discrete theory.
    """
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise EnergyError(f"N must be an integer >= 1, got {N!r}")
    grid = u.grid
    kh = scale_kernel(kernel, grid, h)
    kh_big = scale_kernel(kernel, grid, N * N * h)
    rhs = approx_energy(u, tensions, kh)
    lhs = approx_energy(u, tensions, kh_big)
    if rhs > 0.0:
        signed = (lhs - rhs) / (rhs * N * math.sqrt(h))
    else:
        signed = 0.0 if lhs <= 0.0 else math.inf
    c_est = max(0.0, signed)
    if tensions.is_spatially_constant and lhs > rhs * (1.0 + 1e-10):
        raise NumericalError(
            f"constant-tension monotonicity violated: E_(N^2 h)={lhs!r} > "
            f"E_h={rhs!r} * (1+1e-10) at N={N}, h={h}"
        )
    return MonotonicityResult(lhs=lhs, rhs=rhs, c_est=c_est, signed_c=signed)


# ---------------------------------------------------------------------------
# The four useful inequalities
# ---------------------------------------------------------------------------

def shift_weighted_sum(
    v: np.ndarray,
    omega_mask: np.ndarray,
    weights: np.ndarray,
    *,
    max_levels: int = 256,
) -> float:
    """Exact evaluation of sum_y W(y) sum_{x in container} |v(x+y) - v(x)|.

    Uses the layer-cake formula over the distinct values of v: for each
    inter-level threshold the shifted-difference counts are integers,
    recovered exactly by FFT cross-correlation and rounding.  ``weights``
    is the W array indexed like the sampled kernels (origin at 0).
    """
    levels = np.unique(v)
    if levels.size > max_levels:
        raise EnergyError(
            f"field has {levels.size} distinct values; quantise it (<= "
            f"{max_levels}) for exact shift sums"
        )
    if levels.size == 1:
        return 0.0
    omega = omega_mask.astype(np.float64)
    omega_hat = np.fft.rfftn(omega)
    axes = tuple(range(v.ndim))
    total = 0.0
    for k in range(levels.size - 1):
        dt = levels[k + 1] - levels[k]
        chi = (v >= levels[k + 1]).astype(np.float64)
        chi_hat = np.fft.rfftn(chi)
        # corr_a(y) = sum_x omega(x) chi(x+y)
        corr_a = np.fft.irfftn(np.conj(omega_hat) * chi_hat, s=v.shape, axes=axes)
        inside = omega * chi
        corr_b = np.fft.irfftn(
            np.conj(np.fft.rfftn(inside)) * chi_hat, s=v.shape, axes=axes
        )
        counts = np.rint(corr_a + inside.sum() - 2.0 * corr_b)
        total += dt * float((weights * counts).sum())
    return total


@dataclass
class InequalityResult:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def ok(self, tol: float = 1e-8) -> bool:
        scale = max(abs(self.lhs), abs(self.rhs), 1.0)
        return self.lhs <= self.rhs + tol * scale


@dataclass
class InequalityReport:
    results: list
    h: float

    @property
    def all_ok(self) -> bool:
        return all(r.ok() for r in self.results)

    def worst(self) -> float:
        return min(r.slack for r in self.results)


def inequality_suite(
    v: PhaseField,
    kernel: Kernel,
    h: float,
    *,
    tent: TriangularKernel | None = None,
) -> InequalityReport:
    """Evaluate the four integral inequalities for a [0,1] field.

    The first three use the supplied kernel; the fourth uses a tent
    kernel J (default radius 1) with gradient bound
    |grad J| <= (2/radius) J(./2), giving the provable discrete constant
    c = 2^d * (2/radius) relating grad(J_h) to J_{4h}.  All four hold
    exactly in exact arithmetic for fields vanishing outside the
    container, because the substrate indicator is the exact complement
    of the container's; the suite asserts lhs <= rhs * (1 + 1e-8).
    """
    geo = v.geometry
    grid = v.grid
    s_d = grid.cell_measure
    omega = geo.omega_mask.astype(np.float64)
    substrate = geo.substrate_field()
    kh = scale_kernel(kernel, grid, h)
    conv_v = kh.convolve(v.values)
    conv_s = kh.convolve(substrate)
    inside = geo.omega_mask

    shift_k = s_d * s_d * shift_weighted_sum(v.values, inside, kh.values)

    lhs1 = shift_k
    rhs1 = float(
        2.0 * s_d * (((omega - v.values) * conv_v)[inside].sum())
        + s_d * ((v.values * conv_s)[inside]).sum()
    )

    lhs2 = float(s_d * np.abs(conv_v - v.values)[inside].sum())
    rhs2 = shift_k

    lhs3 = float(s_d * (v.values * (omega - v.values))[inside].sum())
    rhs3 = float(s_d * (((omega - v.values) * conv_v)[inside]).sum()) + lhs2

    if tent is None:
        tent = TriangularKernel()
    grad_jh = scale_kernel_gradient(tent, grid, h)
    grad_conv = np.stack(
        [
            SampledKernel(grid=grid, h=h, values=grad_jh[..., i]).convolve(v.values)
            for i in range(grid.d)
        ],
        axis=-1,
    )
    lhs4 = float(s_d * np.linalg.norm(grad_conv, axis=-1)[inside].sum())
    j4h = scale_kernel(tent, grid, 4.0 * h)
    c_grad = (2.0**grid.d) * (2.0 / tent.radius)
    rhs4 = (
        c_grad
        / math.sqrt(h)
        * s_d
        * s_d
        * shift_weighted_sum(v.values, inside, j4h.values)
    )

    results = [
        InequalityResult("shift-bound", lhs1, rhs1),
        InequalityResult("jensen", lhs2, rhs2),
        InequalityResult("defect-bound", lhs3, rhs3),
        InequalityResult("gradient-bound", lhs4, rhs4),
    ]
    return InequalityReport(results=results, h=h)


def indicator_defect(w: np.ndarray, geometry: Geometry) -> float:
    """The two-phase defect integral of a convolved field on the container."""
    inside = geometry.omega_mask
    return float(
        (w[inside] * (1.0 - w[inside])).sum() * geometry.grid.cell_measure
    )
