"""Thresholding energy, sharp quadrature, and the comparison lemmas."""

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from ambo.anisotropy import Elliptic, Isotropic
from ambo.energy import (
    EnergyError,
    PhaseField,
    Segment,
    ShapeSpec,
    approx_energy,
    convergence_study,
    indicator_defect,
    inequality_suite,
    monotonicity_check,
    sharp_energy,
)
from ambo.geometry import build_geometry, make_shape
from ambo.grid import TorusGrid
from ambo.kernel import GaussianKernel, scale_kernel
from ambo.tensions import ModifiedTensions

INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


@pytest.fixture(scope="module")
def unit_tensions(grid256):
    return ModifiedTensions.constant(grid256, 1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def disk_field(full_geometry):
    return ShapeSpec.disk((0.5, 0.5), 0.2).indicator(full_geometry)


# ---------------------------------------------------------------------------
# PhaseField


def test_phase_field_basics(disk_geometry, rng):
    zero = PhaseField.zeros(disk_geometry)
    assert zero.volume() == 0.0 and zero.is_binary()

    u = PhaseField.random(disk_geometry, rng, levels=5)
    assert u.values.min() >= 0.0 and u.values.max() <= 1.0
    assert np.all(u.values[~disk_geometry.omega_mask] == 0.0)
    assert len(np.unique(u.values)) <= 5

    mask = disk_geometry.signed_distance > 0.15
    binary = PhaseField.from_mask(disk_geometry, mask)
    assert binary.is_binary()
    assert binary.volume() == mask.sum() * disk_geometry.grid.cell_measure
    assert binary.interface_cell_count() > 0
    assert zero.interface_cell_count() == 0


def test_phase_field_rejects_bad_values(disk_geometry, grid256):
    with pytest.raises(EnergyError, match="\\[0, 1\\]|0, 1|range"):
        PhaseField(disk_geometry, np.full(grid256.shape, 1.5))
    outside = np.where(disk_geometry.omega_mask, 0.0, 0.5)
    with pytest.raises(EnergyError, match="outside"):
        PhaseField(disk_geometry, outside)
    with pytest.raises(EnergyError):
        PhaseField(disk_geometry, np.zeros((4, 4)))
    with pytest.raises(EnergyError, match="levels"):
        PhaseField.random(disk_geometry, np.random.default_rng(0), levels=1)


# ---------------------------------------------------------------------------
# approx_energy


def test_empty_field_without_substrate_is_zero(full_geometry, grid256, unit_tensions):
    kh = scale_kernel(GaussianKernel(), grid256, 1e-3)
    assert approx_energy(PhaseField.zeros(full_geometry), unit_tensions, kh) == 0.0


def test_empty_field_with_flat_substrate(band_geometry):
    # Only the substrate-vapor term survives; for a flat boundary it
    # converges to sv * (1/sqrt(pi)) * contact length (two lines here).
    grid = band_geometry.grid
    t = ModifiedTensions.constant(grid, 1.0, 1.0, 1.3)
    kh = scale_kernel(GaussianKernel(), grid, 1e-3)
    energy = approx_energy(PhaseField.zeros(band_geometry), t, kh)
    target = 1.3 * 2.0 * INV_SQRT_PI
    assert abs(energy - target) / target < 1e-3

    doubled = ModifiedTensions.constant(grid, 1.0, 1.0, 2.6)
    assert approx_energy(PhaseField.zeros(band_geometry), doubled, kh) == 2.0 * energy


def test_flat_band_matches_separable_oracle(full_geometry, grid256, unit_tensions):
    _, x2 = grid256.meshgrid()
    u = PhaseField.from_mask(full_geometry, (x2 > 0.3) & (x2 < 0.7))
    h = 1e-3
    kh = scale_kernel(GaussianKernel(), grid256, h)
    energy = approx_energy(u, unit_tensions, kh)

    # The field only depends on x2, so the energy factorises into the
    # kernel's 1D marginal acting on a single row profile.
    n, s = grid256.n, grid256.spacing
    marginal = kh.values.sum(axis=0) * s
    profile = u.values[0, :]
    idx = np.arange(n)
    circulant = marginal[(idx[:, None] - idx[None, :]) % n]
    conv = circulant @ (1.0 - profile) * s
    oracle = (profile * conv).sum() * s * (n * s) / math.sqrt(h)
    assert abs(energy - oracle) <= 1e-10 * oracle


def test_disk_energy_approaches_perimeter_limit(full_geometry, grid256, unit_tensions):
    table = convergence_study(
        ShapeSpec.disk((0.5, 0.5), 0.2),
        unit_tensions,
        GaussianKernel(),
        [4e-3, 1e-3, 2.5e-4],
        full_geometry,
        Isotropic(2, INV_SQRT_PI),
    )
    errs = [row.rel_err for row in table.rows]
    assert len(errs) == 3
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 0.01
    assert table.order > 0.4
    assert table.rows[0].sharp == pytest.approx(2 * math.pi * 0.2 * INV_SQRT_PI, rel=1e-10)


def test_energy_is_linear_in_tensions(full_geometry, grid256, rng):
    u = PhaseField.random(full_geometry, rng, levels=6)
    kh = scale_kernel(GaussianKernel(), grid256, 1e-3)
    single = approx_energy(u, ModifiedTensions.constant(grid256, 1.0, 1.0, 1.0), kh)
    double = approx_energy(u, ModifiedTensions.constant(grid256, 2.0, 1.0, 1.0), kh)
    assert double == 2.0 * single


def test_exchange_symmetry(full_geometry, grid256, unit_tensions, rng):
    u = PhaseField.random(full_geometry, rng, levels=6)
    kh = scale_kernel(GaussianKernel(), grid256, 1e-3)
    one = approx_energy(u, unit_tensions, kh)
    swapped = approx_energy(u.with_values(1.0 - u.values), unit_tensions, kh)
    assert abs(one - swapped) <= 1e-10 * one


def test_energy_rejects_mismatched_grids(full_geometry, grid256, unit_tensions):
    small = TorusGrid(2, 64)
    kh = scale_kernel(GaussianKernel(), small, 4e-3)
    with pytest.raises(EnergyError, match="grid"):
        approx_energy(PhaseField.zeros(full_geometry), unit_tensions, kh)


# ---------------------------------------------------------------------------
# sharp_energy


def test_sharp_disk_closed_form():
    value = sharp_energy(ShapeSpec.disk((0.5, 0.5), 0.2), 2.0, Isotropic(2, 0.6))
    assert value == pytest.approx(2.0 * 0.6 * 2 * math.pi * 0.2, rel=1e-10)


def test_sharp_cap_closed_form():
    theta = math.radians(120.0)
    radius = 0.2
    cap = ShapeSpec.cap(120.0, radius, 0.25, dry_span=(0.05, 0.95))
    half_chord = radius * math.sin(theta)
    expected = (
        1.0 * 2 * radius * theta
        + 0.7 * 2 * half_chord
        + 0.4 * ((0.5 - half_chord - 0.05) + (0.95 - 0.5 - half_chord))
    )
    value = sharp_energy(cap, 1.0, Isotropic(2, 1.0), gamma_sp=0.7, gamma_sv=0.4)
    assert value == pytest.approx(expected, rel=1e-10)

    with pytest.raises(EnergyError, match="gamma_sp"):
        sharp_energy(cap, 1.0, Isotropic(2, 1.0), gamma_sv=0.4)


def test_sharp_ellipse_against_dense_quadrature():
    gamma = Elliptic(2, matrix=((1.4, 0.3), (0.3, 0.9)))
    a, b = 0.23, 0.11
    ts = np.linspace(0.0, 2 * math.pi, (1 << 17) + 1)
    pts = np.stack([0.5 + a * np.cos(ts), 0.5 + b * np.sin(ts)], axis=-1)
    velocity = np.stack([-a * np.sin(ts), b * np.cos(ts)], axis=-1)
    speed = np.linalg.norm(velocity, axis=-1)
    normal = np.stack([velocity[:, 1], -velocity[:, 0]], axis=-1) / speed[:, None]
    integrand = (1.0 + 0.2 * pts[:, 0]) * gamma(normal) * speed
    oracle = simpson(integrand, x=ts)

    value = sharp_energy(ShapeSpec.ellipse((0.5, 0.5), a, b), "1 + 0.2*x1", gamma)
    assert value == pytest.approx(oracle, rel=1e-9)


def test_shape_spec_guards():
    with pytest.raises(EnergyError, match="free arc"):
        ShapeSpec(free=())
    with pytest.raises(EnergyError, match="closed"):
        ShapeSpec(free=(Segment((0.2, 0.2), (0.6, 0.2)),))
    with pytest.raises(EnergyError, match="contact angle"):
        ShapeSpec.cap(180.0, 0.2, 0.25)
    degenerate = ShapeSpec(free=(Segment((0.3, 0.3), (0.3, 0.3)),))
    with pytest.raises(EnergyError, match="stationary"):
        sharp_energy(degenerate, 1.0, Isotropic(2, 1.0))


def test_cap_indicator_is_binary_cap(band_geometry):
    cap = ShapeSpec.cap(120.0, 0.15, 0.25)
    u = cap.indicator(band_geometry)
    assert u.is_binary()
    assert 0.0 < u.volume() < math.pi * 0.15**2
    assert np.all(u.values[~band_geometry.omega_mask] == 0.0)


# ---------------------------------------------------------------------------
# monotonicity in h


def test_monotonicity_constant_tensions_random_fields(full_geometry, unit_tensions):
    worst = 0.0
    for seed in range(20):
        u = PhaseField.random(full_geometry, np.random.default_rng(seed), levels=5)
        result = monotonicity_check(u, unit_tensions, GaussianKernel(), 1e-3, 2)
        assert result.lhs <= result.rhs * (1.0 + 1e-10)
        worst = max(worst, result.c_est)
    assert worst <= 1e-10


def test_monotonicity_empty_field(full_geometry, unit_tensions):
    result = monotonicity_check(
        PhaseField.zeros(full_geometry), unit_tensions, GaussianKernel(), 1e-3, 2
    )
    assert result.lhs == result.rhs == 0.0
    assert result.c_est == 0.0


def test_monotonicity_varying_tensions_bounded(full_geometry, grid256, disk_field):
    x1, _ = grid256.meshgrid()
    t = ModifiedTensions.from_fields(
        grid256, 1.0 + 0.2 * x1, np.ones(grid256.shape), np.ones(grid256.shape)
    )
    estimates = [
        monotonicity_check(disk_field, t, GaussianKernel(), 1e-3, N).c_est
        for N in (2, 3, 4)
    ]
    assert all(np.isfinite(c) and 0.0 <= c <= 1.0 for c in estimates)


def test_monotonicity_rejects_bad_n(full_geometry, unit_tensions):
    with pytest.raises(EnergyError, match="N"):
        monotonicity_check(
            PhaseField.zeros(full_geometry), unit_tensions, GaussianKernel(), 1e-3, 0
        )


# ---------------------------------------------------------------------------
# the four integral inequalities


def test_inequalities_vanish_on_empty_field(full_geometry):
    report = inequality_suite(PhaseField.zeros(full_geometry), GaussianKernel(), 1e-3)
    assert report.h == 1e-3
    for result in report.results:
        assert result.lhs == result.rhs == 0.0


def test_inequalities_on_disk(disk_field):
    report = inequality_suite(disk_field, GaussianKernel(), 1e-3)
    assert report.all_ok
    by_name = {r.name: r for r in report.results}
    assert set(by_name) == {"shift-bound", "jensen", "defect-bound", "gradient-bound"}
    # two of the four have genuine margin on a smooth set
    assert by_name["defect-bound"].slack > 0.0
    assert by_name["gradient-bound"].slack > 0.0


@pytest.mark.parametrize("h", [4e-3, 1e-3])
def test_inequalities_on_random_fields(full_geometry, h):
    for seed in range(3):
        u = PhaseField.random(full_geometry, np.random.default_rng(seed), levels=5)
        report = inequality_suite(u, GaussianKernel(), h)
        assert report.all_ok, [(r.name, r.slack) for r in report.results]
        assert report.worst() >= -1e-8


# ---------------------------------------------------------------------------
# convergence_study plumbing


def test_study_guards_resolution_and_ordering(grid64, unit_tensions):
    geometry = build_geometry(make_shape("full"), grid64)
    tensions = ModifiedTensions.constant(grid64, 1.0, 1.0, 1.0)
    spec = ShapeSpec.disk((0.5, 0.5), 0.2)
    gamma = Isotropic(2, INV_SQRT_PI)

    with pytest.raises(EnergyError, match="decreasing"):
        convergence_study(spec, tensions, GaussianKernel(), [1e-3, 4e-3], geometry, gamma)

    # sqrt(h) < 3 spacings at n=64 for both small entries: dropped with a
    # warning, leaving too few rows.
    with pytest.warns(UserWarning, match="under-resolved"):
        with pytest.raises(EnergyError, match="two resolvable"):
            convergence_study(
                spec, tensions, GaussianKernel(), [4e-3, 1e-3, 2.5e-4], geometry, gamma
            )


# ---------------------------------------------------------------------------
# indicator defect


def test_indicator_defect_values(full_geometry, grid256, disk_field):
    assert indicator_defect(disk_field.values, full_geometry) == 0.0
    half = np.where(full_geometry.omega_mask, 0.5, 0.0)
    assert indicator_defect(half, full_geometry) == pytest.approx(
        0.25 * full_geometry.omega_mask.sum() * grid256.cell_measure, rel=1e-12
    )

    defects = {}
    for h in (4e-3, 1e-3):
        kh = scale_kernel(GaussianKernel(), grid256, h)
        defects[h] = indicator_defect(kh.convolve(disk_field.values), full_geometry)
    assert 0.0 < defects[1e-3] < defects[4e-3]
