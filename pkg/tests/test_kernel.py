"""Kernel tests: admissibility, scaling, and periodic convolution."""

import math
import warnings

import numpy as np
import pytest

from ambo.errors import NumericalError, ResolutionWarning
from ambo.geometry import TorusGrid
from ambo.kernel import (
    EllipticGaussianKernel,
    GaussianKernel,
    KernelError,
    TriangularKernel,
    make_kernel,
    scale_kernel,
    validate_kernel,
)


# --- validation -------------------------------------------------------------

def test_gaussian_kernel_validates():
    report = validate_kernel(GaussianKernel(), 2)
    assert report.admissible
    assert report.mass == pytest.approx(1.0, abs=1e-8)
    assert math.isfinite(report.decay_constant)
    assert report.failures == []


def test_decay_constant_stable_under_resampling():
    c1 = validate_kernel(GaussianKernel(), 2, seed=1).decay_constant
    c2 = validate_kernel(GaussianKernel(), 2, seed=2).decay_constant
    assert abs(c1 - c2) < 1e-4 * c1


def test_elliptic_gaussian_validates():
    report = validate_kernel(EllipticGaussianKernel(matrix=((1.2, 0.1), (0.1, 0.8))), 2)
    assert report.admissible


def test_triangular_kernel_validates():
    report = validate_kernel(TriangularKernel(radius=0.8), 2)
    assert report.admissible
    assert report.mass == pytest.approx(1.0, abs=1e-8)
    assert report.positivity[0] > 0.0  # strictly positive near the origin


def test_three_dimensional_gaussian_validates():
    assert validate_kernel(GaussianKernel(), 3).admissible


# --- scaling ----------------------------------------------------------------

def test_scaled_mass_is_one_across_h():
    grid = TorusGrid(2, 512)
    for h in (1e-2, 1e-3, 1e-4):
        kh = scale_kernel(GaussianKernel(), grid, h)
        assert kh.discrete_mass == pytest.approx(1.0, abs=1e-6)


def test_second_moment_scales_linearly_in_h():
    grid = TorusGrid(2, 256)
    deltas = grid.axis_coords()
    deltas = deltas - np.round(deltas)  # min-image displacement from origin
    X, Y = np.meshgrid(deltas, deltas, indexing="ij")
    r2 = X * X + Y * Y

    def moment(h):
        kh = scale_kernel(GaussianKernel(), grid, h)
        return float(np.sum(kh.values * r2) * grid.cell_measure)

    ratio = moment(1e-3) / moment(2.5e-4)
    assert ratio == pytest.approx(4.0, rel=0.01)


def test_smoothing_error_decreases_with_h():
    grid = TorusGrid(2, 256)
    x = grid.axis_coords()
    u = np.sin(2.0 * np.pi * x)[:, None] * np.ones((1, grid.n))
    errs = []
    for h in (4e-3, 2e-3, 1e-3, 5e-4):
        kh = scale_kernel(GaussianKernel(), grid, h)
        errs.append(float(np.mean(np.abs(kh.convolve(u) - u))))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_under_resolved_h_warns_and_tiny_h_errors():
    grid = TorusGrid(2, 64)
    with pytest.warns(ResolutionWarning):
        scale_kernel(GaussianKernel(), grid, (2.0 * grid.spacing) ** 2)
    with pytest.raises(NumericalError):
        scale_kernel(GaussianKernel(), grid, (0.5 * grid.spacing) ** 2)
    with pytest.raises(KernelError):
        scale_kernel(GaussianKernel(), grid, 0.0)


# --- convolution ------------------------------------------------------------

def test_convolving_ones_gives_discrete_mass():
    grid = TorusGrid(2, 128)
    kh = scale_kernel(GaussianKernel(), grid, 1e-3)
    out = kh.convolve(np.ones(grid.shape))
    assert np.max(np.abs(out - kh.discrete_mass)) < 1e-10


def test_fft_matches_handwritten_double_loop(rng):
    n = 32
    grid = TorusGrid(2, n)
    kh = scale_kernel(GaussianKernel(), grid, 1e-2)
    f = rng.uniform(size=(n, n))
    fast = kh.convolve(f)
    idx = np.arange(n)
    oracle = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            oracle[i, j] = np.sum(kh.values[(i - idx[:, None]) % n, (j - idx) % n] * f)
    oracle *= grid.cell_measure
    assert np.max(np.abs(fast - oracle)) < 1e-10


def test_fft_matches_direct_method(rng):
    grid = TorusGrid(2, 64)
    kh = scale_kernel(GaussianKernel(), grid, 4e-3)
    f = rng.uniform(size=grid.shape)
    assert np.max(np.abs(kh.convolve(f) - kh.convolve(f, method="direct"))) < 1e-10


def test_convolution_commutes_with_translation(rng):
    grid = TorusGrid(2, 64)
    kh = scale_kernel(GaussianKernel(), grid, 4e-3)
    f = rng.uniform(size=grid.shape)
    shifted = np.roll(f, (5, -11), axis=(0, 1))
    assert np.max(
        np.abs(kh.convolve(shifted) - np.roll(kh.convolve(f), (5, -11), axis=(0, 1)))
    ) < 1e-12


def test_convolution_is_self_adjoint(rng):
    grid = TorusGrid(2, 64)
    kh = scale_kernel(GaussianKernel(), grid, 4e-3)
    f = rng.uniform(size=grid.shape)
    g = rng.uniform(size=grid.shape)
    lhs = float(np.sum(f * kh.convolve(g)))
    rhs = float(np.sum(kh.convolve(f) * g))
    assert abs(lhs - rhs) < 1e-10 * max(abs(lhs), 1.0)


def test_convolve_rejects_wrong_shape():
    grid = TorusGrid(2, 64)
    kh = scale_kernel(GaussianKernel(), grid, 4e-3)
    with pytest.raises(KernelError):
        kh.convolve(np.ones((32, 32)))
    with pytest.raises(KernelError):
        kh.convolve(np.ones(grid.shape), method="magic")


# --- construction ------------------------------------------------------------

def test_make_kernel_kinds():
    assert isinstance(make_kernel("gaussian"), GaussianKernel)
    k = make_kernel("elliptic_gaussian", matrix=[[1.2, 0.0], [0.0, 0.8]])
    assert isinstance(k, EllipticGaussianKernel)
    assert isinstance(make_kernel("triangular", radius=0.5), TriangularKernel)
    with pytest.raises(KernelError):
        make_kernel("sinc")


def test_triangular_kernel_needs_positive_radius():
    with pytest.raises(KernelError):
        TriangularKernel(radius=0.0)
