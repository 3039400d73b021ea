"""ambo: anisotropic thresholding dynamics for particles on substrates.

A grid-based simulator and verification toolkit for the volume-preserving
evolution of a particle phase inside a rigid container on the flat torus,
driven by convolution-thresholding ("diffusion generated motion") energy
descent.  The package is organised along the objects of the underlying
construction:

* :mod:`ambo.grid` / :mod:`ambo.geometry` — periodic grids, container and
  substrate masks, analytic signed distances;
* :mod:`ambo.anisotropy` — surface-tension anisotropies, their induced
  forms from convolution kernels, admissibility validation;
* :mod:`ambo.kernel` — kernels (Gaussian, elliptic, tent), grid sampling,
  FFT and direct convolution;
* :mod:`ambo.tensions` — torus-wide extension of the three surface
  tensions with pointwise triangle-inequality guarantees;
* :mod:`ambo.energy` — the approximate energy, sharp limits, convergence,
  monotonicity and inequality checks;
* :mod:`ambo.scheme` — the thresholding dynamics, volume preservation,
  contact-angle measurement;
* :mod:`ambo.harness` / :mod:`ambo.cli` — reproducible experiment driver
  and its command line.
"""

import os as _os

# Cap the BLAS/FFT pools before numpy loads; only effective when the
# package import is what first pulls numpy in.
_threads = _os.environ.get("AMBO_THREADS")
if _threads:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

from .anisotropy import (
    Anisotropy,
    AnisotropyError,
    CrystallineL1,
    DirectionTable2D,
    Elliptic,
    Isotropic,
    induced_anisotropy,
    induced_gamma,
    make_anisotropy,
    normalize_anisotropy,
    validate_anisotropy,
)
from .energy import (
    EnergyError,
    PhaseField,
    ShapeSpec,
    approx_energy,
    convergence_study,
    indicator_defect,
    inequality_suite,
    monotonicity_check,
    sharp_energy,
    shift_weighted_sum,
)
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError, ResolutionWarning
from .expressions import Expression, ExpressionError, parse_expression
from .harness import run_experiment
from .io import read_field, read_summary, write_csv, write_field, write_summary
from .geometry import (
    Band,
    Disk,
    Ellipse,
    FullTorus,
    Geometry,
    GeometryError,
    RoundedPolygon,
    band_mask,
    boundary_layer_mask,
    build_geometry,
    make_shape,
)
from .grid import ScalarField, TorusGrid
from .kernel import (
    EllipticGaussianKernel,
    GaussianKernel,
    Kernel,
    KernelError,
    SampledKernel,
    TriangularKernel,
    make_kernel,
    scale_kernel,
    scale_kernel_gradient,
    validate_kernel,
)
from .scheme import (
    SchemeConfig,
    SchemeError,
    SchemeState,
    Trajectory,
    best_fit_disk_mismatch,
    comparison_field,
    measure_contact_angle,
    run,
    step,
    threshold,
    volume_threshold,
)
from .tensions import (
    ModifiedTensions,
    RawTensions,
    TensionError,
    extend_pv,
    extend_substrate,
    laplace_solve,
    validate_raw_tensions,
    verify_triangle,
)

__version__ = "0.1.0"

__all__ = [
    "Anisotropy",
    "AnisotropyError",
    "Band",
    "ConfigError",
    "CrystallineL1",
    "DirectionTable2D",
    "Disk",
    "Ellipse",
    "Elliptic",
    "EllipticGaussianKernel",
    "EnergyError",
    "Expression",
    "ExpressionError",
    "FullTorus",
    "GaussianKernel",
    "Geometry",
    "GeometryError",
    "Kernel",
    "KernelError",
    "ModifiedTensions",
    "NumericalError",
    "PhaseField",
    "RawTensions",
    "ResolutionWarning",
    "RoundedPolygon",
    "RunConfig",
    "SampledKernel",
    "ScalarField",
    "SchemeConfig",
    "SchemeError",
    "SchemeState",
    "ShapeSpec",
    "TensionError",
    "TorusGrid",
    "Trajectory",
    "TriangularKernel",
    "approx_energy",
    "band_mask",
    "best_fit_disk_mismatch",
    "boundary_layer_mask",
    "build_geometry",
    "comparison_field",
    "convergence_study",
    "extend_pv",
    "extend_substrate",
    "indicator_defect",
    "induced_anisotropy",
    "induced_gamma",
    "inequality_suite",
    "laplace_solve",
    "load_config",
    "make_anisotropy",
    "make_kernel",
    "make_shape",
    "measure_contact_angle",
    "monotonicity_check",
    "normalize_anisotropy",
    "parse_expression",
    "read_field",
    "read_summary",
    "run",
    "run_experiment",
    "scale_kernel",
    "scale_kernel_gradient",
    "sharp_energy",
    "shift_weighted_sum",
    "step",
    "threshold",
    "validate_anisotropy",
    "validate_kernel",
    "validate_raw_tensions",
    "verify_triangle",
    "volume_threshold",
    "write_csv",
    "write_field",
    "write_summary",
]
