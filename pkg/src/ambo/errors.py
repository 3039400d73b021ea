"""Exception types shared across the package.

Validation problems (bad configuration, inadmissible inputs) raise
``ValueError`` subclasses; breakdowns of the numerics (unresolved kernels,
solver stagnation, failed a-posteriori checks) raise
:class:`NumericalError`.  The command line maps the former to exit code 1
and the latter to exit code 2.
"""

from __future__ import annotations

__all__ = ["ConfigError", "NumericalError", "ResolutionWarning"]


class ConfigError(ValueError):
    """A configuration file or run description is invalid."""


class NumericalError(RuntimeError):
    """A numerical procedure failed or left its regime of validity."""


class ResolutionWarning(UserWarning):
    """The kernel width is close to the grid spacing; results may degrade."""
