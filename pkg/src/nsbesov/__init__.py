"""Pseudo-spectral Navier-Stokes laboratory with Besov-norm diagnostics.

Fields live on a periodic torus [0, L)^n (n = 2 or 3) and are stored as
complex Fourier coefficients.  Submodules:

    spectral         grids, fields, exact-symbol operators
    littlewood_paley dyadic partition and all norms
    forcing          the explicit external-force constructors
    solver           Duhamel integration, Picard remainder, ETD time-stepper
    experiments      named experiment drivers producing reports
    cli              command-line entry point
"""

__version__ = "0.1.0"

from .spectral import Grid, SpectralField, Trajectory, make_grid  # noqa: F401
