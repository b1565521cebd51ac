"""Seeded random band-limited fields for property suites."""

from __future__ import annotations

import numpy as np

from .spectral import Grid, SpectralField, field_from_physical, leray_project
from .littlewood_paley import get_partition


def random_field(grid: Grid, rng: np.random.Generator, ncomp: int | None = None,
                 slope: float = 1.0, j_band: tuple | None = None,
                 solenoidal: bool = False) -> SpectralField:
    """Random real field with spectrum ~ |k|^{-slope} restricted to dyadic
    blocks [j_band].  Built from white noise in physical space, so Hermitian
    symmetry is exact."""
    n = ncomp if ncomp is not None else grid.dim
    vals = rng.standard_normal((n,) + grid.shape)
    fld = field_from_physical(grid, vals)
    part = get_partition(grid)
    j0, j1 = j_band if j_band is not None else (part.j_min, part.j_max - 1)
    j0 = max(j0, part.j_min)
    j1 = min(j1, part.j_max)
    env = np.zeros(grid.shape)
    for j in range(j0, j1 + 1):
        env += part.weight(j) * 2.0 ** (-slope * j)
    coeffs = fld.coeffs * env
    out = SpectralField(grid, coeffs)
    if solenoidal:
        out = leray_project(out)
    scale = out.l2()
    if scale > 0:
        out = out * (1.0 / scale)
    return out


def random_scalar(grid: Grid, rng: np.random.Generator, slope: float = 1.0,
                  j_band: tuple | None = None) -> SpectralField:
    return random_field(grid, rng, ncomp=1, slope=slope, j_band=j_band)
