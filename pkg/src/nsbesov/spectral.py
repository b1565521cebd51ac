"""Periodic pseudo-spectral vector fields and exact-symbol operators.

Fields are stored as discrete Fourier coefficients with the convention

    f(x) = sum_k  c(k) * exp(i k . x),      k = (2*pi/L) * m,

so a single mode ``cos(b*x1)`` has coefficients 1/2 at m1 = +-b*L/(2*pi).
All differential operators act by their exact Fourier symbol; quadratic
terms are dealiased by the 2/3 rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft as _sfft

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Set the worker count used by all FFT calls (CLI --threads)."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


def fftn(values: np.ndarray) -> np.ndarray:
    return _sfft.fftn(values, norm="forward", workers=_FFT_WORKERS)


def ifftn(coeffs: np.ndarray) -> np.ndarray:
    return _sfft.ifftn(coeffs, norm="forward", workers=_FFT_WORKERS)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _valid_axis_size(n: int) -> bool:
    # powers of two, plus 3*2^k sizes used for grid-refinement studies
    return n >= 16 and (_is_pow2(n) or (n % 3 == 0 and _is_pow2(n // 3) and n // 3 >= 16))


class GridError(ValueError):
    pass


class Grid:
    """Fourier lattice for the torus [0, L)^dim.

    ``shape`` may be anisotropic (per-axis sizes); ``domain_length`` is the
    same on every axis.  Discrete frequencies on axis i are (2*pi/L)*m with
    integer m in [-N_i/2, N_i/2).
    """

    def __init__(self, dim: int, shape: Sequence[int], domain_length: float):
        if dim not in (2, 3):
            raise GridError(f"dim must be 2 or 3, got {dim}")
        shape = tuple(int(n) for n in shape)
        if len(shape) != dim:
            raise GridError(f"shape {shape} does not match dim {dim}")
        for n in shape:
            if not _valid_axis_size(n):
                raise GridError(
                    f"axis size {n} not supported: need a power of two >= 16 "
                    "(or 3*2^k for refinement studies)")
        if not (domain_length > 0):
            raise GridError("domain_length must be positive")
        self.dim = dim
        self.shape = shape
        self.domain_length = float(domain_length)
        dk = 2.0 * math.pi / self.domain_length
        self.freq_step = dk
        # per-axis physical wavenumbers, broadcastable against field arrays
        axes = []
        for i, n in enumerate(shape):
            m = np.fft.fftfreq(n, d=1.0 / n)  # integer indices 0..N/2-1, -N/2..-1
            k = (dk * m).astype(np.float64)
            shp = [1] * dim
            shp[i] = n
            axes.append(k.reshape(shp))
        self.k_axes = axes
        self.k2 = sum(k * k for k in axes)
        self.k_abs = np.sqrt(self.k2)
        self.nyquist_axis = tuple(math.pi * n / self.domain_length for n in shape)
        self.nyquist = min(self.nyquist_axis)
        self.cell_volume = self.domain_length ** dim / float(np.prod(shape))
        self.volume = self.domain_length ** dim
        self.npoints = int(np.prod(shape))
        # 2/3-rule mask: keep |m_i| <= N_i // 3 on every axis
        mask = np.ones(shape, dtype=bool)
        for i, n in enumerate(shape):
            m = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
            keep = np.abs(m) <= n // 3
            shp = [1] * dim
            shp[i] = n
            mask = mask & keep.reshape(shp)
        self.dealias_mask = mask
        # largest physical frequency kept by the 2/3 rule, per axis
        self.dealias_limit_axis = tuple(dk * (n // 3) for n in shape)
        # the index m = -N/2 plane has no positive partner; fields keep it
        # empty so that odd symbols (ik, Leray off-diagonals) preserve
        # Hermitian symmetry
        paired = np.ones(shape, dtype=bool)
        for i, n in enumerate(shape):
            m = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
            keep = m != -(n // 2)
            shp = [1] * dim
            shp[i] = n
            paired = paired & keep.reshape(shp)
        self.paired_mask = paired

    @property
    def points_per_axis(self):
        """Scalar when isotropic, tuple otherwise."""
        if len(set(self.shape)) == 1:
            return self.shape[0]
        return self.shape

    def axis_coordinates(self, i: int) -> np.ndarray:
        n = self.shape[i]
        return np.arange(n) * (self.domain_length / n)

    def lattice_index(self, freq: float, axis: int = 0) -> int:
        """Integer lattice index for a physical frequency (must sit on the lattice)."""
        m = freq / self.freq_step
        mi = int(round(m))
        if abs(m - mi) > 1e-9 * max(1.0, abs(m)):
            raise GridError(f"frequency {freq} is not on the lattice (step {self.freq_step})")
        if not (-self.shape[axis] // 2 <= mi < self.shape[axis] // 2):
            raise GridError(f"frequency {freq} exceeds the lattice on axis {axis}")
        return mi

    def __eq__(self, other):
        return (isinstance(other, Grid) and self.dim == other.dim
                and self.shape == other.shape
                and self.domain_length == other.domain_length)

    def __hash__(self):
        return hash((self.dim, self.shape, self.domain_length))

    def __repr__(self):
        return f"Grid(dim={self.dim}, shape={self.shape}, L={self.domain_length:.6g})"


def make_grid(dim: int, points_per_axis, domain_length: float) -> Grid:
    """Build a torus grid.  ``points_per_axis`` may be an int or a per-axis tuple."""
    if np.isscalar(points_per_axis):
        shape = (int(points_per_axis),) * dim
    else:
        shape = tuple(int(n) for n in points_per_axis)
    return Grid(dim, shape, domain_length)


@dataclass
class SpectralField:
    """A scalar (ncomp=1) or vector (ncomp=dim) field as Fourier coefficients.

    ``coeffs`` has shape (ncomp, *grid.shape), complex128.  Fields are treated
    as immutable values: operations return new fields.
    """

    grid: Grid
    coeffs: np.ndarray
    is_real: bool = True

    def __post_init__(self):
        if self.coeffs.ndim == self.grid.dim:
            self.coeffs = self.coeffs[None, ...]
        if self.coeffs.shape[1:] != self.grid.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.ncomp == 1

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.is_real)

    def physical(self) -> np.ndarray:
        """Real-space samples, shape (ncomp, *grid.shape); real part for real fields."""
        vals = np.stack([ifftn(c) for c in self.coeffs])
        return np.real(vals) if self.is_real else vals

    def magnitude_physical(self) -> np.ndarray:
        """Pointwise Euclidean magnitude over components, in real space."""
        vals = self.physical()
        if self.ncomp == 1:
            return np.abs(vals[0])
        return np.sqrt(np.sum(vals * vals, axis=0))

    def hermitian_defect(self) -> float:
        """max |c(-k) - conj(c(k))| relative to max |c|."""
        scale = float(np.max(np.abs(self.coeffs)))
        if scale == 0.0:
            return 0.0
        worst = 0.0
        for c in self.coeffs:
            rev = c
            for ax in range(c.ndim):
                rev = np.roll(np.flip(rev, axis=ax), 1, axis=ax)
            worst = max(worst, float(np.max(np.abs(rev - np.conj(c)))))
        return worst / scale

    def mean_mode(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.grid.dim]

    def l2(self) -> float:
        """Quadrature L2 norm (Parseval, exact for the lattice)."""
        return math.sqrt(self.grid.volume * float(np.sum(np.abs(self.coeffs) ** 2)))

    def linf(self) -> float:
        return float(np.max(self.magnitude_physical()))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.is_real and other.is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.is_real and other.is_real)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar, self.is_real and not isinstance(scalar, complex))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs, self.is_real)


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def zero_field(grid: Grid, ncomp: int | None = None) -> SpectralField:
    n = grid.dim if ncomp is None else ncomp
    return SpectralField(grid, np.zeros((n,) + grid.shape, dtype=np.complex128))


def field_from_physical(grid: Grid, values: np.ndarray) -> SpectralField:
    """Sample real-space values onto the grid (unpaired Nyquist plane dropped)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == grid.dim:
        values = values[None, ...]
    coeffs = np.stack([fftn(v) for v in values]) * grid.paired_mask
    return SpectralField(grid, coeffs)


# ---------------------------------------------------------------------------
# exact-symbol operators


def heat_propagate(fld: SpectralField, t: float) -> SpectralField:
    """e^{t Laplacian}: multiply each coefficient by exp(-|k|^2 t).  Exact symbol."""
    if t < 0:
        raise ValueError(f"heat_propagate needs t >= 0, got {t}")
    if t == 0:
        return fld.copy()
    sym = np.exp(-fld.grid.k2 * t)
    return SpectralField(fld.grid, fld.coeffs * sym, fld.is_real)


def laplacian(fld: SpectralField) -> SpectralField:
    return SpectralField(fld.grid, fld.coeffs * (-fld.grid.k2), fld.is_real)


def inverse_laplacian(fld: SpectralField) -> SpectralField:
    """(-Laplacian)^{-1}: divide by |k|^2, zeroing the k=0 mode (quotient by constants)."""
    g = fld.grid
    k2 = g.k2.copy()
    zero = (0,) * g.dim
    k2[zero] = 1.0
    out = fld.coeffs / k2
    out[(slice(None),) + zero] = 0.0
    return SpectralField(g, out, fld.is_real)


def partial_derivative(fld: SpectralField, axis: int, order: int = 1) -> SpectralField:
    sym = (1j * fld.grid.k_axes[axis]) ** order
    return SpectralField(fld.grid, fld.coeffs * sym, fld.is_real)


def gradient(fld: SpectralField) -> SpectralField:
    if not fld.is_scalar:
        raise ValueError("gradient takes a scalar field")
    g = fld.grid
    comps = [fld.coeffs[0] * (1j * g.k_axes[i]) for i in range(g.dim)]
    return SpectralField(g, np.stack(comps), fld.is_real)


def divergence(fld: SpectralField) -> SpectralField:
    """Spectral i k . u; exact.  Returns a scalar field."""
    g = fld.grid
    if fld.ncomp != g.dim:
        raise ValueError("divergence takes a vector field")
    out = sum(fld.coeffs[i] * (1j * g.k_axes[i]) for i in range(g.dim))
    return SpectralField(g, out[None, ...], fld.is_real)


def leray_project(fld: SpectralField) -> SpectralField:
    """Helmholtz projection, symbol delta_ab - k_a k_b / |k|^2; k=0 mode zeroed."""
    g = fld.grid
    if fld.ncomp != g.dim:
        raise ValueError("leray_project takes a vector field")
    k2 = g.k2.copy()
    zero = (0,) * g.dim
    k2[zero] = 1.0
    kdotu = sum(fld.coeffs[i] * g.k_axes[i] for i in range(g.dim))
    ratio = kdotu / k2
    out = np.stack([fld.coeffs[i] - g.k_axes[i] * ratio for i in range(g.dim)])
    out[(slice(None),) + zero] = 0.0
    return SpectralField(g, out, fld.is_real)


def dealias(fld: SpectralField) -> SpectralField:
    return SpectralField(fld.grid, fld.coeffs * fld.grid.dealias_mask, fld.is_real)


def multiply(a: SpectralField, b: SpectralField) -> SpectralField:
    """Dealiased pointwise product of two scalar fields."""
    _check_same_grid(a, b)
    if not (a.is_scalar and b.is_scalar):
        raise ValueError("multiply takes scalar fields")
    av = ifftn(a.coeffs[0] * a.grid.dealias_mask).real
    bv = ifftn(b.coeffs[0] * b.grid.dealias_mask).real
    out = fftn(av * bv) * a.grid.dealias_mask
    return SpectralField(a.grid, out[None, ...])


def tensor_divergence(u: SpectralField, v: SpectralField, project: bool = True) -> SpectralField:
    """div(u (x) v) computed pseudo-spectrally with 2/3-rule dealiasing.

    With ``project`` the Helmholtz projection is applied, giving the
    Navier-Stokes convection term P div(u (x) v).
    """
    _check_same_grid(u, v)
    g = u.grid
    if u.ncomp != g.dim or v.ncomp != g.dim:
        raise ValueError("tensor_divergence takes vector fields")
    mask = g.dealias_mask
    uv = [ifftn(u.coeffs[i] * mask).real for i in range(g.dim)]
    vv = [ifftn(v.coeffs[i] * mask).real for i in range(g.dim)]
    # component a of div(u x v) = sum_b d_b (u_a v_b)
    comps = []
    for a in range(g.dim):
        acc = np.zeros(g.shape, dtype=np.complex128)
        for b in range(g.dim):
            tab = fftn(uv[a] * vv[b]) * mask
            acc += (1j * g.k_axes[b]) * tab
        comps.append(acc)
    out = SpectralField(g, np.stack(comps))
    return leray_project(out) if project else out


def nonlinear_term(u: SpectralField, v: SpectralField) -> SpectralField:
    """P div(u (x) v), the Navier-Stokes quadratic term (dealiased, solenoidal)."""
    return tensor_divergence(u, v, project=True)


def regrid(fld: SpectralField, new_grid: Grid) -> SpectralField:
    """Embed a field in a finer grid (same L) by zero-padding its spectrum."""
    g = fld.grid
    if new_grid.dim != g.dim or new_grid.domain_length != g.domain_length:
        raise ValueError("regrid requires the same dimension and domain length")
    if any(nn < n for nn, n in zip(new_grid.shape, g.shape)):
        raise ValueError("regrid only refines")
    out = np.zeros((fld.ncomp,) + new_grid.shape, dtype=np.complex128)
    idx = []
    for n in g.shape:
        m = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
        idx.append(m)
    # scatter old coefficients onto matching integer frequencies
    mesh = np.meshgrid(*[m % nn for m, nn in zip(idx, new_grid.shape)], indexing="ij")
    src = np.meshgrid(*[np.arange(n) for n in g.shape], indexing="ij")
    out[(slice(None),) + tuple(mesh)] = fld.coeffs[(slice(None),) + tuple(src)]
    return SpectralField(new_grid, out, fld.is_real)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Time-sampled fields on a shared grid; times strictly increasing."""

    grid: Grid
    times: np.ndarray
    fields: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.times) != len(self.fields):
            raise ValueError("times and fields lengths differ")
        if len(self.times) == 0:
            raise ValueError("empty trajectory")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for f in self.fields:
            if f.grid != self.grid:
                raise ValueError("trajectory fields must share the grid")

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> SpectralField:
        return self.fields[i]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def final(self) -> SpectralField:
        return self.fields[-1]

    def restrict(self, tmin: float, tmax: float) -> "Trajectory":
        sel = (self.times >= tmin - 1e-12) & (self.times <= tmax + 1e-12)
        idx = np.nonzero(sel)[0]
        return Trajectory(self.grid, self.times[idx], [self.fields[i] for i in idx], dict(self.meta))
