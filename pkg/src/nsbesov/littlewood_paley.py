"""Dyadic frequency decomposition and the norms built on it.

The partition of unity is generated by a radial C-infinity bump equal to 1 on
{3/4 <= |xi| <= 3/2} and supported in {1/2 <= |xi| <= 2}; the family is
normalized on the lattice so that the block weights sum to exactly 1 on every
resolved shell.  The k=0 mode never enters any norm (homogeneous spaces are
taken modulo polynomials).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .spectral import Grid, SpectralField, Trajectory, ifftn, fftn

INF = math.inf


def glue(x):
    """exp(-1/x) for x > 0, else 0; the standard smooth-step ingredient."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity monotone step: 0 for x <= 0, 1 for x >= 1."""
    g1 = glue(x)
    g2 = glue(1.0 - np.asarray(x, dtype=np.float64))
    return g1 / (g1 + g2 + 1e-300)


def smooth_step_derivative(x):
    """d/dx of smooth_step (analytic, used by closed-form forcings)."""
    x = np.asarray(x, dtype=np.float64)
    g1 = glue(x)
    g2 = glue(1.0 - x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        d1 = np.where(x > 0, g1 / np.maximum(x, 1e-300) ** 2, 0.0)
        d2 = np.where(1.0 - x > 0, g2 / np.maximum(1.0 - x, 1e-300) ** 2, 0.0)
    s = g1 + g2
    return np.where((x > 0) & (x < 1), (d1 * g2 + g1 * d2) / np.maximum(s * s, 1e-300), 0.0)


def annulus_bump(rho):
    """Radial generator: 1 on [3/4, 3/2], supported in [1/2, 2], values in [0, 1]."""
    rho = np.asarray(rho, dtype=np.float64)
    up = smooth_step((rho - 0.5) * 4.0)
    down = smooth_step((2.0 - rho) * 2.0)
    return up * down


class PartitionError(ValueError):
    pass


@dataclass
class DyadicPartition:
    """Lattice-normalized family of annular weights phi_j, j in [j_min, j_max]."""

    grid: Grid
    j_min: int
    j_max: int
    _denominator: np.ndarray = field(repr=False, default=None)
    _cache: dict = field(repr=False, default_factory=dict)

    @property
    def j_range(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def raw_weight(self, j: int) -> np.ndarray:
        return annulus_bump(self.grid.k_abs / (2.0 ** j))

    def weight(self, j: int) -> np.ndarray:
        """phi_j on the lattice: raw annulus weight normalized to a partition of unity."""
        if j not in self._cache:
            if not (self.j_min <= j <= self.j_max):
                raise PartitionError(f"block {j} outside partition range [{self.j_min}, {self.j_max}]")
            raw = self.raw_weight(j)
            w = np.where(self._denominator > 0, raw / np.maximum(self._denominator, 1e-300), 0.0)
            # never claim the k=0 mode
            w[(0,) * self.grid.dim] = 0.0
            if len(self._cache) > 24:
                self._cache.clear()
            self._cache[j] = w
        return self._cache[j]

    def coverage_shell(self) -> tuple[float, float]:
        """Radii [2^{j_min}, 2^{j_max - 1}] on which the weights sum to exactly 1."""
        return 2.0 ** self.j_min, 2.0 ** (self.j_max - 1)

    def partition_residual(self) -> float:
        """max |sum_j phi_j - 1| over lattice points in the certified shell."""
        lo, hi = self.coverage_shell()
        sel = (self.grid.k_abs >= lo) & (self.grid.k_abs <= hi)
        if not np.any(sel):
            return 0.0
        total = np.zeros(self.grid.shape)
        for j in self.j_range:
            total += self.weight(j)
        return float(np.max(np.abs(total[sel] - 1.0)))

    def uncovered_fraction(self, fld: SpectralField) -> float:
        """Fraction of spectral l2 mass outside the blocks (diagnostic)."""
        total = np.zeros(self.grid.shape)
        for j in self.j_range:
            total += self.weight(j)
        mass = np.sum(np.abs(fld.coeffs) ** 2, axis=0)
        mass[(0,) * self.grid.dim] = 0.0
        whole = float(np.sum(mass))
        if whole == 0.0:
            return 0.0
        return float(np.sum(mass * (1.0 - total) ** 2)) / whole


def default_j_range(grid: Grid) -> tuple[int, int]:
    # on anisotropic grids blocks may extend to the largest per-axis Nyquist
    # (radial annuli near the box corners are lattice-truncated)
    j_min = math.ceil(math.log2(grid.freq_step))
    j_max = math.floor(math.log2(max(grid.nyquist_axis) / 2.0))
    return j_min, j_max


def build_partition(grid: Grid, j_min: int | None = None, j_max: int | None = None) -> DyadicPartition:
    """Construct the dyadic partition; ranges default to the lattice-admissible span."""
    d_min, d_max = default_j_range(grid)
    if j_min is None:
        j_min = d_min
    if j_max is None:
        j_max = d_max
    if 2.0 ** j_min < grid.freq_step * (1.0 - 1e-12):
        raise PartitionError(f"2^j_min below the lattice step {grid.freq_step}")
    if 2.0 ** j_max > max(grid.nyquist_axis) / 2.0 * (1.0 + 1e-12):
        raise PartitionError(f"2^j_max exceeds Nyquist/2 = {max(grid.nyquist_axis) / 2}")
    if j_min > j_max:
        raise PartitionError("empty partition range")
    part = DyadicPartition(grid, j_min, j_max)
    denom = np.zeros(grid.shape)
    for j in part.j_range:
        denom += part.raw_weight(j)
    part._denominator = denom
    return part


_PARTITIONS: dict = {}


def get_partition(grid: Grid, j_min: int | None = None, j_max: int | None = None) -> DyadicPartition:
    key = (grid.dim, grid.shape, grid.domain_length, j_min, j_max)
    if key not in _PARTITIONS:
        if len(_PARTITIONS) > 12:
            _PARTITIONS.clear()
        _PARTITIONS[key] = build_partition(grid, j_min, j_max)
    return _PARTITIONS[key]


def block_project(fld: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    """Delta_j f: multiply the spectrum by the annular weight phi_j."""
    part = partition if partition is not None else get_partition(fld.grid)
    w = part.weight(j)
    return SpectralField(fld.grid, fld.coeffs * w, fld.is_real)


def block_lp_norm(fld: SpectralField, j: int, p, partition: DyadicPartition | None = None) -> float:
    """||Delta_j f||_{L^p} by grid quadrature (max for p = inf)."""
    part = partition if partition is not None else get_partition(fld.grid)
    w = part.weight(j)
    g = fld.grid
    vals = [ifftn(c * w).real for c in fld.coeffs]
    if len(vals) == 1:
        mag = np.abs(vals[0])
    else:
        mag = np.sqrt(sum(v * v for v in vals))
    if p == INF:
        return float(np.max(mag))
    return float((np.sum(mag ** p) * g.cell_volume) ** (1.0 / p))


# ---------------------------------------------------------------------------
# indices and norm samples


@dataclass(frozen=True)
class BesovIndex:
    """Homogeneous Besov index (s, p, q); optional temporal exponent r."""

    s: float
    p: float
    q: float
    r: float | None = None

    def __post_init__(self):
        for name, v in (("p", self.p), ("q", self.q)):
            if not (1.0 <= v <= INF):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")
        if self.r is not None and not (1.0 <= self.r <= INF):
            raise ValueError(f"r must lie in [1, inf], got {self.r}")

    def is_critical(self, n: int) -> bool:
        return abs(self.s - (n / self.p - 1.0)) < 1e-12

    def with_r(self, r: float) -> "BesovIndex":
        return BesovIndex(self.s, self.p, self.q, r)

    def label(self) -> str:
        def fmt(v):
            return "inf" if v == INF else f"{v:g}"
        base = f"B^{self.s:g}_{{{fmt(self.p)},{fmt(self.q)}}}"
        if self.r is not None:
            return f"L~^{fmt(self.r)} {base}"
        return base


@dataclass
class NormSample:
    """A norm value plus the per-block evidence 2^{sj} ||Delta_j f||_{L^p(.)}."""

    value: float
    index: BesovIndex
    block_profile: dict
    time_window: tuple[float, float] | None = None

    def aggregation_residual(self) -> float:
        vals = np.array(list(self.block_profile.values()))
        agg = lq_aggregate(vals, self.index.q)
        return abs(agg - self.value)


def lq_aggregate(values: np.ndarray, q: float) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0.0
    if q == INF:
        return float(np.max(values))
    return float(np.sum(values ** q) ** (1.0 / q))


def lp_time(values: np.ndarray, times: np.ndarray, r: float) -> float:
    """Temporal L^r by trapezoidal quadrature (sup for r = inf)."""
    values = np.asarray(values, dtype=np.float64)
    if r == INF:
        return float(np.max(values))
    if len(times) == 1:
        return 0.0
    return float(np.trapezoid(values ** r, times) ** (1.0 / r))


def besov_norm(fld: SpectralField, index: BesovIndex,
               partition: DyadicPartition | None = None) -> NormSample:
    """Homogeneous Besov norm with its per-block profile."""
    part = partition if partition is not None else get_partition(fld.grid)
    profile = {}
    for j in part.j_range:
        profile[j] = (2.0 ** (index.s * j)) * block_lp_norm(fld, j, index.p, part)
    value = lq_aggregate(np.array(list(profile.values())), index.q)
    return NormSample(value, index, profile)


def chemin_lerner_norm(traj: Trajectory, index: BesovIndex,
                       partition: DyadicPartition | None = None) -> NormSample:
    """Chemin-Lerner norm: temporal L^r inside the blocks, then l^q over j."""
    if index.r is None:
        raise ValueError("chemin_lerner_norm needs an index with a temporal exponent r")
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    part = partition if partition is not None else get_partition(traj.grid)
    profile = {}
    series = {j: np.empty(len(traj)) for j in part.j_range}
    for i, fld in enumerate(traj.fields):
        for j in part.j_range:
            series[j][i] = block_lp_norm(fld, j, index.p, part)
    for j in part.j_range:
        profile[j] = (2.0 ** (index.s * j)) * lp_time(series[j], traj.times, index.r)
    value = lq_aggregate(np.array(list(profile.values())), index.q)
    return NormSample(value, index, profile, time_window=(traj.t0, traj.t1))


def xn_norm(traj: Trajectory, N: int, partition: DyadicPartition | None = None) -> float:
    """The 2D working norm: L~^inf B^1_{1,1} + sqrt(N) * L~^N B^{1+2/N}_{1,2}."""
    a = chemin_lerner_norm(traj, BesovIndex(1.0, 1.0, 1.0, INF), partition).value
    b = chemin_lerner_norm(traj, BesovIndex(1.0 + 2.0 / N, 1.0, 2.0, float(N)), partition).value
    return a + math.sqrt(N) * b


def weak_lebesgue_norm(fld: SpectralField, p: float) -> float:
    """L^{p, inf} by decreasing rearrangement on the grid.

    sup over m of (cellvol * sum of the m largest |f|) / (cellvol * m)^{1 - 1/p},
    the discrete form of sup_E |E|^{1/p - 1} int_E |f|.
    """
    if not (1.0 < p < INF):
        raise ValueError("weak Lebesgue norm needs 1 < p < inf")
    mag = np.sort(fld.magnitude_physical().ravel())[::-1]
    vol = fld.grid.cell_volume
    csum = np.cumsum(mag) * vol
    sizes = vol * np.arange(1, mag.size + 1)
    return float(np.max(csum / sizes ** (1.0 - 1.0 / p)))


def lp_norm(fld: SpectralField, p: float) -> float:
    """Plain quadrature L^p norm of the pointwise magnitude."""
    mag = fld.magnitude_physical()
    if p == INF:
        return float(np.max(mag))
    return float((np.sum(mag ** p) * fld.grid.cell_volume) ** (1.0 / p))


def low_block_sup(fld: SpectralField, j_cut: int = 2,
                  partition: DyadicPartition | None = None) -> float:
    """sup_{j <= j_cut} 2^{-j} ||Delta_j f||_{L^inf}; lower bound for B^{-1}_{inf,inf}."""
    part = partition if partition is not None else get_partition(fld.grid)
    best = 0.0
    for j in range(part.j_min, min(j_cut, part.j_max) + 1):
        best = max(best, (2.0 ** (-j)) * block_lp_norm(fld, j, INF, part))
    return best


# ---------------------------------------------------------------------------
# paraproducts


def paraproduct_decompose(f: SpectralField, g: SpectralField,
                          partition: DyadicPartition | None = None):
    """Bony splitting fg = T_f g + R(f, g) + T_g f on the resolved blocks.

    The low-frequency partial sums S_m include the k=0 mode so the three terms
    telescope back to the dealiased product for arbitrary fields.
    """
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    if not (f.is_scalar and g.is_scalar):
        raise ValueError("paraproduct_decompose takes scalar fields")
    part = partition if partition is not None else get_partition(f.grid)
    grid = f.grid
    mask = grid.dealias_mask
    js = list(part.j_range)

    def phys(c):
        return ifftn(c * mask).real

    fb = {j: phys(f.coeffs[0] * part.weight(j)) for j in js}
    gb = {j: phys(g.coeffs[0] * part.weight(j)) for j in js}
    mean_sel = np.zeros(grid.shape)
    mean_sel[(0,) * grid.dim] = 1.0
    f_mean = phys(f.coeffs[0] * mean_sel)
    g_mean = phys(g.coeffs[0] * mean_sel)

    # running low-frequency sums S_{j-3}
    tf = np.zeros(grid.shape)
    tg = np.zeros(grid.shape)
    for j in js:
        sf = f_mean.copy()
        sg = g_mean.copy()
        for l in js:
            if l <= j - 3:
                sf += fb[l]
                sg += gb[l]
        tf += sf * gb[j]
        tg += sg * fb[j]
    rr = f_mean * g_mean
    for j in js:
        for l in js:
            if abs(j - l) <= 2:
                rr += fb[j] * gb[l]

    def to_field(vals):
        return SpectralField(grid, (fftn(vals) * mask)[None, ...])

    return to_field(tf), to_field(rr), to_field(tg)
