"""Mild-solution machinery and an independent nonlinear time-stepper.

The linear Duhamel integral uses the exact heat symbol with the forcing frozen
at substep midpoints (second order).  The solution is assembled as
u = u1 + u2 + remainder, the remainder being the fixed point of the usual
perturbed map, iterated on a coarse node grid with exponential-trapezoid
quadrature.  An ETD-RK2 pseudo-spectral integrator of the full equation serves
as the cross-checking oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spectral import (Grid, SpectralField, Trajectory, fftn, ifftn,
                       leray_project, zero_field)
from .littlewood_paley import (INF, BesovIndex, DyadicPartition, get_partition,
                               lq_aggregate, lp_time)
from .forcing import ForcingSchedule, ForcingSegment


class SolverError(RuntimeError):
    pass


class BlowupError(SolverError):
    pass


class PicardDivergenceError(SolverError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


@dataclass
class SolverConfig:
    """Time-integration parameters; nodes (stored samples) are every
    ``sample_stride`` substeps."""

    dt: float = 0.02
    horizon: float = 1.0
    picard_tol: float = 1e-6
    picard_max_iter: int = 20
    sample_stride: int = 10

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if not (0 < self.picard_tol <= 1e-3):
            raise ValueError("picard_tol must lie in (0, 1e-3]")
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least dt")
        if self.sample_stride < 1:
            raise ValueError("sample_stride >= 1")


@dataclass
class IterationReport:
    contraction_ratios: list
    converged: bool
    final_residual: float
    norms: dict = field(default_factory=dict)
    iterations: int = 0

    def last_ratio(self) -> float:
        return self.contraction_ratios[-1] if self.contraction_ratios else 0.0


# ---------------------------------------------------------------------------
# exponential-integrator symbols


def _phi1(z: np.ndarray) -> np.ndarray:
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    out = np.expm1(zs) / zs
    return np.where(small, 1.0 + z / 2.0, out)


def _phi2(z: np.ndarray) -> np.ndarray:
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)
    out = (np.expm1(zs) - zs) / (zs * zs)
    return np.where(small, 0.5 + z / 6.0 + z * z / 24.0, out)


_SYMBOLS: dict = {}


def _step_symbols(grid: Grid, dt: float):
    """E = e^{-|k|^2 dt}, P1 = dt*phi1, P2 = dt*phi2 (quadrature weights)."""
    key = (grid.dim, grid.shape, grid.domain_length, round(dt, 14))
    if key not in _SYMBOLS:
        if len(_SYMBOLS) > 16:
            _SYMBOLS.clear()
        z = -grid.k2 * dt
        _SYMBOLS[key] = (np.exp(z), dt * _phi1(z), dt * _phi2(z))
    return _SYMBOLS[key]


# ---------------------------------------------------------------------------
# raw-array kernels (hot loops avoid SpectralField overhead)


def _leray_raw(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    k2 = grid.k2.copy()
    zero = (0,) * grid.dim
    k2[zero] = 1.0
    kdotu = sum(coeffs[i] * grid.k_axes[i] for i in range(grid.dim))
    ratio = kdotu / k2
    out = np.stack([coeffs[i] - grid.k_axes[i] * ratio for i in range(grid.dim)])
    out[(slice(None),) + zero] = 0.0
    return out


def _tensor_div_raw(grid: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """P div(u (x) v) on raw coefficient stacks (general, non-symmetric)."""
    mask = grid.dealias_mask
    dim = grid.dim
    up = [ifftn(u[i] * mask).real for i in range(dim)]
    vp = [ifftn(v[i] * mask).real for i in range(dim)]
    out = np.empty_like(u)
    for a in range(dim):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for b in range(dim):
            prod = fftn(up[a] * vp[b])
            prod *= mask
            acc += (1j * grid.k_axes[b]) * prod
        out[a] = acc
    return _leray_raw(grid, out)


def _tensor_div_symmetric(grid: Grid, up: list) -> np.ndarray:
    dim = grid.dim
    prods = {}
    for a in range(dim):
        for b in range(a, dim):
            t = fftn(up[a] * up[b])
            t *= grid.dealias_mask
            prods[(a, b)] = t
    out = np.empty((dim,) + grid.shape, dtype=np.complex128)
    for a in range(dim):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for b in range(dim):
            t = prods[(min(a, b), max(a, b))]
            acc += (1j * grid.k_axes[b]) * t
        out[a] = acc
    return _leray_raw(grid, out)


def _self_tensor_div_raw(grid: Grid, u: np.ndarray) -> np.ndarray:
    """P div(u (x) u), exploiting symmetry (dim*(dim+1)/2 forward transforms)."""
    mask = grid.dealias_mask
    up = [ifftn(u[i] * mask).real for i in range(grid.dim)]
    return _tensor_div_symmetric(grid, up)


def _picard_quad_raw(grid: Grid, w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """P div(w (x) v + v (x) w + v (x) v) -- the remainder-map integrand."""
    mask = grid.dealias_mask
    dim = grid.dim
    wp = [ifftn(w[i] * mask).real for i in range(dim)]
    vp = [ifftn(v[i] * mask).real for i in range(dim)]
    out = np.empty((dim,) + grid.shape, dtype=np.complex128)
    prods = {}
    for a in range(dim):
        for b in range(a, dim):
            tab = wp[a] * vp[b] + vp[a] * wp[b] + vp[a] * vp[b]
            t = fftn(tab)
            t *= mask
            prods[(a, b)] = t
    for a in range(dim):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for b in range(dim):
            t = prods[(min(a, b), max(a, b))]
            acc += (1j * grid.k_axes[b]) * t
        out[a] = acc
    return _leray_raw(grid, out)


def _cross_tensor_div_raw(grid: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """P div(u (x) v + v (x) u)."""
    mask = grid.dealias_mask
    dim = grid.dim
    up = [ifftn(u[i] * mask).real for i in range(dim)]
    vp = [ifftn(v[i] * mask).real for i in range(dim)]
    out = np.empty((dim,) + grid.shape, dtype=np.complex128)
    prods = {}
    for a in range(dim):
        for b in range(a, dim):
            t = fftn(up[a] * vp[b] + vp[a] * up[b])
            t *= mask
            prods[(a, b)] = t
    for a in range(dim):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for b in range(dim):
            t = prods[(min(a, b), max(a, b))]
            acc += (1j * grid.k_axes[b]) * t
        out[a] = acc
    return _leray_raw(grid, out)


def _forcing_hat(forcing, t: float, grid: Grid) -> np.ndarray | None:
    """P f(t) as a raw coefficient stack, or None when identically zero."""
    if forcing is None:
        return None
    if isinstance(forcing, ForcingSegment):
        if not forcing.active(t):
            return None
        fld = forcing.evaluate(t)
    elif isinstance(forcing, ForcingSchedule):
        seg = next((s for s in forcing.segments if s.active(t)), None)
        if seg is None:
            return None
        fld = seg.evaluate(t)
    else:
        fld = forcing(t)
        if fld is None:
            return None
    return _leray_raw(grid, fld.coeffs)


# ---------------------------------------------------------------------------
# node storage


class _NodeSeries:
    """Field samples at node times, stored compactly (complex64 by default)."""

    def __init__(self, grid: Grid, times: np.ndarray, ncomp: int, dtype=np.complex64):
        self.grid = grid
        self.times = np.asarray(times, dtype=np.float64)
        self.data = np.zeros((len(self.times), ncomp) + grid.shape, dtype=dtype)

    def __len__(self):
        return len(self.times)

    @property
    def ncomp(self):
        return self.data.shape[1]

    def set(self, i: int, coeffs: np.ndarray) -> None:
        self.data[i] = coeffs.astype(self.data.dtype)

    def get(self, i: int) -> np.ndarray:
        return self.data[i].astype(np.complex128)

    def get_field(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.get(i))

    def scaled(self, c: float) -> "_NodeSeries":
        out = _NodeSeries(self.grid, self.times, self.ncomp, self.data.dtype)
        out.data = self.data * self.data.dtype.type(c)
        return out

    def diff_with(self, other: "_NodeSeries") -> "_NodeSeries":
        out = _NodeSeries(self.grid, self.times, self.ncomp, self.data.dtype)
        out.data = self.data - other.data
        return out

    def to_trajectory(self, meta: dict | None = None) -> Trajectory:
        fields = [self.get_field(i) for i in range(len(self))]
        return Trajectory(self.grid, self.times, fields, meta or {})

    @classmethod
    def from_trajectory(cls, traj: Trajectory, dtype=np.complex64) -> "_NodeSeries":
        out = cls(traj.grid, traj.times, traj.fields[0].ncomp, dtype)
        for i, f in enumerate(traj.fields):
            out.set(i, f.coeffs)
        return out


def _node_times(t0: float, t1: float, config: SolverConfig):
    """Uniform substeps of size <= config.dt whose every ``sample_stride``-th
    point is a node; returns (node_times, dt_eff, stride)."""
    stride = config.sample_stride
    n_nodes = max(1, math.ceil((t1 - t0) / (config.dt * stride) - 1e-12))
    dt_eff = (t1 - t0) / (n_nodes * stride)
    times = t0 + dt_eff * stride * np.arange(n_nodes + 1)
    times[-1] = t1
    return times, dt_eff, stride


# ---------------------------------------------------------------------------
# public operations: Duhamel and the second iteration


def duhamel(forcing, a: SpectralField | None, t0: float, t1: float,
            config: SolverConfig) -> Trajectory:
    """Linear mild solution e^{(t-t0)L}a + int e^{(t-tau)L} P f dtau.

    Exact heat symbol per substep, forcing frozen at substep midpoints.
    """
    if t1 <= t0:
        raise ValueError("need t1 > t0")
    grid = a.grid if a is not None else _forcing_grid(forcing)
    ncomp = grid.dim
    times, dt, stride = _node_times(t0, t1, config)
    E, P1, _ = _step_symbols(grid, dt)
    u = a.coeffs.copy() if a is not None else np.zeros((ncomp,) + grid.shape, np.complex128)
    out_fields = [SpectralField(grid, u.copy())]
    t = t0
    n_sub = (len(times) - 1) * stride
    for n in range(n_sub):
        fmid = _forcing_hat(forcing, t + dt / 2.0, grid)
        u = E * u
        if fmid is not None:
            u += P1 * fmid
        t += dt
        if (n + 1) % stride == 0:
            out_fields.append(SpectralField(grid, u.copy()))
    return Trajectory(grid, times, out_fields)


def _forcing_grid(forcing) -> Grid:
    if isinstance(forcing, ForcingSegment):
        return forcing.grid
    if isinstance(forcing, ForcingSchedule) and forcing.grid is not None:
        return forcing.grid
    raise SolverError("cannot infer the grid: give an initial datum")


def second_iteration(u1: Trajectory, config: SolverConfig,
                     windows: dict | None = None):
    """u2 = -int e^{(t-tau)L} P div(u1 (x) u1) dtau on u1's sample grid.

    ``windows`` maps names to (w0, w1): the same integral restricted to
    tau in [w0, w1], evaluated at the final time (returned in meta).
    """
    grid = u1.grid
    times = u1.times
    acc = np.zeros_like(u1.fields[0].coeffs)
    win_acc = {name: np.zeros_like(acc) for name in (windows or {})}
    out_fields = [SpectralField(grid, acc.copy())]
    for i in range(len(times) - 1):
        dt = float(times[i + 1] - times[i])
        E, P1, _ = _step_symbols(grid, dt)
        umid = 0.5 * (u1.fields[i].coeffs + u1.fields[i + 1].coeffs)
        q = _self_tensor_div_raw(grid, umid)
        acc = E * acc - P1 * q
        tmid = 0.5 * (times[i] + times[i + 1])
        for name, (w0, w1) in (windows or {}).items():
            win_acc[name] = E * win_acc[name]
            if w0 <= tmid <= w1:
                win_acc[name] -= P1 * q
        out_fields.append(SpectralField(grid, acc.copy()))
    meta = {}
    if windows:
        meta["windows"] = {name: SpectralField(grid, w) for name, w in win_acc.items()}
    return Trajectory(grid, times, out_fields, meta)


# ---------------------------------------------------------------------------
# streaming construction of the mild iterates


@dataclass
class MildPieces:
    """Node samples of the first two iterates plus the remainder-map sources."""

    u1: _NodeSeries
    u2: _NodeSeries
    s12: _NodeSeries | None = None
    s22: _NodeSeries | None = None
    window_fields: dict = field(default_factory=dict)
    dt: float = 0.0


def mild_pieces(forcing, a: SpectralField | None, t0: float, t1: float,
                config: SolverConfig, want_sources: bool = False,
                windows: dict | None = None, include_a_in_u1: bool = True,
                node_dtype=np.complex64, store_u1: bool = True) -> MildPieces:
    """One fine sweep computing u1, u2 (and optionally the constant sources
    S12 = int e P div(u1 (x) u2 + u2 (x) u1), S22 likewise for u2 (x) u2)
    at the node times, with exact-symbol accumulation at substep resolution.
    """
    grid = a.grid if a is not None else _forcing_grid(forcing)
    times, dt, stride = _node_times(t0, t1, config)
    E, P1, _ = _step_symbols(grid, dt)
    ncomp = grid.dim

    u1 = np.zeros((ncomp,) + grid.shape, np.complex128)
    if a is not None and include_a_in_u1:
        u1 += a.coeffs
    u2 = np.zeros_like(u1)
    s12 = np.zeros_like(u1) if want_sources else None
    s22 = np.zeros_like(u1) if want_sources else None
    win_acc = {name: np.zeros_like(u1) for name in (windows or {})}

    nodes_u1 = _NodeSeries(grid, times, ncomp, node_dtype) if store_u1 else None
    nodes_u2 = _NodeSeries(grid, times, ncomp, node_dtype)
    nodes_s12 = _NodeSeries(grid, times, ncomp, node_dtype) if want_sources else None
    nodes_s22 = _NodeSeries(grid, times, ncomp, node_dtype) if want_sources else None
    if store_u1:
        nodes_u1.set(0, u1)
    nodes_u2.set(0, u2)
    if want_sources:
        nodes_s12.set(0, s12)
        nodes_s22.set(0, s22)

    t = t0
    n_sub = (len(times) - 1) * stride
    node_i = 1
    for n in range(n_sub):
        tmid = t + dt / 2.0
        fmid = _forcing_hat(forcing, tmid, grid)
        u1_new = E * u1
        if fmid is not None:
            u1_new += P1 * fmid
        u1_mid = 0.5 * (u1 + u1_new)
        q = _self_tensor_div_raw(grid, u1_mid)
        u2_new = E * u2 - P1 * q
        for name, (w0, w1) in (windows or {}).items():
            win_acc[name] = E * win_acc[name]
            if w0 <= tmid <= w1:
                win_acc[name] -= P1 * q
        if want_sources:
            u2_mid = 0.5 * (u2 + u2_new)
            q12 = _cross_tensor_div_raw(grid, u1_mid, u2_mid)
            q22 = _self_tensor_div_raw(grid, u2_mid)
            s12 = E * s12 + P1 * q12
            s22 = E * s22 + P1 * q22
        u1, u2 = u1_new, u2_new
        t += dt
        if (n + 1) % stride == 0:
            if store_u1:
                nodes_u1.set(node_i, u1)
            nodes_u2.set(node_i, u2)
            if want_sources:
                nodes_s12.set(node_i, s12)
                nodes_s22.set(node_i, s22)
            node_i += 1

    wf = {name: SpectralField(grid, w) for name, w in win_acc.items()}
    return MildPieces(nodes_u1, nodes_u2, nodes_s12, nodes_s22, wf, dt)


# ---------------------------------------------------------------------------
# working norms


@dataclass
class WorkingNormSpec:
    """The fixed-point scheme's norm: X cap Y_{r,sigma,rho} for n >= 3,
    X^N for n = 2."""

    dim: int
    n: int = 3
    r: float = 4.0
    sigma: float = 2.0
    rho: float = 3.0
    N: int = 3

    def indices(self) -> list:
        if self.dim == 2:
            return [BesovIndex(1.0, 1.0, 1.0, INF),
                    BesovIndex(1.0 + 2.0 / self.N, 1.0, 2.0, float(self.N))]
        s = self.n / self.r - 1.0
        return [BesovIndex(s, self.r, self.sigma, INF),
                BesovIndex(s + 2.0 / self.rho, self.r, self.sigma, self.rho)]

    def weights(self) -> list:
        if self.dim == 2:
            return [1.0, math.sqrt(self.N)]
        return [1.0, 1.0]

    def series_norm(self, series: _NodeSeries, partition: DyadicPartition | None = None,
                    with_weak: bool = True) -> float:
        """X + Y evaluated on node samples (trapezoid in time inside blocks)."""
        part = partition if partition is not None else get_partition(series.grid)
        idxs = self.indices()
        wts = self.weights()
        ps = sorted({ix.p for ix in idxs})
        js = list(part.j_range)
        blocks = {p: {j: np.empty(len(series)) for j in js} for p in ps}
        weak_vals = np.empty(len(series)) if (self.dim == 3 and with_weak) else None
        g = series.grid
        for i in range(len(series)):
            coeffs = series.get(i)
            phys = None
            for j in js:
                w = part.weight(j)
                vals = [ifftn(c * w).real for c in coeffs]
                mag = np.sqrt(sum(v * v for v in vals))
                for p in ps:
                    if p == INF:
                        blocks[p][j][i] = float(np.max(mag))
                    else:
                        blocks[p][j][i] = float((np.sum(mag ** p) * g.cell_volume) ** (1.0 / p))
            if weak_vals is not None:
                vals = [ifftn(c).real for c in coeffs]
                mag = np.sqrt(sum(v * v for v in vals))
                srt = np.sort(mag.ravel())[::-1]
                csum = np.cumsum(srt) * g.cell_volume
                sizes = g.cell_volume * np.arange(1, srt.size + 1)
                weak_vals[i] = float(np.max(csum / sizes ** (1.0 - 1.0 / self.n)))
        total = 0.0
        for ix, wt in zip(idxs, wts):
            prof = [2.0 ** (ix.s * j) * lp_time(blocks[ix.p][j], series.times, ix.r)
                    for j in js]
            total += wt * lq_aggregate(np.array(prof), ix.q)
        if weak_vals is not None:
            total += float(np.max(weak_vals))
        return total


# ---------------------------------------------------------------------------
# the Picard remainder


def picard_remainder(u1, u2, a: SpectralField | None, forcing_kind: str,
                     config: SolverConfig, norms: WorkingNormSpec | None = None,
                     sources: tuple | None = None):
    """Fixed point of the remainder map on the nodes of u1/u2.

    For the 2D scheme the initial datum rides in the remainder
    (map includes e^{(t-t0)L}a and v(t0) = a); for n >= 3 it rides in u1 and
    v(t0) = 0.  Returns (Trajectory, IterationReport); raises
    PicardDivergenceError when the empirical contraction ratio reaches 1.
    """
    s1 = u1 if isinstance(u1, _NodeSeries) else _NodeSeries.from_trajectory(u1)
    s2 = u2 if isinstance(u2, _NodeSeries) else _NodeSeries.from_trajectory(u2)
    grid = s1.grid
    times = s1.times
    if norms is None:
        norms = WorkingNormSpec(dim=grid.dim)
    part = get_partition(grid)
    two_dim = forcing_kind in ("twodim",) or grid.dim == 2

    nn = len(times)
    dts = np.diff(times)
    dt0 = float(dts[0])
    if not np.allclose(dts, dt0, rtol=1e-9):
        raise SolverError("picard_remainder needs uniform node spacing")
    E, P1, P2 = _step_symbols(grid, dt0)

    # constant part S(t_j): heat flow of a (2D scheme) minus the u1/u2 cross sources
    S = _NodeSeries(grid, times, grid.dim, np.complex64)
    if sources is not None:
        s12, s22 = sources
    else:
        s12, s22 = _sources_from_nodes(grid, s1, s2, times, E, P1, P2)
    for i in range(nn):
        c = -(s12.get(i) + s22.get(i))
        if two_dim and a is not None:
            c += np.exp(-grid.k2 * (times[i] - times[0])) * a.coeffs
        S.set(i, c)

    def apply_map(v: _NodeSeries) -> _NodeSeries:
        out = _NodeSeries(grid, times, grid.dim, np.complex64)
        out.set(0, S.get(0))
        acc = np.zeros((grid.dim,) + grid.shape, np.complex128)
        b_prev = _picard_quad_raw(grid, s1.get(0) + s2.get(0), v.get(0))
        for i in range(1, nn):
            w = s1.get(i) + s2.get(i)
            b_next = _picard_quad_raw(grid, w, v.get(i))
            acc = E * acc - (P1 * b_prev + P2 * (b_next - b_prev))
            out.set(i, S.get(i) + acc)
            b_prev = b_next
        return out

    v = _NodeSeries(grid, times, grid.dim, np.complex64)
    if two_dim and a is not None:
        v.set(0, a.coeffs)
    ratios = []
    prev_diff = None
    converged = False
    residual = math.inf
    it = 0
    for it in range(1, config.picard_max_iter + 1):
        v_new = apply_map(v)
        diff = norms.series_norm(v_new.diff_with(v), part)
        vnorm = norms.series_norm(v_new, part)
        residual = diff / max(vnorm, 1e-300) if vnorm > 0 else 0.0
        if prev_diff is not None and prev_diff > 0:
            ratios.append(diff / prev_diff)
        prev_diff = diff
        v = v_new
        if residual <= config.picard_tol:
            converged = True
            break
        if len(ratios) >= 2 and ratios[-1] >= 1.0 and ratios[-2] >= 1.0:
            rep = IterationReport(ratios, False, residual, {}, it)
            raise PicardDivergenceError(
                f"remainder map is not contracting (ratios {ratios[-2:]}), "
                "amplitude too large", rep)
    report = IterationReport(ratios, converged, residual, {}, it)
    report.norms = {
        "u1": norms.series_norm(s1, part),
        "u2": norms.series_norm(s2, part),
        "remainder": norms.series_norm(v, part),
    }
    return v.to_trajectory(), report


def _sources_from_nodes(grid, s1, s2, times, E, P1, P2):
    """Exp-trapezoid accumulation of the u1/u2 cross sources on the nodes
    (used when no fine-sweep sources were provided)."""
    nn = len(times)
    out12 = _NodeSeries(grid, times, grid.dim, np.complex64)
    out22 = _NodeSeries(grid, times, grid.dim, np.complex64)
    acc12 = np.zeros((grid.dim,) + grid.shape, np.complex128)
    acc22 = np.zeros_like(acc12)
    b12_prev = _cross_tensor_div_raw(grid, s1.get(0), s2.get(0))
    b22_prev = _self_tensor_div_raw(grid, s2.get(0))
    for i in range(1, nn):
        b12 = _cross_tensor_div_raw(grid, s1.get(i), s2.get(i))
        b22 = _self_tensor_div_raw(grid, s2.get(i))
        acc12 = E * acc12 + P1 * b12_prev + P2 * (b12 - b12_prev)
        acc22 = E * acc22 + P1 * b22_prev + P2 * (b22 - b22_prev)
        out12.set(i, acc12)
        out22.set(i, acc22)
        b12_prev, b22_prev = b12, b22
    return out12, out22


# ---------------------------------------------------------------------------
# assembled mild solver


def solve_mild(a: SpectralField | None, schedule: ForcingSchedule,
               config: SolverConfig, t0: float = 0.0,
               norms: WorkingNormSpec | None = None) -> Trajectory:
    """u = u1 + u2 + remainder on [t0, horizon], restarted at window breaks.

    The timeline is split at segment boundaries; each piece runs the full
    iterate construction from the previous terminal state.
    """
    grid = a.grid if a is not None else _forcing_grid(schedule)
    if norms is None:
        norms = WorkingNormSpec(dim=grid.dim)
    t1 = t0 + config.horizon
    cuts = {t0, t1}
    for seg in schedule.segments:
        for c in (seg.t_start, seg.t_stop):
            if t0 < c < t1:
                cuts.add(c)
    cuts = sorted(cuts)

    times_all = [np.array([t0])]
    fields_all = [[a.copy() if a is not None else zero_field(grid)]]
    state = fields_all[0][0]
    reports = []
    for ta, tb in zip(cuts, cuts[1:]):
        pieces = mild_pieces(schedule, state, ta, tb, config, want_sources=True,
                             include_a_in_u1=(grid.dim == 3))
        a_piece = None if grid.dim == 3 else state
        rem, rep = picard_remainder(pieces.u1, pieces.u2, a_piece, "auto", config,
                                    norms, sources=(pieces.s12, pieces.s22))
        reports.append(rep)
        tt = pieces.u1.times
        piece_fields = []
        for i in range(1, len(tt)):
            total = pieces.u1.get(i) + pieces.u2.get(i) + rem.fields[i].coeffs
            piece_fields.append(SpectralField(grid, total))
        times_all.append(tt[1:])
        fields_all.append(piece_fields)
        state = piece_fields[-1]

    times = np.concatenate(times_all)
    fields = [f for chunk in fields_all for f in chunk]
    return Trajectory(grid, times, fields, {"picard_reports": reports})


# ---------------------------------------------------------------------------
# independent oracle: ETD-RK2 time stepper


def solve_timestepper(a: SpectralField | None, schedule: ForcingSchedule,
                      config: SolverConfig, t0: float = 0.0,
                      blowup_threshold: float = 1e6,
                      callback: Callable | None = None) -> Trajectory:
    """Full nonlinear solve by exponential time differencing (RK2), exact
    linear part, 2/3-dealiased quadratic term, re-projected every step."""
    grid = a.grid if a is not None else _forcing_grid(schedule)
    t1 = t0 + config.horizon
    times, dt, stride = _node_times(t0, t1, config)
    E, P1, P2 = _step_symbols(grid, dt)

    u = a.coeffs.copy() if a is not None else np.zeros((grid.dim,) + grid.shape, np.complex128)
    u = _leray_raw(grid, u)

    def rhs(coeffs, t):
        out = -_self_tensor_div_raw(grid, coeffs)
        f = _forcing_hat(schedule, t, grid)
        if f is not None:
            out += f
        return out

    fields = [SpectralField(grid, u.copy())]
    energy = [0.5 * grid.volume * float(np.sum(np.abs(u) ** 2))]
    t = t0
    n_sub = (len(times) - 1) * stride
    node_i = 1
    for n in range(n_sub):
        n0 = rhs(u, t)
        pred = E * u + P1 * n0
        n1 = rhs(pred, t + dt)
        u = pred + P2 * (n1 - n0)
        u = _leray_raw(grid, u)
        t += dt
        l2 = math.sqrt(grid.volume * float(np.sum(np.abs(u) ** 2)))
        if not math.isfinite(l2) or l2 > blowup_threshold:
            raise BlowupError(f"norm {l2:g} at t = {t:g} (threshold {blowup_threshold:g})")
        if (n + 1) % stride == 0:
            fields.append(SpectralField(grid, u.copy()))
            energy.append(0.5 * l2 * l2)
            stop = callback(times[node_i], fields[-1]) if callback is not None else False
            node_i += 1
            if stop:
                break
    meta = {"energy": np.array(energy), "dt": dt}
    return Trajectory(grid, times[:len(fields)], fields, meta)
