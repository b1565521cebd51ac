"""Explicit spatial profiles and external forces.

Five forcing families are provided: the high-dimensional single-carrier force
(smooth temporal window times eta * Laplacian[Psi cos(beta x1)]), its lacunary
multi-carrier variant, the two-dimensional force (eta/sqrt(N)) chi(t)
Laplacian perp-grad(psi cos(M x1)), and two non-oscillating forces whose
carrier moves in time (a power-law sweep for p > n, log-lacunary windows for
p = n).  Segments evaluate to zero outside their temporal support and carry
measured norm certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spectral import (Grid, SpectralField, divergence, heat_propagate, laplacian,
                       multiply, partial_derivative, zero_field)
from .littlewood_paley import (INF, BesovIndex, besov_norm, get_partition,
                               smooth_step, smooth_step_derivative)


class ForcingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# spatial profiles


@dataclass
class BumpProfile:
    """Radial Fourier bump psi: supp psi_hat in {|xi| <= fourier_radius},
    psi_hat > 0 on the open ball, identically ``amplitude`` on the plateau."""

    grid: Grid
    field: SpectralField
    fourier_radius: float
    plateau_radius: float
    amplitude: float

    def profile(self, rho):
        """psi_hat as a function of |xi| (vectorized, valid off-lattice)."""
        rho = np.asarray(rho, dtype=np.float64)
        r, rp = self.fourier_radius, self.plateau_radius
        return self.amplitude * np.where(
            rho <= rp, 1.0, smooth_step((r - rho) / (r - rp)))

    def profile_derivative(self, rho):
        rho = np.asarray(rho, dtype=np.float64)
        r, rp = self.fourier_radius, self.plateau_radius
        inside = (rho > rp) & (rho < r)
        d = smooth_step_derivative((r - rho) / (r - rp)) * (-1.0 / (r - rp))
        return self.amplitude * np.where(inside, d, 0.0)


def make_bump(grid: Grid, support_radius: float = 1.0,
              plateau_radius: float | None = None,
              peak_normalize: bool = True) -> BumpProfile:
    """Build the radial frequency bump psi on the grid.

    ``peak_normalize`` rescales so the physical peak of psi is 1 (the raw
    profile has psi_hat values in [0, 1], plateau value 1).
    """
    if grid.nyquist < 8:
        raise ForcingError(f"grid Nyquist {grid.nyquist:g} < 8: too coarse for the bump")
    if grid.freq_step > support_radius / 2.0 + 1e-12:
        raise ForcingError(
            f"lattice step {grid.freq_step:g} too coarse to resolve a radius-"
            f"{support_radius:g} frequency ball")
    if plateau_radius is None:
        plateau_radius = support_radius / 2.0
    if not (0 < plateau_radius < support_radius):
        raise ForcingError("need 0 < plateau_radius < support_radius")

    rho = grid.k_abs
    vals = np.where(rho <= plateau_radius, 1.0,
                    smooth_step((support_radius - rho) / (support_radius - plateau_radius)))
    fld = SpectralField(grid, vals.astype(np.complex128)[None, ...])
    amp = 1.0
    if peak_normalize:
        peak = float(np.max(fld.physical()))
        amp = 1.0 / peak
        fld = fld * amp
    return BumpProfile(grid, fld, support_radius, plateau_radius, amp)


def make_Psi(bump: BumpProfile) -> SpectralField:
    """3D solenoidal profile (0, d_{x3} psi, -d_{x2} psi)."""
    g = bump.grid
    if g.dim != 3:
        raise ForcingError("make_Psi needs a 3D grid")
    psi = bump.field.coeffs[0]
    c2 = psi * (1j * g.k_axes[2])
    c3 = -psi * (1j * g.k_axes[1])
    return SpectralField(g, np.stack([np.zeros_like(psi), c2, c3]))


def make_perp(bump: BumpProfile) -> SpectralField:
    """2D perpendicular gradient (-d_{x2} psi, d_{x1} psi)."""
    g = bump.grid
    if g.dim != 2:
        raise ForcingError("make_perp needs a 2D grid")
    psi = bump.field.coeffs[0]
    c1 = -psi * (1j * g.k_axes[1])
    c2 = psi * (1j * g.k_axes[0])
    return SpectralField(g, np.stack([c1, c2]))


def perp_gradient(fld: SpectralField) -> SpectralField:
    g = fld.grid
    if g.dim != 2 or not fld.is_scalar:
        raise ForcingError("perp_gradient takes a 2D scalar field")
    psi = fld.coeffs[0]
    return SpectralField(g, np.stack([-psi * (1j * g.k_axes[1]), psi * (1j * g.k_axes[0])]))


def make_Phi(bump: BumpProfile) -> SpectralField:
    """The quadratic profile driving the second iteration:

    Phi = 1/2 [d2((psi_3)^2) - d3(psi_2 psi_3)] e2
        + 1/2 [-d2(psi_2 psi_3) + d3((psi_2)^2)] e3,   psi_i := d_{xi} psi.
    """
    g = bump.grid
    if g.dim != 3:
        raise ForcingError("make_Phi needs a 3D grid")
    psi2 = partial_derivative(bump.field, 1)
    psi3 = partial_derivative(bump.field, 2)
    p33 = multiply(psi3, psi3)
    p22 = multiply(psi2, psi2)
    p23 = multiply(psi2, psi3)
    comp2 = 0.5 * (partial_derivative(p33, 1) - partial_derivative(p23, 2))
    comp3 = 0.5 * (partial_derivative(p22, 2) - partial_derivative(p23, 1))
    out = np.stack([np.zeros_like(comp2.coeffs[0]), comp2.coeffs[0], comp3.coeffs[0]])
    return SpectralField(g, out)


def modulate_x1(fld: SpectralField, carrier: float) -> SpectralField:
    """Multiply a field by cos(carrier * x1) exactly (spectral shift).

    The carrier must sit on the frequency lattice and the shifted support must
    stay inside it.
    """
    g = fld.grid
    m = g.lattice_index(carrier, axis=0)
    c = fld.coeffs
    out = 0.5 * (np.roll(c, m, axis=1) + np.roll(c, -m, axis=1))
    return SpectralField(g, out, fld.is_real)


# ---------------------------------------------------------------------------
# temporal cutoffs


@dataclass(frozen=True)
class SmoothCutoff:
    """C-infinity window on [t_on, t_off] with ramp width h (0 outside,
    1 on [t_on + h, t_off - h])."""

    t_on: float
    t_off: float
    ramp: float

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        up = smooth_step((t - self.t_on) / self.ramp)
        down = smooth_step((self.t_off - t) / self.ramp)
        return up * down

    def lr_norm(self, r: float) -> float:
        """Temporal L^r norm (quadrature; exact sup for r = inf)."""
        if r == INF:
            return 1.0 if self.t_off - self.t_on > 2 * self.ramp else float(self(0.5 * (self.t_on + self.t_off)))
        ts = np.linspace(self.t_on, self.t_off, 4097)
        return float(np.trapezoid(self(ts) ** r, ts) ** (1.0 / r))


def paper_cutoff(t0: float, duration: float, h: float) -> SmoothCutoff:
    """chi(t) = chi~(t - t0) chi~(t0 + T - t) with chi~ = 0 below h/2, 1 above h."""
    if not (0 < h <= 1):
        raise ForcingError("ramp width h must lie in (0, 1]")
    if duration <= 2 * h:
        raise ForcingError("window shorter than its ramps")
    # the paper's chi~ rises on [h/2, h]; via smooth_step((tau - h/2)/(h/2))
    class _PaperCutoff(SmoothCutoff):
        def __call__(self, t):
            t = np.asarray(t, dtype=np.float64)
            up = smooth_step((t - self.t_on - self.ramp / 2) / (self.ramp / 2))
            down = smooth_step((self.t_off - t - self.ramp / 2) / (self.ramp / 2))
            return up * down
    return _PaperCutoff(t0, t0 + duration, h)


# ---------------------------------------------------------------------------
# segments and schedules


@dataclass
class ForcingSegment:
    """One temporal window of external force.

    Separable segments are amplitude(t) * profile; non-separable ones carry a
    builder(t).  ``certificates`` holds measured norms recorded at build time.
    """

    grid: Grid
    t_start: float
    t_stop: float
    kind: str
    profile: SpectralField | None = None
    amplitude: Callable | None = None
    builder: Callable | None = None
    params: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)

    @property
    def is_separable(self) -> bool:
        return self.profile is not None

    def active(self, t: float) -> bool:
        return self.t_start <= t <= self.t_stop

    def evaluate(self, t: float) -> SpectralField:
        if not self.active(t):
            return zero_field(self.grid)
        if self.is_separable:
            return float(self.amplitude(t)) * self.profile
        return self.builder(t)

    def divergence_residual(self, t: float | None = None) -> float:
        fld = self.evaluate(t if t is not None else 0.5 * (self.t_start + self.t_stop))
        scale = max(fld.linf(), 1e-300)
        return divergence(fld).linf() / scale


@dataclass
class ForcingSchedule:
    """Ordered, non-overlapping segments; evaluates to zero in the gaps."""

    segments: list
    horizon: float = 0.0

    def __post_init__(self):
        segs = sorted(self.segments, key=lambda s: s.t_start)
        for a, b in zip(segs, segs[1:]):
            if b.t_start < a.t_stop - 1e-12:
                raise ForcingError(
                    f"overlapping segments: [{a.t_start}, {a.t_stop}] and [{b.t_start}, {b.t_stop}]")
        self.segments = segs
        if self.segments:
            self.horizon = max(self.horizon, max(s.t_stop for s in self.segments))

    @property
    def grid(self) -> Grid | None:
        return self.segments[0].grid if self.segments else None

    def evaluate(self, t: float, grid: Grid | None = None) -> SpectralField:
        for seg in self.segments:
            if seg.active(t):
                return seg.evaluate(t)
        g = grid if grid is not None else self.grid
        if g is None:
            raise ForcingError("empty schedule needs an explicit grid to evaluate")
        return zero_field(g)

    def is_zero_on(self, t0: float, t1: float) -> bool:
        return all(s.t_stop <= t0 + 1e-12 or s.t_start >= t1 - 1e-12 for s in self.segments)

    def window_ledger(self) -> list:
        """Per-segment measured sup-in-time norms and declared bounds."""
        out = []
        for seg in self.segments:
            out.append({
                "t_start": seg.t_start,
                "t_stop": seg.t_stop,
                "kind": seg.kind,
                **{k: v for k, v in seg.certificates.items()},
            })
        return out


def schedule_forcing(segments: Sequence[ForcingSegment]) -> ForcingSchedule:
    return ForcingSchedule(list(segments))


# ---------------------------------------------------------------------------
# the high-dimensional carrier force


def _check_carrier(grid: Grid, beta: float, radius: float, j_cut: int = 2) -> dict:
    """Admissibility of a single carrier: band retained by the 2/3 rule and
    the quadratic's sidebands clear of blocks j <= j_cut."""
    limit = grid.dealias_limit_axis[0]
    if beta + radius > limit + 1e-9:
        raise ForcingError(
            f"carrier {beta:g} + bump radius {radius:g} exceeds the dealiased zone "
            f"{limit:g} (Nyquist {grid.nyquist_axis[0]:g}) on axis 1")
    sep = 2 * beta - 2 * radius
    if sep <= 2.0 ** (j_cut + 1):
        raise ForcingError(
            f"carrier {beta:g} too low: quadratic sidebands reach down to {sep:g}"
            f" <= 2^{j_cut + 1} and pollute the low blocks")
    return {"nyquist_third_ok": bool(beta <= grid.nyquist_axis[0] / 3.0 + 1e-12)}


def forcing_highdim(grid: Grid, eta: float, t0: float, T_star: float,
                    h: float = 0.25, r: float = 4.0, n: int = 3,
                    delta: float | None = None, beta: float | None = None,
                    sigma: float = 2.0, bump: BumpProfile | None = None,
                    j_cut: int = 2) -> ForcingSegment:
    """f(t, x) = chi(t) * eta * Laplacian[Psi(x) cos(beta x1)] on [t0, t0 + T_star].

    Exactly one of ``delta`` (paper parametrization, beta = delta^{-r/(r-n)},
    requires delta <= eta^2) or ``beta`` (desk parametrization, implied delta
    recorded) must be given.
    """
    if grid.dim != 3:
        raise ForcingError("high-dimensional forcing needs a 3D grid")
    if not (n < r < 2 * n) and not (r == n):
        raise ForcingError(f"need n < r < 2n or r = n, got r={r}, n={n}")
    if (delta is None) == (beta is None):
        raise ForcingError("give exactly one of delta, beta")
    if delta is not None:
        if r == n:
            raise ForcingError("r = n has no single-carrier delta parametrization")
        if delta > eta ** 2 + 1e-15:
            raise ForcingError(f"delta={delta:g} > eta^2={eta**2:g}")
        beta = delta ** (-r / (r - n))
        # snap the implied carrier onto the frequency lattice
        beta = max(1, int(round(beta / grid.freq_step))) * grid.freq_step
        desk_scale = False
    else:
        delta = beta ** (-(r - n) / r) if r != n else float("nan")
        desk_scale = True

    if bump is None:
        bump = make_bump(grid)
    info = _check_carrier(grid, beta, bump.fourier_radius, j_cut)
    mi = grid.lattice_index(beta, axis=0)
    beta = mi * grid.freq_step

    Psi = make_Psi(bump)
    g_profile = laplacian(modulate_x1(Psi, beta)) * eta
    chi = paper_cutoff(t0, T_star, h)

    part = get_partition(grid)
    cert = {
        "norm_B-2_n2": besov_norm(g_profile, BesovIndex(-2.0, float(n), 2.0), part).value,
        "norm_Bcrit-2": besov_norm(
            g_profile, BesovIndex(n / r - 3.0, r, sigma), part).value,
        "eta": eta, "delta": delta, "beta": beta,
    }
    params = {"eta": eta, "delta": delta, "beta": beta, "r": r, "n": n,
              "sigma": sigma, "h": h, "desk_scale": desk_scale, **info}
    return ForcingSegment(grid, t0, t0 + T_star, "highdim",
                          profile=g_profile, amplitude=chi,
                          params=params, certificates=cert)


# ---------------------------------------------------------------------------
# the lacunary multi-carrier force (r = n)


def default_lacunary_frequencies(K: int, base: float = 12.0, drift: float = 2.0) -> list:
    # quadratic drift off the geometric ladder keeps every pairwise sum and
    # difference distinct (pure powers collide: 2a_k = a_{k+2} - a_{k+1})
    return [base * 2.0 ** (k - 1) + drift * (k - 1) ** 2 for k in range(1, K + 1)]


def _check_lacunary(grid: Grid, alphas: Sequence[float], radius: float,
                    j_cut: int, require_product_safe: bool) -> None:
    alphas = list(alphas)
    if sorted(alphas) != alphas or len(set(alphas)) != len(alphas):
        raise ForcingError("carrier frequencies must be strictly increasing")
    lo_limit = 2.0 ** (j_cut + 1)
    combos = []
    for i, a in enumerate(alphas):
        combos.append(2 * a)
        if a - radius <= lo_limit:
            raise ForcingError(f"carrier {a:g} too low against blocks j <= {j_cut}")
        for b in alphas[i + 1:]:
            combos.extend([a + b, b - a])
    if min(combos) - 2 * radius <= lo_limit:
        raise ForcingError("cross-frequency ledger violated: a sum/difference "
                           f"minus bump width reaches below 2^{j_cut + 1}")
    combos_sorted = sorted(combos)
    for a, b in zip(combos_sorted, combos_sorted[1:]):
        if b - a < 1e-9:
            raise ForcingError(f"cross-frequency collision at {a:g}")
    top = max(alphas) + radius
    if require_product_safe:
        if top > grid.dealias_limit_axis[0] + 1e-9:
            raise ForcingError(f"top carrier {top:g} exceeds the dealiased zone "
                               f"{grid.dealias_limit_axis[0]:g}")
    else:
        part = get_partition(grid)
        if top > 2.0 ** (part.j_max + 1) + 1e-9:
            raise ForcingError(f"top carrier {top:g} exceeds partition coverage "
                               f"2^{part.j_max + 1}")


def forcing_lacunary(grid: Grid, eta: float, t0: float, T_star: float,
                     h: float = 0.25, K: int = 8,
                     alphas: Sequence[float] | None = None,
                     sigma: float = 2.0, bump: BumpProfile | None = None,
                     require_product_safe: bool = True,
                     j_cut: int = 2) -> ForcingSegment:
    """f = chi(t) * (eta/sqrt(log(K+1))) Laplacian[Psi sum_k cos(alpha_k x1)/sqrt(k)]."""
    if grid.dim != 3:
        raise ForcingError("lacunary forcing needs a 3D grid")
    if K < 1:
        raise ForcingError("K >= 1")
    if bump is None:
        bump = make_bump(grid)
    if alphas is None:
        alphas = default_lacunary_frequencies(K)
    alphas = [grid.lattice_index(a, axis=0) * grid.freq_step for a in alphas]
    if len(alphas) != K:
        raise ForcingError("need K carrier frequencies")
    _check_lacunary(grid, alphas, bump.fourier_radius, j_cut, require_product_safe)

    Psi = make_Psi(bump)
    acc = np.zeros_like(Psi.coeffs)
    for k, a in enumerate(alphas, start=1):
        acc += modulate_x1(Psi, a).coeffs / math.sqrt(k)
    log_scale = math.log(K + 1)
    g_profile = laplacian(SpectralField(grid, acc)) * (eta / math.sqrt(log_scale))
    chi = paper_cutoff(t0, T_star, h)

    n = 3.0
    part = get_partition(grid)
    j1 = sum(1.0 / k for k in range(1, K + 1)) / log_scale
    cert = {
        "norm_B-2_nsigma": besov_norm(g_profile, BesovIndex(-2.0, n, sigma), part).value,
        "J1": j1, "eta": eta, "K": K,
    }
    params = {"eta": eta, "K": K, "alphas": list(alphas), "sigma": sigma, "h": h,
              "log_scale": log_scale, "J1": j1}
    return ForcingSegment(grid, t0, t0 + T_star, "lacunary",
                          profile=g_profile, amplitude=chi,
                          params=params, certificates=cert)


# ---------------------------------------------------------------------------
# the two-dimensional force


def forcing_2d(grid: Grid, N: int, M: float, eta: float, t0: float,
               bump: BumpProfile | None = None) -> ForcingSegment:
    """f(t,x) = (eta/sqrt(N)) chi(t) Laplacian perp-grad(psi(x) cos(M x1)),
    supported on [t0, t0 + 2^{2N}] with unit ramps."""
    if grid.dim != 2:
        raise ForcingError("forcing_2d needs a 2D grid")
    if N < 3:
        raise ForcingError("N >= 3")
    if M < 10:
        raise ForcingError("M >= 10")
    if bump is None:
        # psi_hat sandwiched between the indicators of |xi|<=1 and |xi|<=2
        bump = make_bump(grid, support_radius=2.0, plateau_radius=1.0,
                         peak_normalize=False)
    if M + bump.fourier_radius > grid.nyquist_axis[0] / 3.0 + 1e-9:
        raise ForcingError(f"M + {bump.fourier_radius:g} = {M + bump.fourier_radius:g} "
                           f"exceeds Nyquist/3 = {grid.nyquist_axis[0] / 3.0:g}")
    mi = grid.lattice_index(M, axis=0)
    M = mi * grid.freq_step
    duration = float(2 ** (2 * N))

    theta = modulate_x1(bump.field, M)
    g_profile = laplacian(perp_gradient(theta))
    # support annulus M-2 <= |xi| <= M+2 (radius-2 bump); verified on the lattice
    r = bump.fourier_radius
    outside = (grid.k_abs < M - r - 1e-9) | (grid.k_abs > M + r + 1e-9)
    ann_leak = float(np.max(np.abs(g_profile.coeffs[:, outside]))) if np.any(outside) else 0.0

    chi = SmoothCutoff(t0, t0 + duration, 1.0)
    scale = eta / math.sqrt(N)
    amp = lambda t: scale * chi(t)

    part = get_partition(grid)
    cert = {
        "norm_B-1_11": scale * besov_norm(g_profile, BesovIndex(-1.0, 1.0, 1.0), part).value,
        "norm_B-1+2N_12": scale * besov_norm(
            g_profile, BesovIndex(-1.0 + 2.0 / N, 1.0, 2.0), part).value,
        "annulus_leak": ann_leak,
        "eta": eta, "M": M, "N": N,
    }
    params = {"eta": eta, "M": M, "N": N, "duration": duration, "scale": scale}
    return ForcingSegment(grid, t0, t0 + duration, "twodim",
                          profile=g_profile, amplitude=amp,
                          params=params, certificates=cert)


# ---------------------------------------------------------------------------
# non-oscillating forces (appendix constructions)


def _shifted_Psi_hat(grid: Grid, bump: BumpProfile, derivative: bool):
    """Helper evaluating the bump transform at a shifted argument xi - s*e1.

    Returns a closure s -> (rows, z1, rest, profile, optional d/d xi_1 radial
    factor), valid for off-lattice shifts.  Only the x1-lattice rows
    intersecting the shifted support are evaluated (the rest vanish), which
    keeps time-swept and multi-carrier constructions cheap on long axes.
    """
    k1 = np.asarray(grid.k_axes[0]).reshape(-1)
    rest = [grid.k_axes[i] for i in range(1, grid.dim)]
    rest_sq = sum(z * z for z in rest)

    def eval_shift(s: float):
        rows = np.nonzero(np.abs(k1 - s) <= bump.fourier_radius + 1e-12)[0]
        if rows.size == 0:
            return rows, None, rest, None, None
        z1 = (k1[rows] - s).reshape((-1,) + (1,) * (grid.dim - 1))
        rho = np.sqrt(z1 * z1 + rest_sq)
        prof = bump.profile(rho)
        if derivative:
            dprof = bump.profile_derivative(rho)
            with np.errstate(invalid="ignore", divide="ignore"):
                radial = np.where(rho > 1e-12, dprof * z1 / np.maximum(rho, 1e-300), 0.0)
        else:
            radial = None
        return rows, z1, rest, prof, radial

    return eval_shift


def _psi_vec_hat(grid: Grid, z1, rest, prof):
    """Vector profile transform at shifted argument: (0, i z3 prof, -i z2 prof) in 3D."""
    if grid.dim == 3:
        z2, z3 = rest
        zero = np.zeros_like(prof, dtype=np.complex128)
        return np.stack([zero, 1j * z3 * prof, -1j * z2 * prof])
    z2, = rest
    return np.stack([-1j * z2 * prof, 1j * z1 * prof])


def _psi_vec_hat_d1(grid: Grid, z1, rest, prof, radial):
    """d/d xi_1 of the vector profile transform (used by the x1-weighted term)."""
    if grid.dim == 3:
        z2, z3 = rest
        zero = np.zeros_like(prof, dtype=np.complex128)
        return np.stack([zero, 1j * z3 * radial, -1j * z2 * radial])
    z2, = rest
    return np.stack([-1j * z2 * radial, 1j * (prof + z1 * radial)])


def forcing_nonosc(grid: Grid, eps: float, eta: float, p: float, n: int,
                   variant: str = "power", horizon: float = 10.0,
                   bump: BumpProfile | None = None, t0: float = 0.0,
                   gamma_windows: int | None = None,
                   alphas: Sequence[float] | None = None,
                   q: float = 2.0) -> ForcingSegment:
    """Time-swept forcing f = d_t u1 - Laplacian u1 built analytically.

    variant "power" (p > n): u1 = eta Psi cos(w(t) x1) - eta e^{t Lap}[Psi cos(w0 x1)]
    with w(t) = w0 (1 + w0 t), w0 = eps^{-1/(1-n/p)}; the force norm decays like
    (1 + w0 t)^{-(1-n/p)}.

    variant "log" (p = n): log-lacunary windows, one new carrier per unit time.
    """
    if grid.dim != n or n not in (2, 3):
        raise ForcingError("forcing_nonosc needs grid.dim == n in {2, 3}")
    if n != 3:
        raise ForcingError("the non-oscillating constructions are for n >= 3")
    if bump is None:
        bump = make_bump(grid)

    if variant == "power":
        if not (n < p):
            raise ForcingError("power variant needs p > n")
        expo = 1.0 - n / p
        w0 = eps ** (-1.0 / expo)

        def omega(t):
            return w0 * (1.0 + w0 * t)

        top = omega(horizon) + bump.fourier_radius
        part = get_partition(grid)
        if top > 2.0 ** (part.j_max + 1) + 1e-9:
            raise ForcingError(
                f"horizon too long for the lattice: carrier reaches {top:g} > "
                f"partition coverage 2^{part.j_max + 1}")

        eval_shift = _shifted_Psi_hat(grid, bump, derivative=True)

        def build_f(t: float) -> SpectralField:
            w = omega(t)
            acc = np.zeros((grid.dim,) + grid.shape, dtype=np.complex128)
            for sgn in (+1.0, -1.0):
                rows, z1, rest, prof, radial = eval_shift(sgn * w)
                if rows.size == 0:
                    continue
                vec = _psi_vec_hat(grid, z1, rest, prof)
                dvec = _psi_vec_hat_d1(grid, z1, rest, prof, radial)
                # -w' x1 Psi sin(w x1): Fourier transform is
                #   -w'/2 * sgn * d/d xi_1 [Psi_hat(xi - sgn w e1)]
                # -Laplacian(Psi cos(w x1)) -> +|xi|^2 * (1/2) Psi_hat shift
                acc[:, rows] += -0.5 * (w0 * w0) * sgn * dvec \
                    + 0.5 * grid.k2[rows] * vec
            return SpectralField(grid, eta * acc)

        def u1_exact(t: float) -> SpectralField:
            w = omega(t)
            acc = np.zeros((grid.dim,) + grid.shape, dtype=np.complex128)
            for sgn in (+1.0, -1.0):
                rows, z1, rest, prof, _ = eval_shift(sgn * w)
                if rows.size:
                    acc[:, rows] += 0.5 * _psi_vec_hat(grid, z1, rest, prof)
                rows0, z10, rest0, prof0, _ = eval_shift(sgn * w0)
                if rows0.size:
                    heat = np.exp(-grid.k2[rows0] * t)
                    acc[:, rows0] -= 0.5 * heat * _psi_vec_hat(grid, z10, rest0, prof0)
            return SpectralField(grid, eta * acc)

        def decay_bound(t):
            return eta * eps * (1.0 + w0 * np.asarray(t)) ** (-expo)

        probes = np.linspace(0.1 * horizon, horizon, 5)
        crit = BesovIndex(n / p - 3.0, p, q)
        ratios = [besov_norm(build_f(t), crit).value / decay_bound(t) for t in probes]
        cert = {"decay_exponent": -expo, "decay_prefactor": float(max(ratios)),
                "eta": eta, "eps": eps, "w0": w0}
        params = {"eta": eta, "eps": eps, "p": p, "n": n, "q": q, "w0": w0,
                  "variant": variant, "horizon": horizon}
        seg = ForcingSegment(grid, t0, t0 + horizon, "nonosc_highdim",
                             builder=lambda t: build_f(t - t0),
                             params=params, certificates=cert)
        seg.u1_exact = lambda t: u1_exact(t - t0)
        seg.decay_bound = decay_bound
        seg.omega = omega
        return seg

    if variant == "log":
        if p != n:
            raise ForcingError("log variant is the p = n construction")
        if gamma_windows is None:
            gamma_windows = int(math.floor(horizon))
        K = gamma_windows
        if alphas is None:
            alphas = default_lacunary_frequencies(K + 1)
        alphas = list(alphas)
        _check_lacunary(grid, alphas, bump.fourier_radius, 2, False)
        e_shift = math.exp(1.0 / eps ** 2)

        def log_amp(t):
            return eta / math.sqrt(math.log(e_shift + t))

        def gamma(tau):
            # 0 for |tau| <= 1/3, 1 for |tau| >= 2/3
            return smooth_step((np.abs(tau) - 1.0 / 3.0) * 3.0)

        def gamma_prime(tau):
            return np.sign(tau) * smooth_step_derivative((np.abs(tau) - 1.0 / 3.0) * 3.0) * 3.0

        eval_shift = _shifted_Psi_hat(grid, bump, derivative=False)

        def carrier_slices(a: float):
            # sparse storage: only the x1 rows meeting the shifted supports
            out = []
            for sgn in (+1.0, -1.0):
                rows, z1, rest, prof, _ = eval_shift(sgn * a)
                if rows.size:
                    out.append((rows, 0.5 * _psi_vec_hat(grid, z1, rest, prof)))
            return out

        carrier_cache = {}

        def _carrier(k: int):
            if k not in carrier_cache:
                carrier_cache[k] = carrier_slices(alphas[k])
            return carrier_cache[k]

        def _accumulate(t: float, weight_fn) -> np.ndarray:
            kmax = min(int(math.floor(t)), K)
            acc = np.zeros((grid.dim,) + grid.shape, dtype=np.complex128)
            for k in range(0, kmax + 1):
                c = weight_fn(k)
                if c == 0.0:
                    continue
                for rows, vec in _carrier(k):
                    acc[:, rows] += (c / math.sqrt(k + 1)) * vec
            return acc

        def u1_hat(t: float) -> np.ndarray:
            return log_amp(t) * _accumulate(t, lambda k: float(gamma(t - k)))

        def u1_exact(t: float) -> SpectralField:
            return SpectralField(grid, u1_hat(t))

        def build_f(t: float) -> SpectralField:
            # f = d_t u1 - Lap u1; d_t has the slow log factor and the newest window ramp
            dlog = -0.5 * eta / ((e_shift + t) * math.log(e_shift + t) ** 1.5)
            amp = log_amp(t)
            acc = _accumulate(t, lambda k: dlog * float(gamma(t - k))
                              + amp * float(gamma_prime(t - k)))
            acc += grid.k2 * u1_hat(t)
            return SpectralField(grid, acc)

        def I1(t: float) -> float:
            kmax = min(int(math.floor(t)), K)
            s = sum(float(gamma(t - k)) ** 2 / (k + 1) for k in range(0, kmax + 1))
            return s / math.log(e_shift + t)

        cert = {"eta": eta, "eps": eps, "K": K,
                "log_bound": eta / math.sqrt(math.log(e_shift))}
        params = {"eta": eta, "eps": eps, "p": p, "n": n, "q": q, "K": K,
                  "alphas": alphas, "variant": variant, "horizon": horizon}
        seg = ForcingSegment(grid, t0, t0 + horizon, "nonosc_lacunary",
                             builder=lambda t: build_f(t - t0),
                             params=params, certificates=cert)
        seg.u1_exact = lambda t: u1_exact(t - t0)
        seg.I1 = lambda t: I1(t - t0)
        seg.log_amp = log_amp
        return seg

    raise ForcingError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------------------
# plain-text segment configuration (key=value round-trip)

_SEGMENT_KEYS = {
    "highdim": ("kind", "eta", "t0", "T_star", "h", "r", "n", "delta", "beta", "sigma"),
    "lacunary": ("kind", "eta", "t0", "T_star", "h", "K", "sigma"),
    "twodim": ("kind", "eta", "t0", "N", "M"),
    "nonosc_highdim": ("kind", "eta", "eps", "p", "n", "t0", "horizon"),
    "nonosc_lacunary": ("kind", "eta", "eps", "p", "n", "t0", "horizon", "K"),
}


def segment_from_config(grid: Grid, cfg: dict) -> ForcingSegment:
    """Build a segment from a key=value mapping (see _SEGMENT_KEYS)."""
    kind = cfg.get("kind")
    if kind not in _SEGMENT_KEYS:
        raise ForcingError(f"unknown forcing kind {kind!r}")
    known = _SEGMENT_KEYS[kind]
    unknown = sorted(set(cfg) - set(known))
    if unknown:
        raise ForcingError(f"unknown keys for {kind}: {', '.join(unknown)}")
    c = dict(cfg)
    c.pop("kind")
    if kind == "highdim":
        return forcing_highdim(grid, eta=c.pop("eta"), t0=c.pop("t0", 0.0),
                               T_star=c.pop("T_star"), h=c.pop("h", 0.25),
                               r=c.pop("r", 4.0), n=int(c.pop("n", 3)),
                               delta=c.pop("delta", None), beta=c.pop("beta", None),
                               sigma=c.pop("sigma", 2.0))
    if kind == "lacunary":
        return forcing_lacunary(grid, eta=c.pop("eta"), t0=c.pop("t0", 0.0),
                                T_star=c.pop("T_star"), h=c.pop("h", 0.25),
                                K=int(c.pop("K", 4)), sigma=c.pop("sigma", 2.0))
    if kind == "twodim":
        return forcing_2d(grid, N=int(c.pop("N")), M=c.pop("M"),
                          eta=c.pop("eta"), t0=c.pop("t0", 0.0))
    variant = "power" if kind == "nonosc_highdim" else "log"
    kwargs = {}
    if variant == "log":
        kwargs["gamma_windows"] = int(c.pop("K", 6))
    return forcing_nonosc(grid, eps=c.pop("eps"), eta=c.pop("eta"),
                          p=c.pop("p"), n=int(c.pop("n", 3)), variant=variant,
                          horizon=c.pop("horizon", 10.0), t0=c.pop("t0", 0.0),
                          **kwargs)


def segment_config(seg: ForcingSegment) -> dict:
    """Canonical key=value mapping reproducing the segment (round-trips)."""
    kind = seg.kind
    p = seg.params
    if kind == "highdim":
        out = {"kind": kind, "eta": p["eta"], "t0": seg.t_start,
               "T_star": seg.t_stop - seg.t_start, "h": p["h"], "r": p["r"],
               "n": p["n"], "sigma": p["sigma"]}
        if p.get("desk_scale"):
            out["beta"] = p["beta"]
        else:
            out["delta"] = p["delta"]
        return out
    if kind == "lacunary":
        return {"kind": kind, "eta": p["eta"], "t0": seg.t_start,
                "T_star": seg.t_stop - seg.t_start, "h": p["h"], "K": p["K"],
                "sigma": p["sigma"]}
    if kind == "twodim":
        return {"kind": kind, "eta": p["eta"], "t0": seg.t_start,
                "N": p["N"], "M": p["M"]}
    if kind == "nonosc_highdim":
        return {"kind": kind, "eta": p["eta"], "eps": p["eps"], "p": p["p"],
                "n": p["n"], "t0": seg.t_start, "horizon": p["horizon"]}
    if kind == "nonosc_lacunary":
        return {"kind": kind, "eta": p["eta"], "eps": p["eps"], "p": p["p"],
                "n": p["n"], "t0": seg.t_start, "horizon": p["horizon"],
                "K": p["K"]}
    raise ForcingError(f"cannot serialize segment kind {kind!r}")
