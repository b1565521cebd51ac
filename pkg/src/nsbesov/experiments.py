"""Config-driven experiments: the stability regime, the oscillating
instability in 2D and in higher dimension, the non-oscillating variants, and
the lemma property suites.  Each driver returns a Report with measured
constants, pass/fail flags, time-series tables, and per-block norm profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .spectral import (Grid, SpectralField, Trajectory, divergence,
                       heat_propagate, inverse_laplacian, leray_project,
                       make_grid, zero_field)
from .littlewood_paley import (INF, BesovIndex, besov_norm, block_lp_norm,
                               get_partition, low_block_sup, lp_norm,
                               lq_aggregate, lp_time, weak_lebesgue_norm)
from .forcing import (BumpProfile, ForcingSchedule, ForcingSegment, make_bump,
                      make_Phi, make_Psi, modulate_x1, forcing_2d,
                      forcing_highdim, forcing_nonosc, schedule_forcing)
from .solver import (SolverConfig, WorkingNormSpec, mild_pieces,
                     picard_remainder, solve_mild, solve_timestepper)
from .randfields import random_field, random_scalar
from .reports import Report
from .config import ConfigError, check_known_keys


REGIMES = ("stability", "oscillation_nd", "oscillation_2d", "nonosc", "lemmas")


@dataclass
class ExperimentConfig:
    """Flat experiment configuration; regime-dependent validation."""

    regime: str = "lemmas"
    # grid
    dim: int = 3
    points: object = 64            # int or per-axis list
    length: float = 4.0 * math.pi
    # space indices
    n: int = 3
    r: float = 4.0
    sigma: float = 2.0
    rho: float = 3.0
    N: int = 3
    p: float = 2.0
    q: float = 2.0
    # amplitudes and carriers
    eta: object = 0.05             # scalar or per-cycle list
    eps: float = 1.0
    beta: object = 8.0             # scalar or per-cycle list
    M: object = 20.0               # scalar or per-cycle list (2D)
    K: int = 8
    # schedule
    cycles: int = 2
    h: float = 0.25
    T_star: float = 0.0            # 0 -> runtime-selected
    horizon: float = 10.0
    decay_cap: float = 120.0
    threshold_ratio: float = 0.38
    peak_floor: float = 0.0        # 0 -> recorded only
    variant: str = "power"
    # integration
    dt: float = 0.02
    sample_stride: int = 25
    picard_tol: float = 1e-8
    picard_max_iter: int = 20
    # misc
    j_cut: int = 2
    seed: int = 1234
    samples: int = 50

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        known = [f.name for f in dc_fields(cls)]
        check_known_keys(cfg, known, "experiment config")
        out = cls(**cfg)
        out.validate()
        return out

    def to_dict(self) -> dict:
        out = {}
        for f in dc_fields(self):
            out[f.name] = getattr(self, f.name)
        return out

    def validate(self) -> None:
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}")
        if self.regime == "oscillation_nd":
            n, r, sigma, rho = self.n, self.r, self.sigma, self.rho
            case1 = n >= 3 and n < r < 2 * n and 1 <= sigma < INF and 2 < rho < r / (r - n)
            case2 = n >= 3 and r == n and 2 < sigma < INF and 2 < rho < INF
            if not (case1 or case2):
                raise ConfigError(
                    f"(n,r,sigma,rho) = ({n},{r},{sigma},{rho}) matches neither "
                    "admissible index set")
        if self.regime == "oscillation_2d" and self.N < 3:
            raise ConfigError("2D oscillation needs N >= 3")
        if self.regime == "stability" and not (1 <= self.p < self.n and self.q < INF):
            raise ConfigError("stability regime needs 1 <= p < n and q < inf")

    def grid(self) -> Grid:
        return make_grid(self.dim, self.points, self.length)

    def solver_config(self, horizon: float) -> SolverConfig:
        return SolverConfig(dt=self.dt, horizon=horizon, picard_tol=self.picard_tol,
                            picard_max_iter=self.picard_max_iter,
                            sample_stride=self.sample_stride)

    def per_cycle(self, value, k: int):
        """k-th entry (1-based) of a scalar-or-list config value."""
        if isinstance(value, (list, tuple)):
            return value[min(k - 1, len(value) - 1)]
        return value


def _as_list(value, cycles):
    if isinstance(value, (list, tuple)):
        return [value[min(k, len(value) - 1)] for k in range(cycles)]
    return [value] * cycles


# ---------------------------------------------------------------------------
# measured constants


def estimate_cstar(grid: Grid, bump: BumpProfile | None = None,
                   j_cut: int = 2, detail: bool = False):
    """c* = (1/5) sup_{j<=j_cut} 2^{-j} ||Delta_j (-Lap)^{-1} P Phi||_inf."""
    if bump is None:
        bump = make_bump(grid)
    target = inverse_laplacian(leray_project(make_Phi(bump)))
    part = get_partition(grid)
    profile = {j: (2.0 ** (-j)) * block_lp_norm(target, j, INF, part)
               for j in range(part.j_min, min(j_cut, part.j_max) + 1)}
    value = max(profile.values()) / 5.0
    if detail:
        return value, profile, target
    return value


def lp_kernel_norm(grid: Grid, rprime: float, j: int = 0) -> float:
    """L^{r'} norm of the block-j convolution kernel (weights / volume)."""
    part = get_partition(grid)
    w = part.weight(j)
    fld = SpectralField(grid, w.astype(np.complex128)[None, ...])
    return lp_norm(fld, rprime) / grid.volume


def select_T_star(grid: Grid, r: float, sigma: float,
                  bump: BumpProfile | None = None, t_max: float = 128.0):
    """First time the heat-flowed profile drops below c*/(2 ||kernel||_{L^{r'}}).

    Returns (T_star, details).  The criterion is the constructive stand-in for
    the non-constructive window length.
    """
    if bump is None:
        bump = make_bump(grid)
    cstar, _, target = estimate_cstar(grid, bump, detail=True)
    rp = r / (r - 1.0)
    kappa = lp_kernel_norm(grid, rp)
    threshold = cstar / (2.0 * kappa)
    idx = BesovIndex(3.0 / r - 1.0, r, sigma)

    def value(t: float) -> float:
        return besov_norm(heat_propagate(target, t), idx).value

    lo, hi = 0.0, 0.5
    while value(hi) > threshold:
        lo, hi = hi, hi * 2.0
        if hi > t_max:
            raise RuntimeError(f"decay criterion not met by t = {t_max}")
    for _ in range(8):
        mid = 0.5 * (lo + hi)
        if value(mid) > threshold:
            lo = mid
        else:
            hi = mid
    details = {"cstar": cstar, "kernel_norm": kappa, "threshold": threshold}
    return hi, details


# ---------------------------------------------------------------------------
# lemma suites


def check_cos_lemma(grid: Grid, s: float, p: float, R_list,
                    bump: BumpProfile | None = None):
    """Fit of log||psi cos(R x1)||_{B^s_{p,1}} against log R; the modulated
    bump touches at most three dyadic blocks."""
    if bump is None:
        bump = make_bump(grid)
    part = get_partition(grid)
    norms, counts = [], []
    for R in R_list:
        w = modulate_x1(bump.field, float(R))
        ns = besov_norm(w, BesovIndex(s, p, 1.0), part)
        norms.append(ns.value)
        prof = np.array([block_lp_norm(w, j, p, part) for j in part.j_range])
        counts.append(int(np.sum(prof > 1e-12 * max(prof.max(), 1e-300))))
    slope = float(np.polyfit(np.log(np.asarray(R_list, float)), np.log(norms), 1)[0])
    return slope, {"norms": norms, "block_counts": counts}


def cos_lemma_report(cfg: ExperimentConfig) -> Report:
    grid = cfg.grid()
    rep = Report("lemma_cos", cfg.to_dict())
    rows = []
    ok_slope, ok_count = True, True
    R_list = (16.0, 32.0, 64.0)
    for s in (-1.0, 0.0, 1.0):
        for p in (2.0, INF):
            slope, det = check_cos_lemma(grid, s, p, R_list)
            rows.append((s, "inf" if p == INF else p, slope,
                         *det["norms"], *det["block_counts"]))
            ok_slope &= abs(slope - s) <= 0.1
            ok_count &= max(det["block_counts"]) <= 3
            rep.scalars[f"slope_s{s:g}_p{'inf' if p == INF else int(p)}"] = slope
    rep.tables["fits"] = (["s", "p", "slope", "norm_R16", "norm_R32", "norm_R64",
                           "blocks_R16", "blocks_R32", "blocks_R64"], rows)
    rep.flags["slopes_match_s_within_0.1"] = ok_slope
    rep.flags["at_most_three_blocks"] = ok_count
    return rep


def spectral_identity_report(cfg: ExperimentConfig) -> Report:
    """Leray idempotence, solenoidality, heat composition on random fields."""
    rng = np.random.default_rng(cfg.seed)
    rep = Report("spectral_identities", cfg.to_dict())
    grids = [make_grid(2, 128, cfg.length), make_grid(3, 64, cfg.length)]
    worst = {"idempotence": 0.0, "divergence": 0.0, "heat_composition": 0.0,
             "reality": 0.0}
    for g in grids:
        for _ in range(50):
            f = random_field(g, rng, slope=rng.uniform(0.5, 2.0))
            pf = leray_project(f)
            worst["idempotence"] = max(worst["idempotence"],
                                       (leray_project(pf) - pf).l2() / max(pf.l2(), 1e-300))
            worst["divergence"] = max(worst["divergence"],
                                      divergence(pf).linf() / (g.nyquist * max(pf.linf(), 1e-300)))
            s, t = rng.uniform(0.05, 0.5, size=2)
            h12 = heat_propagate(heat_propagate(f, s), t)
            h3 = heat_propagate(f, s + t)
            worst["heat_composition"] = max(worst["heat_composition"],
                                            (h12 - h3).l2() / max(h3.l2(), 1e-300))
            worst["reality"] = max(worst["reality"], pf.hermitian_defect(),
                                   h12.hermitian_defect())
    rep.scalars.update({f"max_{k}": v for k, v in worst.items()})
    rep.flags["idempotence_below_1e-10"] = worst["idempotence"] < 1e-10
    rep.flags["divergence_below_1e-10"] = worst["divergence"] < 1e-10
    rep.flags["heat_composition_below_1e-10"] = worst["heat_composition"] < 1e-10
    rep.flags["reality_preserved"] = worst["reality"] < 1e-12
    return rep


def quadratic_identity_report(cfg: ExperimentConfig) -> Report:
    """div(eta Psi cos(beta x1) (x) itself) = eta^2 Phi (1 + cos(2 beta x1)),
    checked in the dealiased algebra with all bands representable."""
    rep = Report("quadratic_identity", cfg.to_dict())
    beta = float(cfg.per_cycle(cfg.beta, 1))
    eta = float(cfg.per_cycle(cfg.eta, 1))
    # all bands representable: L = 2 pi, radius-2 bump, sidebands at 2 beta + 4
    g_full = make_grid(3, 64, 2.0 * math.pi)
    b_full = make_bump(g_full, support_radius=2.0)
    from .spectral import tensor_divergence
    u = eta * modulate_x1(make_Psi(b_full), beta)
    lhs = tensor_divergence(u, u, project=False)
    Phi = make_Phi(b_full)
    rhs = SpectralField(g_full, eta ** 2 * (Phi.coeffs + modulate_x1(Phi, 2 * beta).coeffs)
                        * g_full.dealias_mask)
    resid_full = (lhs - rhs).l2() / rhs.l2()
    # production grid: the sidebands fall outside the dealiased zone on both sides
    g_main = make_grid(3, 64, cfg.length)
    b_main = make_bump(g_main)
    u2 = eta * modulate_x1(make_Psi(b_main), beta)
    lhs2 = tensor_divergence(u2, u2, project=False)
    rhs2 = SpectralField(g_main, eta ** 2 * make_Phi(b_main).coeffs * g_main.dealias_mask)
    resid_main = (lhs2 - rhs2).l2() / rhs2.l2()
    rep.scalars["residual_all_bands"] = resid_full
    rep.scalars["residual_dealiased_dc"] = resid_main
    rep.flags["identity_residual_below_1e-8"] = max(resid_full, resid_main) < 1e-8
    return rep


def cstar_report(cfg: ExperimentConfig) -> Report:
    """c* positivity, grid-refinement stability, quadratic psi-scaling."""
    rep = Report("cstar", cfg.to_dict())
    g1 = make_grid(3, 64, cfg.length)
    g2 = make_grid(3, 96, cfg.length)
    c1, prof1, _ = estimate_cstar(g1, detail=True)
    c2, prof2, _ = estimate_cstar(g2, detail=True)
    bump = make_bump(g1)
    bump2 = BumpProfile(g1, bump.field * 2.0, bump.fourier_radius,
                        bump.plateau_radius, bump.amplitude * 2.0)
    c_scaled = estimate_cstar(g1, bump2)
    rep.scalars.update({"cstar_64": c1, "cstar_96": c2,
                        "refinement_rel_change": abs(c2 - c1) / c1,
                        "scaling_ratio": c_scaled / c1})
    rep.add_profile("cstar_blocks_64", prof1)
    rep.add_profile("cstar_blocks_96", prof2)
    rep.flags["cstar_positive"] = c1 > 0
    rep.flags["refinement_within_5pct"] = abs(c2 - c1) / c1 < 0.05
    rep.flags["psi_scaling_quadratic_within_1pct"] = abs(c_scaled / c1 - 4.0) < 0.04
    return rep


# ---------------------------------------------------------------------------
# acceptance experiments around the second iteration and the remainder


def second_iteration_report(cfg: ExperimentConfig) -> Report:
    """Low-block lift of u2 at t0 + T* against 0.5 c* eta^2, and the
    ramp-window contribution against c* eta^2."""
    rep = Report("second_iteration", cfg.to_dict())
    grid = cfg.grid()
    bump = make_bump(grid)
    eta = float(cfg.per_cycle(cfg.eta, 1))
    beta = float(cfg.per_cycle(cfg.beta, 1))
    if cfg.T_star > 0:
        T_star, det = cfg.T_star, {}
        cstar = estimate_cstar(grid, bump)
    else:
        T_star, det = select_T_star(grid, cfg.r, cfg.sigma, bump)
        cstar = det["cstar"]
    seg = forcing_highdim(grid, eta, 0.0, T_star, cfg.h, cfg.r, cfg.n,
                          beta=beta, sigma=cfg.sigma, bump=bump)
    scfg = cfg.solver_config(T_star)
    windows = {"I1": (0.0, cfg.h), "I3": (T_star - cfg.h, T_star)}
    pieces = mild_pieces(seg, None, 0.0, T_star, scfg, windows=windows)
    u2T = pieces.u2.get_field(len(pieces.u2) - 1)
    part = get_partition(grid)
    lift = low_block_sup(u2T, cfg.j_cut, part)
    i13 = pieces.window_fields["I1"] + pieces.window_fields["I3"]
    ramp = low_block_sup(i13, cfg.j_cut, part)
    floor = cstar * eta ** 2
    rep.scalars.update({
        "T_star": T_star, "cstar": cstar, "eta": eta, "beta": beta,
        "lift": lift, "lift_over_cstar_eta2": lift / floor,
        "ramp_contribution": ramp, "ramp_over_cstar_eta2": ramp / floor,
    })
    rep.add_profile("u2_lift_blocks",
                    {j: 2.0 ** (-j) * block_lp_norm(u2T, j, INF, part)
                     for j in range(part.j_min, cfg.j_cut + 1)})
    rep.flags["lift_at_least_half_cstar_eta2"] = lift >= 0.5 * floor
    rep.flags["ramp_below_cstar_eta2"] = ramp < floor
    return rep


def picard_gate_report(cfg: ExperimentConfig, etas=(0.1, 0.05, 0.025)) -> Report:
    """Contraction ratios and the eta-scaling of the remainder.

    One unit-amplitude sweep is reused: u1, u2, and the cross sources scale
    exactly like eta, eta^2, (eta^3, eta^4) when a = 0.
    """
    rep = Report("picard_gate", cfg.to_dict())
    grid = cfg.grid()
    bump = make_bump(grid)
    if cfg.T_star > 0:
        T_star = cfg.T_star
    else:
        T_star, _ = select_T_star(grid, cfg.r, cfg.sigma, bump)
    beta = float(cfg.per_cycle(cfg.beta, 1))
    seg = forcing_highdim(grid, 1.0, 0.0, T_star, cfg.h, cfg.r, cfg.n,
                          beta=beta, sigma=cfg.sigma, bump=bump)
    scfg = cfg.solver_config(T_star)
    pieces = mild_pieces(seg, None, 0.0, T_star, scfg, want_sources=True)
    norms = WorkingNormSpec(dim=3, n=cfg.n, r=cfg.r, sigma=cfg.sigma, rho=cfg.rho)
    rows = []
    ratio_vals = []
    ok_gate, ok_conv = True, True
    for eta in etas:
        u1 = pieces.u1.scaled(eta)
        u2 = pieces.u2.scaled(eta ** 2)
        srcs = (pieces.s12.scaled(eta ** 3), pieces.s22.scaled(eta ** 4))
        _, it = picard_remainder(u1, u2, None, "highdim", scfg, norms, sources=srcs)
        max_ratio = max(it.contraction_ratios) if it.contraction_ratios else 0.0
        rem_over_u2 = it.norms["remainder"] / it.norms["u2"]
        ratio_vals.append(rem_over_u2)
        rows.append((eta, max_ratio, it.iterations, it.converged,
                     it.final_residual, it.norms["u1"], it.norms["u2"],
                     it.norms["remainder"], rem_over_u2))
        if eta <= 0.05 + 1e-12:
            ok_gate &= max_ratio <= 0.5
        ok_conv &= it.converged and it.iterations <= 20
    slope = float(np.polyfit(np.log(np.asarray(etas)), np.log(ratio_vals), 1)[0])
    rep.tables["runs"] = (["eta", "max_ratio", "iterations", "converged",
                           "residual", "u1_norm", "u2_norm", "remainder_norm",
                           "remainder_over_u2"], rows)
    # a-priori shape: the remainder scales like a cubic power of the
    # amplitude, with the constant reported as its measured value
    rem_norms = [row[7] for row in rows]
    cubic_power = float(np.polyfit(np.log(np.asarray(etas)),
                                   np.log(rem_norms), 1)[0])
    c0_hat = max((rn / (6.0 * e ** 3)) ** (1.0 / 3.0)
                 for e, rn in zip(etas, rem_norms))
    rep.scalars.update({"T_star": T_star, "scaling_slope": slope,
                        "remainder_cubic_power": cubic_power,
                        "C0_hat": c0_hat})
    rep.flags["ratios_at_most_half_for_small_eta"] = ok_gate
    rep.flags["converged_within_20_iterations"] = ok_conv
    rep.flags["remainder_scaling_slope_at_least_0.8"] = slope >= 0.8
    rep.flags["remainder_apriori_cubic_shape"] = abs(cubic_power - 3.0) <= 0.25
    return rep


def cross_oracle_report(cfg: ExperimentConfig) -> Report:
    """solve_mild vs solve_timestepper at fixed horizons (2D and 3D)."""
    rep = Report("cross_oracle", cfg.to_dict())
    rows = []
    # 2D: 128^2, horizon 10, the two-dimensional forcing kept on throughout
    g2 = make_grid(2, 128, 3.2 * math.pi)
    seg2 = forcing_2d(g2, N=3, M=10.0, eta=2e-3, t0=0.0)
    sched2 = schedule_forcing([seg2])
    c2 = SolverConfig(dt=cfg.dt, horizon=10.0, picard_tol=cfg.picard_tol,
                      sample_stride=cfg.sample_stride)
    mild2 = solve_mild(None, sched2, c2)
    ts2 = solve_timestepper(zero_field(g2), sched2, c2)
    d2 = (mild2.final() - ts2.final()).l2() / max(ts2.final().l2(), 1e-300)
    rows.append((2, 10.0, d2, _max_divergence(mild2), _max_divergence(ts2)))
    # 3D: 64^3, horizon 5
    g3 = make_grid(3, 64, cfg.length)
    seg3 = forcing_highdim(g3, eta=0.05, t0=0.0, T_star=4.0, h=cfg.h,
                           r=cfg.r, n=3, beta=8.0, sigma=cfg.sigma)
    sched3 = schedule_forcing([seg3])
    c3 = SolverConfig(dt=cfg.dt, horizon=5.0, picard_tol=cfg.picard_tol,
                      sample_stride=cfg.sample_stride)
    mild3 = solve_mild(None, sched3, c3)
    ts3 = solve_timestepper(zero_field(g3), sched3, c3)
    d3 = (mild3.final() - ts3.final()).l2() / max(ts3.final().l2(), 1e-300)
    rows.append((3, 5.0, d3, _max_divergence(mild3), _max_divergence(ts3)))
    rep.tables["agreement"] = (["dim", "horizon", "rel_l2",
                                "mild_max_div", "stepper_max_div"], rows)
    rep.scalars.update({"rel_l2_2d": d2, "rel_l2_3d": d3})
    rep.flags["agreement_2d_below_1e-4"] = d2 <= 1e-4
    rep.flags["agreement_3d_below_1e-4"] = d3 <= 1e-4
    rep.flags["solutions_divergence_free"] = max(r[3] for r in rows) < 1e-9 and \
        max(r[4] for r in rows) < 1e-9
    return rep


def _max_divergence(traj: Trajectory) -> float:
    worst = 0.0
    for f in traj.fields:
        scale = max(f.linf(), 1e-300)
        worst = max(worst, divergence(f).linf() / (f.grid.nyquist * scale))
    return worst


# ---------------------------------------------------------------------------
# regime drivers


def run_stability(cfg: ExperimentConfig) -> Report:
    """p < n regime: decaying-window forcing, critical norm decays to < 10%
    of its peak by the desk horizon."""
    rep = Report("stability", cfg.to_dict())
    grid = cfg.grid()
    eta0 = float(cfg.per_cycle(cfg.eta, 1))
    beta = float(cfg.per_cycle(cfg.beta, 1))
    segs = []
    for k in range(3):
        segs.append(forcing_highdim(grid, eta0 * 2.0 ** (-k), 5.0 * k, 3.0,
                                    cfg.h, cfg.r, cfg.n, beta=beta, sigma=cfg.sigma))
    sched = schedule_forcing(segs)
    crit = BesovIndex(cfg.n / cfg.p - 1.0, cfg.p, cfg.q)
    part = get_partition(grid)
    scfg = cfg.solver_config(cfg.horizon)
    traj = solve_timestepper(zero_field(grid), sched, scfg)
    series = [(float(t), besov_norm(f, crit, part).value)
              for t, f in zip(traj.times, traj.fields)]
    vals = np.array([v for _, v in series])
    times = np.array([t for t, _ in series])
    peak = float(vals.max())
    terminal = float(vals[-1])
    t_end = max(s.t_stop for s in segs)
    tail = vals[times >= t_end + 0.5]
    quarters = np.array_split(tail, 4)
    envelope_ok = all(q2.max() < q1.max() for q1, q2 in zip(quarters, quarters[1:]))
    rep.tables["series"] = (["t", "critical_norm"], series)
    rep.scalars.update({"peak": peak, "terminal": terminal,
                        "terminal_over_peak": terminal / peak})
    idx_peak = int(vals.argmax())
    rep.add_profile("peak_norm_blocks",
                    besov_norm(traj.fields[idx_peak], crit, part).block_profile)
    rep.flags["terminal_below_10pct_of_peak"] = terminal / peak < 0.1
    rep.flags["monotone_envelope_after_forcing"] = envelope_ok
    return rep


def _window_norm_2d(seg: ForcingSegment) -> float:
    return seg.certificates["norm_B-1_11"]


def run_oscillation(cfg: ExperimentConfig) -> Report:
    if cfg.regime == "oscillation_2d" or cfg.dim == 2:
        return _oscillation_2d(cfg)
    return _oscillation_nd(cfg)


def _oscillation_2d(cfg: ExperimentConfig) -> Report:
    rep = Report("oscillation_2d", cfg.to_dict())
    grid = cfg.grid()
    bump = make_bump(grid, 2.0, 1.0, peak_normalize=False)
    crit = BesovIndex(1.0, 1.0, 1.0)
    part = get_partition(grid)
    norms = WorkingNormSpec(dim=2, N=cfg.N)
    Ms = _as_list(cfg.M, cfg.cycles)
    etas = _as_list(cfg.eta, cfg.cycles)
    eta_ref = float(etas[0])

    state = zero_field(grid)
    t = 0.0
    series = []
    cycle_rows = []
    inconclusive = False
    for k in range(1, cfg.cycles + 1):
        seg = forcing_2d(grid, cfg.N, float(Ms[k - 1]), float(etas[k - 1]), t, bump=bump)
        duration = seg.t_stop - seg.t_start
        scfg = cfg.solver_config(duration)
        pieces = mild_pieces(seg, None, t, t + duration, scfg,
                             want_sources=True, include_a_in_u1=False)
        a_for_rem = state if state.l2() > 0 else None
        rem, it = picard_remainder(pieces.u1, pieces.u2, a_for_rem, "twodim",
                                   scfg, norms, sources=(pieces.s12, pieces.s22))
        assembled = []
        for i in range(len(pieces.u1)):
            total = pieces.u1.get(i) + pieces.u2.get(i) + rem.fields[i].coeffs
            assembled.append(SpectralField(grid, total))
        for i, tt in enumerate(pieces.u1.times):
            series.append((float(tt), besov_norm(assembled[i], crit, part).value,
                           low_block_sup(assembled[i], cfg.j_cut, part),
                           f"window{k}"))
        final = assembled[-1]
        peak = low_block_sup(final, cfg.j_cut, part)
        peak_profile = {j: 2.0 ** (-j) * block_lp_norm(final, j, INF, part)
                        for j in range(part.j_min, cfg.j_cut + 1)}
        rep.add_profile(f"cycle{k}_peak_lowblock", peak_profile)
        t_peak = t + duration

        threshold = eta_ref ** 3 * cfg.threshold_ratio ** k
        trough_holder = {}

        def monitor(tt, fld, _thr=threshold, _hold=trough_holder):
            v = besov_norm(fld, crit, part).value
            series.append((float(tt), v, low_block_sup(fld, cfg.j_cut, part),
                           f"decay{k}"))
            if v <= _thr:
                _hold["value"] = v
                _hold["time"] = float(tt)
                _hold["profile"] = besov_norm(fld, crit, part).block_profile
                return True
            return False

        dcfg = cfg.solver_config(cfg.decay_cap)
        decay = solve_timestepper(final, ForcingSchedule([]), dcfg, t0=t_peak,
                                  callback=monitor)
        if "value" not in trough_holder:
            inconclusive = True
            trough_holder["value"] = besov_norm(decay.final(), crit, part).value
            trough_holder["time"] = float(decay.times[-1])
        rep.add_profile(f"cycle{k}_trough_norm",
                        trough_holder.get("profile",
                                          besov_norm(decay.final(), crit, part).block_profile))
        state = decay.final()
        t = trough_holder["time"]
        wnorm = _window_norm_2d(seg)
        cycle_rows.append((k, seg.t_start, t_peak, peak, trough_holder["time"],
                           trough_holder["value"], threshold, wnorm,
                           max(it.contraction_ratios) if it.contraction_ratios else 0.0,
                           it.converged, peak / float(etas[k - 1]) ** 2))

    rep.tables["cycles"] = (["k", "T_k", "T_peak", "peak_lowblock", "T_trough",
                             "trough_norm", "threshold", "forcing_window_norm",
                             "max_contraction_ratio", "picard_converged",
                             "peak_over_eta2"], cycle_rows)
    rep.tables["series"] = (["t", "critical_norm", "low_block_sup", "phase"], series)
    _oscillation_flags(rep, cfg, cycle_rows, inconclusive, staircase=True)
    return rep


def _oscillation_nd(cfg: ExperimentConfig) -> Report:
    rep = Report("oscillation_nd", cfg.to_dict())
    grid = cfg.grid()
    bump = make_bump(grid)
    crit = BesovIndex(cfg.n / cfg.r - 1.0, cfg.r, cfg.sigma)
    part = get_partition(grid)
    norms = WorkingNormSpec(dim=3, n=cfg.n, r=cfg.r, sigma=cfg.sigma, rho=cfg.rho)
    betas = _as_list(cfg.beta, cfg.cycles)
    eta = float(cfg.per_cycle(cfg.eta, 1))
    if cfg.T_star > 0:
        T_star = cfg.T_star
        cstar = estimate_cstar(grid, bump)
    else:
        T_star, det = select_T_star(grid, cfg.r, cfg.sigma, bump)
        cstar = det["cstar"]
    rep.scalars.update({"T_star": T_star, "cstar": cstar})

    state = zero_field(grid)
    t = 0.0
    series = []
    cycle_rows = []
    weak_max = 0.0
    inconclusive = False
    for k in range(1, cfg.cycles + 1):
        seg = forcing_highdim(grid, eta, t, T_star, cfg.h, cfg.r, cfg.n,
                              beta=float(betas[k - 1]), sigma=cfg.sigma, bump=bump)
        scfg = cfg.solver_config(T_star)
        pieces = mild_pieces(seg, state, t, t + T_star, scfg,
                             want_sources=True, include_a_in_u1=True)
        rem, it = picard_remainder(pieces.u1, pieces.u2, None, "highdim",
                                   scfg, norms, sources=(pieces.s12, pieces.s22))
        assembled = []
        for i in range(len(pieces.u1)):
            total = pieces.u1.get(i) + pieces.u2.get(i) + rem.fields[i].coeffs
            assembled.append(SpectralField(grid, total))
        for i, tt in enumerate(pieces.u1.times):
            v = besov_norm(assembled[i], crit, part).value
            series.append((float(tt), v, low_block_sup(assembled[i], cfg.j_cut, part),
                           f"window{k}"))
            weak_max = max(weak_max, weak_lebesgue_norm(assembled[i], float(cfg.n)))
        final = assembled[-1]
        peak = low_block_sup(final, cfg.j_cut, part)
        rep.add_profile(f"cycle{k}_peak_lowblock",
                        {j: 2.0 ** (-j) * block_lp_norm(final, j, INF, part)
                         for j in range(part.j_min, cfg.j_cut + 1)})
        t_peak = t + T_star
        threshold = eta ** 3 * cfg.threshold_ratio ** k
        hold = {}

        def monitor(tt, fld, _thr=threshold, _hold=hold):
            v = besov_norm(fld, crit, part).value
            series.append((float(tt), v, low_block_sup(fld, cfg.j_cut, part),
                           f"decay{k}"))
            if v <= _thr:
                _hold["value"] = v
                _hold["time"] = float(tt)
                return True
            return False

        dcfg = cfg.solver_config(cfg.decay_cap)
        decay = solve_timestepper(final, ForcingSchedule([]), dcfg, t0=t_peak,
                                  callback=monitor)
        if "value" not in hold:
            inconclusive = True
            hold["value"] = besov_norm(decay.final(), crit, part).value
            hold["time"] = float(decay.times[-1])
        state = decay.final()
        t = hold["time"]
        wnorm = seg.certificates["norm_Bcrit-2"]
        cycle_rows.append((k, seg.t_start, t_peak, peak, hold["time"], hold["value"],
                           threshold, wnorm,
                           max(it.contraction_ratios) if it.contraction_ratios else 0.0,
                           it.converged, peak / (cstar * eta ** 2)))
    rep.tables["cycles"] = (["k", "T_k", "T_peak", "peak_lowblock", "T_trough",
                             "trough_norm", "threshold", "forcing_window_norm",
                             "max_contraction_ratio", "picard_converged",
                             "peak_over_cstar_eta2"], cycle_rows)
    rep.tables["series"] = (["t", "critical_norm", "low_block_sup", "phase"], series)
    rep.scalars["weak_norm_sup"] = weak_max
    _oscillation_flags(rep, cfg, cycle_rows, inconclusive, staircase=False)
    return rep


def _oscillation_flags(rep: Report, cfg: ExperimentConfig, rows, inconclusive,
                       staircase: bool) -> None:
    peaks = [r[3] for r in rows]
    troughs = [r[5] for r in rows]
    wnorms = [r[7] for r in rows]
    rep.scalars.update({f"peak_{i+1}": p for i, p in enumerate(peaks)})
    rep.scalars.update({f"trough_{i+1}": v for i, v in enumerate(troughs)})
    rep.scalars.update({f"window_norm_{i+1}": v for i, v in enumerate(wnorms)})
    rep.flags["all_cycles_conclusive"] = not inconclusive
    if len(peaks) >= 2:
        spread = (max(peaks) - min(peaks)) / max(peaks)
        rep.scalars["peak_spread"] = spread
        rep.flags["peaks_within_20pct"] = spread <= 0.2
        tr = [b / a for a, b in zip(troughs, troughs[1:])]
        rep.scalars["trough_ratio"] = max(tr)
        rep.flags["troughs_decay_2x_per_cycle"] = max(tr) <= 0.5
        if staircase:
            wr = [b / a for a, b in zip(wnorms, wnorms[1:])]
            rep.scalars["staircase_ratio"] = max(wr)
            rep.flags["forcing_norms_halve_per_cycle"] = all(
                0.4 <= x <= 0.6 for x in wr)
    ptr = [p / t for p, t, in zip(peaks, troughs)]
    rep.scalars["min_peak_over_trough"] = min(ptr)
    rep.flags["peak_to_trough_at_least_5"] = min(ptr) >= 5.0
    if cfg.peak_floor > 0:
        rep.flags["peak_floor_met"] = all(r[-1] >= cfg.peak_floor for r in rows)


# ---------------------------------------------------------------------------
# non-oscillating regime


def run_nonosc(cfg: ExperimentConfig) -> Report:
    if cfg.variant == "log":
        return _nonosc_log(cfg)
    return _nonosc_power(cfg)


def _nonosc_power(cfg: ExperimentConfig) -> Report:
    rep = Report("nonosc_power", cfg.to_dict())
    grid = cfg.grid()
    bump = make_bump(grid)
    eta = float(cfg.per_cycle(cfg.eta, 1))
    expo = 1.0 - cfg.n / cfg.p

    # decay-rate fit: slow sweep (w0 = eps^{-1/(1-n/p)}), norms only.
    # Samples sit one octave apart in 1 + w0 t so the dyadic-block pattern
    # under the moving carrier repeats and the fitted slope is clean.
    seg_fit = forcing_nonosc(grid, cfg.eps, eta, cfg.p, cfg.n, "power",
                             horizon=cfg.horizon, bump=bump)
    w0 = seg_fit.params["w0"]
    part0 = get_partition(grid)
    # stay inside the two-block overlap zone: beyond 2^{j_max} a single
    # renormalized block carries the band with a misplaced dyadic weight
    s_hi = min(1.0 + w0 * cfg.horizon * 0.98,
               0.98 * 2.0 ** part0.j_max - bump.fourier_radius)
    s_list = [s_hi / 2.0 ** i for i in range(5)]
    ts = np.array(sorted((s - 1.0) / w0 for s in s_list))
    crit = BesovIndex(cfg.n / cfg.p - 3.0, cfg.p, cfg.q)
    part = get_partition(grid)
    vals = [besov_norm(seg_fit.evaluate(t), crit, part).value for t in ts]
    xs = np.log(1.0 + w0 * ts)
    slope = float(np.polyfit(xs, np.log(vals), 1)[0])
    bound = seg_fit.decay_bound(ts) * seg_fit.certificates["decay_prefactor"]
    rep.tables["force_decay"] = (["t", "norm", "bound"],
                                 [(float(a), float(b), float(c))
                                  for a, b, c in zip(ts, vals, bound)])
    rep.scalars.update({"fit_slope": slope, "expected_slope": -expo, "w0": w0,
                        "fit_t_lo": float(ts[0]), "fit_t_hi": float(ts[-1])})
    rep.flags["decay_exponent_within_0.1"] = bool(abs(slope + expo) <= 0.1)

    # second-iteration tail floor: faster carrier, clear of the low blocks
    w0_floor = 5.5
    eps_floor = w0_floor ** (-expo)
    limit = grid.dealias_limit_axis[0] - bump.fourier_radius
    horizon_floor = min(3.8, (limit / w0_floor - 1.0) / w0_floor * 0.98)
    seg_floor = forcing_nonosc(grid, eps_floor, eta, cfg.p, cfg.n, "power",
                               horizon=horizon_floor, bump=bump)
    n_nodes = 10
    scfg = SolverConfig(dt=cfg.dt, horizon=horizon_floor,
                        sample_stride=max(1, int(round(horizon_floor / cfg.dt
                                                       / n_nodes))))
    pieces = mild_pieces(seg_floor, None, 0.0, horizon_floor, scfg,
                         store_u1=False)
    chat = low_block_sup(inverse_laplacian(leray_project(make_Phi(bump))),
                         cfg.j_cut, part)
    tail_rows = []
    for i, tt in enumerate(pieces.u2.times):
        lb = low_block_sup(pieces.u2.get_field(i), cfg.j_cut, part)
        tail_rows.append((float(tt), lb))
    rep.tables["u2_lowblock"] = (["t", "low_block_sup"], tail_rows)
    tail = [(t, v) for t, v in tail_rows if t >= horizon_floor / 2.0]
    floor = min(v for _, v in tail)
    tfit = np.array([t for t, _ in tail])
    vfit = np.array([v for _, v in tail])
    trend = float(np.polyfit(tfit, vfit, 1)[0])
    rep.scalars.update({"tail_floor": floor, "chat_phi": chat,
                        "floor_over_half_eta2_chat": floor / (0.5 * eta ** 2 * chat),
                        "tail_trend": trend, "floor_horizon": horizon_floor,
                        "w0_floor": w0_floor})
    rep.flags["tail_floor_at_least_half_eta2_chat"] = bool(floor >= 0.5 * eta ** 2 * chat)
    rep.flags["tail_nondecreasing"] = bool(trend >= -1e-9 * max(vfit))
    return rep


def _nonosc_log(cfg: ExperimentConfig) -> Report:
    rep = Report("nonosc_log", cfg.to_dict())
    # window-count bracket: pure arithmetic, long horizon
    grid = cfg.grid()
    bump = make_bump(grid)
    seg = forcing_nonosc(grid, cfg.eps, float(cfg.per_cycle(cfg.eta, 1)),
                         float(cfg.n), cfg.n, "log", horizon=cfg.horizon,
                         bump=bump, gamma_windows=cfg.K)
    e_shift = math.exp(1.0 / cfg.eps ** 2)
    horizon_arith = cfg.decay_cap
    ts_a = np.linspace(1.0, horizon_arith, 160)
    sandwich_ok = True

    def i1_arith(t: float) -> float:
        # all windows below floor(t) saturated; the newest contributes gamma^2
        kmax = int(math.floor(t))
        s = sum(1.0 / (k + 1) for k in range(0, kmax))
        frac = (t - kmax)
        newest = (smooth_step_i1(frac)) ** 2 / (kmax + 1)
        return (s + newest) / math.log(e_shift + t)

    def smooth_step_i1(frac: float) -> float:
        from .littlewood_paley import smooth_step
        return float(smooth_step((abs(frac) - 1.0 / 3.0) * 3.0))

    rows = []
    for t in ts_a:
        lo = sum(1.0 / (k + 1) for k in range(0, int(math.floor(t)))) / math.log(e_shift + t)
        hi = sum(1.0 / (k + 1) for k in range(0, int(math.floor(t)) + 1)) / math.log(e_shift + t)
        v = seg.I1(t) if t <= cfg.horizon else i1_arith(t)
        rows.append((float(t), v, lo, hi))
        sandwich_ok &= (lo - 1e-12 <= v <= hi + 1e-12)
    horizon_end = rows[-1]
    bracket_lo = 1.0 - 2.0 / math.log(horizon_arith)
    rep.tables["i1"] = (["t", "I1", "lower", "upper"], rows)
    rep.scalars.update({"I1_end": horizon_end[1], "bracket_lo": bracket_lo})
    rep.flags["i1_sandwich_holds"] = sandwich_ok
    rep.flags["i1_in_bracket_at_horizon"] = bracket_lo <= horizon_end[1] <= 1.0

    # force norm decay certificate on the segment horizon
    crit = BesovIndex(-2.0, float(cfg.n), cfg.q)
    part = get_partition(grid)
    ts_n = np.linspace(0.5, cfg.horizon - 1e-6, 6)
    vals = [besov_norm(seg.evaluate(t), crit, part).value for t in ts_n]
    env = [v * math.sqrt(math.log(e_shift + t)) for v, t in zip(vals, ts_n)]
    rep.tables["force_norms"] = (["t", "norm", "norm_times_sqrt_log"],
                                 [(float(a), float(b), float(c))
                                  for a, b, c in zip(ts_n, vals, env)])
    rep.scalars["envelope_spread"] = max(env) / max(min(env), 1e-300)
    rep.flags["log_envelope_stable"] = max(env) / min(env) <= 1.6
    return rep


# ---------------------------------------------------------------------------
# bilinear ratio suites


def _const_duhamel(grid: Grid, u: SpectralField, v: SpectralField, t: float):
    """int_0^t e^{(t-s)L} P div(u x v) ds for constant u, v (closed form)."""
    from .solver import _tensor_div_raw
    q = _tensor_div_raw(grid, u.coeffs, v.coeffs)
    k2 = grid.k2.copy()
    k2[(0,) * grid.dim] = 1.0
    sym = (1.0 - np.exp(-grid.k2 * t)) / k2
    sym[(0,) * grid.dim] = t
    return q, sym


def _cl_norm_closed(grid: Grid, q: np.ndarray, times, index: BesovIndex, part):
    """Chemin-Lerner norm of t -> sym(t) * q using closed-form heat factors."""
    k2 = grid.k2.copy()
    k2[(0,) * grid.dim] = 1.0
    series = {j: np.empty(len(times)) for j in part.j_range}
    for i, t in enumerate(times):
        sym = (1.0 - np.exp(-grid.k2 * t)) / k2
        sym[(0,) * grid.dim] = t
        fld = SpectralField(grid, q * sym)
        for j in part.j_range:
            series[j][i] = block_lp_norm(fld, j, index.p, part)
    prof = [2.0 ** (index.s * j) * lp_time(series[j], np.asarray(times), index.r)
            for j in part.j_range]
    return lq_aggregate(np.array(prof), index.q)


def bilinear_ratio_suite(cfg: ExperimentConfig) -> Report:
    """Measured LHS/RHS ratios for the paraproduct, Duhamel-bilinear, weak
    Lebesgue and 2D working-norm estimates; max ratios must be stable under
    one grid refinement."""
    from .littlewood_paley import paraproduct_decompose
    rep = Report("bilinear_ratios", cfg.to_dict())
    rng = np.random.default_rng(cfg.seed)
    nsamp = cfg.samples
    results = {}

    # paraproduct bounds (static fields, 2D)
    for name, refine in (("base", False), ("refined", True)):
        g = make_grid(2, 96 if refine else 64, cfg.length)
        part = get_partition(g)
        t_ratios, r_ratios = [], []
        rng_l = np.random.default_rng(cfg.seed)
        for _ in range(nsamp):
            f = random_scalar(g, rng_l, slope=rng_l.uniform(0.5, 2.0))
            h = random_scalar(g, rng_l, slope=rng_l.uniform(0.5, 2.0))
            tf, rr, _ = paraproduct_decompose(f, h, part)
            # T-bound: s1 = -1/2 (p1 = inf), s2 = 1 (p2 = 2), s = 1/2
            lhs = besov_norm(tf, BesovIndex(0.5, 2.0, 2.0), part).value
            rhs = (besov_norm(f, BesovIndex(-0.5, INF, 2.0), part).value
                   * besov_norm(h, BesovIndex(1.0, 2.0, 2.0), part).value)
            t_ratios.append(lhs / max(rhs, 1e-300))
            # R-bound: s1 = s2 = 1/2, p1 = p2 = 2 -> s = 1, p = 1
            lhs = besov_norm(rr, BesovIndex(1.0, 1.0, 1.0), part).value
            rhs = (besov_norm(f, BesovIndex(0.5, 2.0, 2.0), part).value
                   * besov_norm(h, BesovIndex(0.5, 2.0, 2.0), part).value)
            r_ratios.append(lhs / max(rhs, 1e-300))
        results.setdefault("paraproduct_T", {})[name] = max(t_ratios)
        results.setdefault("paraproduct_R", {})[name] = max(r_ratios)

    # Duhamel bilinear bound, n = 2 admissible tuple
    times = np.linspace(0.05, 1.0, 8)
    for name, pts in (("base", 64), ("refined", 96)):
        g = make_grid(2, pts, cfg.length)
        part = get_partition(g)
        ratios = []
        rng_l = np.random.default_rng(cfg.seed + 1)
        for _ in range(nsamp):
            u = random_field(g, rng_l, solenoidal=True, slope=rng_l.uniform(0.5, 2.0))
            v = random_field(g, rng_l, solenoidal=True, slope=rng_l.uniform(0.5, 2.0))
            q, _ = _const_duhamel(g, u, v, 1.0)
            lhs = _cl_norm_closed(g, q, times, BesovIndex(2.0 / 2 - 1 + 2.0 / 3, 2.0, 2.0, 3.0), part)
            rhs = ((1.0 ** (1.0 / 6.0)) * besov_norm(u, BesovIndex(2.0 / 2 - 1 + 2.0 / 6, 2.0, 2.0), part).value
                   * (1.0 ** (1.0 / 6.0)) * besov_norm(v, BesovIndex(2.0 / 2 - 1 + 2.0 / 6, 2.0, 2.0), part).value)
            ratios.append(lhs / max(rhs, 1e-300))
        results.setdefault("duhamel_bilinear_2d", {})[name] = max(ratios)

    # weak-Lebesgue bilinear bound (n = 3) and its Chemin-Lerner companion
    for name, pts in (("base", 48), ("refined", 64)):
        g = make_grid(3, pts, cfg.length)
        part = get_partition(g)
        y_ratios, c_ratios = [], []
        rng_l = np.random.default_rng(cfg.seed + 2)
        for _ in range(max(10, nsamp // 2)):
            u = random_field(g, rng_l, solenoidal=True, slope=rng_l.uniform(0.5, 2.0))
            v = random_field(g, rng_l, solenoidal=True, slope=rng_l.uniform(0.5, 2.0))
            q, _ = _const_duhamel(g, u, v, 1.0)
            k2 = g.k2.copy(); k2[(0,) * 3] = 1.0
            lhs_w = 0.0
            for t in times:
                sym = (1.0 - np.exp(-g.k2 * t)) / k2
                sym[(0,) * 3] = t
                lhs_w = max(lhs_w, weak_lebesgue_norm(SpectralField(g, q * sym), 3.0))
            rhs_w = weak_lebesgue_norm(u, 3.0) * weak_lebesgue_norm(v, 3.0)
            y_ratios.append(lhs_w / max(rhs_w, 1e-300))
            # companion: CL(rho1=inf) <= ||u||_{L^inf weak-L^3} ||v||_{CL(rho)}
            r_, rho_ = 4.0, 3.0
            lhs_c = _cl_norm_closed(g, q, times, BesovIndex(3.0 / r_ - 1.0, r_, 2.0, INF), part)
            rhs_c = weak_lebesgue_norm(u, 3.0) * \
                ((1.0 ** (1.0 / rho_)) * besov_norm(v, BesovIndex(3.0 / r_ - 1.0 + 2.0 / rho_, r_, 2.0), part).value)
            c_ratios.append(lhs_c / max(rhs_c, 1e-300))
        results.setdefault("weak_lebesgue_3d", {})[name] = max(y_ratios)
        results.setdefault("weak_cl_3d", {})[name] = max(c_ratios)

    # 2D working-norm bounds with constants N and sqrt(N)
    N = cfg.N
    times_n = np.linspace(0.05, 4.0, 9)
    for name, pts in (("base", 64), ("refined", 96)):
        g = make_grid(2, pts, cfg.length)
        part = get_partition(g)
        inf_ratios, n_ratios = [], []
        rng_l = np.random.default_rng(cfg.seed + 3)
        for _ in range(nsamp):
            u = random_field(g, rng_l, solenoidal=True, slope=rng_l.uniform(0.5, 2.0))
            v = random_field(g, rng_l, solenoidal=True, slope=rng_l.uniform(0.5, 2.0))
            q, _ = _const_duhamel(g, u, v, 1.0)
            idx_n = BesovIndex(1.0 + 2.0 / N, 1.0, 2.0, float(N))
            rhs_n = ((4.0 ** (1.0 / N)) * besov_norm(u, BesovIndex(1.0 + 2.0 / N, 1.0, 2.0), part).value) * \
                    ((4.0 ** (1.0 / N)) * besov_norm(v, BesovIndex(1.0 + 2.0 / N, 1.0, 2.0), part).value)
            lhs_inf = _cl_norm_closed(g, q, times_n, BesovIndex(1.0, 1.0, 1.0, INF), part)
            lhs_n = _cl_norm_closed(g, q, times_n, idx_n, part)
            inf_ratios.append(lhs_inf / max(N * rhs_n, 1e-300))
            n_ratios.append(lhs_n / max(math.sqrt(N) * rhs_n, 1e-300))
        results.setdefault("xn_inf_bound", {})[name] = max(inf_ratios)
        results.setdefault("xn_n_bound", {})[name] = max(n_ratios)

    rows = []
    all_stable = True
    for lemma in sorted(results):
        base = results[lemma]["base"]
        refined = results[lemma]["refined"]
        drift = abs(refined - base) / max(base, 1e-300)
        stable = drift <= 0.2
        all_stable &= stable
        rows.append((lemma, base, refined, drift, stable))
        rep.scalars[f"max_ratio_{lemma}"] = base
    rep.tables["ratios"] = (["estimate", "max_ratio_base", "max_ratio_refined",
                             "relative_drift", "stable"], rows)
    rep.flags["all_ratios_finite"] = all(np.isfinite(r[1]) for r in rows)
    rep.flags["refinement_stable_within_20pct"] = all_stable
    return rep


# ---------------------------------------------------------------------------
# dispatch


def run_experiment(cfg: ExperimentConfig) -> Report:
    if cfg.regime == "stability":
        return run_stability(cfg)
    if cfg.regime in ("oscillation_nd", "oscillation_2d"):
        return run_oscillation(cfg)
    if cfg.regime == "nonosc":
        return run_nonosc(cfg)
    if cfg.regime == "lemmas":
        return bilinear_ratio_suite(cfg)
    raise ConfigError(f"no driver for regime {cfg.regime!r}")
