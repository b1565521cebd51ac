import math

import numpy as np
import pytest

from nsbesov.spectral import (SpectralField, Trajectory, divergence,
                              field_from_physical, heat_propagate, make_grid,
                              zero_field)
from nsbesov.littlewood_paley import BesovIndex, besov_norm, get_partition
from nsbesov.forcing import (ForcingSegment, ForcingSchedule, forcing_2d,
                             forcing_highdim, make_bump, schedule_forcing)
from nsbesov.solver import (BlowupError, PicardDivergenceError, SolverConfig,
                            WorkingNormSpec, duhamel, mild_pieces,
                            picard_remainder, second_iteration, solve_mild,
                            solve_timestepper)
from nsbesov.randfields import random_field


def constant_segment(grid, profile, t0, t1):
    return ForcingSegment(grid, t0, t1, "highdim", profile=profile,
                          amplitude=lambda t: 1.0)


def decaying_segment(grid, profile, t0, t1, lam):
    return ForcingSegment(grid, t0, t1, "highdim", profile=profile,
                          amplitude=lambda t: math.exp(-lam * t))


# ---------------------------------------------------------------------------
# the linear Duhamel integral


def test_duhamel_pure_heat(grid2d, rng):
    a = random_field(grid2d, rng, solenoidal=True)
    cfg = SolverConfig(dt=0.05, horizon=1.0, sample_stride=4)
    traj = duhamel(None, a, 0.0, 1.0, cfg)
    exact = heat_propagate(a, 1.0)
    assert (traj.final() - exact).l2() <= 1e-13 * exact.l2()


def test_duhamel_constant_forcing_closed_form(grid2d, rng):
    # time-independent g: (-Lap)^{-1}(1 - e^{t Lap}) g, exact for the
    # midpoint-frozen quadrature
    from nsbesov.spectral import leray_project
    g = leray_project(random_field(grid2d, rng, j_band=(0, 2)))
    seg = constant_segment(grid2d, g, 0.0, 2.0)
    cfg = SolverConfig(dt=0.01, horizon=2.0, sample_stride=50)
    traj = duhamel(seg, None, 0.0, 2.0, cfg)
    k2 = grid2d.k2.copy()
    k2[(0, 0)] = 1.0
    sym = (1.0 - np.exp(-grid2d.k2 * 2.0)) / k2
    sym[(0, 0)] = 2.0
    exact = SpectralField(grid2d, g.coeffs * sym)
    assert (traj.final() - exact).l2() <= 1e-8 * exact.l2()


def test_duhamel_refinement_second_order(grid2d, rng):
    # decaying forcing with known closed form: halving dt reduces the error 4x
    from nsbesov.spectral import leray_project
    g = leray_project(random_field(grid2d, rng, j_band=(0, 2)))
    lam = 1.0
    T = 1.0
    seg = decaying_segment(grid2d, g, 0.0, T, lam)
    k2 = grid2d.k2.copy()
    k2[(0, 0)] = 1.0
    denom = np.where(np.abs(k2 - lam) < 1e-12, 1.0, k2 - lam)
    sym = (np.exp(-lam * T) - np.exp(-k2 * T)) / denom
    sym = np.where(np.abs(grid2d.k2 - lam) < 1e-12, T * np.exp(-lam * T), sym)
    sym[(0, 0)] = (1.0 - math.exp(-lam * T)) / lam
    exact = SpectralField(grid2d, g.coeffs * sym)
    errs = []
    for dt in (0.02, 0.01, 0.005):
        cfg = SolverConfig(dt=dt, horizon=T, sample_stride=int(round(T / dt)))
        traj = duhamel(seg, None, 0.0, T, cfg)
        errs.append((traj.final() - exact).l2() / exact.l2())
    assert 3.3 <= errs[0] / errs[1] <= 4.7
    assert 3.3 <= errs[1] / errs[2] <= 4.7


def test_second_iteration_zero_input(grid2d):
    times = np.linspace(0.0, 1.0, 11)
    u1 = Trajectory(grid2d, times, [zero_field(grid2d) for _ in times])
    cfg = SolverConfig(dt=0.1, horizon=1.0, sample_stride=1)
    u2 = second_iteration(u1, cfg)
    assert u2.final().l2() == 0.0


def test_second_iteration_windows_sum(grid2d, rng):
    # windowed accumulators partition the full integral
    times = np.linspace(0.0, 1.0, 41)
    fields = [heat_propagate(random_field(grid2d, rng, solenoidal=True), t)
              for t in times]
    base = random_field(grid2d, rng, solenoidal=True)
    fields = [heat_propagate(base, t) for t in times]
    u1 = Trajectory(grid2d, times, fields)
    cfg = SolverConfig(dt=0.025, horizon=1.0, sample_stride=1)
    u2 = second_iteration(u1, cfg, windows={"lo": (0.0, 0.5), "hi": (0.5, 1.0)})
    total = u2.meta["windows"]["lo"] + u2.meta["windows"]["hi"]
    assert (total - u2.final()).l2() <= 1e-12 * max(u2.final().l2(), 1e-300)


# ---------------------------------------------------------------------------
# Picard remainder


def test_picard_trivial_fixed_point(grid2d):
    times = np.linspace(0.0, 1.0, 6)
    zeros = Trajectory(grid2d, times, [zero_field(grid2d) for _ in times])
    cfg = SolverConfig(dt=0.2, horizon=1.0, sample_stride=1, picard_tol=1e-6)
    rem, rep = picard_remainder(zeros, zeros, None, "highdim", cfg,
                                WorkingNormSpec(dim=2))
    assert rep.converged and rep.iterations == 1
    assert rem.final().l2() == 0.0


def test_picard_divergence_reported():
    g = make_grid(2, 128, 3.2 * math.pi)
    seg = forcing_2d(g, N=3, M=11.25, eta=3.0, t0=0.0)
    cfg = SolverConfig(dt=0.05, horizon=6.0, sample_stride=10, picard_tol=1e-8)
    pieces = mild_pieces(seg, None, 0.0, 6.0, cfg, want_sources=True,
                         include_a_in_u1=False)
    with pytest.raises(PicardDivergenceError) as err:
        picard_remainder(pieces.u1, pieces.u2, None, "twodim", cfg,
                         WorkingNormSpec(dim=2), sources=(pieces.s12, pieces.s22))
    assert err.value.report is not None
    assert len(err.value.report.contraction_ratios) >= 2


# ---------------------------------------------------------------------------
# full solvers


def test_timestepper_taylor_green_exact():
    # single-mode vortex: the quadratic term is a pure gradient, so the flow
    # is a decaying eigenmode matched to closed form
    g = make_grid(2, 64, 4 * math.pi)
    x, y = np.meshgrid(g.axis_coordinates(0), g.axis_coordinates(1), indexing="ij")
    vals = np.stack([np.sin(x / 2) * np.cos(y / 2),
                     -np.cos(x / 2) * np.sin(y / 2)])
    a = field_from_physical(g, vals)
    cfg = SolverConfig(dt=0.01, horizon=2.0, sample_stride=200)
    traj = solve_timestepper(a, ForcingSchedule([]), cfg)
    exact = a * math.exp(-0.5 * 2.0)
    assert (traj.final() - exact).l2() <= 1e-8 * exact.l2()


def test_timestepper_self_convergence(grid2d, rng):
    a = 0.3 * random_field(grid2d, rng, solenoidal=True, j_band=(0, 1))
    finals = []
    for dt in (0.04, 0.02, 0.01):
        cfg = SolverConfig(dt=dt, horizon=1.0, sample_stride=int(round(1.0 / dt)))
        finals.append(solve_timestepper(a, ForcingSchedule([]), cfg).final())
    e1 = (finals[0] - finals[1]).l2()
    e2 = (finals[1] - finals[2]).l2()
    assert 3.0 <= e1 / e2 <= 5.0


def test_timestepper_dissipation_monotone(grid2d):
    rng = np.random.default_rng(5)
    idx = BesovIndex(0.0, 2.0, 2.0)
    part = get_partition(grid2d)
    for _ in range(10):
        a = 0.02 * random_field(grid2d, rng, solenoidal=True)
        cfg = SolverConfig(dt=0.02, horizon=1.0, sample_stride=10)
        traj = solve_timestepper(a, ForcingSchedule([]), cfg)
        vals = [besov_norm(f, idx, part).value for f in traj.fields]
        assert all(b <= a_ * (1 + 1e-10) for a_, b in zip(vals, vals[1:]))


def test_timestepper_blowup_detector(grid2d, rng):
    a = random_field(grid2d, rng, solenoidal=True)
    cfg = SolverConfig(dt=0.05, horizon=1.0, sample_stride=2)
    with pytest.raises(BlowupError):
        solve_timestepper(a, ForcingSchedule([]), cfg, blowup_threshold=1e-6)


def test_timestepper_divergence_free(grid2d, rng):
    a = 0.1 * random_field(grid2d, rng, solenoidal=True)
    cfg = SolverConfig(dt=0.02, horizon=0.5, sample_stride=5)
    traj = solve_timestepper(a, ForcingSchedule([]), cfg)
    for f in traj.fields:
        assert divergence(f).linf() <= 1e-9 * max(f.linf(), 1e-300) * f.grid.nyquist


def test_solve_mild_zero_everything(grid2d):
    cfg = SolverConfig(dt=0.05, horizon=1.0, sample_stride=5)
    traj = solve_mild(zero_field(grid2d), ForcingSchedule([]), cfg)
    assert traj.final().l2() == 0.0


def test_solve_mild_junction_continuity():
    g = make_grid(2, 128, 3.2 * math.pi)
    seg = forcing_2d(g, N=3, M=11.25, eta=1e-3, t0=0.5)
    sched = schedule_forcing([seg])
    cfg = SolverConfig(dt=0.02, horizon=2.0, sample_stride=5, picard_tol=1e-9)
    traj = solve_mild(None, sched, cfg)
    # the timeline was cut at the window start; norms must be continuous there
    idx = BesovIndex(1.0, 1.0, 1.0)
    part = get_partition(g)
    cut = 0.5
    i = int(np.argmin(np.abs(traj.times - cut)))
    before = besov_norm(traj.fields[i - 1], idx, part).value
    at = besov_norm(traj.fields[i], idx, part).value
    scale = max(besov_norm(traj.final(), idx, part).value, 1e-300)
    assert abs(at - before) <= 0.3 * max(at, before) + 1e-8 * scale


def test_mild_vs_timestepper_small_2d():
    g = make_grid(2, 128, 3.2 * math.pi)
    seg = forcing_2d(g, N=3, M=11.25, eta=1e-3, t0=0.0)
    sched = schedule_forcing([seg])
    cfg = SolverConfig(dt=0.02, horizon=3.0, sample_stride=15, picard_tol=1e-9)
    mild = solve_mild(None, sched, cfg)
    ts = solve_timestepper(zero_field(g), sched, cfg)
    rel = (mild.final() - ts.final()).l2() / ts.final().l2()
    assert rel <= 1e-4


def test_mild_vs_timestepper_heat_only(grid2d, rng):
    a = 0.05 * random_field(grid2d, rng, solenoidal=True, j_band=(0, 2))
    cfg = SolverConfig(dt=0.02, horizon=2.0, sample_stride=10, picard_tol=1e-9)
    mild = solve_mild(a, ForcingSchedule([]), cfg)
    ts = solve_timestepper(a, ForcingSchedule([]), cfg)
    rel = (mild.final() - ts.final()).l2() / ts.final().l2()
    assert rel <= 1e-4


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt=-0.1, horizon=1.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.1, horizon=1.0, picard_tol=0.1)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.1, horizon=0.01)
