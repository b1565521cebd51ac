import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsbesov.spectral import (GridError, SpectralField, Trajectory, divergence,
                              field_from_physical, gradient, heat_propagate,
                              inverse_laplacian, laplacian, leray_project,
                              make_grid, nonlinear_term, regrid,
                              tensor_divergence, zero_field)
from nsbesov.littlewood_paley import get_partition
from nsbesov.forcing import make_bump, make_Psi, make_perp, modulate_x1
from nsbesov.randfields import random_field, random_scalar
from nsbesov import fieldio


def test_make_grid_nyquist():
    g = make_grid(2, 128, 2 * math.pi * 8)
    assert g.nyquist == pytest.approx(8.0)


def test_make_grid_3d_lattice_count():
    g = make_grid(3, 64, 2 * math.pi * 8)
    assert g.npoints == 64 ** 3


def test_make_grid_rejects_non_power_of_two():
    with pytest.raises(GridError):
        make_grid(2, 100, 1.0)


def test_make_grid_allows_refinement_sizes():
    g = make_grid(3, 96, 4 * math.pi)
    assert g.shape == (96, 96, 96)


def test_make_grid_rejects_bad_dim():
    with pytest.raises(GridError):
        make_grid(4, 64, 1.0)
    with pytest.raises(GridError):
        make_grid(1, 64, 1.0)


def test_heat_zero_time_is_identity(grid2d, rng):
    f = random_field(grid2d, rng)
    g = heat_propagate(f, 0.0)
    assert np.array_equal(f.coeffs, g.coeffs)


def test_heat_single_mode(grid2d):
    # |k| = 2 mode, t = 1/4: amplitude scales by exp(-1)
    x = grid2d.axis_coordinates(0).reshape(-1, 1)
    f = field_from_physical(grid2d, np.cos(2 * x) + 0.0 * x.T)
    g = heat_propagate(f, 0.25)
    ratio = g.coeffs[np.abs(f.coeffs) > 1e-10] / f.coeffs[np.abs(f.coeffs) > 1e-10]
    assert np.allclose(ratio, math.exp(-1.0), rtol=1e-13)


def test_heat_rejects_negative_time(grid2d, rng):
    with pytest.raises(ValueError):
        heat_propagate(random_field(grid2d, rng), -0.1)


def test_heat_block_decay_bounds(grid2d, rng):
    # band-limited at block j: L2 decay factor sandwiched by the annulus rates,
    # oracle by direct coefficient summation
    part = get_partition(grid2d)
    t = 0.13
    for j in (0, 1, 2):
        f = random_field(grid2d, rng, j_band=(j, j))
        g = heat_propagate(f, t)
        factor = g.l2() / f.l2()
        lo = math.exp(-(2.0 ** (2 * (j + 1))) * t)
        hi = math.exp(-(2.0 ** (2 * (j - 1))) * t)
        assert lo - 1e-12 <= factor <= hi + 1e-12
        # independent oracle: sum the damped spectrum directly
        direct = math.sqrt(float(np.sum(np.abs(f.coeffs) ** 2
                                        * np.exp(-2.0 * grid2d.k2 * t)))
                           / float(np.sum(np.abs(f.coeffs) ** 2)))
        assert factor == pytest.approx(direct, rel=1e-12)


def test_heat_composition(grid3d, rng):
    f = random_field(grid3d, rng)
    a = heat_propagate(heat_propagate(f, 0.37), 0.21)
    b = heat_propagate(f, 0.58)
    assert (a - b).l2() <= 1e-13 * b.l2()


def test_leray_kills_gradients(grid3d, rng):
    q = random_scalar(grid3d, rng)
    gq = gradient(q)
    assert leray_project(gq).l2() <= 1e-12 * gq.l2()


def test_leray_fixes_solenoidal(grid3d, rng):
    u = leray_project(random_field(grid3d, rng))
    again = leray_project(u)
    assert (again - u).l2() <= 1e-12 * u.l2()


def test_leray_single_frequency_oracle():
    # (sin x2, 0, 0) has xi = (0, +-1, 0); the symbol leaves component 1 alone
    g = make_grid(3, 32, 2 * math.pi)
    x2 = g.axis_coordinates(1).reshape(1, -1, 1)
    vals = np.zeros((3,) + g.shape)
    vals[0] = np.sin(x2) + np.zeros(g.shape)
    f = field_from_physical(g, vals)
    pf = leray_project(f)
    assert (pf - f).l2() <= 1e-12 * f.l2()


def test_leray_zero_mean(grid3d, rng):
    f = random_field(grid3d, rng)
    f.coeffs[(slice(None),) + (0,) * 3] = 3.7  # plant a mean
    pf = leray_project(f)
    assert np.all(pf.mean_mode() == 0.0)


def test_inverse_laplacian_single_mode(grid2d):
    x = grid2d.axis_coordinates(0).reshape(-1, 1)
    f = field_from_physical(grid2d, np.cos(2 * x) + 0.0 * x.T)
    g = inverse_laplacian(f)
    sel = np.abs(f.coeffs) > 1e-10
    assert np.allclose(g.coeffs[sel] / f.coeffs[sel], 0.25, rtol=1e-13)


def test_inverse_laplacian_zero(grid2d):
    z = zero_field(grid2d, 1)
    assert inverse_laplacian(z).l2() == 0.0


def test_inverse_laplacian_roundtrip(grid3d, rng):
    # inverse_laplacian is (-Lap)^{-1}, so -Lap recovers f minus its mean
    f = random_scalar(grid3d, rng)
    f.coeffs[(slice(None),) + (0,) * 3] = 0.9
    back = -laplacian(inverse_laplacian(f))
    demeaned = f.coeffs.copy()
    demeaned[(slice(None),) + (0,) * 3] = 0.0
    err = np.max(np.abs(back.coeffs - demeaned))
    assert err <= 1e-12 * np.max(np.abs(demeaned))


def test_divergence_perp_gradient(grid2d, rng):
    psi = random_scalar(grid2d, rng)
    from nsbesov.forcing import perp_gradient
    u = perp_gradient(psi)
    assert divergence(u).linf() <= 1e-12 * u.linf()


def test_divergence_of_modulated_Psi(grid3d_main):
    bump = make_bump(grid3d_main)
    Psi = make_Psi(bump)
    w = modulate_x1(Psi, 8.0)
    assert divergence(w).linf() <= 1e-12 * grid3d_main.nyquist * w.linf()


def test_divergence_constant_field(grid2d):
    f = zero_field(grid2d)
    f.coeffs[(slice(None),) + (0,) * 2] = 2.0
    assert divergence(f).linf() == 0.0


def test_nonlinear_term_zero_factor(grid2d, rng):
    v = random_field(grid2d, rng, solenoidal=True)
    out = nonlinear_term(zero_field(grid2d), v)
    assert out.l2() == 0.0


def test_nonlinear_term_energy_flux(rng):
    # quadrature oracle: int u . P div(u x u) = 0 for solenoidal u
    g = make_grid(2, 64, 4 * math.pi)
    for _ in range(5):
        u = random_field(g, rng, solenoidal=True)
        q = nonlinear_term(u, u)
        flux = float(np.sum(np.sum(u.physical() * q.physical(), axis=0))) * g.cell_volume
        scale = u.linf() ** 2 * q.linf() * g.volume
        assert abs(flux) <= 1e-10 * max(scale, 1e-300)


def test_quadratic_identity_small():
    # div(eta Psi cos(beta x1) x itself) = eta^2 Phi (1 + cos 2 beta x1)
    g = make_grid(3, 32, 2 * math.pi)
    bump = make_bump(g, support_radius=2.0)
    from nsbesov.forcing import make_Phi
    eta, beta = 0.1, 4.0
    u = eta * modulate_x1(make_Psi(bump), beta)
    lhs = tensor_divergence(u, u, project=False)
    Phi = make_Phi(bump)
    rhs = SpectralField(g, eta ** 2 * (Phi.coeffs + modulate_x1(Phi, 2 * beta).coeffs)
                        * g.dealias_mask)
    assert (lhs - rhs).l2() <= 1e-8 * rhs.l2()


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6), t=st.floats(0.01, 0.7))
def test_reality_preservation(seed, t):
    g = make_grid(2, 32, 4 * math.pi)
    f = random_field(g, np.random.default_rng(seed))
    for out in (heat_propagate(f, t), leray_project(f), inverse_laplacian(f),
                nonlinear_term(f, f)):
        assert out.hermitian_defect() <= 1e-12


def test_regrid_preserves_content(grid2d, rng):
    f = random_field(grid2d, rng, j_band=(0, 2))
    fine = make_grid(2, 96, 4 * math.pi)
    g = regrid(f, fine)
    assert g.l2() == pytest.approx(f.l2(), rel=1e-13)
    assert g.hermitian_defect() <= 1e-12


def test_trajectory_invariants(grid2d, rng):
    f = random_field(grid2d, rng)
    with pytest.raises(ValueError):
        Trajectory(grid2d, [0.0, 0.0], [f, f])
    with pytest.raises(ValueError):
        Trajectory(grid2d, [0.0, -1.0], [f, f])
    other = make_grid(2, 32, 4 * math.pi)
    with pytest.raises(ValueError):
        Trajectory(grid2d, [0.0, 1.0], [f, random_field(other, rng)])


def test_field_io_roundtrip(tmp_path, grid3d, rng):
    f = random_field(grid3d, rng)
    path = tmp_path / "snap.nsb"
    fieldio.save_field(f, str(path))
    back = fieldio.load_field(str(path))
    assert back.grid == f.grid
    assert np.array_equal(back.coeffs, f.coeffs)
