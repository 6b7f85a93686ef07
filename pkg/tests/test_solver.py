"""Remainder marching, energy identities, and comparison-test bounds."""

import numpy as np
import pytest

from sqe.noise import renorm_constant
from sqe.solver import (EXPLOSION_THRESHOLD, ExplosionError, SolverConfig,
                        comparison_bound, energy_diagnostics, etd_step,
                        local_existence_time, nonlinearity_F,
                        nonlinearity_F_prime, prop_exponents, solve_remainder,
                        zero_diagrams)
from sqe.spectral import ModeSet, SpectralField


def _const(ms, c):
    return SpectralField(ms, c * ms.basis_coeffs((0, 0)))


def test_config_validation():
    SolverConfig()          # defaults are admissible
    with pytest.raises(ValueError):
        SolverConfig(n=2, a=(0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        SolverConfig(n=3, a=(0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        SolverConfig(a=(0.0, 0.0, 0.0, -1.0))
    with pytest.raises(ValueError):
        SolverConfig(gamma=0.05)            # (beta+alpha0)/2 < gamma fails
    with pytest.raises(ValueError):
        SolverConfig(alpha=0.2)             # alpha < alpha0 fails
    with pytest.raises(ValueError):
        SolverConfig(alpha_prime=0.3)       # alpha_prime < gamma fails


def test_times_grid():
    cfg = SolverConfig(dt=0.25, horizon=1.0)
    assert np.allclose(cfg.times(), [0.0, 0.25, 0.5, 0.75, 1.0])


def test_nonlinearity_constant_oracle():
    ms = ModeSet(2)
    c, z1, z2, z3, z0 = 0.7, 0.2, -0.4, 1.1, 2.0
    v = _const(ms, c)
    zf = [_const(ms, z1), _const(ms, z2), _const(ms, z3)]
    F = nonlinearity_F(v, zf, z0)
    # F = Z3 + v Z2 + v^2 Z1 + z0 v^3 for spatially constant inputs
    want = z3 + c * z2 + c ** 2 * z1 + z0 * c ** 3
    got = F.coeffs[ms.zero_index].real
    assert np.isclose(got, want, rtol=1e-12)
    assert np.abs(np.delete(F.coeffs, ms.zero_index)).max() < 1e-13


def test_nonlinearity_derivative_constant_oracle():
    ms = ModeSet(2)
    c, d1, d2 = 0.5, 0.3, -0.2
    v = _const(ms, c)
    diagrams = [_const(ms, d1), _const(ms, d2)]
    Fp = nonlinearity_F_prime(v, diagrams, (0.0, 0.0, 0.0, 1.0))
    # F' = 3 (v^2 + 2 v <1> + <2>)
    want = 3.0 * (c ** 2 + 2 * c * d1 + d2)
    out_ms = Fp.mode_set
    assert np.isclose(Fp.coeffs[out_ms.zero_index].real, want, rtol=1e-12)


def test_etd_step_constant_oracle():
    ms = ModeSet(2)
    c, dt = 0.8, 0.01
    zf = [_const(ms, 0.0)] * 3
    out = etd_step(_const(ms, c), zf, 1.0, dt)
    # zero-mode rate is 1, so  c -> e^{-dt} c - (1 - e^{-dt}) c^3
    want = np.exp(-dt) * c - (1.0 - np.exp(-dt)) * c ** 3
    assert np.isclose(out.coeffs[ms.zero_index].real, want, rtol=1e-13)


def test_zero_diagrams_structure():
    ms = ModeSet(2)
    times = np.array([0.0, 0.5, 1.0])
    d = zero_diagrams(ms, 3, times)
    R = renorm_constant(ms)
    # odd orders vanish, the quadratic one is the constant -R
    assert np.abs(d.trajectories[0].fields.coeffs).max() == 0.0
    assert np.abs(d.trajectories[2].fields.coeffs).max() == 0.0
    q = d.trajectories[1].fields
    zi = q.mode_set.zero_index
    assert np.abs(q.coeffs[..., zi] + R).max() < 1e-13
    off = np.delete(q.coeffs, zi, axis=-1)
    assert np.abs(off).max() < 1e-13


def test_cubic_ode_oracle():
    # spatially constant data with Z = None reduces to  v' = -v - v^3,
    # whose exact solution is v0 e^{-t} / sqrt(1 + v0^2 (1 - e^{-2t}))
    ms = ModeSet(2)
    v0 = 2.0
    cfg = SolverConfig(cutoff=2.0, dt=2e-4, horizon=1.0, store_stride=500)
    res = solve_remainder(_const(ms, v0), None, cfg)
    assert not res.exploded
    t = 1.0
    want = v0 * np.exp(-t) / np.sqrt(1.0 + v0 ** 2 * (1.0 - np.exp(-2 * t)))
    got = res.v.fields.coeffs[-1, ms.zero_index].real
    assert abs(got - want) < 5e-4
    off = np.delete(res.v.fields.coeffs[-1], ms.zero_index)
    assert np.abs(off).max() < 1e-13


def test_explosion_recorded():
    ms = ModeSet(2)
    cfg = SolverConfig(cutoff=2.0, dt=1e-2, horizon=0.1)
    res = solve_remainder(_const(ms, 1e6), None, cfg)
    assert res.exploded
    assert res.explosion_time is not None and res.explosion_time <= 0.1
    # the stored trajectory stops before the bad step
    assert np.abs(res.v.fields.coeffs).max() < EXPLOSION_THRESHOLD * 10


def test_local_existence_time():
    assert np.isclose(local_existence_time(0.0, 2.0, 0.5), 0.25)
    assert np.isclose(local_existence_time(3.0, 1.0, 1.0), 0.25)
    with pytest.raises(ValueError):
        local_existence_time(1.0, 0.0, 0.5)


def test_comparison_bound_dominates_ode():
    # integrate f' = -c1 f^lam + c2 and check it stays below both bounds
    f0, lam, c1, c2 = 5.0, 3.0, 1.0, 0.5
    dt = 1e-5
    f = f0
    t = 0.0
    for _ in range(int(1.0 / dt)):
        f = f + dt * (-c1 * f ** lam + c2)
        t += dt
        with_f0, free = comparison_bound(f0, lam, c1, c2, t)
        assert f <= with_f0 * (1 + 1e-6)
        assert f <= free * (1 + 1e-6)
    with pytest.raises(ValueError):
        comparison_bound(1.0, 1.0, 1.0, 1.0, 1.0)


def test_energy_identity_residual():
    ms = ModeSet(4)
    rng = np.random.default_rng(0)
    raw = rng.standard_normal(ms.n_modes) + 1j * rng.standard_normal(ms.n_modes)
    x = SpectralField(ms, 0.3 * 0.5 * (raw + np.conj(raw[ms.conj_index])))
    cfg = SolverConfig(cutoff=4.0, dt=5e-4, horizon=0.2)
    res = solve_remainder(x, None, cfg)
    led = energy_diagnostics(res.v, None, 4)
    # the identity is checked once the stiff high-mode transient has decayed
    # (early times under-resolve d/dt for rough data); residual is O(dt^2)
    settled = (led.times > 0.05) & (led.times < led.times[-1])
    scale = max(np.abs(led.lp_pow).max(), 1.0)
    assert np.abs(led.residual[settled]).max() < 1e-6 * scale
    assert (led.K >= -1e-14).all()
    with pytest.raises(ValueError):
        energy_diagnostics(res.v, None, 3)


def test_prop_exponents_relation():
    out = prop_exponents(4, 3, 0.05)
    assert set(out) == {0, 1, 2}
    for j, table in out.items():
        for i, (g, p) in table.items():
            if g < 1:
                assert np.isclose(p, 1.0 / (1.0 - g))
            else:
                assert np.isinf(p)
