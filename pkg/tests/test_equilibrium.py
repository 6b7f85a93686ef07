"""Invariant-measure oracle, mixing fits, control, and support probes."""

import numpy as np
import pytest

from sqe.equilibrium import (ControlProblem, GibbsSpec, ProbeSequence,
                             batch_mean_se, control_to_target,
                             fit_geometric_decay, gibbs_log_density,
                             integrated_autocorr, metropolis_sample,
                             probe_for, support_probe)
from sqe.solver import SolverConfig
from sqe.spectral import ModeSet, SpectralField, heat_semigroup


def test_pure_gaussian_log_density_oracle():
    # a = 0 removes the potential; the log-density is the explicit
    # free-field quadratic form
    spec = GibbsSpec(cutoff=2.0, a=(0.0, 0.0, 0.0, 0.0))
    ms = spec.ms
    rng = np.random.default_rng(0)
    raw = rng.standard_normal((3, ms.n_modes)) + 1j * rng.standard_normal((3, ms.n_modes))
    c = 0.5 * (raw + np.conj(raw[..., ms.conj_index]))
    got = gibbs_log_density(c, spec)
    want = -(ms.i_m * np.abs(c) ** 2).sum(axis=-1)
    assert np.abs(got - want).max() < 1e-12


def test_quartic_potential_constant_field_oracle():
    # constant field c: potential is -2 a3/4 H_4(c, R) by exact quadrature
    spec = GibbsSpec(cutoff=2.0)
    ms = spec.ms
    c = 0.9
    coeffs = c * ms.basis_coeffs((0, 0))
    R = spec.renorm
    h4 = c ** 4 - 6 * R * c ** 2 + 3 * R ** 2
    want = -(1.0 * c ** 2) - 0.5 * h4
    assert np.isclose(gibbs_log_density(coeffs, spec), want, rtol=1e-12)


def test_metropolis_recovers_gaussian_variance():
    # with a = 0 the chain targets independent Gaussians with
    # E|c_m|^2 = 1/(2 I_m); check the zero mode
    spec = GibbsSpec(cutoff=2.0, a=(0.0, 0.0, 0.0, 0.0),
                     chain_length=6000, burn_in=1000, thin=2, step_size=0.8)
    res = metropolis_sample(spec, seed=1, walkers=8)
    assert 0.1 <= res.acceptance <= 0.7
    zi = spec.ms.zero_index
    z = res.samples[..., zi].real.ravel()
    m, se = batch_mean_se(z ** 2)
    assert abs(m - 0.5) < 5 * max(se, 0.01)


def test_integrated_autocorr_iid_near_one():
    rng = np.random.default_rng(2)
    tau = integrated_autocorr(rng.standard_normal(20000))
    assert 0.8 < tau < 1.3


def test_batch_mean_se_iid_scaling():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(4096)
    m, se = batch_mean_se(x)
    naive = x.std(ddof=1) / np.sqrt(len(x))
    assert np.isclose(m, x.mean())
    assert 0.5 * naive < se < 2.0 * naive


def test_fit_geometric_decay_exact_series():
    ts = [0.5, 1.0, 2.0, 4.0]
    D = {t: 2.0 * 0.5 ** t for t in ts}
    se = {t: 1e-3 for t in ts}
    rho, (lo, hi) = fit_geometric_decay(D, se)
    assert abs(rho - 0.5) < 1e-6
    assert lo <= 0.5 <= hi


def test_control_reaches_target():
    cfg = SolverConfig(cutoff=4.0, dt=5e-4, horizon=0.5)
    ms = cfg.mode_set()
    x = SpectralField(ms, ms.basis_coeffs((0, 0)))
    y = SpectralField(ms, ms.basis_coeffs((1, 0)))
    prob = ControlProblem(x, y, cfg.horizon)
    f_traj, x_traj, err = control_to_target(prob, cfg)
    assert err < 1e-5
    # the realized path starts at x and the forcing trajectory is real
    assert np.abs(x_traj.fields.coeffs[0] - x.coeffs).max() == 0.0
    with pytest.raises(ValueError):
        ControlProblem(x, y, 0.0)


def test_control_first_order_is_worse():
    cfg = SolverConfig(cutoff=2.0, dt=2e-3, horizon=0.4)
    ms = cfg.mode_set()
    x = SpectralField(ms, ms.basis_coeffs((0, 0)))
    y = SpectralField(ms, 0.7 * ms.basis_coeffs((1, 0)))
    prob = ControlProblem(x, y, cfg.horizon)
    _, _, err2 = control_to_target(prob, cfg, order=2)
    _, _, err1 = control_to_target(prob, cfg, order=1)
    assert err2 < err1


def test_probe_sequence_oracles():
    p = ProbeSequence(3, 0.4, 0.0)
    assert p.freq == (8, 8)
    assert np.isclose(p.lam_rate, 1.0 + 8.0 * np.pi ** 2 * 2.0 ** 6)
    # Holder norm: block m, amplitude sqrt(2 C)
    assert np.isclose(p.holder_norm(0.5), 2.0 ** -1.5 * np.sqrt(0.8))
    grid = 64
    vals = p.f_values(grid)
    # grid values realize a single symmetric mode pair: mean square is C
    assert np.isclose((vals ** 2).mean(), p.amplitude, rtol=1e-12)
    # the ramp profile 1 - e^{-lam (t+1)} stays in (0, 1]
    assert 0.0 < p.profile(0.0) <= 1.0
    assert p.profile(0.0) <= p.profile(1.0) <= 1.0


def test_probe_for_amplitude_floor():
    probe, small = probe_for(3, renorm_target=0.0)
    assert probe.amplitude > 0
    big_target, _ = probe_for(3, renorm_target=100.0)
    assert big_target.amplitude == 0.0
    assert small.cutoff >= 1.0


def test_support_probe_residuals_shrink():
    res = support_probe((2, 3), renorm_target=0.0, replicas=4, n_times=5,
                        seed=0)
    assert set(res) == {2, 3}
    for m, (s1, s2, s3, amp) in res.items():
        assert np.isfinite([s1, s2, s3]).all()
    # the first-order residual decreases along the probe sequence
    assert res[3][0] < res[2][0]
