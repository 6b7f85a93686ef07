"""Coupled free/remainder stepping, restart consistency, moment surveys."""

import numpy as np
import pytest

from sqe.dynamics import (ProcessEngine, RunSpec, default_dictionary,
                          markov_consistency, moment_survey, restart_diagrams,
                          simulate, weighted_moment)
from sqe.noise import renorm_constant
from sqe.solver import ExplosionError, SolverConfig
from sqe.spectral import ModeSet, SpectralField


def _cfg(**kw):
    kw.setdefault("cutoff", 4.0)
    kw.setdefault("dt", 1e-2)
    kw.setdefault("horizon", 0.1)
    return SolverConfig(**kw)


def _const(ms, c):
    return SpectralField(ms, c * ms.basis_coeffs((0, 0)))


def test_step_noise_keying_is_absolute():
    # the same absolute step index gives the same draw regardless of path
    cfg = _cfg()
    eng = ProcessEngine(cfg, seed=3, replicas=2)
    a = eng.draws(7)
    b = ProcessEngine(cfg, seed=3, replicas=2).draws(7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, eng.draws(8))


def test_zero_noise_deterministic():
    cfg = _cfg()
    ms = cfg.mode_set()
    spec = RunSpec(cfg, _const(ms, 0.5), replicas=1, seed=0)
    traj = simulate(spec, zero_noise=True)
    # with zero noise the free field stays zero and X solves the remainder
    # equation with the zero-path diagrams: dX/dt = -I X - (X^3 - 3 R X)
    R = renorm_constant(ms)
    c = 0.5
    dt = cfg.dt
    for _ in range(int(round(cfg.horizon / dt))):
        F = c ** 3 - 3 * R * c
        c = np.exp(-dt) * c - (1 - np.exp(-dt)) * F
    got = traj.fields.coeffs[-1, 0, ms.zero_index].real
    assert np.isclose(got, c, rtol=1e-12)


def test_markov_consistency_small():
    ms = ModeSet(4)
    cfg = _cfg(horizon=0.2)
    spec = RunSpec(cfg, replicas=2, seed=1)
    x = _const(ms, 0.3)
    sup = markov_consistency(x, 0.1, 0.1, spec)
    assert sup < 1e-9


def test_restart_diagrams_start_at_zero():
    cfg = _cfg()
    spec = RunSpec(cfg, replicas=2, seed=4)
    d = restart_diagrams(5, spec, 0.05)
    # every diagram of a zero-start path begins at its deterministic value:
    # odd orders 0, order 2 the constant -R
    R = renorm_constant(cfg.mode_set())
    t0_1 = d.trajectories[0].fields.coeffs[0]
    t0_2 = d.trajectories[1].fields.coeffs[0]
    t0_3 = d.trajectories[2].fields.coeffs[0]
    assert np.abs(t0_1).max() < 1e-14
    assert np.abs(t0_3).max() < 1e-14
    zi = d.trajectories[1].fields.mode_set.zero_index
    assert np.abs(t0_2[..., zi] + R).max() < 1e-13
    assert d.trajectories[0].times[0] == 0.0


def test_auto_substep_inactive_for_small_data():
    # with the flag on but small data, the path is bit-identical to flag off
    cfg = _cfg(horizon=0.05)
    ms = cfg.mode_set()
    spec = RunSpec(cfg, _const(ms, 0.5), replicas=2, seed=2)
    a = simulate(spec, auto_substep=False)
    b = simulate(spec, auto_substep=True)
    assert np.array_equal(a.fields.coeffs, b.fields.coeffs)


def test_auto_substep_stabilizes_large_data():
    cfg = SolverConfig(cutoff=4.0, dt=2e-3, horizon=0.02)
    ms = cfg.mode_set()
    spec = RunSpec(cfg, _const(ms, 100.0), replicas=2, seed=0)
    with pytest.raises(ExplosionError), np.errstate(over="ignore",
                                                    invalid="ignore"):
        simulate(spec, auto_substep=False)
    traj = simulate(spec, auto_substep=True)
    assert np.isfinite(traj.fields.coeffs).all()
    # the huge constant collapses monotonically under the cubic drift
    zmag = np.abs(traj.fields.coeffs[:, 0, ms.zero_index])
    assert zmag[-1] < zmag[0]


def test_substep_count_budget():
    cfg = _cfg(dt=2e-3)
    eng = ProcessEngine(cfg, 0, 1)
    small = np.zeros((1, eng.ms.n_modes), dtype=complex)
    small[0, eng.ms.zero_index] = 0.5
    assert eng._substep_count(small) == 1
    big = np.zeros((1, eng.ms.n_modes), dtype=complex)
    big[0, eng.ms.zero_index] = 100.0
    M = eng._substep_count(big)
    # power of two and enough to keep dt_sub * 3 v^2 below 1/2
    assert M & (M - 1) == 0
    assert (cfg.dt / M) * 3 * 100.0 ** 2 <= 0.5


def test_simulate_store_times():
    cfg = _cfg(horizon=0.1)
    spec = RunSpec(cfg, replicas=3, seed=5)
    traj = simulate(spec, store_times=[0.0, 0.05, 0.1])
    assert np.allclose(traj.times, [0.0, 0.05, 0.1])
    assert traj.fields.coeffs.shape[0] == 3
    assert traj.fields.coeffs.shape[1] == 3


def test_dictionary_bounded():
    ms = ModeSet(4)
    obs = default_dictionary(ms)
    assert len(obs) == 9
    rng = np.random.default_rng(0)
    raw = rng.standard_normal((20, ms.n_modes)) * 50.0
    c = (raw + 1j * rng.standard_normal((20, ms.n_modes)))
    c = 0.5 * (c + np.conj(c[..., ms.conj_index]))
    for name, ob in obs.items():
        vals = ob(c)
        assert vals.shape == (20,)
        assert (np.abs(vals) <= 1.0 + 1e-12).all()


def test_weighted_moment_formula():
    norms = np.array([2.0, 3.0])
    # below t = 1 the weight is t^{p/(n-1)}; above it saturates at 1
    got = weighted_moment(0.25, 2, 3, norms)
    assert np.allclose(got, 0.25 * norms ** 2)
    assert np.allclose(weighted_moment(4.0, 2, 3, norms), norms ** 2)


def test_moment_survey_smoke():
    cfg = SolverConfig(cutoff=2.0, dt=2e-2, horizon=1.0)
    ms = cfg.mode_set()
    spec = RunSpec(cfg, replicas=64, seed=0)
    fam = [_const(ms, 0.0), _const(ms, 1.0)]
    rep = moment_survey(fam, [0.5, 1.0], 2, spec)
    names = [m.name for m in rep.metrics]
    assert "weighted_moment_x0_t0.5" in names
    assert any(n.startswith("x_independence_t1") for n in names)
