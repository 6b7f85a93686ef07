"""Dyadic frequency decomposition, Besov/Holder norms, paraproducts."""

import numpy as np
import pytest

from sqe.besov import (BesovIndex, BlockNormEvaluator, DyadicPartition,
                       GridNormEvaluator, WeightedNormSpec, besov_norm,
                       bony_decompose, build_dyadic_partition, grid_lp_norm,
                       holder_norm, inequality_suite, lp_block, partition_for,
                       random_spectral_coeffs, smoothstep7,
                       weighted_diagram_norm)
from sqe.noise import Trajectory
from sqe.spectral import (ModeSet, SpectralField, dealiased_product,
                          eval_on_grid, next_pow2)


def test_smoothstep_profile():
    assert smoothstep7(0.0) == 0.0 and smoothstep7(1.0) == 1.0
    x = np.linspace(0, 1, 200)
    y = smoothstep7(x)
    assert (np.diff(y) >= -1e-15).all()
    assert abs(smoothstep7(0.5) - 0.5) < 1e-12


def test_partition_of_unity():
    for cutoff in (2, 8, 16):
        ms = ModeSet(cutoff)
        part = partition_for(cutoff)
        w = part.weights(ms)
        assert np.abs(w.sum(axis=0) - 1.0).max() < 1e-14
        assert (w >= 0).all()


def test_partition_coverage_guard():
    part = build_dyadic_partition(1)     # covers radius 3
    with pytest.raises(ValueError):
        part.weights(ModeSet(8))


def test_block_supports():
    ms = ModeSet(16)
    part = partition_for(16)
    r = np.sqrt(ms.abs2)
    w = part.weights(ms)
    for i, kappa in enumerate(part.levels):
        on = w[i] > 0
        if kappa == -1:
            assert (r[on] < 4.0 / 3.0).all()
        else:
            lo, hi = 0.75 * 2.0 ** kappa, 8.0 / 3.0 * 2.0 ** kappa
            assert (r[on] > lo).all() and (r[on] < hi).all()


def test_block_index_guard():
    ms = ModeSet(4)
    f = SpectralField(ms, ms.basis_coeffs((1, 0)))
    part = partition_for(4)
    with pytest.raises(ValueError):
        lp_block(f, part.max_level + 1, part)


def test_constant_field_norm():
    ms = ModeSet(4)
    f = SpectralField(ms, 2.0 * ms.basis_coeffs((0, 0)))
    for alpha in (-0.5, 0.3):
        # only the low block sees a constant; its scale is 2^(-alpha)
        assert np.isclose(holder_norm(f, alpha), 2.0 * 2.0 ** (-alpha),
                          rtol=1e-12)


def test_blocks_reassemble_field():
    ms = ModeSet(8)
    rng = np.random.default_rng(0)
    c = random_spectral_coeffs(ms, rng, decay=0.8)
    part = partition_for(8)
    total = sum(lp_block(SpectralField(ms, c), k, part).coeffs
                for k in part.levels)
    assert np.abs(total - c).max() < 1e-14


def test_besov_index_duality():
    idx = BesovIndex(0.4, 2, 1)
    d = idx.dual()
    assert d.alpha == -0.4 and d.p == 2.0 and np.isinf(d.q)
    with pytest.raises(ValueError):
        BesovIndex(0.1, 0.5)


def test_grid_lp_norm_oracle():
    vals = np.ones((8, 8)) * -3.0
    assert grid_lp_norm(vals, 2) == 3.0
    assert grid_lp_norm(vals, np.inf) == 3.0


def test_grid_norm_evaluator_matches_block_evaluator():
    ms = ModeSet(8)
    rng = np.random.default_rng(1)
    c = random_spectral_coeffs(ms, rng, (5,), decay=0.5)
    ev = BlockNormEvaluator(ms, oversample=2)
    vals = eval_on_grid(ms, c, ev.grid)
    gv = GridNormEvaluator(ev.grid, 0.4, max_radius=ms.cutoff)
    a = ev.norm(c, BesovIndex(-0.4))
    b = gv.norm(vals)
    assert np.abs(a - b).max() / np.abs(a).max() < 1e-10


def test_bony_reconstruction():
    ms = ModeSet(8)
    rng = np.random.default_rng(2)
    f = SpectralField(ms, random_spectral_coeffs(ms, rng, decay=0.7))
    g = SpectralField(ms, random_spectral_coeffs(ms, rng, decay=0.7))
    para, res, anti = bony_decompose(f, g)
    total = para + res + anti
    full = dealiased_product([f, g])
    assert np.abs(total.coeffs - full.coeffs).max() < 1e-10


def test_weighted_diagram_norm_constant_path():
    ms = ModeSet(2)
    times = np.linspace(0.0, 1.0, 5)
    c = np.broadcast_to(1.5 * ms.basis_coeffs((0, 0)), (5, ms.n_modes))
    tr = Trajectory(times, SpectralField(ms, np.array(c)))
    spec = WeightedNormSpec(0.5, 0.25, 1.0)
    # k = 1: weight 1, constant norm 1.5 * 2^0.5
    got = weighted_diagram_norm([tr], spec)
    assert np.isclose(got, 1.5 * 2.0 ** 0.5, rtol=1e-12)
    # k = 2 entry carries the t^{alpha'} weight, maximized at t = 1
    got2 = weighted_diagram_norm([tr, tr], spec)
    assert np.isclose(got2, 1.5 * 2.0 ** 0.5, rtol=1e-12)
    with pytest.raises(ValueError):
        WeightedNormSpec(-0.1, 0.1, 1.0)


def test_random_coeffs_hermitian_and_decay():
    ms = ModeSet(8)
    rng = np.random.default_rng(3)
    c = random_spectral_coeffs(ms, rng, (4,), decay=np.array([0.5, 1, 2, 3]))
    assert np.abs(c - np.conj(c[..., ms.conj_index])).max() < 1e-14
    f = SpectralField(ms, c)
    assert f.is_hermitian()


def test_inequality_suite_smoke():
    rep, rows = inequality_suite(8, rng_seed=0, cutoff=8.0, oversample=2)
    assert len(rows) == 14
    for name, const, samples, verdict in rows:
        assert np.isfinite(const) and const > 0
        assert samples == 16
