"""Equilibrium-side tooling: an independent Metropolis oracle for the
invariant (Wick-polynomial-perturbed Gaussian) measure, equilibrium
comparison, exponential-mixing experiments, and the full-support control
and probe constructions.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import (ModeSet, SpectralField, eval_on_grid, grid_coeffs,
                       heat_multiplier, next_pow2, phi1_multiplier)
from .besov import GridNormEvaluator, BlockNormEvaluator, BesovIndex
from .noise import (OUTransition, Trajectory, hermite_values, noise_draws,
                    renorm_constant, stationary_rep_coeffs)
from .dynamics import ProcessEngine
from .report import ExperimentReport


# ---------------------------------------------------------------------------
# Gibbs oracle


@dataclass
class GibbsSpec:
    cutoff: float = 4.0
    a: tuple = (0.0, 0.0, 0.0, 1.0)
    renorm: float = None
    step_size: float = 0.6
    chain_length: int = 20000
    burn_in: int = 2000
    thin: int = 5

    def __post_init__(self):
        self.a = tuple(float(v) for v in self.a)
        n = len(self.a) - 1
        if n >= 1 and self.a[n] < 0:
            raise ValueError("leading coefficient must be nonnegative")
        self.n = n
        self.ms = ModeSet(self.cutoff)
        if self.renorm is None:
            self.renorm = renorm_constant(self.ms)
        self.grid = next_pow2((self.n + 2) * self.cutoff)


def gibbs_log_density(coeffs, spec):
    """Unnormalized log-density of the invariant measure at a field.

    Gaussian free-field part  -sum_m I_m |c_m|^2  plus the potential
    -2 sum_k a_k/(k+1) int H_{k+1}(X, R) dz, the integral by exact grid
    quadrature.  Accepts full coefficient tables, batched.
    """
    ms = spec.ms
    gauss = -(ms.i_m * np.abs(coeffs) ** 2).sum(axis=-1)
    vals = eval_on_grid(ms, coeffs, spec.grid)
    hv = hermite_values(spec.n + 1, vals, spec.renorm)
    pot = 0.0
    for k in range(spec.n + 1):
        if spec.a[k] != 0:
            pot = pot - 2.0 * spec.a[k] / (k + 1.0) * hv[k + 1].mean(axis=(-2, -1))
    return gauss + pot


def gibbs_log_density_field(field, spec):
    return gibbs_log_density(field.coeffs, spec)


@dataclass
class ChainResult:
    samples: np.ndarray          # (n_samples, walkers, n_modes) full coeffs
    acceptance: float
    iact: dict                   # integrated autocorrelation per observable
    warnings: list


def integrated_autocorr(series, max_lag=None):
    """IACT by the initial-positive-sequence style FFT estimator."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = len(x)
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n].real
    if acf[0] <= 0:
        return 1.0
    acf = acf / acf[0]
    tau = 1.0
    for lag in range(1, min(n // 2, max_lag or n // 2)):
        if acf[lag] < 0.05:
            break
        tau += 2.0 * acf[lag]
    return tau


def metropolis_sample(spec, seed, walkers=8):
    """Random-walk Metropolis in symmetry-reduced spectral coordinates.

    Per-mode proposal scale step_size / sqrt(I_m); returns thinned post
    burn-in samples as full Hermitian coefficient tables.
    """
    ms = spec.ms
    rng = np.random.default_rng(seed)
    i_rep = ms.i_m[ms.rep_indices]
    scale = spec.step_size / np.sqrt(i_rep)
    rep = np.zeros((walkers, ms.n_rep), dtype=complex)
    logp = gibbs_log_density(ms.expand_rep(rep), spec)
    kept = []
    accepted = 0
    total = 0
    trace = []
    for it in range(spec.chain_length):
        noise = rng.standard_normal((walkers, ms.n_rep, 2))
        prop = rep + scale * np.where(ms.rep_is_zero,
                                      noise[..., 0] + 0j,
                                      (noise[..., 0] + 1j * noise[..., 1])
                                      / np.sqrt(2.0))
        logp_prop = gibbs_log_density(ms.expand_rep(prop), spec)
        accept = np.log(rng.uniform(size=walkers)) < logp_prop - logp
        rep = np.where(accept[:, None], prop, rep)
        logp = np.where(accept, logp_prop, logp)
        accepted += int(accept.sum())
        total += walkers
        if it >= spec.burn_in:
            trace.append(rep[:, ms.rep_is_zero.argmax()].real.copy())
            if (it - spec.burn_in) % spec.thin == 0:
                kept.append(ms.expand_rep(rep))
    rate = accepted / total
    warnings = []
    if not (0.1 <= rate <= 0.7):
        warnings.append("acceptance rate %.2f outside [0.1, 0.7]; "
                        "retune step_size (lower it for higher acceptance)" % rate)
    trace = np.array(trace)
    iact = {"zero_mode": float(np.mean([integrated_autocorr(trace[:, w])
                                        for w in range(walkers)]))}
    return ChainResult(np.array(kept), rate, iact, warnings)


def batch_mean_se(series, n_batches=32):
    """Autocorrelation-robust standard error by batch means."""
    x = np.asarray(series, dtype=float).ravel()
    nb = min(n_batches, max(2, len(x) // 8))
    cut = (len(x) // nb) * nb
    means = x[:cut].reshape(nb, -1).mean(axis=1)
    return x.mean(), means.std(ddof=1) / np.sqrt(nb)


def equilibrium_compare(dyn_samples, gibbs_samples, observables):
    """z-scores between long-run dynamics statistics and the chain oracle.

    Both sample sets are sequences of full coefficient tables (possibly with
    a walker axis); errors are autocorrelation-corrected by batch means along
    the sequence axis.
    """
    rep = ExperimentReport("gibbs-compare")
    for name, ob in observables.items():
        d = ob(dyn_samples)
        g = ob(gibbs_samples)
        md, sd = batch_mean_se(d.reshape(len(d), -1).mean(axis=1))
        mg, sg = batch_mean_se(g.reshape(len(g), -1).mean(axis=1))
        z = abs(md - mg) / np.sqrt(sd ** 2 + sg ** 2)
        rep.check("z_%s" % name, z, z < 4.0, note="two-oracle cross-validation",
                  tolerance="z < 4")
        rep.add("dyn_%s" % name, md, sd, note="dynamics long-run mean")
        rep.add("chain_%s" % name, mg, sg, note="chain-oracle mean")
    return rep.finish()


# ---------------------------------------------------------------------------
# mixing


def mixing_experiment(x, y, times, spec, dictionary):
    """Dictionary-sup proxy D(t) for the total-variation distance between
    the laws started at x and y, with a geometric-decay fit."""
    config = spec.config
    steps_all = int(round(max(times) / config.dt))
    want = {int(round(t / config.dt)): t for t in times}
    # common keyed noise couples the ensembles and shrinks the gap variance
    states = {}
    for label, x0 in (("x", x), ("y", y)):
        eng = ProcessEngine(config, spec.seed, spec.replicas)
        ou, v = eng.initial(x0)
        vals = {}
        for i in range(steps_all):
            ou, v, _ = eng.step(ou, v, i)
            if i + 1 in want:
                X = eng.x_coeffs(ou, v)
                vals[want[i + 1]] = {name: ob(X)
                                     for name, ob in dictionary.items()}
        states[label] = vals
    D, D_se = {}, {}
    for t in times:
        best, best_se = 0.0, 0.0
        for name in dictionary:
            d = states["x"][t][name] - states["y"][t][name]
            m, s = abs(d.mean()), d.std(ddof=1) / np.sqrt(len(d))
            if m > best:
                best, best_se = m, s
        D[t], D_se[t] = best, best_se
    return D, D_se


def fit_geometric_decay(D, D_se):
    """Weighted fit of log D(t) = log D0 + t log rho; returns rho and 95% CI."""
    ts = np.array(sorted(D))
    ys = np.array([max(D[t], 1e-300) for t in ts])
    ws = np.array([1.0 / max(D_se[t] / max(D[t], 1e-300), 1e-6) for t in ts])
    ly = np.log(ys)
    A = np.stack([np.ones_like(ts), ts], axis=1)
    W = np.diag(ws ** 2)
    cov = np.linalg.inv(A.T @ W @ A)
    coef = cov @ (A.T @ W @ ly)
    slope, slope_sd = coef[1], np.sqrt(cov[1, 1])
    rho = np.exp(slope)
    ci = (np.exp(slope - 1.96 * slope_sd), np.exp(slope + 1.96 * slope_sd))
    return rho, ci


# ---------------------------------------------------------------------------
# control to a target state


@dataclass
class ControlProblem:
    x: SpectralField
    y: SpectralField
    horizon: float
    renorm: float = 0.0

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")


def control_to_target(prob, config, order=2):
    """Steer the deterministic dynamics from x to y with an explicit forcing.

    The target path is the interpolation X*(t) = S(t)x + (t/T)(y - S(T)x);
    the forcing f(t) = sum_k a_k H_k(X*(t), R) + (1/T)(y - S(T)x)
    - (t/T)(Delta - 1)(y - S(T)x) makes X* an exact solution.  The forced
    equation is re-solved numerically (second-order exponential trapezoid by
    default) and the endpoint error ||X(T) - y|| reported.
    """
    ms = prob.x.mode_set
    T = prob.horizon
    n = config.n
    a = config.a
    R = prob.renorm
    dt = config.dt
    steps = int(round(T / dt))
    grid = next_pow2((n + 1) * ms.cutoff)
    gap = prob.y.coeffs - heat_multiplier(ms, T) * prob.x.coeffs   # y - S(T)x

    def forcing(t):
        xstar = heat_multiplier(ms, t) * prob.x.coeffs + (t / T) * gap
        vals = eval_on_grid(ms, xstar, grid)
        hv = hermite_values(n, vals, R)
        acc = np.zeros_like(vals)
        for k in range(n + 1):
            if a[k] != 0:
                acc = acc + a[k] * hv[k]
        poly = grid_coeffs(acc, ms)
        return poly + gap / T + (t / T) * ms.i_m * gap

    def N(c, t):
        vals = eval_on_grid(ms, c, grid)
        hv = hermite_values(n, vals, R)
        acc = np.zeros_like(vals)
        for k in range(n + 1):
            if a[k] != 0:
                acc = acc + a[k] * hv[k]
        return -grid_coeffs(acc, ms) + forcing(t)

    decay = heat_multiplier(ms, dt)
    phi1 = phi1_multiplier(ms, dt)
    # phi2 = (e^{-z} - 1 + z) / (z^2 / dt), the trapezoidal correction weight
    z = ms.i_m * dt
    phi2 = (np.exp(-z) - 1.0 + z) / (ms.i_m ** 2 * dt)
    c = prob.x.coeffs.copy()
    f_store, x_store = [forcing(0.0)], [c.copy()]
    for i in range(steps):
        t = i * dt
        Nk = N(c, t)
        pred = decay * c + phi1 * Nk
        if order >= 2:
            Np = N(pred, t + dt)
            c = decay * c + phi1 * Nk + phi2 * (Np - Nk)
        else:
            c = pred
        f_store.append(forcing(t + dt))
        x_store.append(c.copy())
    times = np.arange(steps + 1) * dt
    f_traj = Trajectory(times, SpectralField(ms, np.stack(f_store)))
    x_traj = Trajectory(times, SpectralField(ms, np.stack(x_store)))
    ev = BlockNormEvaluator(ms)
    err = float(ev.norm(c - prob.y.coeffs, BesovIndex(-config.alpha0)))
    return f_traj, x_traj, err


# ---------------------------------------------------------------------------
# support probes


@dataclass
class ProbeSequence:
    """Single-pair-of-modes probe at frequency 2^m (1,1) with its time profile."""
    m: int
    amplitude: float             # C_m
    lam_rate: float              # lambda_m = 1 + 4 pi^2 2^{2m} |z0|^2

    def __post_init__(self):
        self.freq = (2 ** self.m, 2 ** self.m)
        self.lam_rate = 1.0 + 4.0 * np.pi ** 2 * 2.0 ** (2 * self.m) * 2.0

    def f_values(self, grid):
        """Grid values of f_m = sqrt(C_m/2) (e_{2^m z0} + e_{-2^m z0})."""
        j = np.arange(grid) / grid
        phase = 2.0 * np.pi * 2 ** self.m * (j[:, None] + j[None, :])
        return np.sqrt(self.amplitude / 2.0) * 2.0 * np.cos(phase)

    def profile(self, t):
        return 1.0 - np.exp(-self.lam_rate * (t + 1.0))

    def holder_norm(self, alpha):
        """Exact C^{-alpha} norm of f_m: block m, sup sqrt(2 C_m)."""
        return 2.0 ** (-alpha * self.m) * np.sqrt(2.0 * self.amplitude)


def probe_for(m, renorm_target, lam_frac=0.375):
    """C_m = (R at the probe's mollification cutoff) - R, floored at 0."""
    small = ModeSet(max(lam_frac * 2 ** m, 1.0))
    c_m = max(renorm_constant(small) - renorm_target, 0.0)
    return ProbeSequence(m, c_m, 0.0), small


def support_probe(m_range, renorm_target, cutoff_full=None, replicas=8,
                  horizon=0.5, n_times=11, alpha=0.5, lam_frac=0.375,
                  seed=0):
    """Shifted-diagram residuals along the probe sequence.

    For each m: sample a stationary free field <1> on the full mode set, its
    mollified version <1>^m (sharp truncation at lam_frac * 2^m), shift by
    w_m = -<1>^m - h_m and measure the C^{-alpha} norms of
      T_w<1>,  T_w<2> + R_target,  T_w<3>
    (sup over the time grid, median over replicas).  By the Hermite
    translation identity these equal H_k(<1> - <1>^m - h_m, R_full) with the
    target constant reinserted for k = 2.
    """
    if cutoff_full is None:
        cutoff_full = 2.0 * lam_frac * 2 ** max(m_range)
    ms = ModeSet(cutoff_full)
    r_full = renorm_constant(ms)
    dt = horizon / (n_times - 1)
    tr = OUTransition(ms, dt)
    rep_path = [stationary_rep_coeffs(
        ms, noise_draws(seed, 0, replicas, ms.n_rep))]
    for i in range(n_times - 1):
        nxt, _ = tr.apply(rep_path[-1], noise_draws(seed, i + 1, replicas, ms.n_rep))
        rep_path.append(nxt)
    results = {}
    max_freq = 2 ** max(m_range)
    grid = next_pow2(2 * 3 * max(max_freq, ms.max_coord) + 2)
    norm_ev = GridNormEvaluator(grid, alpha)
    for m in m_range:
        probe, small = probe_for(m, renorm_target, lam_frac)
        # resonance condition: the mollified field's modes must miss the
        # probe's dyadic block and its neighbours entirely
        if small.cutoff > 0.75 * 2.0 ** (m - 1) + 1e-9:
            raise ValueError("mollifier scale too large: resonant overlap")
        mask = np.sqrt(ms.abs2) < small.cutoff - 1e-12
        sup1 = np.zeros(replicas)
        sup2 = np.zeros(replicas)
        sup3 = np.zeros(replicas)
        f_vals = probe.f_values(grid)
        for i, rep_c in enumerate(rep_path):
            t = i * dt
            full_c = ms.expand_rep(rep_c)
            diff_c = full_c * (~mask)          # <1> - <1>^m  (nested sets)
            x_vals = (eval_on_grid(ms, diff_c, grid)
                      - probe.profile(t) * f_vals)
            hv = hermite_values(3, x_vals, r_full)
            sup1 = np.maximum(sup1, norm_ev.norm(hv[1]))
            sup2 = np.maximum(sup2, norm_ev.norm(hv[2] + renorm_target))
            sup3 = np.maximum(sup3, norm_ev.norm(hv[3]))
        results[m] = (np.median(sup1), np.median(sup2), np.median(sup3),
                      probe.amplitude)
    return results
