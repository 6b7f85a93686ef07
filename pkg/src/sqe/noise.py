"""Truncated space-time white noise, Ornstein-Uhlenbeck dynamics and
renormalized (Wick/Hermite) power diagrams.

The driving noise is realized as counter-based Gaussian draws: each
(seed, step) pair determines, through a Philox stream, an array of draws
whose (replica, mode) entry is a pure function of the full key.  Every
step consumes four standard-normal lanes per reduced mode: two for the
underlying Brownian increment and two for the conditional residual of the
exact stochastic-convolution increment, so OU transitions are exact in law
while the Brownian increments stay available for stochastic integrals.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .spectral import (ModeSet, SpectralField, eval_on_grid, grid_coeffs,
                       heat_semigroup, next_pow2, power_mode_set,
                       product_grid)
from scipy.special import comb


# ---------------------------------------------------------------------------
# keyed Gaussian draws


@dataclass(frozen=True)
class NoiseKey:
    seed: int
    step_index: int
    mode_index: int = 0
    replica: int = 0


def noise_draws(seed, step_index, replicas, n_rep):
    """Standard-normal draws of shape (replicas, n_rep, 4) for one step.

    Entry (r, i, :) depends only on (seed, step_index, i, r) and the mode
    count n_rep, never on the replica count: batches share a prefix of the
    same Philox stream.
    """
    bg = np.random.Philox(key=np.uint64(seed),
                          counter=[0, 0, 0, np.uint64(step_index)])
    return np.random.Generator(bg).standard_normal((replicas, n_rep, 4))


def draw_for(key, n_rep):
    """The 4 lanes of a single NoiseKey (pure function of the key)."""
    block = noise_draws(key.seed, key.step_index, key.replica + 1, n_rep)
    return block[key.replica, key.mode_index]


# ---------------------------------------------------------------------------
# renormalization constant


def renorm_constant(mode_set):
    """Exact lattice sum sum_{|m|<cutoff} 1/(2 I_m) (diverges like log cutoff)."""
    if mode_set.n_modes == 0:
        raise ValueError("empty mode set")
    return float((0.5 / mode_set.i_m).sum())


# ---------------------------------------------------------------------------
# exact OU transitions


class OUTransition:
    """Precomputed per-reduced-mode quantities for an exact OU step of size dt."""

    def __init__(self, mode_set, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.mode_set = mode_set
        self.dt = float(dt)
        i_rep = mode_set.i_m[mode_set.rep_indices]
        self.is_zero = mode_set.rep_is_zero
        self.decay = np.exp(-i_rep * dt)
        self.phi1 = -np.expm1(-i_rep * dt) / i_rep
        # target variance of the stochastic-convolution increment:
        # complex E|eta|^2 off the zero mode, real variance at the zero mode
        self.var = -np.expm1(-2.0 * i_rep * dt) / (2.0 * i_rep)
        self.resid_sd = np.sqrt(np.maximum(self.var - self.phi1 ** 2 / dt, 0.0))

    def increment(self, draws):
        """(eta, dW): OU increment and Brownian increment from raw draws.

        draws has shape (..., n_rep, 4); both outputs are complex with the
        zero-mode entry real (its imaginary Brownian lane is unused).
        """
        sq = np.sqrt(self.dt)
        dw = np.where(self.is_zero,
                      sq * draws[..., 0] + 0j,
                      sq * (draws[..., 0] + 1j * draws[..., 1]) / np.sqrt(2.0))
        resid = np.where(self.is_zero,
                         self.resid_sd * draws[..., 2] + 0j,
                         self.resid_sd * (draws[..., 2] + 1j * draws[..., 3])
                         / np.sqrt(2.0))
        eta = (self.phi1 / self.dt) * dw + resid
        return eta, dw

    def apply(self, rep_coeffs, draws):
        eta, dw = self.increment(draws)
        return self.decay * rep_coeffs + eta, dw


@dataclass
class OUState:
    """The linear (free-field) process at one time, on reduced coefficients."""
    mode_set: ModeSet
    rep_coeffs: np.ndarray   # (..., n_rep) complex
    start_mode: str          # "stationary" or "zero_at"
    start_time: float
    time: float

    @property
    def field(self):
        return SpectralField(self.mode_set, self.mode_set.expand_rep(self.rep_coeffs))


def stationary_rep_coeffs(mode_set, draws):
    """Reduced stationary coefficients from lanes 0/1 of keyed draws."""
    i_rep = mode_set.i_m[mode_set.rep_indices]
    sd = np.sqrt(0.5 / i_rep)
    return np.where(mode_set.rep_is_zero,
                    sd * draws[..., 0] + 0j,
                    sd * (draws[..., 0] + 1j * draws[..., 1]) / np.sqrt(2.0))


def sample_stationary_ou(mode_set, key_base, replicas=None):
    """Stationary start: independent complex Gaussians, E|c_m|^2 = 1/(2 I_m)."""
    R = 1 if replicas is None else replicas
    block = noise_draws(key_base.seed, key_base.step_index, R, mode_set.n_rep)
    rep = stationary_rep_coeffs(mode_set, block)
    if replicas is None:
        rep = rep[0]
    return OUState(mode_set, rep, "stationary", -np.inf, 0.0)


def ou_step(state, dt, key):
    """One exact-in-law OU step; noise drawn from the key's (seed, step)."""
    tr = OUTransition(state.mode_set, dt)
    block = noise_draws(key.seed, key.step_index, key.replica + 1,
                        state.mode_set.n_rep)
    draws = block[key.replica] if state.rep_coeffs.ndim == 1 else block
    new_rep, _ = tr.apply(state.rep_coeffs, draws)
    return OUState(state.mode_set, new_rep, state.start_mode,
                   state.start_time, state.time + dt)


# ---------------------------------------------------------------------------
# Hermite polynomials and Wick diagrams


def hermite(k, X, C):
    """H_k(X, C) by the recursion H_k = X H_{k-1} - (k-1) C H_{k-2}.

    X may be a scalar, an ndarray of pointwise values, or a SpectralField
    (in which case products are dealiased and the result lives on the
    enlarged mode set holding k-fold products).
    """
    if k < 0:
        raise ValueError("negative Hermite order")
    if isinstance(X, SpectralField):
        ms = X.mode_set
        out_ms = power_mode_set(ms, max(k, 1))
        grid = product_grid([ms.cutoff] * max(k, 1), out_ms.cutoff)
        vals = X.values(grid)
        hv = hermite(k, vals, C)
        hv = np.broadcast_to(hv, vals.shape) if np.ndim(hv) == 0 else hv
        return SpectralField(out_ms, grid_coeffs(hv, out_ms))
    one = np.ones_like(X) if isinstance(X, np.ndarray) else 1.0
    if k == 0:
        return one
    h_prev, h = one, X
    for j in range(2, k + 1):
        h_prev, h = h, X * h - (j - 1) * C * h_prev
    return h


def hermite_values(n, vals, C):
    """[H_0(vals), ..., H_n(vals)] pointwise, via the recursion."""
    out = [np.ones_like(vals)]
    if n >= 1:
        out.append(vals.copy())
    for k in range(2, n + 1):
        out.append(vals * out[k - 1] - (k - 1) * C * out[k - 2])
    return out


@dataclass
class Trajectory:
    """A time grid with one (possibly batched) field per time."""
    times: np.ndarray
    fields: SpectralField          # coeffs shape (T, ..., M)
    key_ledger: dict = dc_field(default_factory=dict)

    def at(self, t):
        idx = np.nonzero(np.isclose(self.times, t, atol=1e-12))[0]
        if len(idx) == 0:
            raise KeyError("time %r is not on the stored grid" % t)
        return SpectralField(self.fields.mode_set, self.fields.coeffs[idx[0]])


@dataclass
class DiagramSet:
    """Wick-power trajectories <k> for k = 1..n plus the constant used."""
    n: int
    trajectories: list           # k-th entry: Trajectory of <k>
    renorm: float
    origin: str                  # "stationary" | "zero_start" | "shifted"

    def at(self, t):
        return [tr.at(t) for tr in self.trajectories]


def wick_trajectory(ou_path, mode_set, n, renorm=None):
    """Diagrams <k> = H_k(<1>, R) at every stored time of an OU path."""
    if n < 1 or n % 2 == 0:
        raise ValueError("n must be odd and >= 1")
    if renorm is None:
        renorm = renorm_constant(mode_set)
    out_sets = [power_mode_set(mode_set, max(k, 1)) for k in range(n + 1)]
    grid = product_grid([mode_set.cutoff] * n, out_sets[n].cutoff)
    vals = eval_on_grid(mode_set, ou_path.fields.coeffs, grid)
    hv = hermite_values(n, vals, renorm)
    trajs = []
    for k in range(1, n + 1):
        coeffs = grid_coeffs(hv[k], out_sets[k])
        trajs.append(Trajectory(ou_path.times, SpectralField(out_sets[k], coeffs),
                                ou_path.key_ledger))
    return DiagramSet(n, trajs, renorm, "zero_start"
                      if ou_path.key_ledger.get("start") == "zero" else "stationary")


def shifted_wick(stationary_at_s, diagrams_at_t, lag):
    """Diagrams restarted at s: binomial recombination of stationary diagrams.

    <n>_{s,t} = sum_k binom(n,k) (-1)^k (S(lag) <1>_{-inf,s})^k <n-k>_{-inf,t}.
    """
    if lag <= 0:
        raise ValueError("lag must be positive")
    n = diagrams_at_t.n
    base_ms = stationary_at_s.mode_set
    shift = heat_semigroup(stationary_at_s, lag)
    out = []
    for order in range(1, n + 1):
        out_ms = power_mode_set(base_ms, order)
        grid = product_grid([base_ms.cutoff] * order, out_ms.cutoff)
        sv = eval_on_grid(base_ms, shift.coeffs, grid)
        tr = diagrams_at_t.trajectories[order - 1]
        acc = np.zeros(tr.fields.coeffs.shape[:-1] + (grid, grid))
        for k in range(0, order + 1):
            if k == order:
                term = (-sv) ** order
            else:
                sub = diagrams_at_t.trajectories[order - k - 1]
                dv = eval_on_grid(sub.fields.mode_set, sub.fields.coeffs, grid)
                term = comb(order, k, exact=True) * (-sv) ** k * dv
            acc = acc + term
        out.append(Trajectory(tr.times, SpectralField(out_ms, grid_coeffs(acc, out_ms)),
                              tr.key_ledger))
    return DiagramSet(n, out, diagrams_at_t.renorm, "shifted")


_EMBED_CACHE = {}


def embed(field, target_ms):
    """Zero-extend a field onto a larger mode set."""
    key = (field.mode_set.cutoff, target_ms.cutoff)
    idx = _EMBED_CACHE.get(key)
    if idx is None:
        idx = np.array([target_ms.index_of(m) for m in field.mode_set.modes])
        _EMBED_CACHE[key] = idx
    out = np.zeros(field.coeffs.shape[:-1] + (target_ms.n_modes,), dtype=complex)
    out[..., idx] = field.coeffs
    return SpectralField(target_ms, out)


@dataclass
class ZVector:
    """Driving vector of the remainder equation: Z^(0) scalar plus fields."""
    n: int
    z0: float                    # the scalar a_n
    trajectories: list           # order j = 1..n: Trajectory of Z^(j)

    def at(self, t):
        return [tr.at(t) for tr in self.trajectories]


def assemble_Z(diagrams, a):
    """Z^{(n-j)} = sum_{k=j}^n a_k binom(k,j) <k-j>  (j = 0..n-1), Z^(0) = a_n."""
    n = diagrams.n
    if len(a) != n + 1:
        raise ValueError("need n+1 coefficients a_0..a_n")
    if a[n] <= 0:
        raise ValueError("a_n must be positive")
    base_ms = diagrams.trajectories[0].fields.mode_set
    times = diagrams.trajectories[0].times
    batch = diagrams.trajectories[0].fields.coeffs.shape[:-1]
    trajs = [None] * n
    for j in range(n):
        order = n - j
        out_ms = diagrams.trajectories[order - 1].fields.mode_set
        acc = np.zeros(batch + (out_ms.n_modes,), dtype=complex)
        for k in range(j, n + 1):
            w = a[k] * comb(k, j, exact=True)
            if w == 0:
                continue
            if k == j:
                acc[..., out_ms.zero_index] += w      # <0> == 1
            else:
                sub = diagrams.trajectories[k - j - 1].fields
                acc += w * embed(sub, out_ms).coeffs
        trajs[order - 1] = Trajectory(times, SpectralField(out_ms, acc))
    return ZVector(n, float(a[n]), trajs)


def analytic_wick_covariance(n, t1, t2, mode_set):
    """Per-mode spectrum of E[<n>_{t1}(z1) <n>_{t2}(z2)] in z1 - z2.

    n! times the n-fold self-convolution of the single-mode spectrum
    exp(-I_m |t1-t2|) / (2 I_m), carried on the enlarged product mode set.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s1 = np.exp(-mode_set.i_m * abs(t1 - t2)) / (2.0 * mode_set.i_m)
    out_ms = power_mode_set(mode_set, n)
    grid = product_grid([mode_set.cutoff] * n, out_ms.cutoff)
    vals = eval_on_grid(mode_set, s1.astype(complex), grid)
    import math
    return SpectralField(out_ms, grid_coeffs(vals ** n, out_ms) * math.factorial(n))


def covariance_of_observable(spectrum, phi):
    """E[<n>(phi) <n>(phi)] from a covariance spectrum and a test field."""
    ms = spectrum.mode_set
    total = 0.0
    for i, m in enumerate(phi.mode_set.modes):
        if ms.contains(m):
            total += (spectrum.coeffs[..., ms.index_of(m)].real
                      * abs(phi.coeffs[..., i]) ** 2)
    return total
