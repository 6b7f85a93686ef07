"""Deterministic solver for the remainder equation driven by a diagram
vector Z, with the energy diagnostics and comparison-test utilities behind
the dissipative a priori bounds.

The remainder solves  dv/dt = (Delta - 1) v - F(v, Z)  in mild form; one
exponential-Euler step is  v -> S(dt) v - phi1(dt) . P[F(v, Z_t)]  with the
sharp spectral projection P back onto the base mode set.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import comb

from .spectral import (ModeSet, SpectralField, eval_on_grid, grid_coeffs,
                       heat_multiplier, next_pow2, phi1_multiplier,
                       power_mode_set, product_grid)
from .noise import Trajectory, ZVector, wick_trajectory, renorm_constant
from .report import ExperimentReport

EXPLOSION_THRESHOLD = 1e8


@dataclass
class SolverConfig:
    n: int = 3
    a: tuple = (0.0, 0.0, 0.0, 1.0)
    cutoff: float = 8.0
    dt: float = 1e-3
    horizon: float = 1.0
    alpha0: float = 0.1
    alpha: float = 0.05
    alpha_prime: float = 0.05
    beta: float = 0.3
    gamma: float = 0.25
    store_stride: int = 1

    def __post_init__(self):
        self.a = tuple(float(x) for x in self.a)
        if self.n % 2 == 0 or self.n < 1:
            raise ValueError("n must be odd")
        if len(self.a) != self.n + 1:
            raise ValueError("need n+1 coefficients")
        if self.a[self.n] <= 0:
            raise ValueError("leading coefficient a_n must be positive")
        if not ((self.beta + self.alpha0) / 2 < self.gamma
                and self.beta / 2 + self.n * self.gamma < 1):
            raise ValueError("regularity constraint violated: need "
                             "(beta+alpha0)/2 < gamma and beta/2 + n*gamma < 1")
        if not (self.alpha < self.alpha0 and self.alpha_prime < self.gamma):
            raise ValueError("regularity constraint violated: need "
                             "alpha < alpha0 and alpha_prime < gamma")

    def mode_set(self):
        return ModeSet(self.cutoff)

    def times(self):
        steps = int(round(self.horizon / self.dt))
        return np.arange(steps + 1) * self.dt


# ---------------------------------------------------------------------------
# nonlinearity


def _z_values(z_fields, z0, grid, batch):
    """Grid values of Z^(1)..Z^(n) plus the scalar Z^(0)."""
    vals = []
    for zf in z_fields:
        vals.append(eval_on_grid(zf.mode_set, zf.coeffs, grid))
    return vals


def nonlinearity_F(v, z_fields, z0):
    """F(v, Z) = sum_{j=0}^n v^j Z^{(n-j)}, truncated back to v's mode set.

    z_fields lists Z^(1)..Z^(n); Z^(0) is the scalar z0 (the leading
    coefficient), multiplying v^n.
    """
    n = len(z_fields)
    ms = v.mode_set
    # band of the term v^j Z^{(n-j)} is j*cutoff + band(Z^{(n-j)})
    band = max(n * ms.cutoff,
               max(j * ms.cutoff + z_fields[n - j - 1].mode_set.cutoff
                   for j in range(n)))
    grid = next_pow2(int(np.ceil(band + ms.cutoff)))
    vv = v.values(grid)
    acc = np.full(vv.shape, 0.0)
    vpow = np.ones_like(vv)
    for j in range(0, n + 1):
        if j == n:
            acc = acc + z0 * vpow
        else:
            zv = eval_on_grid(z_fields[n - j - 1].mode_set,
                              z_fields[n - j - 1].coeffs, grid,
                              allow_fold=True)
            acc = acc + vpow * zv
        if j < n:
            vpow = vpow * vv
    return SpectralField(ms, grid_coeffs(acc, ms))


def nonlinearity_F_prime(v, diagram_fields, a):
    """F'(v, Z) = sum_k k a_k sum_j binom(k-1, j) v^j <k-1-j>.

    diagram_fields lists <1>..<n> at one time (or empty for zero path
    diagrams, in which case only <0> = 1 terms contribute -- pass the
    constant -R field for <2> explicitly when needed).
    """
    n = len(a) - 1
    ms = v.mode_set
    grid = product_grid([ms.cutoff] * max(n - 1, 1), power_mode_set(ms, max(n - 1, 1)).cutoff)
    vv = v.values(grid)
    dvals = {0: np.ones_like(vv)}
    for k, f in enumerate(diagram_fields, start=1):
        dvals[k] = eval_on_grid(f.mode_set, f.coeffs, grid)
    acc = np.zeros_like(vv)
    vpow = {0: np.ones_like(vv)}
    for j in range(1, n):
        vpow[j] = vpow[j - 1] * vv
    for k in range(1, n + 1):
        if a[k] == 0:
            continue
        for j in range(0, k):
            d = dvals.get(k - 1 - j)
            if d is None:
                raise ValueError("missing diagram of order %d" % (k - 1 - j))
            acc = acc + k * a[k] * comb(k - 1, j, exact=True) * vpow[j] * d
    out_ms = power_mode_set(ms, max(n - 1, 1))
    return SpectralField(out_ms, grid_coeffs(acc, out_ms))


def etd_step(v, z_fields, z0, dt):
    """One exponential-Euler step: v -> S(dt) v - phi1(dt) F(v, Z_t)."""
    ms = v.mode_set
    F = nonlinearity_F(v, z_fields, z0)
    out = heat_multiplier(ms, dt) * v.coeffs - phi1_multiplier(ms, dt) * F.coeffs
    if not np.all(np.isfinite(out)):
        raise ExplosionError(None)
    return SpectralField(ms, out)


class ExplosionError(RuntimeError):
    def __init__(self, t):
        super().__init__("trajectory exploded at t=%r" % t)
        self.time = t


@dataclass
class SolveResult:
    v: Trajectory
    exploded: bool = False
    explosion_time: float = None


def zero_diagrams(mode_set, n, times, renorm=None):
    """Diagrams of the identically-zero free path: <2> = -R, odd orders 0."""
    path = Trajectory(np.asarray(times, dtype=float),
                      SpectralField(mode_set, batch_shape=(len(times),)),
                      {"start": "zero"})
    return wick_trajectory(path, mode_set, n, renorm)


def solve_remainder(x, Z, config):
    """March the remainder equation over the grid; explosion is recorded,
    never silent.  Z is a ZVector on (at least) the solver grid, or None
    for an identically-zero driving vector apart from Z^(0) = a_n."""
    ms = x.mode_set
    times = config.times()
    n = config.n
    decay = heat_multiplier(ms, config.dt)
    phi1 = phi1_multiplier(ms, config.dt)
    grid = product_grid([ms.cutoff] * n, ms.cutoff)
    stored_t, stored_c = [times[0]], [x.coeffs.copy()]
    v = x.coeffs.copy()
    for i, t in enumerate(times[:-1]):
        vv = eval_on_grid(ms, v, grid)
        acc = np.zeros_like(vv)
        vpow = np.ones_like(vv)
        for j in range(0, n + 1):
            if j == n:
                acc = acc + Z.z0 * vpow if Z is not None else acc + config.a[n] * vpow
            else:
                if Z is not None:
                    zf = Z.trajectories[n - j - 1].at(t)
                    zv = eval_on_grid(zf.mode_set, zf.coeffs, grid,
                                      allow_fold=True)
                    acc = acc + vpow * zv
            if j < n:
                vpow = vpow * vv
        F = grid_coeffs(acc, ms)
        v = decay * v - phi1 * F
        bad = ~np.isfinite(v).all() or np.abs(v).sum(axis=-1).max() > EXPLOSION_THRESHOLD
        if bad:
            return SolveResult(_pack(ms, stored_t, stored_c), True, float(times[i + 1]))
        if (i + 1) % config.store_stride == 0 or i + 1 == len(times) - 1:
            stored_t.append(times[i + 1])
            stored_c.append(v.copy())
    return SolveResult(_pack(ms, stored_t, stored_c))


def _pack(ms, ts, cs):
    return Trajectory(np.array(ts), SpectralField(ms, np.stack(cs)))


def local_existence_time(R, C, theta):
    """T* = (1 / (C (R+1)))^{1/theta}: short-time existence horizon."""
    if C <= 0 or theta <= 0 or R < 0:
        raise ValueError("need C > 0, theta > 0, R >= 0")
    return (1.0 / (C * (R + 1.0))) ** (1.0 / theta)


# ---------------------------------------------------------------------------
# energy diagnostics


@dataclass
class EnergyLedger:
    times: np.ndarray
    p: int
    lp_pow: np.ndarray        # ||v||_p^p
    K: np.ndarray             # ||v^{p-2} |grad v|^2||_{L^1}
    L: np.ndarray             # ||v^{p+n-1}||_{L^1}
    residual: np.ndarray      # defect of the differentiated energy identity

    def rows(self):
        for i, t in enumerate(self.times):
            yield (t, self.lp_pow[i], self.K[i], self.L[i], self.residual[i])


def energy_diagnostics(v, Z, p, n=None, a_n=1.0):
    """Ledger of ||v||_p^p, K, L and the residual of
    (1/p) d/dt ||v||_p^p = -(p-1) K - ||v||_p^p - <F(v,Z), v^{p-1}>."""
    if p % 2 != 0 or p < 2:
        raise ValueError("p must be an even integer >= 2")
    ms = v.fields.mode_set
    if n is None:
        n = Z.n if Z is not None else 3
    grid = next_pow2((p + n + 1) * ms.cutoff)
    times = v.times
    coeffs = v.fields.coeffs
    vals = eval_on_grid(ms, coeffs, grid)
    lp_pow = (vals ** p).mean(axis=(-2, -1))
    gx = eval_on_grid(ms, coeffs * (2j * np.pi * ms.modes[:, 0]), grid)
    gy = eval_on_grid(ms, coeffs * (2j * np.pi * ms.modes[:, 1]), grid)
    K = (vals ** (p - 2) * (gx ** 2 + gy ** 2)).mean(axis=(-2, -1))
    L = (vals ** (p + n - 1)).mean(axis=(-2, -1))
    # right side of the differentiated identity at each time
    rhs = np.zeros_like(lp_pow)
    for i, t in enumerate(times):
        if Z is not None:
            zf = Z.at(t)
            acc = np.zeros((grid, grid))
            vpow = np.ones((grid, grid))
            for j in range(0, n + 1):
                if j == n:
                    acc = acc + Z.z0 * vpow
                else:
                    acc = acc + vpow * eval_on_grid(zf[n - j - 1].mode_set,
                                                    zf[n - j - 1].coeffs, grid)
                if j < n:
                    vpow = vpow * vals[i]
            Fv = acc
        else:
            Fv = a_n * vals[i] ** n
        rhs[i] = (-(p - 1) * K[i] - lp_pow[i]
                  - (Fv * vals[i] ** (p - 1)).mean())
    dldt = np.gradient(lp_pow, times) / p
    return EnergyLedger(times, p, lp_pow, K, L, dldt - rhs)


def comparison_bound(f0, lam, c1, c2, t):
    """Comparison-test bounds for f' <= -c1 f^lam + c2.

    Returns (bound_from_f0, initial-data-free bound); the solution of the
    ODE stays below both for t > 0.
    """
    if lam <= 1:
        raise ValueError("need lam > 1")
    cap = (2.0 * c2 / c1) ** (1.0 / lam) if c2 > 0 else 0.0
    with_f0 = max(f0 / (1.0 + t * f0 ** (lam - 1.0) * (lam - 1.0) * c1 / 2.0)
                  ** (1.0 / (lam - 1.0)), cap)
    free = max(t ** (-1.0 / (lam - 1.0))
               * ((lam - 1.0) * c1 / 2.0) ** (-1.0 / (lam - 1.0)), cap)
    return with_f0, free


def prop_exponents(p, n, alpha):
    """The auxiliary interpolation exponents gamma_i^j and p_i^j = 1/(1-gamma_i^j)
    entering the dissipative a priori bound, made explicit for reporting."""
    out = {}
    for j in range(0, n):
        g = {1: (p + n - 1) * alpha / 2.0,
             2: ((p + j - 1) - p * alpha / 2.0) / (p + n - 2.0),
             3: (p + j - 1.0) * (p + j) * alpha / p,
             4: (p + j) * (1.0 - alpha) / (p + n - 1.0),
             5: (p + j - 1.0) / (p + n - 1.0)}
        out[j] = {i: (gi, 1.0 / (1.0 - gi) if gi < 1 else float("inf"))
                  for i, gi in g.items()}
    return out


def apriori_check(v, Z, p, alpha_prime, n=None):
    """Fit the constant of the initial-condition-free decay bound
    ||v_t||_p^p <= C [ t^{-1/(lam-1)} v (weighted diagram contribution) ]."""
    if n is None:
        n = Z.n if Z is not None else 3
    lam = (p + n - 1.0) / p
    ms = v.fields.mode_set
    grid = next_pow2((p + 1) * ms.cutoff)
    vals = eval_on_grid(ms, v.fields.coeffs, grid)
    lp_pow = (vals ** p).mean(axis=(-2, -1))
    zterm = 0.0
    if Z is not None:
        for k, tr in enumerate(Z.trajectories, start=1):
            mags = np.abs(tr.fields.coeffs).sum(axis=-1)
            w = np.where(tr.times > 0, tr.times ** alpha_prime, 1.0)
            zterm = max(zterm, float((w * mags).max()))
    rep = ExperimentReport("apriori-check")
    fitted = 0.0
    for i, t in enumerate(v.times):
        if t <= 0:
            continue
        bound = max(t ** (-1.0 / (lam - 1.0)), zterm ** (1.0 / lam))
        fitted = max(fitted, lp_pow[i] / bound)
    rep.add("fitted_constant", fitted, note="dissipative a priori bound, lam=%g" % lam)
    ex = prop_exponents(p, n, alpha_prime)
    rep.add("n_exponent_sets", len(ex),
            note="interpolation exponents gamma_i^j, p_i^j=1/(1-gamma_i^j) reported")
    return rep.finish()
