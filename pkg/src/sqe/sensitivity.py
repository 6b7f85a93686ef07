"""Linearized dynamics, stopping times, the smooth norm cutoff, Girsanov
weights and the Monte Carlo gradient-identity (integration by parts)
estimator, plus the two-point total-variation-style experiment.

The gradient identity tested here equates
  E[ DPhi(X_t)(DX_t(w)) chi(|||Z|||_t) ]
with
  E[ Phi(X_t) int u.dW chi ] - E[ Phi(X_t) d+chi(|||Z|||_t)(w) ],
where u = d/ds w are the coordinates of the linearized flow J h stopped at
the diagram stopping time, DX_t(w) solves the forced linearized equation,
and d+ is the one-sided derivative of the time-weighted diagram norm along
the direction (k <k-1> Q_w)_{k=1..n} induced by shifting the free field.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField
from .besov import GridNormEvaluator, smoothstep7
from .noise import Trajectory, hermite_values
from .dynamics import ProcessEngine, RunSpec
from .report import ExperimentReport


# ---------------------------------------------------------------------------
# smooth cutoff


@dataclass
class CutoffSpec:
    r: float = 0.5

    def __post_init__(self):
        if not (0.25 <= self.r <= 1.0):
            raise ValueError("cutoff level r must lie in [1/4, 1]")


def cutoff_chi(zeta, cutoff):
    """chi(zeta): 1 on |zeta| <= r/2, 0 on |zeta| >= r; returns (chi, chi')."""
    r = cutoff.r
    z = np.abs(zeta)
    x = np.clip((z - r / 2.0) / (r / 2.0), 0.0, 1.0)
    val = 1.0 - smoothstep7(x)
    dsdx = 140.0 * x ** 3 * (1.0 - x) ** 3
    dval = -dsdx / (r / 2.0) * np.sign(zeta)
    inside = (z <= r / 2.0) | (z >= r)
    dval = np.where(inside, 0.0, dval)
    return val, dval


def stopping_time(trajectories, cutoff, spec, part=None, oversample=2):
    """First grid time with max_k t^{(k-1)a'} ||Z^(k)_t||_{C^-a} > r."""
    from .besov import BlockNormEvaluator, BesovIndex
    times = trajectories[0].times
    metric = np.zeros(len(times))
    for k, tr in enumerate(trajectories, start=1):
        ev = BlockNormEvaluator(tr.fields.mode_set, part, oversample)
        norms = ev.norm(tr.fields.coeffs, BesovIndex(-spec.alpha))
        w = np.where(times > 0, times, 1.0) ** ((k - 1) * spec.alpha_prime)
        metric = np.maximum(metric, w * norms)
    hit = np.nonzero(metric > cutoff.r)[0]
    return float(times[hit[0]]) if len(hit) else np.inf


# ---------------------------------------------------------------------------
# linearized flow


@dataclass
class LinearFlow:
    start: float
    direction: SpectralField
    trajectory: Trajectory


def solve_linearization(spec, h, s=0.0, store_times=None):
    """J_{s,.} h along the base run of `spec`: dJ/dt = (Delta-1)J - F'(v,Z) J."""
    eng = ProcessEngine(spec.config, spec.seed, spec.replicas)
    times = spec.config.times()
    s_step = int(round(s / spec.config.dt))
    if store_times is None:
        store_times = times[s_step:]
    store = set(np.round(np.asarray(store_times) / spec.config.dt).astype(int))
    ou, v = eng.initial(spec.x)
    J = np.broadcast_to(h.coeffs, v.shape).copy()
    out_t, out_c = [], []
    if s_step in store:
        out_t.append(times[s_step])
        out_c.append(J.copy())
    for i in range(len(times) - 1):
        if i >= s_step:
            ou_full = eng.ms.expand_rep(ou)
            from .spectral import eval_on_grid, grid_coeffs
            ou_vals = eval_on_grid(eng.ms, ou_full, eng.grid)
            v_vals = eval_on_grid(eng.ms, v, eng.grid)
            fp = eng.fprime_values(ou_vals, v_vals)
            J_vals = eval_on_grid(eng.ms, J, eng.grid)
            J = eng.decay * J - eng.phi1 * grid_coeffs(fp * J_vals, eng.ms)
        ou, v, _ = eng.step(ou, v, i)
        if i + 1 in store and i + 1 >= s_step:
            out_t.append(times[i + 1])
            out_c.append(J.copy())
    traj = Trajectory(np.array(out_t), SpectralField(eng.ms, np.stack(out_c)))
    return LinearFlow(s, h, traj)


# ---------------------------------------------------------------------------
# observables with analytic derivatives


@dataclass
class Observable:
    """Phi(x) = g(<x, phi>) with analytic g' for derivative evaluation."""
    name: str
    phi: np.ndarray          # coefficient table of the real test field

    def pairing(self, coeffs):
        return (coeffs * np.conj(self.phi)).sum(axis=-1).real

    def value(self, coeffs):
        return self._g(self.pairing(coeffs))

    def dvalue(self, coeffs, direction):
        return self._gp(self.pairing(coeffs)) * (direction * np.conj(self.phi)).sum(axis=-1).real


def make_observable(name, g_name, phi):
    ob = Observable(name, phi)
    gs = {"sin": (np.sin, np.cos), "cos": (np.cos, lambda z: -np.sin(z)),
          "tanh": (np.tanh, lambda z: 1.0 / np.cosh(z) ** 2),
          "id": (lambda z: z, lambda z: np.ones_like(z))}
    ob._g, ob._gp = gs[g_name]
    return ob


def _coords_pairing(u_rep, w_rep, is_zero):
    """L^2 pairing of a real field with a (complex, reduced) noise increment."""
    terms = np.where(is_zero, u_rep.real * w_rep.real,
                     2.0 * (u_rep * np.conj(w_rep)).real)
    return terms.sum(axis=-1)


# ---------------------------------------------------------------------------
# the gradient-identity estimator


def bel_estimator(Phi, x, h, t, spec, cutoff, norm_stride=4, fd_step=1e-6,
                  novikov_budget=1e4, girsanov_deltas=(0.1, 0.5)):
    """Monte Carlo check of the integration-by-parts gradient identity.

    Returns an ExperimentReport with lhs, rhs, their difference with its
    standard error, and the Girsanov unit-mean diagnostics.
    """
    config = spec.config
    eng = ProcessEngine(config, spec.seed, spec.replicas)
    ms = eng.ms
    R = spec.replicas
    steps = int(round(t / config.dt))
    dt = config.dt
    norm_ev = GridNormEvaluator(eng.grid, config.alpha,
                                max_radius=config.n * ms.cutoff)
    ou, v = eng.initial(x)
    J = np.broadcast_to(h.coeffs, v.shape).copy()
    q = np.zeros_like(v)      # DX_t(w), by Duhamel with forcing G u
    Qw = np.zeros_like(v)     # heat-flow convolution of G u
    stoch_int = np.zeros(R)
    quad = np.zeros(R)
    run_max = np.zeros(R)
    run_max_pert = np.zeros(R)
    stopped = np.zeros(R, dtype=bool)
    from .spectral import eval_on_grid, grid_coeffs
    for i in range(steps):
        ou_full = ms.expand_rep(ou)
        ou_vals = eval_on_grid(ms, ou_full, eng.grid)
        v_vals = eval_on_grid(ms, v, eng.grid)
        fp = eng.fprime_values(ou_vals, v_vals)
        # control u(s): coordinates of J h, frozen to 0 after the stopping time
        u = np.where(stopped[:, None], 0.0, J)
        u_rep = ms.reduce_to_rep(u)
        # linearized flow and its two Duhamel companions
        J_vals = eval_on_grid(ms, J, eng.grid)
        q_vals = eval_on_grid(ms, q, eng.grid)
        FpJ = grid_coeffs(fp * J_vals, ms)
        Fpq = grid_coeffs(fp * q_vals, ms)
        J = eng.decay * J - eng.phi1 * FpJ
        q = eng.decay * q - eng.phi1 * Fpq + eng.phi1 * u
        Qw = eng.decay * Qw + eng.phi1 * u
        # nonlinear pair advances with the keyed noise; keep the increments
        F = grid_coeffs(_f_values(eng, ou_vals, v_vals), ms)
        v = eng.decay * v - eng.phi1 * F
        ou, dw = eng.transition.apply(ou, eng.draws(i))
        stoch_int += _coords_pairing(ms.reduce_to_rep(u), dw, ms.rep_is_zero)
        unorm2 = _coords_pairing(ms.reduce_to_rep(u), ms.reduce_to_rep(u),
                                 ms.rep_is_zero)
        quad += unorm2 * dt
        if (i + 1) % norm_stride == 0 or i + 1 == steps:
            t_now = (i + 1) * dt
            ou_vals = eval_on_grid(ms, ms.expand_rep(ou), eng.grid)
            Qw_vals = eval_on_grid(ms, Qw, eng.grid)
            hv = hermite_values(config.n, ou_vals, eng.renorm)
            metric = np.zeros(R)
            metric_p = np.zeros(R)
            for k in range(1, config.n + 1):
                w = t_now ** ((k - 1) * config.alpha_prime)
                base = norm_ev.norm(hv[k])
                pert = norm_ev.norm(hv[k] + fd_step * k * hv[k - 1] * Qw_vals)
                metric = np.maximum(metric, w * base)
                metric_p = np.maximum(metric_p, w * pert)
            run_max = np.maximum(run_max, metric)
            run_max_pert = np.maximum(run_max_pert, metric_p)
            stopped |= run_max > cutoff.r
    X = eng.x_coeffs(ou, v)
    chi, dchi = cutoff_chi(run_max, cutoff)
    dplus_norm = (run_max_pert - run_max) / fd_step
    lhs_samples = Phi.dvalue(X, q) * chi
    rhs_samples = Phi.value(X) * (stoch_int * chi - dchi * dplus_norm)
    diff = lhs_samples - rhs_samples
    rep = ExperimentReport("bel", seed=spec.seed)
    rep.add("lhs", lhs_samples.mean(), lhs_samples.std(ddof=1) / np.sqrt(R),
            note="semigroup derivative side")
    rep.add("rhs", rhs_samples.mean(), rhs_samples.std(ddof=1) / np.sqrt(R),
            note="stochastic-integral side")
    se = diff.std(ddof=1) / np.sqrt(R)
    rep.check("identity_gap", abs(diff.mean()),
              abs(diff.mean()) < max(4 * se, 1e-12),
              stderr=se, note="gradient identity", tolerance="|gap| < 4 SE")
    max_quad = float(quad.max())
    rep.check("novikov_budget", max_quad, max_quad < novikov_budget,
              note="quadratic variation of the control", tolerance="< budget")
    for d in girsanov_deltas:
        wts = np.exp(-d * stoch_int - 0.5 * d * d * quad)
        se_w = wts.std(ddof=1) / np.sqrt(R)
        rep.check("girsanov_mean_delta%g" % d, wts.mean(),
                  abs(wts.mean() - 1.0) < 4 * se_w, stderr=se_w,
                  note="change-of-measure weight has unit mean",
                  tolerance="|mean-1| < 4 SE")
    rep.add("p_stopped", float(stopped.mean()), note="stopping frequency")
    return rep.finish()


def _f_values(eng, ou_vals, v_vals):
    hv = hermite_values(eng.n, ou_vals, eng.renorm)
    acc = np.zeros_like(v_vals)
    vpow = np.ones_like(v_vals)
    for j in range(eng.n + 1):
        zj = np.zeros_like(v_vals)
        for idx, w in enumerate(eng.fw[j]):
            if w != 0:
                zj = zj + w * hv[idx]
        acc = acc + vpow * zj
        if j < eng.n:
            vpow = vpow * v_vals
    return acc


# ---------------------------------------------------------------------------
# two-point semigroup-gap experiment


def tv_experiment(x, y, t, spec, dictionary, cutoff_levels=(0.3, 0.5, 0.9),
                  norm_stride=4, distance_decades=(1.0, 0.1, 0.01)):
    """Dictionary-sup proxy for the total-variation gap |P_t(x) - P_t(y)|,
    with stopping-time frequencies for a range of cutoff levels and a
    shrinking-distance trend."""
    config = spec.config
    rep = ExperimentReport("tv", seed=spec.seed)
    gaps_by_scale = {}
    for scale in distance_decades:
        y_s = SpectralField(y.mode_set, x.coeffs + scale * (y.coeffs - x.coeffs))
        vals_x, tau_metrics = _terminal_values(x, t, spec, dictionary, norm_stride)
        vals_y, _ = _terminal_values(y_s, t, spec, dictionary, norm_stride)
        gaps = {}
        for name in dictionary:
            gx, gy = vals_x[name], vals_y[name]
            d = gx - gy
            gaps[name] = (d.mean(), d.std(ddof=1) / np.sqrt(len(d)))
        worst = max(gaps, key=lambda k: abs(gaps[k][0]))
        gaps_by_scale[scale] = abs(gaps[worst][0])
        rep.add("gap_scale%g" % scale, abs(gaps[worst][0]), gaps[worst][1],
                note="dictionary sup of semigroup gaps (%s)" % worst)
    ordered = [gaps_by_scale[s] for s in sorted(gaps_by_scale, reverse=True)]
    rep.check("gap_shrinks_with_distance", ordered[-1],
              ordered[-1] <= ordered[0] + 1e-12,
              note="gap trend as the initial points approach",
              tolerance="monotone over decades (coarse)")
    for r in cutoff_levels:
        frac = float((tau_metrics > r / 2.0).mean())
        rep.add("p_tau_exceeded_r%g" % r, frac,
                note="stopping-time frequency at level r/2")
    return rep.finish()


def _terminal_values(x, t, spec, dictionary, norm_stride):
    config = spec.config
    eng = ProcessEngine(config, spec.seed, spec.replicas)
    ms = eng.ms
    steps = int(round(t / config.dt))
    norm_ev = GridNormEvaluator(eng.grid, config.alpha,
                                max_radius=config.n * ms.cutoff)
    ou, v = eng.initial(x)
    run_max = np.zeros(spec.replicas)
    for i in range(steps):
        ou, v, _ = eng.step(ou, v, i)
        if (i + 1) % norm_stride == 0 or i + 1 == steps:
            t_now = (i + 1) * config.dt
            from .spectral import eval_on_grid
            ou_vals = eval_on_grid(ms, ms.expand_rep(ou), eng.grid)
            hv = hermite_values(config.n, ou_vals, eng.renorm)
            for k in range(1, config.n + 1):
                w = t_now ** ((k - 1) * config.alpha_prime)
                run_max = np.maximum(run_max, w * norm_ev.norm(hv[k]))
    X = eng.x_coeffs(ou, v)
    return {name: ob(X) if callable(ob) else ob.value(X)
            for name, ob in dictionary.items()}, run_max
