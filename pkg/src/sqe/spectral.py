"""Fourier representation of real fields on the 2-torus.

Fields are trigonometric polynomials f(z) = sum_m fhat(m) e_m(z) with
e_m(z) = exp(2*pi*i m.z), indexed by integer lattice modes inside a
Euclidean ball |m| < cutoff.  Real fields satisfy the Hermitian symmetry
fhat(-m) = conj(fhat(m)).  Coefficient arrays may carry leading batch
dimensions (replicas, times); every operation broadcasts over them.
"""

import numpy as np

TWO_PI_SQ = 4.0 * np.pi ** 2


def next_pow2(x):
    """Smallest power of two >= max(x, 4)."""
    n = 4
    while n < x:
        n *= 2
    return n


class ModeSet:
    """Integer lattice modes m in Z^2 with Euclidean |m| < cutoff.

    Modes are kept in a canonical lexicographic order by (m1, m2), which
    makes mode indices (and hence noise keys) reproducible across runs.
    """

    def __init__(self, cutoff):
        if cutoff < 1:
            raise ValueError("cutoff must be >= 1 (the zero mode needs |0| < cutoff)")
        self.cutoff = float(cutoff)
        r = int(np.ceil(cutoff))
        m1, m2 = np.mgrid[-r:r + 1, -r:r + 1]
        keep = m1 ** 2 + m2 ** 2 < self.cutoff ** 2
        modes = np.stack([m1[keep], m2[keep]], axis=-1)
        order = np.lexsort((modes[:, 1], modes[:, 0]))
        self.modes = modes[order]
        self.n_modes = len(self.modes)
        self._index = {(int(a), int(b)): i for i, (a, b) in enumerate(self.modes)}
        self.conj_index = np.array([self._index[(-int(a), -int(b))]
                                    for a, b in self.modes])
        self.abs2 = (self.modes ** 2).sum(axis=1).astype(float)
        # dissipation rate I_m = 1 + 4 pi^2 |m|^2 of the generator Delta - 1
        self.i_m = 1.0 + TWO_PI_SQ * self.abs2
        self.zero_index = self._index[(0, 0)]
        # representative half-lattice: (0,0) plus m with m1>0 or (m1==0, m2>0)
        rep = (self.modes[:, 0] > 0) | ((self.modes[:, 0] == 0) & (self.modes[:, 1] > 0))
        rep[self.zero_index] = True
        self.rep_indices = np.nonzero(rep)[0]
        self.n_rep = len(self.rep_indices)
        self.rep_is_zero = self.rep_indices == self.zero_index
        self.rep_conj_index = self.conj_index[self.rep_indices]
        self.max_coord = int(np.abs(self.modes).max())

    def index_of(self, m):
        return self._index[(int(m[0]), int(m[1]))]

    def contains(self, m):
        return (int(m[0]), int(m[1])) in self._index

    def __len__(self):
        return self.n_modes

    def __eq__(self, other):
        return isinstance(other, ModeSet) and self.cutoff == other.cutoff

    def __hash__(self):
        return hash(("ModeSet", self.cutoff))

    def basis_coeffs(self, m, batch_shape=()):
        """Coefficients of the real field e_m + e_{-m} (or e_0 when m = 0)."""
        c = np.zeros(batch_shape + (self.n_modes,), dtype=complex)
        i = self.index_of(m)
        c[..., i] = 1.0
        j = self.conj_index[i]
        if j != i:
            c[..., j] = 1.0
        return c

    def expand_rep(self, rep_coeffs):
        """Hermitian-symmetrize reduced coefficients into full ones."""
        out = np.zeros(rep_coeffs.shape[:-1] + (self.n_modes,), dtype=complex)
        out[..., self.rep_indices] = rep_coeffs
        out[..., self.rep_conj_index] = np.conj(rep_coeffs)
        # the two scatters both hit the zero mode; keep the direct value
        out[..., self.zero_index] = rep_coeffs[..., self.rep_is_zero.argmax()].real
        return out

    def reduce_to_rep(self, coeffs):
        return coeffs[..., self.rep_indices]


class SpectralField:
    """A (possibly batched) coefficient table over a ModeSet."""

    def __init__(self, mode_set, coeffs=None, batch_shape=()):
        self.mode_set = mode_set
        if coeffs is None:
            coeffs = np.zeros(batch_shape + (mode_set.n_modes,), dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape[-1] != mode_set.n_modes:
            raise ValueError("coefficient length does not match mode set")
        self.coeffs = coeffs

    @property
    def batch_shape(self):
        return self.coeffs.shape[:-1]

    def copy(self):
        return SpectralField(self.mode_set, self.coeffs.copy())

    def hermitian_defect(self):
        return np.abs(self.coeffs - np.conj(self.coeffs[..., self.mode_set.conj_index])).max()

    def is_hermitian(self, tol=1e-10):
        return self.hermitian_defect() <= tol

    def __add__(self, other):
        _check_same(self, other)
        return SpectralField(self.mode_set, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self, other)
        return SpectralField(self.mode_set, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.mode_set, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.mode_set, -self.coeffs)

    def pair(self, other):
        """L^2 inner product <f, g> = sum_m fhat(m) conj(ghat(m))."""
        _check_same(self, other)
        return (self.coeffs * np.conj(other.coeffs)).sum(axis=-1).real

    def l2_norm(self):
        return np.sqrt((np.abs(self.coeffs) ** 2).sum(axis=-1))

    def values(self, grid=None):
        """Real-space samples on a uniform grid (real part; Hermitian input)."""
        if grid is None:
            grid = next_pow2(2 * self.mode_set.cutoff)
        return eval_on_grid(self.mode_set, self.coeffs, grid)


def _check_same(f, g):
    if f.mode_set is not g.mode_set and f.mode_set != g.mode_set:
        raise ValueError("fields live on different mode sets")


def make_mode_set(cutoff):
    return ModeSet(cutoff)


def eval_on_grid(mode_set, coeffs, grid, allow_fold=False):
    """Evaluate sum_m c_m e_m at the grid points (j/N, k/N), real part.

    allow_fold skips the band guard: callers that only read products back
    onto a smaller mode set may use a grid that folds high modes, as long
    as their band accounting keeps the folded modes outside the read band.
    """
    if grid <= 2 * mode_set.max_coord and not allow_fold:
        raise ValueError("grid too small for the mode set band")
    spec = np.zeros(coeffs.shape[:-1] + (grid, grid), dtype=complex)
    m1 = np.mod(mode_set.modes[:, 0], grid)
    m2 = np.mod(mode_set.modes[:, 1], grid)
    spec[..., m1, m2] = coeffs
    vals = np.fft.ifft2(spec) * grid * grid
    return vals.real


def grid_coeffs(values, mode_set):
    """Read the mode_set coefficients off grid samples (exact if band fits)."""
    grid = values.shape[-1]
    spec = np.fft.fft2(values) / (grid * grid)
    m1 = np.mod(mode_set.modes[:, 0], grid)
    m2 = np.mod(mode_set.modes[:, 1], grid)
    return spec[..., m1, m2]


def product_grid(factor_cutoffs, out_cutoff):
    """Grid size for an alias-free truncated product.

    Aliasing folds mode q to q - N; with N >= sum of factor bands plus the
    read band every folded mode lands outside the read band.
    """
    return next_pow2(int(np.ceil(sum(factor_cutoffs) + out_cutoff)))


def multiply_fields(fields, out_mode_set):
    """Exact truncated pointwise product of fields on arbitrary mode sets."""
    grid = product_grid([f.mode_set.cutoff for f in fields], out_mode_set.cutoff)
    vals = fields[0].values(grid)
    for f in fields[1:]:
        vals = vals * f.values(grid)
    return SpectralField(out_mode_set, grid_coeffs(vals, out_mode_set))


def dealiased_product(fields, pad_factor=None):
    """Exact truncated product of fields sharing one ModeSet.

    The result coefficient at mode m is the full convolution of the factors
    restricted back to the shared ModeSet, computed by zero-padded real-space
    multiplication.  pad_factor must be at least (k+1)/2 for k factors.
    """
    if not fields:
        raise ValueError("need at least one factor")
    ms = fields[0].mode_set
    for f in fields[1:]:
        _check_same(fields[0], f)
    k = len(fields)
    if pad_factor is None:
        pad_factor = (k + 1) / 2
    if pad_factor < (k + 1) / 2:
        raise ValueError("pad_factor below (k+1)/2 would alias the product")
    grid = next_pow2(2 * pad_factor * ms.cutoff)
    vals = fields[0].values(grid)
    for f in fields[1:]:
        vals = vals * f.values(grid)
    return SpectralField(ms, grid_coeffs(vals, ms))


def heat_semigroup(f, t):
    """S(t) = e^{-t} e^{t Delta}: per-mode multiplier exp(-I_m t)."""
    if t < 0:
        raise ValueError("heat semigroup needs t >= 0")
    return SpectralField(f.mode_set, f.coeffs * np.exp(-f.mode_set.i_m * t))


def heat_multiplier(mode_set, t):
    return np.exp(-mode_set.i_m * t)


def phi1_multiplier(mode_set, dt):
    """phi_1(dt)(m) = (1 - exp(-I_m dt)) / I_m, the exponential-Euler weight."""
    return -np.expm1(-mode_set.i_m * dt) / mode_set.i_m


def power_mode_set(mode_set, k):
    """Mode set holding k-fold products of fields from mode_set exactly."""
    if k <= 1:
        return mode_set
    r_max = np.sqrt(mode_set.abs2.max())
    return ModeSet(max(1.0, k * r_max + 0.5))


# ---------------------------------------------------------------------------
# discrete kernels on Z^2 and their convolution bounds


class Kernel:
    """Symmetric positive kernel table on the window {|m|_inf <= M}."""

    def __init__(self, table, decay_exponent):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] % 2 == 0:
            raise ValueError("kernel table must be a square odd-sized array")
        self.table = table
        self.window = table.shape[0] // 2
        self.decay_exponent = float(decay_exponent)

    def coords(self):
        M = self.window
        return np.mgrid[-M:M + 1, -M:M + 1]

    def abs2(self):
        m1, m2 = self.coords()
        return m1 ** 2 + m2 ** 2

    def at(self, m):
        M = self.window
        return self.table[m[0] + M, m[1] + M]

    def is_symmetric(self, tol=1e-12):
        return np.abs(self.table - self.table[::-1, ::-1]).max() <= tol


def power_kernel(gamma, window):
    """K^gamma(m) = 1 / (1 + |m|^2)^{1-gamma} on {|m|_inf <= window}."""
    m1, m2 = np.mgrid[-window:window + 1, -window:window + 1]
    return Kernel((1.0 + m1 ** 2 + m2 ** 2) ** (gamma - 1.0), 1.0 - gamma)


def kernel_convolve(k1, k2, tail_cutoff=None, tail_side="gt"):
    """(K1 * K2)(m) = sum_l K1(m-l) K2(l) over K2's window.

    With tail_cutoff N the l-sum is restricted to |l| > N (tail_side "gt")
    or |l| <= N (tail_side "le").  Terms with m-l outside K1's window are
    dropped; the caller gets the truncation tail estimate separately via
    kernel_tail_estimate.
    """
    from scipy.signal import fftconvolve
    t2 = k2.table
    if tail_cutoff is not None:
        mask = k2.abs2() <= tail_cutoff ** 2
        t2 = np.where(mask if tail_side == "le" else ~mask, t2, 0.0)
    full = fftconvolve(k1.table, t2, mode="full")
    M = min(k1.window, k2.window)
    c = full.shape[0] // 2
    out = full[c - M:c + M + 1, c - M:c + M + 1]
    return Kernel(np.maximum(out, 0.0), k1.decay_exponent + k2.decay_exponent - 1.0)


def kernel_tail_estimate(k1, k2):
    """Crude bound on the mass dropped outside the summation window."""
    edge1 = max(k1.table[0].max(), k1.table[-1].max(),
                k1.table[:, 0].max(), k1.table[:, -1].max())
    return edge1 * k2.table.sum()


def verify_kernel_bound(conv, alpha, beta, sample_modes, tail_reference=None):
    """Fitted constant C in  conv(m) <= C * envelope(m).

    envelope(m) = (1+|m|^2)^{-(alpha+beta-1)}, with the log correction
    (log|m| v 1)/(1+|m|^2) when alpha = beta = 1.  When tail_reference = N is
    given (for a tail convolution evaluated at |m| < N) the envelope is the
    constant (1+N^2)^{-(alpha+beta-1)}.
    """
    if alpha + beta - 1.0 <= 0:
        raise ValueError("need alpha + beta > 1")
    best = 0.0
    for m in sample_modes:
        a2 = float(m[0] ** 2 + m[1] ** 2)
        val = conv.at(m)
        if tail_reference is not None:
            env = (1.0 + tail_reference ** 2) ** (-(alpha + beta - 1.0))
        elif alpha == 1.0 and beta == 1.0:
            env = max(0.5 * np.log(max(a2, 1.0)), 1.0) / (1.0 + a2)
        else:
            env = (1.0 + a2) ** (-(alpha + beta - 1.0))
        best = max(best, val / env)
    return best
