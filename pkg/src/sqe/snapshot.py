"""Field checkpoints in a compact binary format, and the CSV emitters
shared by the experiment harness.

Binary snapshot layout (little-endian):
  magic   4 bytes  b"SQF1"
  version uint32
  n       uint32   polynomial degree recorded with the checkpoint
  cutoff  float64  mode-set cutoff
  grid    uint32   suggested evaluation grid length
  count   uint64   number of complex coefficients that follow
  data    count * complex128
"""

import csv
import os
import struct
import tempfile

import numpy as np

from .spectral import ModeSet, SpectralField, next_pow2

MAGIC = b"SQF1"
VERSION = 1
_HEADER = struct.Struct("<4sIIdIQ")


def save_snapshot(path, field, n=3):
    coeffs = np.ascontiguousarray(field.coeffs, dtype=np.complex128)
    header = _HEADER.pack(MAGIC, VERSION, int(n), float(field.mode_set.cutoff),
                          next_pow2(2 * field.mode_set.cutoff), coeffs.size)
    _atomic_write(path, header + coeffs.tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    magic, version, n, cutoff, grid, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError("not a field snapshot (bad magic)")
    if version != VERSION:
        raise ValueError("unsupported snapshot version %d" % version)
    data = np.frombuffer(blob, dtype=np.complex128, offset=_HEADER.size)
    if data.size != count:
        raise ValueError("truncated snapshot")
    ms = ModeSet(cutoff)
    coeffs = data.reshape((-1, ms.n_modes)) if count != ms.n_modes else data
    meta = {"n": n, "cutoff": cutoff, "grid": grid}
    return SpectralField(ms, coeffs.copy()), meta


def _atomic_write(path, payload):
    """Write bytes (or text) so readers never observe a partial file."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    mode = "wb" if isinstance(payload, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=d)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """Atomic CSV emission with a deterministic body."""
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["%.12g" % v if isinstance(v, float) else v for v in row])
    _atomic_write(path, buf.getvalue())


def diagram_rows(diagrams):
    """Tidy rows (time, k, m1, m2, mode_re, mode_im) of a DiagramSet."""
    for k, tr in enumerate(diagrams.trajectories, start=1):
        ms = tr.fields.mode_set
        for i, t in enumerate(tr.times):
            c = tr.fields.coeffs[i]
            flat = c.reshape(-1, c.shape[-1])[0] if c.ndim > 1 else c
            for j, m in enumerate(ms.modes):
                yield (float(t), k, int(m[0]), int(m[1]),
                       float(flat[j].real), float(flat[j].imag))


DIAGRAM_HEADER = ("time", "k", "m1", "m2", "mode_re", "mode_im")
ENERGY_HEADER = ("time", "lp_norm_p", "K", "L", "identity_residual")
SURVEY_HEADER = ("time", "x_id", "p", "weighted_moment", "stderr", "replicas")
SENSITIVITY_HEADER = ("lhs", "rhs", "se_lhs", "se_rhs", "p_tau_exceeded")
GIBBS_HEADER = ("sample_id", "observable", "value")
MIXING_HEADER = ("t", "observable", "gap", "se")
PROBE_HEADER = ("m", "res1", "res2", "res3")
INEQ_HEADER = ("inequality_id", "fitted_constant", "samples", "verdict")
