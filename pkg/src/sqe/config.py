"""Flat key=value experiment configuration: parsing, validation, defaults.

The format is one `key = value` pair per line, `#` comments, lists written
as [a, b, c].  Unknown keys are carried in `extra` for experiment-specific
knobs.  All solver-level constraints are revalidated here so a bad file
fails at parse time with a message naming the violated constraint.
"""

from dataclasses import dataclass, field as dc_field

from .solver import SolverConfig

EXPERIMENT_NAMES = (
    "wick-covariance", "restart-consistency", "dissipation", "moments",
    "linearization", "bel", "tv", "gibbs-compare", "mixing", "control",
    "support-probe", "besov-suite", "kernel-bounds",
)

SOLVER_KEYS = ("n", "a", "cutoff", "dt", "horizon", "alpha0", "alpha",
               "alpha_prime", "beta", "gamma", "store_stride")
TOP_KEYS = ("replicas", "seed", "out")


class ConfigError(Exception):
    pass


def parse_scalar(text):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [parse_scalar(v) for v in inner.split(",")] if inner else []
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


@dataclass
class ExperimentConfig:
    experiment: str
    solver: SolverConfig
    replicas: int = 100
    seed: int = 0
    out_dir: str = None
    extra: dict = dc_field(default_factory=dict)
    explicit: set = dc_field(default_factory=set)

    def echo(self):
        """Flat dict of every effective setting (defaults included)."""
        d = {"experiment": self.experiment, "replicas": self.replicas,
             "seed": self.seed}
        for k in SOLVER_KEYS:
            v = getattr(self.solver, k)
            d[k] = list(v) if isinstance(v, tuple) else v
        d.update(self.extra)
        return d


def read_flat_file(path):
    out = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("line %d: expected key = value" % ln)
            key, val = line.split("=", 1)
            out[key.strip()] = parse_scalar(val)
    return out


def parse_config(experiment, path=None, overrides=None):
    """Build a validated ExperimentConfig from a file and/or flag overrides."""
    if experiment not in EXPERIMENT_NAMES:
        raise ConfigError("unknown experiment %r (choose from %s)"
                          % (experiment, ", ".join(EXPERIMENT_NAMES)))
    raw = {}
    if path is not None:
        try:
            raw.update(read_flat_file(path))
        except OSError as e:
            raise ConfigError("cannot read config: %s" % e)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    explicit = set(raw)
    solver_kwargs = {k: raw.pop(k) for k in list(raw) if k in SOLVER_KEYS}
    if "a" in solver_kwargs:
        solver_kwargs["a"] = tuple(float(v) for v in solver_kwargs["a"])
    if "n" not in solver_kwargs and "a" in solver_kwargs:
        solver_kwargs["n"] = len(solver_kwargs["a"]) - 1
    replicas = raw.pop("replicas", 100)
    seed = raw.pop("seed", 0)
    out_dir = raw.pop("out", None)
    if not isinstance(replicas, int) or replicas < 1:
        raise ConfigError("replicas must be a positive integer")
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    try:
        solver = SolverConfig(**solver_kwargs)
    except TypeError as e:
        raise ConfigError("bad solver key: %s" % e)
    except ValueError as e:
        raise ConfigError(str(e))
    return ExperimentConfig(experiment, solver, replicas, seed, out_dir,
                            raw, explicit)


def solver_with(config, **changes):
    """A SolverConfig equal to config.solver with the given fields replaced,
    never overriding a key the user set explicitly."""
    kwargs = {k: getattr(config.solver, k) for k in SOLVER_KEYS}
    for k, v in changes.items():
        if k not in config.explicit:
            kwargs[k] = v
    return SolverConfig(**kwargs)
