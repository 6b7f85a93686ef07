"""Structured experiment reports: metrics, verdicts, serialization."""

import hashlib
import json
import time
from dataclasses import dataclass, field, asdict


@dataclass
class Metric:
    name: str
    estimate: float
    stderr: float = float("nan")
    verdict: str = "info"          # pass | fail | info
    note: str = ""                 # which claim this metric checks
    tolerance: str = ""            # the declared acceptance rule


def config_hash(config):
    """Reproducible hash of a canonically serialized flat config dict."""
    lines = sorted("%s=%r" % (k, config[k]) for k in config)
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    experiment: str
    config: dict = field(default_factory=dict)
    seed: int = 0
    metrics: list = field(default_factory=list)
    wall_time: float = 0.0
    exploded: bool = False

    def __post_init__(self):
        self._t0 = time.time()

    def add(self, name, estimate, stderr=float("nan"), verdict="info",
            note="", tolerance=""):
        self.metrics.append(Metric(name, float(estimate), float(stderr),
                                   verdict, note, tolerance))

    def check(self, name, estimate, ok, stderr=float("nan"), note="", tolerance=""):
        self.add(name, estimate, stderr, "pass" if ok else "fail", note, tolerance)
        return bool(ok)

    def finish(self):
        self.wall_time = time.time() - self._t0
        return self

    @property
    def hash(self):
        return config_hash(self.config)

    def passed(self):
        return all(m.verdict != "fail" for m in self.metrics)

    def exit_code(self):
        if self.exploded:
            return 3
        return 0 if self.passed() else 1

    def to_json(self):
        d = {"experiment": self.experiment, "config": self.config,
             "seed": self.seed, "config_hash": self.hash,
             "wall_time": self.wall_time, "exploded": self.exploded,
             "metrics": [asdict(m) for m in self.metrics]}
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        rep = cls(d["experiment"], d["config"], d["seed"])
        rep.wall_time = d["wall_time"]
        rep.exploded = d["exploded"]
        for m in d["metrics"]:
            rep.metrics.append(Metric(**m))
        return rep

    def summary(self):
        lines = ["experiment: %s  (seed %d, config %s, %.1fs)"
                 % (self.experiment, self.seed, self.hash, self.wall_time)]
        for m in self.metrics:
            se = "" if m.stderr != m.stderr else " +- %.3g" % m.stderr
            tol = ("  [%s]" % m.tolerance) if m.tolerance else ""
            lines.append("  %-4s %-38s %.6g%s  (%s)%s"
                         % (m.verdict.upper(), m.name, m.estimate, se, m.note, tol))
        lines.append("overall: %s" % ("PASS" if self.passed() else "FAIL"))
        return "\n".join(lines)
