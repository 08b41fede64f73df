"""Inductive choice of levels t_k, counts N_k and vertex rows."""
from dataclasses import dataclass, field
import csv

import numpy as np

from .errors import (GaugeNotTangentialError, InvalidParameterError, OutOfRangeError,
                     TableExhaustedError)
from .kernels import GaugeFunction, RadialKernel
from .regions import ApproachRegion, Vertex

SCHEDULES = ("linear", "constant")


@dataclass(frozen=True, eq=False)
class ConstructionConfig:
    kernel: RadialKernel
    gauge: GaugeFunction
    k_max: int = 6
    N_cap_constant: float = 1.0
    t1_initial: float = 1e-4
    N1: int = 2
    n_schedule: str = "linear"
    base_aperture: float = 3.0

    def __post_init__(self):
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise InvalidParameterError(f"k_max must be a positive integer, got {self.k_max!r}")
        if not self.N_cap_constant > 0:
            raise InvalidParameterError("slow-growth constant C_N must be positive")
        if not self.t1_initial > 0:
            raise InvalidParameterError("t1_initial must be positive")
        if int(self.N1) != self.N1 or self.N1 < 1:
            raise InvalidParameterError("N1 must be a positive integer")
        if self.n_schedule not in SCHEDULES:
            raise InvalidParameterError(f"unknown N schedule {self.n_schedule!r}")

    def target_N(self, k):
        return self.N1 + (k - 1) if self.n_schedule == "linear" else self.N1


@dataclass(frozen=True)
class Level:
    k: int
    t: float
    N: int
    r: float
    points: tuple
    residuals: dict = field(default_factory=dict)

    @property
    def gamma(self):
        return self.N * self.r

    @property
    def min_residual(self):
        return min(self.residuals.values())

    def to_dict(self):
        return {"k": self.k, "t": self.t, "N": self.N, "r": self.r, "gamma": self.gamma,
                "points": list(self.points), "residuals": dict(self.residuals)}


@dataclass(frozen=True)
class ConstructionTrace:
    levels: tuple = ()

    def __len__(self):
        return len(self.levels)

    @property
    def heights(self):
        return [lv.t for lv in self.levels]

    @property
    def counts(self):
        return [lv.N for lv in self.levels]

    def vertices(self):
        return [Vertex(x, lv.t) for lv in self.levels for x in lv.points]

    def to_dict(self):
        return {"levels": [lv.to_dict() for lv in self.levels]}

    def write_csv(self, path, config_hash=None):
        with open(path, "w", newline="") as fh:
            if config_hash:
                fh.write(f"# config_hash={config_hash}\n")
            w = csv.writer(fh)
            w.writerow(["k", "t_k", "N_k", "r_t_k", "gamma_t_k", "min_residual"])
            for lv in self.levels:
                w.writerow([lv.k, repr(lv.t), lv.N, repr(lv.r), repr(lv.gamma),
                            repr(lv.min_residual)])


def _halvings(t, gauge):
    while True:
        t = t * 0.5
        if t < gauge.t_min:
            return
        yield t


def choose_start(cfg):
    """Largest t1_initial * 2**-m with r(t1) > 3 t1 (and t1 N1 < r(t1))."""
    r = cfg.gauge
    factor = max(3.0, float(cfg.N1))
    t = cfg.t1_initial
    if t > r.t_max:
        raise OutOfRangeError(t, r.t_min, r.t_max)
    while t >= r.t_min:
        if r(t) > factor * t:
            return t
        t *= 0.5
    raise GaugeNotTangentialError(
        f"r(t) <= {factor:g} t at every dyadic height below {cfg.t1_initial:.6g} "
        "within the gauge table")


def level_residuals(cfg, t, N, prev=None):
    """Slack of each constraint at (t, N); positive means satisfied."""
    r = cfg.gauge(t)
    res = {"eq_cond": r - t * N}
    if prev is None:
        res["start"] = r - 3.0 * t
    else:
        res["con"] = prev.t + t - N * r
        res["slow_growth"] = cfg.N_cap_constant - N * cfg.kernel.integral(t, prev.gamma)
    return res


def _row(t, N, r):
    gamma = N * r
    return tuple(gamma - i * r for i in range(N))


def choose_next_level(cfg, trace, target_N):
    """Largest t_{k-1} * 2**-m, m >= 1, meeting all level constraints with N_k = target_N."""
    if not len(trace):
        raise InvalidParameterError("trace must contain the first level")
    prev = trace.levels[-1]
    if target_N < prev.N:
        raise InvalidParameterError("target N must not decrease")
    failed = {}
    for t in _halvings(prev.t, cfg.gauge):
        res = level_residuals(cfg, t, target_N, prev)
        if all(v > 0 for v in res.values()):
            r = cfg.gauge(t)
            return Level(prev.k + 1, t, int(target_N), r, _row(t, target_N, r), res)
        for name, v in res.items():
            if v <= 0:
                failed[name] = failed.get(name, 0) + 1
    worst = max(failed, key=failed.get) if failed else "table"
    raise TableExhaustedError(
        f"no admissible level {prev.k + 1} with N={target_N} above t={cfg.gauge.t_min:.3g}; "
        f"most often violated: {worst}")


def build(cfg):
    """Run the construction; returns (trace, region Ω with nontangential cones)."""
    t1 = choose_start(cfg)
    N1 = int(cfg.target_N(1))
    r1 = cfg.gauge(t1)
    levels = [Level(1, t1, N1, r1, _row(t1, N1, r1), level_residuals(cfg, t1, N1))]
    trace = ConstructionTrace(tuple(levels))
    for k in range(2, cfg.k_max + 1):
        lv = choose_next_level(cfg, trace, cfg.target_N(k))
        trace = ConstructionTrace(trace.levels + (lv,))
    ident = GaugeFunction.identity(cfg.gauge.t_min, cfg.gauge.t_max, len(cfg.gauge.t))
    region = ApproachRegion(ident, tuple(trace.vertices()), cfg.base_aperture)
    return trace, region


def disjointness_margins(trace, region):
    """Distance from each earlier row's points to the section of row k's cones.

    Returns one margin per level k >= 2 (the minimum over earlier rows); a
    positive margin means the cones over row k miss every earlier point.
    """
    out = []
    g = region.seed_gauge
    for k in range(1, len(trace.levels)):
        row = trace.levels[k]
        margin = np.inf
        for lv in trace.levels[:k]:
            w = g(lv.t) - g(row.t)
            lo, hi = min(row.points) - w, max(row.points) + w
            for x in lv.points:
                margin = min(margin, max(lo - x, x - hi))
        out.append(float(margin))
    return out
