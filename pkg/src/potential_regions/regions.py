"""Approach regions generated by cones over finite vertex sets.

A region carries two gauges.  ``seed_gauge`` g shapes the cones of the
region as built; ``gauge`` G is the gauge the region is closed under.  For a
freshly built region the two coincide and each vertex contributes its plain
g-cone.  ``complete`` replaces G by r_K and keeps g, so a section of the
completed region is the exact G-closure of the g-cones:

    half-width at t = max over s in [t_v, t] of g(s) - g(t_v) + G(t) - G(s).

The maximum is taken over the endpoints and the gauge table nodes, which is
exact when g - G is quasiconvex (true for t and r_K of the model kernel).
"""
from dataclasses import dataclass, field
from typing import Optional
import csv

import numpy as np

from .errors import DominationError, InvalidParameterError
from .intervals import IntervalUnion
from .kernels import GaugeFunction

EPS = np.finfo(float).eps


@dataclass(frozen=True, order=True)
class Vertex:
    x: float
    t: float

    def __post_init__(self):
        if not self.t > 0.0:
            raise InvalidParameterError(f"vertex height must be positive, got {self.t!r}")


def cone_section(v, r, t):
    """Section at height t of the r-cone with vertex v."""
    if t < v.t:
        return IntervalUnion()
    w = r(t) - r(v.t)
    return IntervalUnion([(v.x - w, v.x + w)])


class _Closure:
    """Running maximum of g(s) - G(s) along the nodes of G's table."""

    def __init__(self, g, G):
        self.g, self.G = g, G
        nodes = G.t[(G.t >= g.t_min) & (G.t <= g.t_max)]
        self.nodes = nodes
        self.phi = g(nodes) - G(nodes)

    def sup(self, lo, t):
        """max of g(s) - G(s) over s in [lo, t], for arrays t >= lo."""
        t = np.asarray(t, dtype=float)
        best = np.maximum(self.g(lo) - self.G(lo), self.g(t) - self.G(t))
        i0 = np.searchsorted(self.nodes, lo, side="right")
        i1 = np.searchsorted(self.nodes, t, side="left") - 1
        inner = i1 >= i0
        if inner.any():
            seg = self.phi[i0:]
            run = np.maximum.accumulate(seg) if len(seg) else seg
            best = np.where(inner, np.maximum(best, run[np.clip(i1 - i0, 0, None)]), best)
        return best


@dataclass(frozen=True, eq=False)
class ApproachRegion:
    gauge: GaugeFunction
    vertices: tuple = ()
    base_aperture: Optional[float] = 3.0
    seed_gauge: Optional[GaugeFunction] = None
    _closure: Optional[_Closure] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        verts = tuple(sorted((v if isinstance(v, Vertex) else Vertex(*v) for v in self.vertices),
                             key=lambda v: (-v.t, v.x)))
        object.__setattr__(self, "vertices", verts)
        if self.seed_gauge is None:
            object.__setattr__(self, "seed_gauge", self.gauge)
        if self.base_aperture is not None and self.base_aperture < 0:
            raise InvalidParameterError("base aperture must be nonnegative")
        if not self.is_seed:
            object.__setattr__(self, "_closure", _Closure(self.seed_gauge, self.gauge))

    @property
    def include_base_cone(self):
        return self.base_aperture is not None

    @property
    def is_seed(self):
        return self.seed_gauge is self.gauge

    def _check(self, t):
        self.gauge.check_range(t)
        if not self.is_seed:
            self.seed_gauge.check_range(t)

    def vertex_halfwidths(self, t):
        """Half-widths of every vertex cone at heights t: array (n_vertices, len(t)).

        NaN marks heights below the vertex.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        self._check(t)
        out = np.full((len(self.vertices), len(t)), np.nan)
        G = self.gauge
        Gt = G(t)
        for k, v in enumerate(self.vertices):
            above = t >= v.t
            if not above.any():
                continue
            ta = t[above]
            if self.is_seed:
                w = Gt[above] - G(v.t)
            else:
                gv = self.seed_gauge(v.t)
                w = Gt[above] - gv + self._closure.sup(v.t, ta)
            out[k, above] = w
        return out

    def base_halfwidth(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.include_base_cone:
            return np.full(len(t), np.nan)
        a = self.base_aperture
        if self.is_seed:
            return a * t
        self._check(t)
        # G-closure of {|y| <= a s}: G(t) + sup_{s <= t} (a s - G(s)), the sup being >= 0
        G = self.gauge
        nodes = G.t
        phi = np.maximum.accumulate(a * nodes - G(nodes))
        i = np.searchsorted(nodes, t, side="left") - 1
        inner = np.where(i >= 0, phi[np.clip(i, 0, None)], 0.0)
        return G(t) + np.maximum(0.0, np.maximum(inner, a * t - G(t)))

    def sections(self, heights):
        """cross_section at each height, as a list of IntervalUnion."""
        heights = np.atleast_1d(np.asarray(heights, dtype=float))
        hv = self.vertex_halfwidths(heights)
        hb = self.base_halfwidth(heights)
        xs = np.array([v.x for v in self.vertices])
        out = []
        for j in range(len(heights)):
            raw = [(x - w, x + w) for x, w in zip(xs, hv[:, j]) if w == w]
            if hb[j] == hb[j]:
                raw.append((-hb[j], hb[j]))
            out.append(IntervalUnion.normalize(raw))
        return out

    def cross_section(self, t):
        return self.sections([t])[0]

    def contains(self, y, t):
        if not t > 0.0:
            return False
        return self.cross_section(t).contains(y)

    def complete(self, rK, probe=None):
        """Smallest rK-closed region containing this one.

        With a probe grid the domination rK(t) - rK(s) >= r(t) - r(s) of the
        current gauge r is checked first; its failure means the swap of cone
        gauges would not contain the original region.
        """
        if probe is not None:
            check_domination(self.gauge, rK, probe)
        return ApproachRegion(rK, self.vertices, self.base_aperture, self.seed_gauge)

    def to_dict(self):
        d = {
            "gauge": self.gauge.to_dict(),
            "vertices": [[v.x, v.t] for v in self.vertices],
            "base_cone": {"enabled": self.include_base_cone,
                          "aperture": self.base_aperture if self.include_base_cone else 0.0},
        }
        if not self.is_seed:
            d["seed_gauge"] = self.seed_gauge.to_dict()
        return d

    @classmethod
    def from_dict(cls, d, gauges=None):
        """Rebuild a region; ``gauges`` may map gauge dicts (as JSON) to instances."""
        def load(gd):
            key = repr(sorted(gd.items()))
            if gauges is not None and key in gauges:
                return gauges[key]
            g = GaugeFunction.from_dict(gd)
            if gauges is not None:
                gauges[key] = g
            return g
        G = load(d["gauge"])
        seed = load(d["seed_gauge"]) if "seed_gauge" in d else G
        base = d.get("base_cone", {})
        a = base.get("aperture", 3.0) if base.get("enabled", True) else None
        return cls(G, tuple(Vertex(x, t) for x, t in d["vertices"]), a, seed)


def cross_section(R, t):
    return R.cross_section(t)


def contains(R, y, t):
    return R.contains(y, t)


def complete(R, rK, probe=None):
    return R.complete(rK, probe)


def check_domination(r, rK, probe):
    probe = np.sort(np.asarray(probe, dtype=float))
    diff = rK(probe) - r(probe)
    drop = np.diff(diff)
    tol = 8.0 * EPS * np.maximum(np.abs(rK(probe[1:])), np.abs(r(probe[1:])))
    bad = np.nonzero(drop < -tol)[0]
    if len(bad):
        k = bad[0]
        raise DominationError(
            f"r_K increment below gauge increment between t={probe[k]:.6g} and "
            f"t={probe[k + 1]:.6g}")


@dataclass(frozen=True)
class RConditionReport:
    worst_violation: float
    worst_height: Optional[float]
    worst_probe: Optional[float]
    n_checks: int
    violations: tuple = ()

    @property
    def satisfied(self):
        return self.worst_violation == 0.0

    def to_dict(self):
        return {"worst_violation": self.worst_violation, "worst_height": self.worst_height,
                "worst_probe": self.worst_probe, "n_checks": self.n_checks,
                "violations": [list(v) for v in self.violations]}


def check_r_condition(R, r, probe):
    """Check that the r-cone of every sampled point of R stays inside R.

    Sampled heights are the probe heights plus the vertex heights inside the
    probe range; for a section component [lo, hi] at height t, the r-cones of
    its points fill [lo - d, hi + d] at height s > t, d = r(s) - r(t).  The
    reported violation is the length of that interval outside R(s).  Excess
    below a few ulps of the coordinates involved is rounding and counts as 0.
    """
    probe = np.unique(np.asarray(probe, dtype=float))
    r.check_range(probe)
    vt = np.array([v.t for v in R.vertices])
    vt = vt[(vt >= probe[0]) & (vt <= probe[-1])]
    heights = np.unique(np.concatenate([probe, vt]))
    secs = dict(zip(heights, R.sections(heights)))
    r_h = dict(zip(heights, r(heights)))
    worst, at, n = 0.0, (None, None), 0
    per = []
    for t in heights:
        src = secs[t]
        if not len(src):
            continue
        local = 0.0
        for s in probe[probe > t]:
            d = r_h[s] - r_h[t]
            grown = IntervalUnion.normalize((lo - d, hi + d) for lo, hi in src)
            ex = secs[s].excess(grown)
            scale = max(max(abs(a), abs(b)) for a, b in grown) + d
            n += 1
            if ex <= 16.0 * EPS * scale:
                continue
            local = max(local, ex)
            if ex > worst:
                worst, at = ex, (float(t), float(s))
        per.append((float(t), local))
    return RConditionReport(worst, at[0], at[1], n, tuple(per))


def section_profile(R, heights, r):
    """Rows (t, |R(t)|, |R(t)| / r(t))."""
    heights = np.asarray(heights, dtype=float)
    meas = np.array([s.measure() for s in R.sections(heights)])
    return [(float(t), float(m), float(m / rt)) for t, m, rt in zip(heights, meas, r(heights))]


def write_profile_csv(path, rows, config_hash=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        w.writerow(["t", "measure", "ratio"])
        for row in rows:
            w.writerow([repr(v) for v in row])
