"""Maximal operators, kernel splitting and weak-type statistics."""
from dataclasses import dataclass
import csv
import math
from typing import Optional

import numpy as np
from scipy import integrate

from . import _backend
from .errors import ConsistencyError, CoverageError, InvalidParameterError
from .kernels import RadialKernel, smoothed_kernel

KINDS = ("box_atom", "point_mass_limit", "constant")


@dataclass(frozen=True)
class TestFunction:
    """f = K * F with F a box atom, a point mass, or the constant sanity input."""
    __test__ = False

    kind: str
    kernel: Optional[RadialKernel] = None
    center: float = 0.0
    half_width: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown test function kind {self.kind!r}")
        if not self.mass > 0:
            raise InvalidParameterError("test function mass must be positive")
        if self.kind == "box_atom" and not self.half_width > 0:
            raise InvalidParameterError("box atom needs a positive half-width")
        if self.kind != "constant" and self.kernel is None:
            raise InvalidParameterError("atoms need the kernel K of f = K * F")

    @classmethod
    def box_atom(cls, kernel, center, half_width, mass=1.0):
        return cls("box_atom", kernel, float(center), float(half_width), float(mass))

    @classmethod
    def point_mass(cls, kernel, center=0.0, mass=1.0):
        return cls("point_mass_limit", kernel, float(center), 0.0, float(mass))

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", None, 0.0, 0.0, float(value))

    @property
    def input_l1(self):
        """||F||_1 for atoms; for the constant input, its value."""
        return self.mass

    def density(self, edges):
        """Cell averages of F on a grid with the given edges."""
        edges = np.asarray(edges, dtype=float)
        if self.kind == "constant":
            return np.full(len(edges) - 1, self.mass)
        if self.kind == "point_mass_limit":
            raise InvalidParameterError("a point mass has no density")
        lo, hi = self.center - self.half_width, self.center + self.half_width
        overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        return self.mass / (2 * self.half_width) * overlap / np.diff(edges)


@dataclass(frozen=True, eq=False)
class Field:
    """u(y, t) = (P_t * f)(y) on a tensor grid; rows are heights."""
    heights: np.ndarray
    coords: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        h = np.ascontiguousarray(self.heights, dtype=float)
        y = np.ascontiguousarray(self.coords, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (len(h), len(y)):
            raise InvalidParameterError("field values must have shape (heights, coords)")
        if np.any(np.diff(y) <= 0):
            raise InvalidParameterError("field coordinates must be strictly increasing")
        for name, arr in (("heights", h), ("coords", y), ("values", v)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def row_masses(self):
        return integrate.trapezoid(self.values, self.coords, axis=1)

    def write_csv(self, path, config_hash=None):
        with open(path, "w", newline="") as fh:
            if config_hash:
                fh.write(f"# config_hash={config_hash}\n")
            w = csv.writer(fh)
            w.writerow(["t", "y", "value"])
            for t, row in zip(self.heights, self.values):
                for y, v in zip(self.coords, row):
                    w.writerow([repr(float(t)), repr(float(y)), repr(float(v))])


def poisson_extend(f, heights, coords, atol=1e-8, rtol=1e-6):
    """Field of P_t * f with f = K * F, evaluated as (P_t * K) * F."""
    heights = np.atleast_1d(np.asarray(heights, dtype=float))
    coords = np.atleast_1d(np.asarray(coords, dtype=float))
    if not len(heights) or not len(coords) or np.any(heights <= 0):
        raise InvalidParameterError("need nonempty grids and positive heights")
    if f.kind == "constant":
        return Field(heights, coords, np.full((len(heights), len(coords)), f.mass))
    dist, inverse = np.unique(np.abs(coords - f.center), return_inverse=True)
    out = np.empty((len(heights), len(coords)))
    for j, t in enumerate(heights):
        val, _ = smoothed_kernel(f.kernel, t, f.half_width, dist, atol, rtol)
        out[j] = f.mass * val[inverse]
    return Field(heights, coords, out)


def section_arrays(R, heights):
    """Flattened section components for region_max: (row_ptr, lo, hi)."""
    secs = R.sections(heights)
    row_ptr = np.zeros(len(secs) + 1, dtype=np.int64)
    lo, hi = [], []
    for j, s in enumerate(secs):
        for a, b in s:
            lo.append(a)
            hi.append(b)
        row_ptr[j + 1] = len(lo)
    return row_ptr, np.array(lo, dtype=float), np.array(hi, dtype=float)


def maximal_over_region(field, R, xs):
    """max of |u| over grid nodes (y, t) with (y - x, t) in R, for each x.

    Only the field's heights are sampled, so the result is a lower bound of
    the true supremum.  Raises CoverageError when x + R(t) leaves the field's
    y-range for some x and some sampled height.
    """
    xs = np.ascontiguousarray(np.atleast_1d(xs), dtype=float)
    row_ptr, lo, hi = section_arrays(R, field.heights)
    y0, y1 = field.coords[0], field.coords[-1]
    if len(lo):
        need_lo, need_hi = xs.min() + lo.min(), xs.max() + hi.max()
        if need_lo < y0 or need_hi > y1:
            rows = np.repeat(np.arange(len(field.heights)), np.diff(row_ptr))
            bad = (xs.min() + lo < y0) | (xs.max() + hi > y1)
            ts = field.heights[rows[bad]]
            gap = (need_lo, y0) if need_lo < y0 else (y1, need_hi)
            raise CoverageError(gap, (float(ts.min()), float(ts.max())))
    vals = np.abs(np.ascontiguousarray(field.values))
    return _backend.active.region_max(vals, field.coords, row_ptr, lo, hi, xs)


def hl_maximal(edges, density, x):
    """Centered Hardy-Littlewood maximal function of a piecewise-constant F.

    Radii run over the distances from x to every cell edge; averages are exact
    since the primitive of F is piecewise linear.
    """
    edges = np.asarray(edges, dtype=float)
    density = np.asarray(density, dtype=float)
    if np.any(density < 0):
        raise InvalidParameterError("F must be nonnegative")
    cdf = np.concatenate([[0.0], np.cumsum(density * np.diff(edges))])
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(len(xs))
    for i, xi in enumerate(xs):
        radii = np.abs(edges - xi)
        radii = radii[radii > 0]
        if not len(radii):
            out[i] = 0.0
            continue
        mass = np.interp(xi + radii, edges, cdf) - np.interp(xi - radii, edges, cdf)
        out[i] = np.max(mass / (2.0 * radii))
    return out if np.ndim(x) else float(out[0])


def kt(K, t, x, rtol=1e-10):
    """K_t = P_t * K at x, tight tolerance for comparisons."""
    val, _ = smoothed_kernel(K, t, 0.0, np.abs(np.asarray(x, dtype=float)), 1e-300, rtol)
    return val


def kt_cumulative(K, t, u):
    """Signed mass of K_t on [0, u] (negative for u < 0)."""
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    out = np.zeros(a.shape)
    pos = a > 0
    if pos.any():
        flat = a[pos]
        res = np.empty(len(flat))
        for i, ai in enumerate(flat):
            v, _ = smoothed_kernel(K, t, 0.5 * ai, np.array([0.5 * ai]), 1e-14, 1e-10)
            res[i] = ai * v[0]
        out[pos] = res
    return np.sign(u) * out


def split_kernel(K, t, gamma_t, x):
    """(local, tail) parts of K_t at x; local is K_t on |x| < 3 gamma_t."""
    if not gamma_t > 0:
        raise InvalidParameterError("gamma_t must be positive")
    x = np.asarray(x, dtype=float)
    full = kt(K, t, x)
    near = np.abs(x) < 3.0 * gamma_t
    local = np.where(near, full, 0.0)
    return local, full - local


def local_mass(K, t, gamma_t):
    """Mass of the local part, from the box-averaged potential at 0."""
    a = 3.0 * gamma_t
    val, _ = smoothed_kernel(K, t, a, np.array([0.0]), 1e-14, 1e-10)
    return float(2.0 * a * val[0])


def tail_mass(K, t, gamma_t):
    """Mass of the tail part, by a separate QUADPACK integration.

    Integrates K(z) against the Poisson mass outside [-a, a] seen from z,
    1 - (atan((a - z)/t) + atan((a + z)/t)) / pi, a = 3 gamma_t.
    """
    a = 3.0 * gamma_t
    R = K.support_radius

    def outside(z):
        return 1.0 - (math.atan((a - z) / t) + math.atan((a + z) / t)) / math.pi

    if K.is_power_law:
        head_end = min(0.5 * a, R)
        head, _ = integrate.quad(outside, 0.0, head_end, weight="alg",
                                 wvar=(-K.beta, 0.0), epsabs=1e-15, epsrel=1e-13, limit=200)
        fn = K.profile
    else:
        head_end = min(0.5 * a, R)
        head, _ = integrate.quad(lambda z: K.profile_fn(z) * outside(z), 0.0, head_end,
                                 epsabs=1e-15, epsrel=1e-13, limit=200)
        fn = K.profile_fn
    pts = sorted({p for j in range(0, 16) for p in (a - t * 4.0 ** j, a, a + t * 4.0 ** j)
                  if head_end < p < R})
    edges = [head_end] + pts + [R]
    body = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, _ = integrate.quad(lambda z: fn(z) * outside(z), lo, hi,
                              epsabs=1e-16, epsrel=1e-13, limit=200)
        body += v
    return 2.0 * (head + body)


def tail_domination_check(K, t, gamma_t, x_shift, y):
    """K_{2,t}(y + x') <= K_t(y / 2) at each sample y (needs |x'| <= gamma_t)."""
    if abs(x_shift) > gamma_t:
        raise InvalidParameterError("shift must satisfy |x'| <= gamma_t")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _, tail = split_kernel(K, t, gamma_t, y + x_shift)
    bound = kt(K, t, 0.5 * y)
    ok = tail <= bound * (1.0 + 1e-10)
    return ok if np.ndim(ok) else bool(ok)


def k_star(K, t, gamma_t, x_shift, enlarge, x):
    """sup over |y| <= enlarge of K_{1,t}(x + y + x').

    K_{1,t} is radially nonincreasing, so the sup sits at the point of the
    window closest to -x'.
    """
    if enlarge < 0:
        raise InvalidParameterError("enlargement must be nonnegative")
    x = np.asarray(x, dtype=float)
    d = np.maximum(np.abs(x + x_shift) - enlarge, 0.0)
    local, _ = split_kernel(K, t, gamma_t, d)
    return local


def k_star_brute(K, t, gamma_t, x_shift, enlarge, x, samples=2001):
    """Brute-force enlargement sup: scan the window, then refine the best cell."""
    out = np.empty(len(np.atleast_1d(x)))
    for i, xi in enumerate(np.atleast_1d(x)):
        ys = np.linspace(-enlarge, enlarge, samples)
        dist = np.abs(xi + ys + x_shift)
        k = int(np.argmin(dist))
        lo, hi = ys[max(k - 1, 0)], ys[min(k + 1, samples - 1)]
        # ternary search on the convex distance |x + y + x'|
        for _ in range(200):
            m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
            if abs(xi + m1 + x_shift) <= abs(xi + m2 + x_shift):
                hi = m2
            else:
                lo = m1
        best = min(dist[k], abs(xi + 0.5 * (lo + hi) + x_shift))
        local, _ = split_kernel(K, t, gamma_t, np.array([best]))
        out[i] = local[0]
    return out if np.ndim(x) else float(out[0])


def integrate_k_star(K, t, gamma_t, x_shift, enlarge):
    """Quadrature of K_s^* over the line.

    The flat top of width 2 * enlarge is integrated as is; on each flank the
    substitution u = v**2 absorbs the |u|^-beta type peak of K_t.
    """
    D = 3.0 * gamma_t

    def flank(v):
        return 2.0 * v * float(k_star(K, t, gamma_t, x_shift, enlarge,
                                      np.array([-x_shift + enlarge + v * v]))[0])

    top, _ = integrate.quad(lambda u: float(k_star(K, t, gamma_t, x_shift, enlarge,
                                                   np.array([-x_shift + u]))[0]),
                            -enlarge, enlarge, epsrel=1e-10) if enlarge > 0 else (0.0, 0.0)
    side, _ = integrate.quad(flank, 0.0, math.sqrt(D), epsrel=1e-10, limit=200,
                             points=[math.sqrt(t)] if t < D else None)
    return top + 2.0 * side


def dyadic_local_bound_check(K, t, gamma_t, edges, density, x):
    """(K_{1,t} * F)(x) / (MF(x) * integral of K_t over [t, gamma_t])."""
    edges = np.asarray(edges, dtype=float)
    density = np.asarray(density, dtype=float)
    if np.any(density < 0):
        raise InvalidParameterError("F must be nonnegative")
    a = 3.0 * gamma_t
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(len(xs))
    denom_int = float(kt_cumulative(K, t, gamma_t) - kt_cumulative(K, t, t))
    mf = hl_maximal(edges, density, xs)
    for i, xi in enumerate(xs):
        # cells meeting (x - a, x + a); u = x - w runs over the kernel's argument
        lo = np.maximum(edges[:-1], xi - a)
        hi = np.minimum(edges[1:], xi + a)
        live = (hi > lo) & (density > 0)
        if not live.any():
            num = 0.0
        else:
            ends = np.concatenate([xi - hi[live], xi - lo[live]])
            cum = kt_cumulative(K, t, ends)
            n = live.sum()
            num = float(np.sum(density[live] * (cum[n:] - cum[:n])))
        if num == 0.0:
            out[i] = 0.0
        elif mf[i] == 0.0:
            raise ConsistencyError(f"MF({xi:.6g}) = 0 but the local convolution is {num:.3e}")
        else:
            out[i] = num / (mf[i] * denom_int)
    return out if np.ndim(x) else float(out[0])


@dataclass(frozen=True)
class WeakTypeReport:
    lambdas: tuple
    superlevel_measures: tuple
    quasinorm: float
    input_l1: float
    argmax_lambda: float = 0.0

    @property
    def ratio(self):
        return self.quasinorm / self.input_l1

    def to_dict(self):
        return {"lambdas": list(self.lambdas), "superlevel_measures": list(self.superlevel_measures),
                "quasinorm": self.quasinorm, "input_l1": self.input_l1,
                "argmax_lambda": self.argmax_lambda, "ratio": self.ratio}


def weak_type_report(values, widths, input_l1, n_lambda=200):
    """Distribution function of cell values and the quasinorm sup λ |{g > λ}|.

    ``widths`` is the cell width (scalar for a uniform grid, or one per
    value).  The quasinorm is the exact supremum over λ, attained as λ
    increases to some cell value v, where it equals v |{g >= v}|.
    """
    v = np.asarray(values, dtype=float).ravel()
    w = np.broadcast_to(np.asarray(widths, dtype=float), v.shape)
    if np.any(v < 0):
        raise InvalidParameterError("values must be nonnegative")
    if not input_l1 > 0:
        raise InvalidParameterError("input L1 norm must be positive")
    pos = v > 0
    if not pos.any():
        return WeakTypeReport((), (), 0.0, float(input_l1))
    order = np.argsort(-v, kind="stable")
    vs, cum = v[order], np.cumsum(w[order])
    # |{g >= v_i}| is the cumulative width through the last tie of v_i
    last = np.searchsorted(-vs, -vs, side="right") - 1
    prod = vs * cum[last]
    k = int(np.argmax(prod))
    lo, hi = v[pos].min(), v.max()
    lam = np.geomspace(lo, hi, n_lambda) if hi > lo else np.array([lo])
    # |{g > λ}| = total width of cells strictly above λ
    idx = np.searchsorted(-vs, -lam, side="left")
    meas = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    return WeakTypeReport(tuple(float(x) for x in lam), tuple(float(x) for x in meas),
                          float(prod[k]), float(input_l1), float(vs[k]))


def window_widths(xs):
    """Cells partitioning [xs[0], xs[-1]] with boundaries at the midpoints."""
    xs = np.asarray(xs, dtype=float)
    edges = np.concatenate([[xs[0]], 0.5 * (xs[1:] + xs[:-1]), [xs[-1]]])
    return np.diff(edges)
