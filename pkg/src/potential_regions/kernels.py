"""Poisson kernel, potential kernels, their convolution and the gauge r_K."""
from dataclasses import dataclass, field
from typing import Callable, Optional
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from . import _backend
from .errors import (ConsistencyError, InvalidParameterError, NumericalFailureError,
                     OutOfRangeError)

ATOL = 1e-8
RTOL = 1e-6
MAX_EVALS = 1_000_000


@dataclass(frozen=True)
class PoissonParams:
    t: float

    def __post_init__(self):
        if not (self.t > 0.0 and math.isfinite(self.t)):
            raise InvalidParameterError(f"Poisson height must be positive, got {self.t!r}")


def eval_poisson(p, x):
    """P_t(x) = t / (pi (t^2 + x^2))."""
    if not isinstance(p, PoissonParams):
        p = PoissonParams(p)
    val = _backend.fallback.box_poisson(x, p.t, 0.0)
    return val if np.ndim(val) else float(val)


@dataclass(frozen=True)
class RadialKernel:
    """Nonnegative, radially nonincreasing, integrable profile singular at 0.

    ``power_law`` kernels |x|^-beta on |x| <= R take the fast quadrature path;
    any other profile is handled by scipy's QUADPACK and is much slower.
    """
    family: str
    support_radius: float = 1.0
    beta: Optional[float] = None
    profile_fn: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.support_radius > 0.0:
            raise InvalidParameterError("support radius must be positive")
        if self.family == "power_law":
            if self.beta is None or not 0.0 < self.beta < 1.0:
                raise InvalidParameterError(
                    f"power-law exponent must lie in (0, 1) for an integrable unbounded "
                    f"kernel, got {self.beta!r}")
        elif self.profile_fn is None:
            raise InvalidParameterError("a custom kernel needs a profile function")

    @classmethod
    def power_law(cls, beta=0.5, support_radius=1.0):
        return cls("power_law", float(support_radius), float(beta))

    @classmethod
    def custom(cls, profile, support_radius=math.inf, name="custom"):
        return cls(name, float(support_radius), None, profile)

    @property
    def singularity_exponent(self):
        return self.beta

    @property
    def is_power_law(self):
        return self.family == "power_law"

    def profile(self, rho):
        rho = np.abs(np.asarray(rho, dtype=float))
        if self.is_power_law:
            with np.errstate(divide="ignore"):
                val = np.where(rho <= self.support_radius, rho ** -self.beta, 0.0)
        else:
            val = np.where(rho <= self.support_radius,
                           np.vectorize(self.profile_fn, otypes=[float])(rho), 0.0)
        return val if val.ndim else float(val)

    __call__ = profile

    def integral(self, a, b):
        """One-sided mass: integral of the profile over [a, b], 0 <= a <= b."""
        if not 0.0 <= a <= b:
            raise InvalidParameterError(f"need 0 <= a <= b, got [{a!r}, {b!r}]")
        a, b = min(a, self.support_radius), min(b, self.support_radius)
        if self.is_power_law:
            q = 1.0 - self.beta
            return (b ** q - a ** q) / q
        return _quad_profile(self.profile_fn, a, b)

    @property
    def l1_mass(self):
        return 2.0 * self.integral(0.0, self.support_radius)

    def to_dict(self):
        if not self.is_power_law:
            raise InvalidParameterError("only power-law kernels serialize")
        return {"family": "power_law", "beta": self.beta,
                "support_radius": self.support_radius}

    @classmethod
    def from_dict(cls, d):
        if d.get("family") != "power_law":
            raise InvalidParameterError(f"unknown kernel family {d.get('family')!r}")
        return cls.power_law(d["beta"], d.get("support_radius", 1.0))


def _quad_profile(fn, a, b):
    if a == b:
        return 0.0
    if math.isinf(b):
        head = _quad_profile(fn, a, max(1.0, a))
        tail, err = integrate.quad(fn, max(1.0, a), math.inf, limit=500)
        return head + tail
    val, err = integrate.quad(fn, a, b, limit=500)
    return val


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr.ravel(), arr.shape


def _generic_convolve(t, h, K, ys, atol, rtol):
    """(Q_{t,h} * K)(y) by QUADPACK; used for kernels without a fast path."""
    R = K.support_radius
    box = _backend.fallback.box_poisson
    out, err = np.empty(len(ys)), np.empty(len(ys))
    for i, y in enumerate(ys):
        c = abs(y)

        def f(z):
            return K.profile_fn(z) * (float(box(c - z, t, h)) + float(box(c + z, t, h)))

        w = max(t, h)
        hi = R if math.isfinite(R) else max(2.0 * c, 1.0) + 1e6 * w
        pts = sorted({p for p in (c - w, c, c + w, c - h, c + h) if 0.0 < p < hi})
        total, e1 = 0.0, 0.0
        edges = [0.0] + pts + [hi]
        for a, b in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(f, a, b, epsabs=atol / len(edges), epsrel=rtol, limit=500)
            total, e1 = total + v, e1 + e
        if not math.isfinite(R):
            v, e = integrate.quad(f, hi, math.inf, epsabs=atol, epsrel=rtol, limit=500)
            total, e1 = total + v, e1 + e
        out[i], err[i] = total, e1
    return out, err


def smoothed_kernel(K, t, h, x, atol=ATOL, rtol=RTOL, max_evals=MAX_EVALS):
    """(P_t * K * B_h)(x), B_h the normalized indicator of [-h, h].

    h = 0 gives P_t * K itself.  Returns (values, error estimates).
    """
    PoissonParams(t)
    ys, shape = _as_array(x)
    if h < 0.0:
        raise InvalidParameterError("box half-width must be nonnegative")
    if K.is_power_law:
        val, err, _, status = _backend.active.smoothed_potential(
            ys, float(t), float(h), K.beta, K.support_radius, atol, rtol, max_evals)
        if status.any():
            bad = int(np.argmax(status))
            raise NumericalFailureError(
                f"quadrature for P_t*K at t={t:.6g}, x={ys[bad]:.6g} did not converge",
                float(err[bad]))
    else:
        val, err = _generic_convolve(float(t), float(h), K, ys, atol, rtol)
    return val.reshape(shape), err.reshape(shape)


def convolve_poisson_kernel(p, K, x, atol=ATOL, rtol=RTOL, max_evals=MAX_EVALS):
    """(P_t * K)(x), scalar or array in x."""
    if not isinstance(p, PoissonParams):
        p = PoissonParams(p)
    val, _ = smoothed_kernel(K, p.t, 0.0, x, atol, rtol, max_evals)
    return val if val.ndim else float(val)


def central_mass(K, t, a, atol=1e-13, rtol=1e-12):
    """Mass of P_t * K on [-a, a]."""
    if a <= 0.0:
        return 0.0
    val, _ = smoothed_kernel(K, t, a, np.array([0.0]), atol, rtol)
    return float(2.0 * a * val[0])


@dataclass(frozen=True, eq=False)
class GaugeFunction:
    """Increasing gauge t -> r(t), tabulated on a log grid.

    ``power_law`` gauges evaluate c * t**exponent exactly; ``from_kernel``
    gauges interpolate the table monotonically in log-log coordinates.
    Evaluation outside [t[0], t[-1]] is an error.
    """
    t: np.ndarray
    r: np.ndarray
    source: str
    exponent: Optional[float] = None
    coefficient: float = 1.0
    kernel: Optional[RadialKernel] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if t.ndim != 1 or len(t) < 2 or t.shape != r.shape:
            raise InvalidParameterError("gauge table needs matching 1-d arrays of length >= 2")
        if not (np.all(t > 0) and np.all(np.diff(t) > 0)):
            raise InvalidParameterError("gauge grid must be positive and strictly increasing")
        if not (np.all(r > 0) and np.all(np.diff(r) > 0)):
            raise ConsistencyError("gauge table is not strictly increasing and positive")
        t.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "r", r)
        if self.source == "from_kernel":
            object.__setattr__(self, "_interp", PchipInterpolator(np.log(t), np.log(r)))

    @classmethod
    def power_law(cls, exponent, coefficient=1.0, t_min=1e-200, t_max=10.0, size=401):
        if not exponent > 0.0 or not coefficient > 0.0:
            raise InvalidParameterError("power-law gauge needs positive exponent and coefficient")
        t = log_grid(t_min, t_max, size)
        return cls(t, coefficient * t ** exponent, "power_law", float(exponent), float(coefficient))

    @classmethod
    def identity(cls, t_min=1e-200, t_max=10.0, size=401):
        return cls.power_law(1.0, 1.0, t_min, t_max, size)

    @property
    def t_min(self):
        return float(self.t[0])

    @property
    def t_max(self):
        return float(self.t[-1])

    @property
    def is_identity(self):
        return self.source == "power_law" and self.exponent == 1.0 and self.coefficient == 1.0

    def check_range(self, t):
        arr = np.asarray(t, dtype=float)
        if arr.size and (np.min(arr) < self.t[0] or np.max(arr) > self.t[-1]):
            bad = arr.min() if arr.min() < self.t[0] else arr.max()
            raise OutOfRangeError(float(bad), self.t_min, self.t_max)

    def __call__(self, t):
        self.check_range(t)
        arr = np.asarray(t, dtype=float)
        if self.source == "power_law":
            val = arr if self.is_identity else self.coefficient * arr ** self.exponent
        else:
            val = np.exp(self._interp(np.log(arr)))
        return val if np.ndim(val) else float(val)

    def to_dict(self):
        d = {"source": self.source, "t_min": self.t_min, "t_max": self.t_max, "size": len(self.t)}
        if self.source == "power_law":
            d.update(exponent=self.exponent, coefficient=self.coefficient)
        else:
            d["kernel"] = self.kernel.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        if d["source"] == "power_law":
            return cls.power_law(d["exponent"], d.get("coefficient", 1.0),
                                 d["t_min"], d["t_max"], d["size"])
        if d["source"] == "from_kernel":
            K = RadialKernel.from_dict(d["kernel"])
            return gauge_from_kernel(K, log_grid(d["t_min"], d["t_max"], d["size"]))
        raise InvalidParameterError(f"unknown gauge source {d['source']!r}")

    def table_rows(self):
        return [(float(a), float(b)) for a, b in zip(self.t, self.r)]


def log_grid(t_min, t_max, size):
    if not 0.0 < t_min < t_max or size < 2:
        raise InvalidParameterError("log grid needs 0 < t_min < t_max and size >= 2")
    return np.logspace(math.log10(t_min), math.log10(t_max), int(size))


def gauge_from_kernel(K, grid):
    """r_K(t) = 1 / (P_t * K)(0) tabulated on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("height grid must be positive and strictly increasing")
    r = 1.0 / np.array([convolve_poisson_kernel(t, K, 0.0) for t in grid])
    if not np.all(np.diff(r) > 0):
        k = int(np.argmin(np.diff(r)))
        raise ConsistencyError(
            f"r_K not increasing between t={grid[k]:.6g} and t={grid[k + 1]:.6g}")
    return GaugeFunction(grid, r, "from_kernel", kernel=K)


def tangentiality_ratio(r, t):
    """r(t) / t; large values mean a tangential gauge."""
    return r(t) / np.asarray(t, dtype=float) if np.ndim(t) else r(t) / t


def default_gauge(K, t_min=1e-200, t_max=10.0, size=401):
    return gauge_from_kernel(K, log_grid(t_min, t_max, size))
