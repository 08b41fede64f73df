"""Experiment pipeline: build, sections, weak-type runs, K_s^* sweep, verify."""
import copy
from dataclasses import dataclass
import math

import numpy as np

from .construction import ConstructionConfig, build, disjointness_margins
from .errors import InvalidParameterError, LabError
from .io import config_hash
from .kernels import GaugeFunction, RadialKernel, default_gauge
from .maximal import (TestFunction, integrate_k_star, k_star, k_star_brute, maximal_over_region,
                      poisson_extend, weak_type_report, window_widths)
from .regions import check_r_condition, section_profile

DEFAULT_CONFIG = {
    "kernel": {"family": "power_law", "beta": 0.5, "support_radius": 1.0},
    "gauge": {"t_min": 1e-200, "t_max": 10.0, "size": 401},
    "construction": {"k_max": 6, "N1": 2, "C_N": 1.0, "t1_initial": 1e-4,
                     "n_schedule": "linear", "base_aperture": 3.0},
    "experiment": {"atom_scale": 0.01, "band_octaves": 4, "band_per_octave": 8,
                   "global_heights": 48, "y_ratio": 1.05, "x_fine_per_r": 32,
                   "x_ratio": 1.02, "n_lambda": 200, "refinement_check": True,
                   "profile_heights": 200},
    "thresholds": {"section_constant": 0.25, "stability": 0.10,
                   "bounded_max_over_min": 4.0, "growth_final_over_initial": 1.5,
                   "kstar_samples": 20, "kstar_random_points": 1000},
}


GAUGE_EXTRA = {"family", "exponent", "coefficient"}


def resolve_config(user=None):
    """Merge a (possibly partial) user config over the defaults."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    for section, values in (user or {}).items():
        if section not in cfg:
            raise InvalidParameterError(f"unknown config section {section!r}")
        if not isinstance(values, dict):
            raise InvalidParameterError(f"config section {section!r} must be an object")
        unknown = set(values) - set(cfg[section]) - (GAUGE_EXTRA if section == "gauge" else set())
        if unknown:
            raise InvalidParameterError(f"unknown keys in {section!r}: {sorted(unknown)}")
        cfg[section].update(values)
    if cfg["construction"]["k_max"] < 1:
        raise InvalidParameterError("k_max must be at least 1")
    for key in ("global_heights", "profile_heights", "n_lambda"):
        if cfg["experiment"][key] < 2:
            raise InvalidParameterError(f"grid size {key} must be >= 2")
    return cfg


@dataclass(eq=False)
class Run:
    """Everything a stage needs, derived once from a resolved config."""
    config: dict
    kernel: RadialKernel
    gauge: GaugeFunction
    construction: ConstructionConfig

    @property
    def hash(self):
        return config_hash(self.config)


def make_run(config):
    cfg = resolve_config(config)
    K = RadialKernel.from_dict(cfg["kernel"])
    g = cfg["gauge"]
    if g.get("family", "from_kernel") == "power_law":
        gauge = GaugeFunction.power_law(g["exponent"], g.get("coefficient", 1.0),
                                        g["t_min"], g["t_max"], g["size"])
    else:
        gauge = default_gauge(K, g["t_min"], g["t_max"], g["size"])
    c = cfg["construction"]
    cc = ConstructionConfig(K, gauge, c["k_max"], c["C_N"], c["t1_initial"], c["N1"],
                            c["n_schedule"], c["base_aperture"])
    return Run(cfg, K, gauge, cc)


def build_regions(run):
    """(trace, Ω, Ω̂_K) for a run."""
    trace, omega = build(run.construction)
    probe = domination_probe(run, trace)
    completed = omega.complete(run.gauge, probe)
    return trace, omega, completed


def domination_probe(run, trace):
    """Heights on which the completion's domination check runs: up to 2 t_1."""
    t_lo = trace.levels[-1].t
    return np.geomspace(t_lo, 2 * trace.levels[0].t, 400)


def band(t, octaves, per_octave):
    return t * 2.0 ** (np.arange(octaves * per_octave + 1) / per_octave)


def profile_heights(run, trace):
    e = run.config["experiment"]
    hs = [band(lv.t, e["band_octaves"], e["band_per_octave"]) for lv in trace.levels]
    hs.append(np.geomspace(trace.levels[-1].t, 1.0, e["profile_heights"]))
    return np.unique(np.concatenate(hs))


def sections_stage(run, trace, omega, completed, heights=None):
    """Section profiles of Ω and Ω̂ against r_K, and the levels-at-2t_k table."""
    if heights is None:
        heights = profile_heights(run, trace)
    rK = run.gauge
    prof_o = section_profile(omega, heights, rK)
    prof_c = section_profile(completed, heights, rK)
    two = np.array([2 * lv.t for lv in trace.levels])
    at2 = section_profile(completed, two, rK)
    rows = [{"k": lv.k, "t_k": lv.t, "N_k": lv.N, "measure": m, "ratio": q,
             "lower_bound": run.config["thresholds"]["section_constant"] * lv.N}
            for lv, (_, m, q) in zip(trace.levels, at2)]
    return {
        "heights": heights,
        "omega": prof_o,
        "completed": prof_c,
        "omega_max_ratio": max(p[2] for p in prof_o),
        "omega_argmax": prof_o[int(np.argmax([p[2] for p in prof_o]))][0],
        "completed_at_2tk": rows,
    }


@dataclass(frozen=True)
class Grids:
    atom_scale: float
    band_octaves: int
    band_per_octave: int
    global_heights: int
    y_ratio: float
    x_fine_per_r: int
    x_ratio: float
    n_lambda: int

    @classmethod
    def from_config(cls, e):
        return cls(e["atom_scale"], e["band_octaves"], e["band_per_octave"], e["global_heights"],
                   e["y_ratio"], e["x_fine_per_r"], e["x_ratio"], e["n_lambda"])

    def refined(self):
        """One 2x refinement: every step halved (ratios square-rooted)."""
        return Grids(self.atom_scale, self.band_octaves, 2 * self.band_per_octave,
                     2 * self.global_heights - 1, math.sqrt(self.y_ratio),
                     2 * self.x_fine_per_r, math.sqrt(self.x_ratio), self.n_lambda)


def _geom_axis(lo, hi, ratio):
    n = max(2, int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1)
    pos = np.geomspace(lo, hi, n)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _extent(regions, heights):
    ext = 0.0
    for R in regions:
        for s in R.sections(heights):
            if len(s):
                a, b = s.bounds
                ext = max(ext, abs(a), abs(b))
    return ext


def experiment_window(run, trace):
    t1 = trace.levels[0].t
    return 2.0 * (trace.levels[0].gamma + run.gauge(16 * t1))


def weak_type_level(run, trace, regions, k, grids, window=None):
    """Weak-type ratios at level k for each region, with a box atom of scale t_k."""
    lv = trace.levels[k - 1]
    rK = run.gauge
    t1 = trace.levels[0].t
    W = experiment_window(run, trace) if window is None else window
    f = TestFunction.box_atom(run.kernel, 0.0, grids.atom_scale * lv.t, 1.0)

    band_h = band(lv.t, grids.band_octaves, grids.band_per_octave)
    glob_h = np.geomspace(t1, 1.0, grids.global_heights)
    ext_b = _extent(regions, band_h)
    ext_g = _extent(regions, glob_h)
    field_b = poisson_extend(f, band_h, _geom_axis(lv.t / 20, W + ext_b, grids.y_ratio))
    field_g = poisson_extend(f, glob_h, _geom_axis(t1 / 20, W + ext_g, grids.y_ratio))

    B = lv.gamma + 2 * rK(band_h[-1])
    step = lv.r / grids.x_fine_per_r
    n_fine = int(math.ceil(B / step))
    fine = np.arange(-n_fine, n_fine + 1) * step
    outer = np.geomspace(fine[-1], W, max(2, int(math.ceil(
        math.log(W / fine[-1]) / math.log(grids.x_ratio))) + 1))[1:] if fine[-1] < W else []
    xs = np.concatenate([-np.asarray(outer)[::-1], fine, outer])
    xs = xs[(xs >= -W) & (xs <= W)]
    widths = window_widths(xs)

    out = []
    for R in regions:
        m = np.maximum(maximal_over_region(field_b, R, xs), maximal_over_region(field_g, R, xs))
        out.append(weak_type_report(m, widths, f.input_l1, grids.n_lambda))
    return out, {"n_x": len(xs), "n_y_band": len(field_b.coords),
                 "n_y_global": len(field_g.coords), "window": W}


def weak_type_stage(run, trace, omega, completed, grids=None, levels=None):
    grids = grids or Grids.from_config(run.config["experiment"])
    levels = levels or range(1, len(trace.levels) + 1)
    rows = []
    for k in levels:
        (ro, rc), info = weak_type_level(run, trace, (omega, completed), k, grids)
        lv = trace.levels[k - 1]
        rows.append({"k": k, "t_k": lv.t, "N_k": lv.N, "omega": ro, "completed": rc, **info})
    return rows


def ratio_sequences(rows):
    return [r["omega"].ratio for r in rows], [r["completed"].ratio for r in rows]


def judge_weak_type(rows, thresholds):
    om, co = ratio_sequences(rows)
    bounded = max(om) / min(om)
    growth = co[-1] / co[0]
    increasing = all(b > a for a, b in zip(co, co[1:]))
    return {
        "omega_ratios": om, "completed_ratios": co,
        "omega_max_over_min": bounded,
        "omega_bounded": bounded <= thresholds["bounded_max_over_min"],
        "completed_final_over_initial": growth,
        "completed_increasing": increasing,
        "completed_grows": increasing and growth >= thresholds["growth_final_over_initial"],
    }


def _gamma_at(trace, run, k, t):
    return trace.levels[k - 1].N * run.gauge(t)


def kstar_points(run, trace, n):
    """n index points s = (x', t) spread over levels 1..k_max-1.

    For s at level k: t in [t_k, t_{k-1}] (level 1: [t_1, 2 t_1]), x' the
    farthest row point, local cutoff 3 gamma(t) with gamma(t) = N_k r(t), and
    enlargement 3 gamma(t_{k+1}).
    """
    ks = list(range(1, len(trace.levels)))
    if not ks:
        return []
    out = []
    for i in range(n):
        k = ks[i % len(ks)]
        lv = trace.levels[k - 1]
        top = trace.levels[k - 2].t if k > 1 else 2 * lv.t
        j = i // len(ks)
        m = (n + len(ks) - 1) // len(ks)
        t = lv.t * (top / lv.t) ** (j / max(m, 1))
        gamma_t = _gamma_at(trace, run, k, t)
        x_shift = lv.points[0]
        enlarge = 3 * trace.levels[k].gamma
        out.append({"k": k, "t": t, "t_k": lv.t, "gamma_t": gamma_t, "x_shift": x_shift,
                    "enlarge": enlarge})
    return out


def kstar_stage(run, trace, seed=0):
    th = run.config["thresholds"]
    rows = []
    for s in kstar_points(run, trace, th["kstar_samples"]):
        integral = integrate_k_star(run.kernel, s["t"], s["gamma_t"], s["x_shift"], s["enlarge"])
        bound = 3 * s["t_k"] / run.gauge(s["t_k"]) + run.kernel.l1_mass
        rows.append({**s, "integral": integral, "bound": bound, "ok": integral <= bound})
    rng = np.random.default_rng(seed)
    worst = 0.0
    samples = kstar_points(run, trace, max(1, len(trace.levels) - 1))
    n_pts = th["kstar_random_points"]
    if samples:
        for i in range(n_pts):
            s = samples[i % len(samples)]
            span = s["x_shift"] + s["enlarge"] + 3 * s["gamma_t"]
            x = rng.uniform(-1.5 * span, 1.5 * span)
            a = k_star(run.kernel, s["t"], s["gamma_t"], s["x_shift"], s["enlarge"], np.array([x]))[0]
            b = k_star_brute(run.kernel, s["t"], s["gamma_t"], s["x_shift"], s["enlarge"],
                             np.array([x]))[0]
            worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return {"samples": rows, "all_bounded": all(r["ok"] for r in rows),
            "closed_form_vs_brute_max_rel": worst, "random_points": n_pts}


def verify(config, seed=0):
    """Claims (i)-(v) about the built regions plus the K_s^* sweep, one record each."""
    run = make_run(config)
    th = run.config["thresholds"]
    claims = {}
    report = {"config_hash": run.hash, "seed": seed, "config": run.config, "claims": claims}
    try:
        trace, omega, completed = build_regions(run)
    except LabError as exc:
        report["stage_error"] = {"stage": "build", "error": type(exc).__name__, "message": str(exc)}
        for cid in ("i", "ii", "iii", "iv", "v", "kstar"):
            claims[cid] = {"pass": False, "reason": "build failed"}
        report["pass"] = False
        return report
    report["trace"] = trace.to_dict()
    report["disjointness_margins"] = disjointness_margins(trace, omega)
    heights = profile_heights(run, trace)
    probe = heights[heights <= 1.0]

    rc = check_r_condition(omega, omega.seed_gauge, probe)
    rc_k = check_r_condition(omega, run.gauge, probe[probe <= 2 * trace.levels[0].t])
    claims["i"] = {"pass": rc.worst_violation == 0.0, "violation": rc.worst_violation,
                   "n_checks": rc.n_checks, "violation_with_rK_probe": rc_k.worst_violation}

    sec = sections_stage(run, trace, omega, completed, heights)
    stab = None
    if run.construction.k_max >= 3:
        small = copy.deepcopy(config or {})
        small.setdefault("construction", {})["k_max"] = run.construction.k_max - 2
        run_s = make_run(small)
        tr_s, om_s, co_s = build_regions(run_s)
        sec_s = sections_stage(run_s, tr_s, om_s, co_s)
        stab = abs(sec["omega_max_ratio"] - sec_s["omega_max_ratio"]) / sec_s["omega_max_ratio"]
    claims["ii"] = {"pass": bool(np.isfinite(sec["omega_max_ratio"]))
                    and (stab is None or stab <= th["stability"]),
                    "max_ratio": sec["omega_max_ratio"], "argmax_t": sec["omega_argmax"],
                    "relative_change_vs_k_max_minus_2": stab, "threshold": th["stability"]}
    rows = sec["completed_at_2tk"]
    ratios = [r["ratio"] for r in rows]
    claims["iv"] = {"pass": all(r["ratio"] >= r["lower_bound"] for r in rows)
                    and all(b > a for a, b in zip(ratios, ratios[1:])),
                    "levels": rows, "strictly_increasing": all(b > a for a, b in zip(ratios, ratios[1:]))}

    grids = Grids.from_config(run.config["experiment"])
    wt = weak_type_stage(run, trace, omega, completed, grids)
    judged = judge_weak_type(wt, th)
    refined = None
    if run.config["experiment"]["refinement_check"]:
        refined = judge_weak_type(weak_type_stage(run, trace, omega, completed, grids.refined()), th)
    claims["iii"] = {"pass": judged["omega_bounded"] and (refined is None or refined["omega_bounded"]),
                     "ratios": judged["omega_ratios"], "max_over_min": judged["omega_max_over_min"],
                     "threshold": th["bounded_max_over_min"],
                     "refined_ratios": refined and refined["omega_ratios"]}
    claims["v"] = {"pass": judged["completed_grows"] and (refined is None or refined["completed_grows"]),
                   "ratios": judged["completed_ratios"],
                   "final_over_initial": judged["completed_final_over_initial"],
                   "threshold": th["growth_final_over_initial"],
                   "refined_ratios": refined and refined["completed_ratios"]}
    lem = kstar_stage(run, trace, seed)
    claims["kstar"] = {"pass": lem["all_bounded"] and lem["closed_form_vs_brute_max_rel"] <= 1e-9,
                        **lem}
    report["pass"] = all(c["pass"] for c in claims.values())
    return report
