"""Command-line driver: build-region, sections, maximal, weaktype, verify."""
import argparse
import os
import sys

import numpy as np

from .construction import disjointness_margins
from .errors import LabError
from .experiments import (Grids, build_regions, judge_weak_type, kstar_stage, make_run,
                          sections_stage, verify, weak_type_stage)
from .io import read_json, write_json, write_rows
from .regions import write_profile_csv


def _load_config(path):
    return read_json(path) if path else {}


def _stamp(run, seed, payload):
    return {"config_hash": run.hash, "seed": seed, **payload}


def _write_sections(out, run, sec):
    h = run.hash
    write_profile_csv(os.path.join(out, "sections_omega.csv"), sec["omega"], h)
    write_profile_csv(os.path.join(out, "sections_completed.csv"), sec["completed"], h)
    rows = sec["completed_at_2tk"]
    write_rows(os.path.join(out, "completed_at_2tk.csv"),
               ["k", "t_k", "N_k", "measure", "ratio", "lower_bound"],
               [[r["k"], r["t_k"], r["N_k"], r["measure"], r["ratio"], r["lower_bound"]]
                for r in rows], h)


def cmd_build_region(args, run):
    trace, omega, completed = build_regions(run)
    margins = disjointness_margins(trace, omega)
    h = run.hash
    write_json(os.path.join(args.out, "trace.json"),
               _stamp(run, args.seed, {"trace": trace.to_dict(), "disjointness_margins": margins}))
    trace.write_csv(os.path.join(args.out, "trace.csv"), h)
    write_json(os.path.join(args.out, "region_omega.json"), _stamp(run, args.seed, omega.to_dict()))
    write_json(os.path.join(args.out, "region_completed.json"),
               _stamp(run, args.seed, completed.to_dict()))
    _write_sections(args.out, run, sections_stage(run, trace, omega, completed))
    ok = all(lv.min_residual > 0 for lv in trace.levels) and all(m > 0 for m in margins)
    print(f"levels={len(trace)} N={trace.counts} residuals_positive={ok}")
    return ok


def _parse_heights(text):
    return np.array(sorted(float(v) for v in text.split(","))) if text else None


def cmd_sections(args, run):
    trace, omega, completed = build_regions(run)
    heights = _parse_heights(args.heights)
    if heights is not None:
        run.gauge.check_range(heights)
    sec = sections_stage(run, trace, omega, completed, heights)
    _write_sections(args.out, run, sec)
    rows = sec["completed_at_2tk"]
    ratios = [r["ratio"] for r in rows]
    lower = all(r["ratio"] >= r["lower_bound"] for r in rows)
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    summary = {"omega_max_ratio": sec["omega_max_ratio"], "omega_argmax_t": sec["omega_argmax"],
               "completed_at_2tk": rows, "lower_bound_holds": lower,
               "strictly_increasing": increasing}
    write_json(os.path.join(args.out, "sections.json"), _stamp(run, args.seed, summary))
    print(f"omega_max_ratio={sec['omega_max_ratio']:.6g} completed_ratios="
          + ",".join(f"{q:.4g}" for q in ratios))
    return bool(np.isfinite(sec["omega_max_ratio"])) and lower and increasing


def cmd_maximal(args, run):
    trace, _, _ = build_regions(run)
    lem = kstar_stage(run, trace, args.seed)
    ok = lem["all_bounded"] and lem["closed_form_vs_brute_max_rel"] <= 1e-9
    write_json(os.path.join(args.out, "kstar.json"), _stamp(run, args.seed, {**lem, "pass": ok}))
    write_rows(os.path.join(args.out, "kstar.csv"),
               ["k", "t", "gamma_t", "x_shift", "enlarge", "integral", "bound"],
               [[s["k"], s["t"], s["gamma_t"], s["x_shift"], s["enlarge"], s["integral"], s["bound"]]
                for s in lem["samples"]], run.hash)
    print(f"samples={len(lem['samples'])} bounded={lem['all_bounded']} "
          f"closed_form_vs_brute={lem['closed_form_vs_brute_max_rel']:.3g}")
    return ok


def cmd_weaktype(args, run):
    trace, omega, completed = build_regions(run)
    th = run.config["thresholds"]
    grids = Grids.from_config(run.config["experiment"])
    rows = weak_type_stage(run, trace, omega, completed, grids)
    judged = judge_weak_type(rows, th)
    refined = None
    if run.config["experiment"]["refinement_check"]:
        refined = judge_weak_type(weak_type_stage(run, trace, omega, completed, grids.refined()), th)
    reports = [{"k": r["k"], "t_k": r["t_k"], "N_k": r["N_k"], "n_x": r["n_x"],
                "omega": r["omega"].to_dict(), "completed": r["completed"].to_dict()} for r in rows]
    ok_iii = judged["omega_bounded"] and (refined is None or refined["omega_bounded"])
    ok_v = judged["completed_grows"] and (refined is None or refined["completed_grows"])
    write_json(os.path.join(args.out, "weaktype.json"), _stamp(run, args.seed, {
        "levels": reports, "summary": judged, "refined": refined,
        "bounded_pass": ok_iii, "growth_pass": ok_v}))
    write_rows(os.path.join(args.out, "weaktype.csv"),
               ["k", "t_k", "N_k", "omega_ratio", "completed_ratio"],
               [[r["k"], r["t_k"], r["N_k"], r["omega"].ratio, r["completed"].ratio] for r in rows],
               run.hash)
    print(f"omega_max_over_min={judged['omega_max_over_min']:.4g} "
          f"completed_final_over_initial={judged['completed_final_over_initial']:.4g}")
    return ok_iii and ok_v


def cmd_verify(args, run):
    report = verify(run.config, args.seed)
    write_json(os.path.join(args.out, "verify.json"), report)
    for cid, rec in report["claims"].items():
        print(f"claim {cid}: {'pass' if rec['pass'] else 'FAIL'}")
    if "stage_error" in report:
        e = report["stage_error"]
        print(f"{e['stage']} failed: {e['error']}: {e['message']}", file=sys.stderr)
    return report["pass"]


COMMANDS = {
    "build-region": cmd_build_region,
    "sections": cmd_sections,
    "maximal": cmd_maximal,
    "weaktype": cmd_weaktype,
    "verify": cmd_verify,
}


def parser():
    p = argparse.ArgumentParser(prog="potential-regions")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run config (missing keys take defaults)")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int, default=0)
        if name == "sections":
            s.add_argument("--heights", help="comma-separated heights (default: profile grid)")
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    try:
        run = make_run(_load_config(args.config))
        os.makedirs(args.out, exist_ok=True)
        ok = COMMANDS[args.command](args, run)
    except LabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
