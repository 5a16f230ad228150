"""Command-line entry point: ``avatarsync {map,ik,simulate,report}``.

Exit codes: 0 success (warnings allowed), 1 input error, 2 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .bone_map import map_bones
from .experiment import (ConfigError, ExperimentConfig, load_config, read_records_csv,
                         run_experiment, summarize, with_seed)
from .ik import IKTarget, bind_effector_positions, solve_body_pose
from .math3d import Quat, Vec3
from .skeleton import SkeletonError, load_skeleton, pose_to_dict

log = logging.getLogger("avatarsync")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    pass


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def cmd_map(args) -> int:
    s = load_skeleton(args.skeleton)
    m = map_bones(s)
    for w in m.warnings:
        log.warning(w)
    _write(args.out, _dump(m.to_report(s)))
    return EXIT_OK


def _target(doc: dict | None, default: Vec3) -> IKTarget:
    if doc is None:
        return IKTarget(default)
    pos = doc.get("position")
    if pos is None or len(pos) != 3:
        raise InputError("target position must be [x, y, z]")
    rot = doc.get("rotation")
    q = None
    if rot is not None:
        if len(rot) != 4:
            raise InputError("target rotation must be [w, x, y, z]")
        q = Quat(*map(float, rot)).normalized()
    return IKTarget(Vec3(*map(float, pos)), q, float(doc.get("weight", 1.0)))


def cmd_ik(args) -> int:
    s = load_skeleton(args.skeleton)
    with open(args.targets) as fh:
        targets = json.load(fh)
    m = map_bones(s)
    rest = bind_effector_positions(s, m)
    origin = Vec3()
    solved = solve_body_pose(
        s, m,
        _target(targets.get("head"), rest.get("head", origin)),
        _target(targets.get("left_hand"), rest.get("left_hand", origin)),
        _target(targets.get("right_hand"), rest.get("right_hand", origin)),
    )
    for w in solved.warnings:
        log.warning(w)
    if args.verbose:
        for b, t in zip(s.bones, solved.pose):
            ez, ex, ey = (math.degrees(a) for a in t.rotation.to_euler_zxy())
            log.info("%-24s ZXY(deg) z=%8.3f x=%8.3f y=%8.3f", b.name, ez, ex, ey)
    doc = pose_to_dict(s, solved.pose)
    doc["reports"] = {
        k: {"iterations": r.iterations, "error": r.error, "converged": r.converged}
        for k, r in solved.reports.items()
    }
    doc["warnings"] = solved.warnings
    _write(args.out, _dump(doc))
    return EXIT_OK


def _run_summary(cfg: ExperimentConfig) -> dict:
    return run_experiment(cfg).summary()


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    prefix = args.out or Path(args.config).stem
    if args.sweep:
        if args.sweep < 1:
            raise InputError("--sweep needs a positive run count")
        cfgs = [with_seed(cfg, cfg.seed + k) for k in range(args.sweep)]
        with ProcessPoolExecutor() as pool:
            runs = list(pool.map(_run_summary, cfgs))
        means = [r["mean_ms"] for r in runs]
        sds = [r["sd_ms"] for r in runs]
        doc = {
            "runs": runs,
            "mean_of_means_ms": sum(means) / len(means),
            "mean_of_sds_ms": sum(sds) / len(sds),
            "n_runs": len(runs),
        }
        _write(f"{prefix}.sweep.json", _dump(doc))
        log.info("sweep of %d seeds written to %s.sweep.json", len(runs), prefix)
        return EXIT_OK
    rep = run_experiment(cfg)
    if len(rep.records) < 2:
        raise InputError("fewer than two complete cycles; statistics are undefined")
    _write(f"{prefix}.csv", rep.to_csv())
    _write(f"{prefix}.json", _dump(rep.summary()))
    if rep.missing_cycles:
        log.warning("%d cycles had no audio or no motion observation", len(rep.missing_cycles))
    log.info("%s: mean %.2f ms, sd %.2f ms over %d cycles",
             cfg.architecture, rep.mean_ms, rep.sd_ms, len(rep.records))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        a = read_records_csv(Path(args.original).read_text())
        b = read_records_csv(Path(args.proposed).read_text())
    except (ValueError, KeyError) as exc:
        raise InputError(f"schema mismatch: {exc}") from exc
    by_b = {r.cycle: r for r in b}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cycle", "offset_original", "offset_proposed"])
    for r in a:
        if r.cycle in by_b:
            w.writerow([r.cycle, repr(r.offset_ms), repr(by_b[r.cycle].offset_ms)])
    _write(args.out, buf.getvalue())

    lines = [f"{'condition':<10} {'n':>5} {'mean_ms':>10} {'sd_ms':>10}"]
    for label, recs in (("original", a), ("proposed", b)):
        if len(recs) < 2:
            raise InputError(f"{label} CSV needs at least two cycles")
        mean, sd = summarize([r.offset_ms for r in recs])
        lines.append(f"{label:<10} {len(recs):>5} {mean:>10.2f} {sd:>10.2f}")
    out = sys.stderr if args.out in (None, "-") else sys.stdout
    print("\n".join(lines), file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (prefix for simulate); '-' for stdout")
    common.add_argument("--verbose", "-v", action="store_true")

    ap = argparse.ArgumentParser(prog="avatarsync", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", parents=[common], help="map a rig onto the canonical humanoid slots")
    p.add_argument("skeleton")
    p.set_defaults(func=cmd_map, inputs=("skeleton",))

    p = sub.add_parser("ik", parents=[common], help="solve a full-body pose from head/hand targets")
    p.add_argument("skeleton")
    p.add_argument("targets")
    p.set_defaults(func=cmd_ik, inputs=("skeleton", "targets"))

    p = sub.add_parser("simulate", parents=[common], help="run the consistency experiment")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--sweep", type=int, metavar="N", help="run N consecutive seeds in parallel")
    p.set_defaults(func=cmd_simulate, inputs=("config",))

    p = sub.add_parser("report", parents=[common], help="merge two per-cycle CSVs for plotting")
    p.add_argument("original")
    p.add_argument("proposed")
    p.set_defaults(func=cmd_report, inputs=("original", "proposed"))
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    for attr in args.inputs:
        path = getattr(args, attr)
        if not Path(path).is_file():
            print(f"error: input file not found: {path}", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, SkeletonError, ConfigError, json.JSONDecodeError, OSError,
            ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # invariant violations and bugs
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
