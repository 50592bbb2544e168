"""Command-line entry point for the whole pipeline.

Subcommands: map validate, textmap build, stability analyze, sim gen,
localize, eval, fixtures. Every run is reproducible: all randomness flows
from --seed via the derivation rule in seeding.py, outputs are written
canonically, and localize/sim write a run manifest with config and input
digests. Exit codes: 0 success, 1 runtime failure, 2 usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

from .config import RunConfig, load_config
from .detlog import read_detection_log, write_detection_log
from .engine import MonteCarloLocalizer
from .errors import SemlocError
from .evaluation import evaluate, read_reference, read_trajectory, write_trajectory
from .mapio import load_map, save_map
from .seeding import SEED_RULE
from .semmap import validate_map
from .simulator import generate_trajectory, simulate_log, simulate_text_observations
from .stability import (
    format_report_table,
    read_session_log,
    report_to_document,
    stability_scores,
    write_session_log,
)
from .textmap import accumulate, build_text_box, merge_into_map, read_observation_log, write_observation_log
from .worlds import (
    build_office,
    build_twin_corridor,
    furniture_shift_sessions,
    load_scenario,
    parse_scenario,
    scenario_to_document,
    world_from_scenario,
)

_CONFIG_FLAG_FIELDS = [
    f for f in fields(RunConfig) if f.name not in ("geometric", "semantic", "text", "init", "seed")
]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_map_file(path):
    with open(path, "rb") as fh:
        return load_map(fh.read())


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("config overrides (defaults shown)")
    for f in _CONFIG_FLAG_FIELDS:
        flag = "--" + f.name.replace("_", "-")
        group.add_argument(flag, type=type(f.default), default=None, metavar=str(f.default),
                           help=f"{f.name} (default {f.default})")
    group.add_argument("--no-geometric", action="store_true", help="disable the range-scan channel (geometric default: on)")
    group.add_argument("--no-semantic", action="store_true", help="disable the object-detection channel (semantic default: on)")
    group.add_argument("--no-text", action="store_true", help="disable text matching and injection (text default: on)")
    group.add_argument("--init", default=None, metavar="uniform",
                       help="initialization: uniform | rooms:<category> (default uniform)")
    group.add_argument("--seed", type=int, default=None, metavar="0", help="root seed (default 0)")


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, base=cfg)
    overrides = {}
    for f in _CONFIG_FLAG_FIELDS:
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if getattr(args, "no_geometric", False):
        overrides["geometric"] = False
    if getattr(args, "no_semantic", False):
        overrides["semantic"] = False
    if getattr(args, "no_text", False):
        overrides["text"] = False
    if getattr(args, "init", None) is not None:
        overrides["init"] = args.init
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return cfg.replace(**overrides)


def _write_manifest(path, command: str, config: dict, seeds, inputs: dict, outputs: dict) -> None:
    doc = {
        "command": command,
        "config": config,
        "seeds": list(seeds),
        "seed_rule": SEED_RULE,
        "inputs": {name: _sha256(p) for name, p in sorted(inputs.items())},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _cmd_map_validate(args) -> int:
    with open(args.map, "rb") as fh:
        raw = fh.read()
    try:
        semmap = load_map(raw)
    except SemlocError as exc:
        violations = getattr(exc, "violations", None)
        if violations:
            for v in violations:
                print(v)
            return 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    violations = validate_map(semmap)
    for v in violations:
        print(v)
    if violations:
        return 1
    print("ok")
    return 0


def _cmd_textmap_build(args) -> int:
    cfg = _config_from_args(args)
    semmap = _load_map_file(args.map)
    observations = read_observation_log(args.log)
    hists = accumulate(observations, hist_resolution=cfg.hist_resolution)
    boxes = []
    skipped = []
    for tag in sorted(hists):
        box = build_text_box(hists[tag], tau=cfg.tau, min_attempts=cfg.min_attempts)
        if box is None:
            skipped.append(tag)
        else:
            boxes.append(box)
    merged = merge_into_map(semmap, boxes)
    with open(args.out, "wb") as fh:
        fh.write(save_map(merged))
    print(f"built {len(boxes)} text boxes" + (f", skipped {','.join(skipped)}" if skipped else ""))
    return 0


def _cmd_stability_analyze(args) -> int:
    cfg = _config_from_args(args)
    sessions = read_session_log(args.sessions)
    report = stability_scores(sessions, delta_move=cfg.delta_move)
    print(format_report_table(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report_to_document(report), sort_keys=True, indent=2) + "\n")
    if args.merge_map:
        semmap = _load_map_file(args.merge_map)
        scores = {label: entry.score for label, entry in report.per_class.items()}
        merged = semmap.with_class_stability(scores)
        out_map = args.map_out or args.merge_map
        with open(out_map, "wb") as fh:
            fh.write(save_map(merged))
    return 0


def _cmd_sim_gen(args) -> int:
    doc = load_scenario(args.world)
    scan_spec, _, motion_noise = parse_scenario(doc)
    map_path = os.path.join(os.path.dirname(os.path.abspath(args.world)), doc["map"])
    semmap = _load_map_file(map_path)
    world = world_from_scenario(doc, semmap)
    trajectory = generate_trajectory(
        doc["waypoints"],
        speed=float(doc["speed"]),
        turn_rate=float(doc["turn_rate"]),
        dt=float(doc["dt"]),
        grid=semmap.grid,
        initial_heading=doc.get("initial_heading"),
    )
    frames = simulate_log(world, trajectory, motion_noise, scan_spec, seed=args.seed)
    write_detection_log(args.out, frames, scan_angles=scan_spec.angles(), range_max=scan_spec.range_max)
    outputs = [args.out]
    if args.textobs:
        observations = simulate_text_observations(world, trajectory, seed=args.seed)
        write_observation_log(args.textobs, observations)
        outputs.append(args.textobs)
    _write_manifest(
        args.out + ".manifest.json",
        "sim gen",
        {"scenario": doc},
        [args.seed],
        {"world": args.world, "map": map_path},
        outputs,
    )
    print(f"wrote {len(frames)} frames to {args.out}")
    return 0


def _localize_once(map_path: str, log_path: str, cfg_dict: dict, seed: int, out_path: str) -> str:
    cfg = RunConfig(**cfg_dict).replace(seed=seed)
    semmap = _load_map_file(map_path)
    frames = read_detection_log(log_path)
    engine = MonteCarloLocalizer(semmap, cfg, seed=seed)
    records = engine.run(frames)
    header = {"seed": seed, "seed_rule": SEED_RULE, "map_sha256": _sha256(map_path), "log_sha256": _sha256(log_path)}
    header.update({f"cfg.{k}": v for k, v in sorted(cfg.to_dict().items())})
    write_trajectory(out_path, records, header=header)
    return out_path


def _cmd_localize(args) -> int:
    cfg = _config_from_args(args)
    seeds = [cfg.seed + k for k in range(args.runs)]
    out_paths = [args.out if args.runs == 1 else f"{args.out}.s{seed}" for seed in seeds]
    jobs = [(args.map, args.log, cfg.to_dict(), seed, path) for seed, path in zip(seeds, out_paths)]
    if args.parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            list(pool.map(_localize_star, jobs))
    else:
        for job in jobs:
            _localize_star(job)
    _write_manifest(
        args.out + ".manifest.json",
        "localize",
        cfg.to_dict(),
        seeds,
        {"map": args.map, "log": args.log},
        out_paths,
    )
    print(f"wrote {len(out_paths)} trajectory file(s)")
    return 0


def _localize_star(job):
    return _localize_once(*job)


def _cmd_eval(args) -> int:
    est = read_trajectory(args.est)
    gt = read_reference(args.gt)
    metrics = evaluate(est, gt, success_radius=args.radius, hold=args.hold)
    conv = "none" if metrics.convergence_time is None else f"{metrics.convergence_time!r}"
    print(
        f"ate_rmse={metrics.ate_rmse!r} convergence_time={conv} "
        f"success={str(metrics.success).lower()} final_error={metrics.final_error!r}"
    )
    print(f"{'metric':<18} {'value':>12}")
    print(f"{'ATE RMSE [m]':<18} {metrics.ate_rmse:>12.4f}")
    print(f"{'convergence [s]':<18} {conv:>12}")
    print(f"{'final error [m]':<18} {metrics.final_error:>12.4f}")
    print(f"{'success':<18} {str(metrics.success):>12}")
    return 0


def _cmd_fixtures(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    written = []

    for name, builder in (("twin_corridor", build_twin_corridor), ("office", build_office)):
        world, scenario = builder()
        map_path = os.path.join(args.out, f"{name}.map.json")
        with open(map_path, "wb") as fh:
            fh.write(save_map(world.semmap))
        scen_path = os.path.join(args.out, f"{name}.scenario.json")
        with open(scen_path, "wb") as fh:
            fh.write(scenario_to_document(scenario))
        cfg_path = os.path.join(args.out, f"{name}.config")
        with open(cfg_path, "w", encoding="utf-8") as fh:
            fh.write(f"# localizer settings tuned for the {name} scenario\n")
            for key, value in sorted(scenario.get("config", {}).items()):
                fh.write(f"{key} = {value}\n")
        written += [map_path, scen_path, cfg_path]

    sessions = furniture_shift_sessions(seed=args.seed)
    sessions_path = os.path.join(args.out, "furniture_shift.sessions.ndjson")
    write_session_log(sessions_path, sessions)
    written.append(sessions_path)

    world, scenario = build_twin_corridor()
    trajectory = generate_trajectory(
        scenario["waypoints"], scenario["speed"], scenario["turn_rate"], scenario["dt"], grid=world.semmap.grid
    )
    observations = simulate_text_observations(world, trajectory, seed=args.seed)
    obs_path = os.path.join(args.out, "twin_corridor.textobs.ndjson")
    write_observation_log(obs_path, observations)
    written.append(obs_path)

    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semloc",
        description="Long-term indoor localization on abstract semantic maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("map", help="map document tools")
    map_sub = p_map.add_subparsers(dest="map_command", required=True)
    p_validate = map_sub.add_parser("validate", help="check a map document against all model invariants",
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_validate.add_argument("map", help="map document path")
    p_validate.set_defaults(func=_cmd_map_validate)

    p_textmap = sub.add_parser("textmap", help="text likelihood map tools")
    textmap_sub = p_textmap.add_subparsers(dest="textmap_command", required=True)
    p_build = textmap_sub.add_parser("build", help="build text boxes from a posed observation log",
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_build.add_argument("--log", required=True, help="posed text observation log (ndjson)")
    p_build.add_argument("--map", required=True, help="input map document")
    p_build.add_argument("--out", required=True, help="output map document")
    p_build.add_argument("--config", help="key=value config file")
    _add_config_flags(p_build)
    p_build.set_defaults(func=_cmd_textmap_build)

    p_stab = sub.add_parser("stability", help="semantic class stability tools")
    stab_sub = p_stab.add_subparsers(dest="stability_command", required=True)
    p_analyze = stab_sub.add_parser("analyze", help="score classes from multi-session observations",
                                    formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_analyze.add_argument("--sessions", required=True, help="session log (ndjson)")
    p_analyze.add_argument("--out", help="machine-readable report path (json)")
    p_analyze.add_argument("--merge-map", help="map document to merge class_stability into")
    p_analyze.add_argument("--map-out", help="output path for the merged map (default: in place)")
    p_analyze.add_argument("--config", help="key=value config file")
    p_analyze.add_argument("--delta", dest="delta_move", type=float, default=None,
                           help="displacement threshold in meters (default 0.5)")
    _add_config_flags(p_analyze)
    p_analyze.set_defaults(func=_cmd_stability_analyze)

    p_sim = sub.add_parser("sim", help="simulator")
    sim_sub = p_sim.add_subparsers(dest="sim_command", required=True)
    p_gen = sim_sub.add_parser("gen", help="simulate a detection log from a scenario document",
                               formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_gen.add_argument("--world", required=True, help="scenario document path")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, help="output detection log (ndjson)")
    p_gen.add_argument("--textobs", help="also write a posed text observation log here")
    p_gen.set_defaults(func=_cmd_sim_gen)

    p_loc = sub.add_parser("localize", help="replay a detection log through the particle filter",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_loc.add_argument("--map", required=True)
    p_loc.add_argument("--log", required=True)
    p_loc.add_argument("--out", required=True, help="output trajectory file")
    p_loc.add_argument("--config", help="key=value config file")
    p_loc.add_argument("--runs", type=int, default=1, help="number of consecutive seeds to run")
    p_loc.add_argument("--parallel", action="store_true", help="run seed batch in parallel processes")
    _add_config_flags(p_loc)
    p_loc.set_defaults(func=_cmd_localize)

    p_eval = sub.add_parser("eval", help="compare an estimated trajectory against ground truth",
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_eval.add_argument("--est", required=True, help="estimated trajectory file")
    p_eval.add_argument("--gt", required=True, help="ground truth: trajectory file or detection log")
    p_eval.add_argument("--radius", type=float, default=0.5, help="success radius in meters")
    p_eval.add_argument("--hold", type=float, default=5.0, help="seconds the error must stay inside")
    p_eval.set_defaults(func=_cmd_eval)

    p_fix = sub.add_parser("fixtures", help="write the built-in scenario fixtures",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_fix.add_argument("--out", required=True, help="output directory")
    p_fix.add_argument("--seed", type=int, default=7)
    p_fix.set_defaults(func=_cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SemlocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
