"""Command-line entry point.

Subcommands cover every workflow: ``serve`` (the network service),
``experiment`` (batch scripted episodes + CSV), ``replay`` (recompute
metrics and optionally re-verify cues from a saved log), ``afc``
(synthetic direction-identification study), ``train`` / ``eval``
(behavior cloning), and ``export-csv`` (aggregate saved logs).

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import gzip
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__, afc, config as cfgmod, policy as pol, protocol
from .episode import load_log, run_episode, save_log
from .errors import ConfigError, DecodeError, ForceCompassError
from .experts import make_expert
from .haptics import CONDITIONS, BaselineState, apply_condition, pipeline_step
from .metrics import LeverConfig, episode_metrics
from .presets import TASK_NAMES, lever_config, pipeline_config
from .service import run_service

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# Table-I column order (success rate, completion time, contact duration,
# max force), then the bending-torque column this artifact adds.
AGGREGATE_COLUMNS = (
    "task", "condition", "episodes",
    "success_rate", "mean_completion_time_s", "mean_contact_duration_s",
    "mean_max_force_n", "mean_max_bending_torque_nm",
)
EPISODE_COLUMNS = (
    "task", "condition", "seed",
    "success", "completion_time_s", "contact_duration_s",
    "max_force_n", "max_bending_torque_nm",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forcecompass",
        description="Directional tactile teleoperation testbed",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--task", choices=TASK_NAMES)
        p.add_argument("--condition", choices=CONDITIONS)
        p.add_argument("--seed", type=int)
        p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL",
                       help="override any config value; repeatable")
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved config and exit")

    p = sub.add_parser("serve", help="run the TCP/WebSocket node graph")
    common(p)
    p.add_argument("--host")
    p.add_argument("--tcp-port", type=int)
    p.add_argument("--ws-port", type=int)
    p.add_argument("--tick-mode", choices=("paced", "clock"))
    p.add_argument("--ui-root", help="directory served under /ui")
    p.add_argument("--log", help="episode log path (.jsonl.gz)")

    p = sub.add_parser("experiment", help="batch scripted-operator episodes")
    common(p)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--conditions", default=None,
                   help="comma list, e.g. C1,C4 (default: the configured condition)")
    p.add_argument("--seed-start", type=int, default=0)
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.add_argument("--save-logs", action="store_true",
                   help="also write each episode log under OUT/logs/")

    p = sub.add_parser("replay", help="recompute metrics from saved logs")
    p.add_argument("logs", nargs="+", help="episode log files (.jsonl.gz)")
    p.add_argument("--verify-cues", action="store_true",
                   help="re-run the pipeline over the frames and compare "
                        "against the recorded cues")
    p.add_argument("--csv", help="write per-episode rows to this file")

    p = sub.add_parser("afc", help="synthetic direction-identification study")
    common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--choices", type=int, choices=(4, 8))
    p.add_argument("--kappa", type=float)
    p.add_argument("--attenuation-y", type=float)
    p.add_argument("--out", help="radar/confusion data file (JSON)")

    p = sub.add_parser("train", help="behavior cloning from scripted demos")
    common(p)
    p.set_defaults(task=pol.DEMO_TASK)   # the pre-aligned demo task
    p.add_argument("--mode", choices=(pol.REACTIVE, pol.NONREACTIVE),
                   default=pol.REACTIVE)
    p.add_argument("--demos", type=int, default=10)
    p.add_argument("--out", required=True, help="policy file to write")

    p = sub.add_parser("eval", help="roll out a trained policy")
    common(p)
    p.set_defaults(task=pol.DEMO_TASK)
    p.add_argument("--policy", required=True)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed-start", type=int, default=1000)
    p.add_argument("--csv", help="write per-episode rows to this file")

    p = sub.add_parser("export-csv", help="aggregate saved logs into CSV")
    p.add_argument("logs", nargs="+", help="episode log files (.jsonl.gz)")
    p.add_argument("--out", required=True, help="aggregate CSV path")
    return parser


def _resolve(args) -> dict:
    flags: dict = {}
    for key in ("task", "condition", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            flags[key] = value
    service_flags = {}
    for flag, key in (("host", "host"), ("tcp_port", "tcp_port"),
                      ("ws_port", "ws_port"), ("tick_mode", "tick_mode"),
                      ("ui_root", "ui_root")):
        value = getattr(args, flag, None)
        if value is not None:
            service_flags[key] = value
    if service_flags:
        flags["service"] = service_flags
    afc_flags = {}
    for flag, key in (("trials", "trials"), ("choices", "n_choices"),
                      ("kappa", "kappa"), ("attenuation_y", "attenuation_y")):
        value = getattr(args, flag, None)
        if value is not None:
            afc_flags[key] = value
    if afc_flags:
        flags["afc"] = afc_flags
    cfg = cfgmod.load_config(getattr(args, "config", None), flags)
    overrides = cfgmod.parse_set_flags(getattr(args, "set", []))
    if overrides:
        cfg = cfgmod._apply_layer(cfg, overrides)
        cfgmod._validate(cfg)
    return cfg


def _dry_run(cfg: dict) -> int:
    print(cfgmod.resolved_text(cfg))
    return EXIT_OK


def _write_csv(path: str, columns: Sequence[str], rows: Sequence[Sequence],
               cfg: Optional[dict]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if cfg is not None:
            fh.write("# config: " +
                     json.dumps(cfg, separators=(",", ":"), sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _lever_from_cfg(cfg: dict) -> LeverConfig:
    task = cfgmod.make_task(cfg)
    return LeverConfig(r=(0.0, 0.0, -task.wrist_offset), u_hat=task.weak_axis)


# ---------------------------------------------------------------------------
# subcommands


def cmd_serve(args) -> int:
    cfg = _resolve(args)
    if args.dry_run:
        return _dry_run(cfg)
    log_path = args.log or os.path.join(
        cfg["output_dir"],
        f"episode_{cfg['task']}_{cfg['condition']}_seed{cfg['seed']}.jsonl.gz",
    )
    os.makedirs(os.path.dirname(log_path) or ".", exist_ok=True)
    setup = cfgmod.make_session_setup(cfg)
    service_cfg = cfgmod.make_service_config(cfg, log_path)
    try:
        asyncio.run(run_service(setup, service_cfg))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _resolve(args)
    if args.dry_run:
        return _dry_run(cfg)
    if args.episodes <= 0:
        raise ConfigError("--episodes must be > 0")
    conditions = (args.conditions.split(",") if args.conditions
                  else [cfg["condition"]])
    for c in conditions:
        if c not in CONDITIONS:
            raise ConfigError(f"unknown condition {c!r}")
    out_dir = args.out or cfg["output_dir"]
    task = cfgmod.make_task(cfg)
    pipeline = cfgmod.make_pipeline(cfg)
    lever = _lever_from_cfg(cfg)
    expert_kwargs = dict(cfg["expert"])

    episode_rows = []
    aggregate_rows = []
    for condition in conditions:
        per = []
        for i in range(args.episodes):
            seed = args.seed_start + i
            expert = make_expert(task, seed, **expert_kwargs)
            log = run_episode(task, expert, seed=seed, condition=condition,
                              pipeline=pipeline)
            m = episode_metrics(log, contact_threshold=pipeline.contact_threshold,
                                lev=lever)
            per.append(m)
            episode_rows.append([cfg["task"], condition, seed, int(m.success),
                                 m.completion_time, m.contact_duration,
                                 m.max_force, m.max_bending_torque])
            if args.save_logs:
                log_dir = os.path.join(out_dir, "logs")
                os.makedirs(log_dir, exist_ok=True)
                save_log(log, os.path.join(
                    log_dir, f"{cfg['task']}_{condition}_seed{seed}.jsonl.gz"),
                    header={"config": cfg})
        aggregate_rows.append([
            cfg["task"], condition, len(per),
            float(np.mean([m.success for m in per])),
            float(np.mean([m.completion_time for m in per])),
            float(np.mean([m.contact_duration for m in per])),
            float(np.mean([m.max_force for m in per])),
            float(np.mean([m.max_bending_torque for m in per])),
        ])
        print(f"{cfg['task']} {condition}: success "
              f"{aggregate_rows[-1][3]:.2f}, max force "
              f"{aggregate_rows[-1][6]:.2f} N over {len(per)} episodes")

    per_path = os.path.join(out_dir, f"episodes_{cfg['task']}.csv")
    agg_path = os.path.join(out_dir, f"aggregate_{cfg['task']}.csv")
    _write_csv(per_path, EPISODE_COLUMNS, episode_rows, cfg)
    _write_csv(agg_path, AGGREGATE_COLUMNS, aggregate_rows, cfg)
    print(f"wrote {per_path} and {agg_path}")
    return EXIT_OK


def _embedded_config(path: str) -> Optional[dict]:
    """The resolved config a log was written with, if it carries one."""
    with gzip.open(path, "rb") as fh:
        first = fh.readline()
    try:
        env = protocol.decode_line(first)
    except DecodeError:
        return None
    cfg = env.payload.get("config")
    return cfg if isinstance(cfg, dict) else None


def cmd_replay(args) -> int:
    rows = []
    for path in args.logs:
        log = load_log(path)
        lever = lever_config(log.meta.task)
        m = episode_metrics(log, lev=lever)
        rows.append([log.meta.task, log.meta.condition, log.meta.seed,
                     int(m.success), m.completion_time, m.contact_duration,
                     m.max_force, m.max_bending_torque])
        line = (f"{path}: task={log.meta.task} condition={log.meta.condition} "
                f"seed={log.meta.seed} success={m.success} "
                f"maxF={m.max_force:.2f}N bend={m.max_bending_torque:.3f}Nm")
        if args.verify_cues:
            saved = _embedded_config(path)
            if saved is not None:
                pipeline = cfgmod.make_pipeline(saved)
            else:
                pipeline = pipeline_config(log.meta.task)
            state = BaselineState()
            ok = True
            for frame, cue in zip(log.frames, log.cues):
                state, raw = pipeline_step(state, frame, pipeline)
                expected = apply_condition(raw, log.meta.condition)
                if (expected.theta, expected.amplitude) != (cue.theta, cue.amplitude):
                    ok = False
                    break
            line += f" cues_verified={ok}"
            if not ok:
                print(line)
                raise ForceCompassError(f"{path}: recorded cues do not match "
                                        "recomputation")
        print(line)
    if args.csv:
        _write_csv(args.csv, EPISODE_COLUMNS, rows, None)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_afc(args) -> int:
    cfg = _resolve(args)
    if args.dry_run:
        return _dry_run(cfg)
    a = cfg["afc"]
    trials = afc.run_block(a["trials"], a["n_choices"], a["kappa"],
                           a["attenuation_y"], cfg["seed"])
    stats = afc.afc_stats(trials)
    angles = afc.canonical_angles(a["n_choices"])
    per_direction = [
        (row[i] / sum(row)) if sum(row) else 0.0
        for i, row in enumerate(stats.confusion)
    ]
    print(f"{a['n_choices']}-AFC over {a['trials']} trials: "
          f"accuracy {stats.accuracy:.3f}, "
          f"mean angular error {stats.mean_angular_error_deg:.1f} deg")
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        payload = {
            "config": cfg,
            "angles_deg": [np.degrees(t) % 360.0 for t in angles],
            "per_direction_accuracy": per_direction,
            "confusion": [list(r) for r in stats.confusion],
            "accuracy": stats.accuracy,
            "mean_angular_error_deg": stats.mean_angular_error_deg,
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _resolve(args)
    if args.dry_run:
        return _dry_run(cfg)
    t = cfg["train"]
    task_name = cfg["task"]
    demos = pol.collect_demos(args.mode, n_demos=args.demos, task_name=task_name)
    pipeline = cfgmod.make_pipeline(cfg)
    dataset = pol.extract_dataset(demos, pipeline, horizon=t["horizon"])
    policy, curve = pol.train_bc(
        dataset, seed=cfg["seed"], hidden=t["hidden"], replan=t["replan"],
        epochs=t["epochs"], lr=t["lr"], momentum=t["momentum"],
    )
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    pol.save_policy(policy, args.out, config={**cfg, "mode": args.mode,
                                              "demo_task": task_name})
    print(f"trained on {len(dataset.inputs)} samples from {len(demos)} "
          f"{args.mode} demos; loss {curve[0]:.4f} -> {curve[-1]:.4f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _resolve(args)
    if args.dry_run:
        return _dry_run(cfg)
    if args.episodes <= 0:
        raise ConfigError("--episodes must be > 0")
    policy = pol.load_policy(args.policy)
    task_name = cfg["task"]
    task = cfgmod.make_task(cfg)
    pipeline = cfgmod.make_pipeline(cfg)
    lever = _lever_from_cfg(cfg)
    rows = []
    metrics = []
    for i in range(args.episodes):
        seed = args.seed_start + i
        log = pol.rollout(policy, task, seed=seed, pipeline=pipeline)
        m = episode_metrics(log, contact_threshold=pipeline.contact_threshold,
                            lev=lever)
        metrics.append(m)
        rows.append([task_name, log.meta.condition, seed, int(m.success),
                     m.completion_time, m.contact_duration,
                     m.max_force, m.max_bending_torque])
    rate = float(np.mean([m.success for m in metrics]))
    mean_force = float(np.mean([m.max_force for m in metrics]))
    print(f"eval {args.policy} on {task_name}: success {rate:.2f} "
          f"({sum(m.success for m in metrics)}/{len(metrics)}), "
          f"mean max force {mean_force:.2f} N")
    if args.csv:
        _write_csv(args.csv, EPISODE_COLUMNS, rows, cfg)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_export_csv(args) -> int:
    groups: dict[tuple[str, str], list] = {}
    for path in args.logs:
        log = load_log(path)
        lever = lever_config(log.meta.task)
        m = episode_metrics(log, lev=lever)
        groups.setdefault((log.meta.task, log.meta.condition), []).append(m)
    rows = []
    for (task, condition), ms in sorted(groups.items()):
        rows.append([
            task, condition, len(ms),
            float(np.mean([m.success for m in ms])),
            float(np.mean([m.completion_time for m in ms])),
            float(np.mean([m.contact_duration for m in ms])),
            float(np.mean([m.max_force for m in ms])),
            float(np.mean([m.max_bending_torque for m in ms])),
        ])
    _write_csv(args.out, AGGREGATE_COLUMNS, rows, None)
    print(f"wrote {args.out} ({len(rows)} rows from {len(args.logs)} logs)")
    return EXIT_OK


COMMANDS = {
    "serve": cmd_serve,
    "experiment": cmd_experiment,
    "replay": cmd_replay,
    "afc": cmd_afc,
    "train": cmd_train,
    "eval": cmd_eval,
    "export-csv": cmd_export_csv,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ForceCompassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
