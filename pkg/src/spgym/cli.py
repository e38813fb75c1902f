"""Command-line entry points.

Subcommands: enumerate, solve, play, eval-ood, render.  Options can come from
an INI-style config file (section ``[run]``), with command-line flags taking
precedence; the effective configuration is echoed into the output directory
for provenance.  Exit codes: 0 success, 1 domain error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from .augment import parse_augments
from .core import Action, GridDims, PuzzleState, is_solvable
from .errors import ConfigurationError, DomainError
from .harness import (
    MemorizerPolicy,
    Policy,
    RandomPolicy,
    RunConfig,
    ScriptedPolicy,
    eval_ood_easy,
    eval_ood_hard,
    run_batch,
    run_episode,
)
from .observation import (
    CROP_RENDER_SIZE,
    DEFAULT_RENDER_SIZE,
    Modality,
    ObsSpec,
    decode_image,
    load_pool,
    render_image_obs,
    save_png,
)
from .rng import RandomSource
from .solver import SolverPolicy, bfs_enumerate, ida_star

CONFIG_SCHEMA_VERSION = 1

DATASET_DIR_ENV = "SPGYM_DATASET_DIR"

_RUN_KEYS = (
    "dims", "pool_size", "pool_seed", "seed", "num_envs", "max_episode_steps",
    "total_steps", "modality", "render_size", "augment", "dataset_dir",
    "heldout_dir", "policy", "actions", "memorizer_train_episodes",
)

_DEFAULTS = {
    "dims": "3x3",
    "pool_size": 1,
    "pool_seed": 0,
    "seed": 0,
    "num_envs": 64,
    "max_episode_steps": 1000,
    "total_steps": 10_000_000,
    "modality": "image",
    "render_size": None,  # resolved to 100 with a crop augmentation, 84 otherwise
    "augment": "",
    "dataset_dir": None,
    "heldout_dir": None,
    "policy": "random",
    "actions": "UP",
    "memorizer_train_episodes": 100,
}

_INT_KEYS = {
    "pool_size", "pool_seed", "seed", "num_envs", "max_episode_steps",
    "total_steps", "render_size", "memorizer_train_episodes",
}


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI config file with a [run] section")
    sub.add_argument("--dims", help="grid as HxW (default 3x3)")
    sub.add_argument("--pool-size", type=int, dest="pool_size")
    sub.add_argument("--pool-seed", type=int, dest="pool_seed")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--num-envs", type=int, dest="num_envs")
    sub.add_argument("--max-episode-steps", type=int, dest="max_episode_steps")
    sub.add_argument("--total-steps", type=int, dest="total_steps")
    sub.add_argument("--modality", choices=["image", "onehot", "state"])
    sub.add_argument("--render-size", type=int, dest="render_size")
    sub.add_argument("--augment", help="comma-separated augmentation names")
    sub.add_argument("--dataset-dir", dest="dataset_dir",
                     help=f"image directory (default ${DATASET_DIR_ENV})")
    sub.add_argument("--heldout-dir", dest="heldout_dir")
    sub.add_argument("--policy", choices=["random", "solver", "scripted", "memorizer"])
    sub.add_argument("--actions", help="comma-separated actions for the scripted policy")
    sub.add_argument("--memorizer-train-episodes", type=int,
                     dest="memorizer_train_episodes")
    sub.add_argument("--out", required=True, help="output directory")


def _effective_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, environment, and flags (flags win)."""
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise ConfigurationError(f"config file {args.config} not readable")
        if parser.has_section("run"):
            for key, value in parser.items("run"):
                if key not in _RUN_KEYS:
                    raise ConfigurationError(f"unknown config key {key!r}")
                settings[key] = int(value) if key in _INT_KEYS else value
    if settings["dataset_dir"] is None:
        settings["dataset_dir"] = os.environ.get(DATASET_DIR_ENV)
    for key in _RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if settings["render_size"] is None:
        has_crop = "crop" in str(settings["augment"]).split(",")
        settings["render_size"] = CROP_RENDER_SIZE if has_crop else DEFAULT_RENDER_SIZE
    return settings


def _echo_config(settings: dict, out_dir: Path) -> None:
    parser = configparser.ConfigParser()
    parser["meta"] = {"schema_version": str(CONFIG_SCHEMA_VERSION)}
    parser["run"] = {k: str(settings[k]) for k in _RUN_KEYS if settings[k] is not None}
    with open(out_dir / "effective.cfg", "w") as fh:
        parser.write(fh)


def _build_run_config(settings: dict) -> RunConfig:
    return RunConfig(
        dims=GridDims.parse(settings["dims"]),
        pool_size=int(settings["pool_size"]),
        obs=ObsSpec(Modality(settings["modality"]), int(settings["render_size"])),
        num_envs=int(settings["num_envs"]),
        max_episode_steps=int(settings["max_episode_steps"]),
        total_step_cap=int(settings["total_steps"]),
        seed=int(settings["seed"]),
        augments=parse_augments(settings["augment"]) if settings["augment"] else (),
    )


def _build_pool(settings: dict, config: RunConfig):
    if config.obs.modality != Modality.IMAGE:
        return None
    if not settings["dataset_dir"]:
        raise ConfigurationError(
            f"image modality needs --dataset-dir or ${DATASET_DIR_ENV}"
        )
    return load_pool(
        settings["dataset_dir"],
        p=config.pool_size,
        render_size=config.obs.render_size,
        pool_seed=int(settings["pool_seed"]),
    )


def _build_policy(settings: dict) -> Policy:
    name = settings["policy"]
    if name == "random":
        return RandomPolicy()
    if name == "solver":
        return SolverPolicy()
    if name == "scripted":
        try:
            actions = [Action[a.strip().upper()]
                       for a in settings["actions"].split(",") if a.strip()]
        except KeyError as exc:
            raise ConfigurationError(f"unknown action name {exc.args[0]!r}") from exc
        return ScriptedPolicy(actions)
    return MemorizerPolicy()


def cmd_enumerate(args) -> int:
    dims = GridDims.parse(args.dims or "3x3")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = bfs_enumerate(dims)
    report.save_json(out_dir / "enumeration.json")
    report.save_csv(out_dir / "depth_histogram.csv")
    print(
        f"{dims}: {report.state_count} reachable states, "
        f"mean optimal length {report.mean_optimal_length:.4f}, "
        f"max depth {report.max_depth}"
    )
    return 0


def cmd_solve(args) -> int:
    state = PuzzleState.from_text(args.state)
    if not is_solvable(state):
        raise DomainError(f"state {args.state!r} is not solvable")
    result = ida_star(state, node_budget=args.budget)
    if result.length == 0:
        print("0 moves")
    else:
        print(f"{result.length} moves: " + " ".join(a.name for a in result.path))
    print(f"nodes expanded: {result.nodes_expanded}")
    return 0


def cmd_play(args) -> int:
    settings = _effective_settings(args)
    config = _build_run_config(settings)
    pool = _build_pool(settings, config)
    policy = _build_policy(settings)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(settings, out_dir)

    report, logs = run_batch(config, policy, pool)
    with open(out_dir / "episodes.jsonl", "w") as fh:
        for log in logs:
            fh.write(log.to_json_line() + "\n")
    report.save_json(out_dir / "metrics.json")
    report.save_csv(out_dir / "metrics.csv")
    if pool is not None:
        pool.save_manifest(out_dir / "pool_manifest.txt")
    print(
        f"episodes={report.episodes} success_rate={report.success_rate:.3f} "
        f"steps={report.total_steps} "
        f"steps_to_threshold={report.steps_to_threshold}"
        f"{' (censored)' if report.censored else ''}"
    )
    return 0


def cmd_eval_ood(args) -> int:
    settings = _effective_settings(args)
    config = _build_run_config(settings)
    if config.obs.modality != Modality.IMAGE:
        raise ConfigurationError("OOD evaluation needs the image modality")
    pool = _build_pool(settings, config)
    policy = _build_policy(settings)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(settings, out_dir)

    if isinstance(policy, MemorizerPolicy):
        train_cfg = RunConfig(
            dims=config.dims, pool_size=config.pool_size, obs=config.obs,
            num_envs=1, max_episode_steps=config.max_episode_steps,
            total_step_cap=config.total_step_cap, seed=config.seed,
        )
        rng = RandomSource(config.seed, key=(9,))
        for _ in range(int(settings["memorizer_train_episodes"])):
            run_episode(train_cfg, policy, pool, rng)
        policy.freeze()

    episodes = args.episodes
    easy = eval_ood_easy(config, policy, pool, episodes_per_augment=episodes)
    with open(out_dir / "ood_easy.json", "w") as fh:
        json.dump(easy, fh, indent=2, sort_keys=True)
        fh.write("\n")

    result = {"easy": easy}
    if settings["heldout_dir"]:
        hard = eval_ood_hard(config, policy, pool, settings["heldout_dir"],
                             episodes=episodes)
        with open(out_dir / "ood_hard.json", "w") as fh:
            json.dump(hard, fh, indent=2, sort_keys=True)
            fh.write("\n")
        result["hard"] = hard
        print(f"easy overall={easy['success']['overall']:.3f} "
              f"hard={hard['success_rate']:.3f}")
    else:
        print(f"easy overall={easy['success']['overall']:.3f}")
    return 0


def cmd_render(args) -> int:
    render_size = args.render_size or DEFAULT_RENDER_SIZE
    image = decode_image(args.image, render_size)
    rng = RandomSource(args.seed or 0)
    if args.state == "-":
        out = image  # pass-through: augment an already-composed image
    else:
        out = render_image_obs(PuzzleState.from_text(args.state), image)
    if args.augment:
        # Pin to the 8-bit grid first so piped augmentations (e.g. a double
        # inversion across two invocations) compose exactly in PNG space.
        out = (np.round(out.astype(np.float64) * 255) / 255).astype(np.float32)
        for spec in parse_augments(args.augment):
            out = spec.apply(out, rng)
    save_png(out, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spgym",
        description="Sliding-puzzle environment engine, solver, and evaluation harness",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("enumerate", help="exhaustively enumerate the reachable state space")
    p.add_argument("--dims", default="3x3")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enumerate)

    p = subs.add_parser("solve", help="optimally solve one instance")
    p.add_argument("state", help='state text, e.g. "3,3:1,2,3,4,5,6,7,0,8"')
    p.add_argument("--budget", type=int, default=100_000_000)
    p.set_defaults(func=cmd_solve)

    p = subs.add_parser("play", help="run a policy and record logs + metrics")
    _add_run_flags(p)
    p.set_defaults(func=cmd_play)

    p = subs.add_parser("eval-ood", help="easy/hard out-of-distribution protocols")
    _add_run_flags(p)
    p.add_argument("--episodes", type=int, default=100,
                   help="episodes per augmentation and for the hard protocol")
    p.set_defaults(func=cmd_eval_ood)

    p = subs.add_parser("render", help="compose a state onto an image and save a PNG")
    p.add_argument("state", help='state text, or "-" to augment the image as-is')
    p.add_argument("image", help="source PNG/JPEG")
    p.add_argument("--out", required=True)
    p.add_argument("--augment")
    p.add_argument("--render-size", type=int, dest="render_size")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
