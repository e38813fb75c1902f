"""Episode execution, policies, metrics, and the OOD evaluation protocols.

A run drives ``num_envs`` environment instances round-robin until the total
step cap, recording one JSON-serializable log per episode.  Sample efficiency
is measured as the step count at which the trailing per-environment success
indicator first averages 0.8; runs that never cross report the cap and are
flagged censored.  Training-style runs stop early after 100 consecutive fully
successful episodes.

OOD-Easy re-evaluates a fixed policy for exactly 100 episodes under each
augmentation, on the training pool; OOD-Hard runs 100 episodes on images from
a held-out directory whose source ids must not overlap the training pool.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, replace

import numpy as np

from .augment import AUGMENT_NAMES, AugmentSpec, apply_augments
from .core import (
    Action,
    GridDims,
    PuzzleState,
    apply_action,
    sample_uniform_solvable,
    shuffle_from_solved,
)
from .errors import ConfigurationError, DomainError
from .observation import (
    ImagePool,
    Modality,
    ObsSpec,
    load_pool,
    make_observation,
    render_onehot_obs,
    select_episode_image,
    write_tensor,
)
from .rng import RandomSource
from .solver import SolverPolicy

LOG_SCHEMA_VERSION = 1

SUCCESS_THRESHOLD = 0.8


@dataclass(frozen=True)
class RunConfig:
    dims: GridDims = GridDims(3, 3)
    pool_size: int = 1
    obs: ObsSpec = ObsSpec()
    num_envs: int = 64
    max_episode_steps: int = 1000
    total_step_cap: int = 10_000_000
    seed: int = 0
    augments: tuple[AugmentSpec, ...] = ()
    early_term_window: int = 100
    include_blank_reward: bool = True
    init_method: str = "uniform"  # or "shuffle" for curriculum-style starts
    shuffle_moves: int = 100
    blank_fill: str = "black"

    def __post_init__(self):
        if self.num_envs < 1:
            raise ConfigurationError("num_envs must be >= 1")
        if self.max_episode_steps < 1 or self.total_step_cap < 1:
            raise ConfigurationError("step caps must be positive")
        if self.pool_size < 1:
            raise ConfigurationError("pool_size must be >= 1")
        if self.init_method not in ("uniform", "shuffle"):
            raise ConfigurationError(f"unknown init_method {self.init_method!r}")
        if self.augments and self.obs.modality != Modality.IMAGE:
            raise ConfigurationError("augmentations apply to the image modality only")


@dataclass
class EpisodeLog:
    seed: str
    image_index: int | None
    start_state: str
    actions: list[str]
    rewards: list[float]
    length: int
    solved: bool
    aborted: bool = False
    run_truncated: bool = False

    def to_json_dict(self) -> dict:
        return {
            "schema_version": LOG_SCHEMA_VERSION,
            "seed": self.seed,
            "image_index": self.image_index,
            "start_state": self.start_state,
            "actions": self.actions,
            "rewards": self.rewards,
            "length": self.length,
            "solved": self.solved,
            "aborted": self.aborted,
            "run_truncated": self.run_truncated,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class MetricsReport:
    seed: int
    success_rate: float
    steps_to_threshold: int
    censored: bool
    mean_episode_length: float
    episodes: int
    total_steps: int
    early_terminated: bool

    def to_json_dict(self) -> dict:
        d = dict(self.__dict__)
        d["steps_to_threshold_millions"] = self.steps_to_threshold / 1e6
        return d

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def save_csv(self, path) -> None:
        d = self.to_json_dict()
        keys = sorted(d)
        with open(path, "w") as fh:
            fh.write(",".join(keys) + "\n")
            fh.write(",".join(str(d[k]) for k in keys) + "\n")


def aggregate_reports(reports) -> dict:
    """Across-seed mean and 1.96-standard-error half-width per metric."""
    if not reports:
        raise DomainError("nothing to aggregate")
    out = {}
    for key in ("success_rate", "steps_to_threshold", "mean_episode_length"):
        values = [float(getattr(r, key)) for r in reports]
        mean = statistics.fmean(values)
        if len(values) > 1:
            half = 1.96 * statistics.stdev(values) / len(values) ** 0.5
        else:
            half = 0.0
        out[key] = {"mean": mean, "ci95": half}
    out["runs"] = len(reports)
    return out


class Policy:
    """Maps (observation, ground-truth state, env stream) to an Action.

    The state argument exists for oracle and diagnostic policies; pixel
    policies must ignore it.
    """

    def reset(self) -> None:
        pass

    def select_action(self, obs, state: PuzzleState, rng: RandomSource) -> Action:
        raise NotImplementedError


class RandomPolicy(Policy):
    def select_action(self, obs, state, rng):
        return Action(rng.integers(4))


class ScriptedPolicy(Policy):
    """Cycles through a fixed action sequence, ignoring observations."""

    def __init__(self, actions, restart_each_episode: bool = False):
        self.actions = [Action(a) for a in actions]
        if not self.actions:
            raise DomainError("scripted policy needs at least one action")
        self.restart_each_episode = restart_each_episode
        self._i = 0

    def reset(self):
        if self.restart_each_episode:
            self._i = 0

    def select_action(self, obs, state, rng):
        action = self.actions[self._i % len(self.actions)]
        self._i += 1
        return action


class MemorizerPolicy(Policy):
    """Diagnostic pixel-keyed lookup: optimal on renders it has memorized.

    While training, it plays (and records) a solver action for every exact
    observation byte pattern it sees.  Frozen, it answers only from the table
    and falls back to a fixed action on any unseen render, which is what drives
    it to chance-level performance on novel images.
    """

    def __init__(self, fallback: Action = Action.UP):
        self.fallback = fallback
        self.training = True
        self.table: dict[bytes, Action] = {}
        self._solver = SolverPolicy()

    def freeze(self) -> None:
        self.training = False

    def select_action(self, obs, state, rng):
        key = np.ascontiguousarray(obs).tobytes()
        if self.training:
            action = self._solver.select_action(obs, state, rng)
            self.table[key] = action
            return action
        return self.table.get(key, self.fallback)


class PuzzleEnv:
    """Single environment instance: solvable start, one pool image per episode.

    Instances own their RandomSource and share nothing mutable, so distinct
    instances can be stepped from different threads.
    """

    def __init__(self, config: RunConfig, rng: RandomSource, pool: ImagePool | None = None):
        if config.obs.modality == Modality.IMAGE and pool is None:
            raise ConfigurationError("image modality needs an image pool")
        self.config = config
        self.rng = rng
        self.pool = pool
        self.state: PuzzleState | None = None
        self.image_index: int | None = None
        self.step_index = 0

    def reset(self):
        cfg = self.config
        if cfg.init_method == "uniform":
            self.state = sample_uniform_solvable(cfg.dims, self.rng)
        else:
            self.state = shuffle_from_solved(cfg.dims, cfg.shuffle_moves, self.rng)
        if cfg.obs.modality == Modality.IMAGE:
            self.image_index = select_episode_image(self.pool, self.rng)
        else:
            self.image_index = None
        self.step_index = 0
        return self._observe(), self._info()

    def step(self, action: Action):
        if self.state is None:
            raise DomainError("step() before reset()")
        outcome = apply_action(
            self.state, action, self.step_index, self.config.max_episode_steps,
            include_blank=self.config.include_blank_reward,
        )
        self.state = outcome.next_state
        self.step_index += 1
        return (
            self._observe(),
            outcome.reward,
            outcome.terminated,
            outcome.truncated,
            self._info(),
        )

    def _observe(self):
        cfg = self.config
        image = self.pool.images[self.image_index] if self.image_index is not None else None
        obs = make_observation(self.state, cfg.obs, image, cfg.blank_fill)
        if cfg.augments and cfg.obs.modality == Modality.IMAGE:
            obs = apply_augments(obs, cfg.augments, self.rng)
        return obs

    def _info(self) -> dict:
        return {"state": self.state.to_text(), "image_index": self.image_index}


def _drive_episode(env: PuzzleEnv, policy: Policy) -> EpisodeLog:
    obs, info = env.reset()
    policy.reset()
    log = EpisodeLog(
        seed=env.rng.describe(),
        image_index=env.image_index,
        start_state=info["state"],
        actions=[],
        rewards=[],
        length=0,
        solved=False,
    )
    while True:
        try:
            action = policy.select_action(obs, env.state, env.rng)
        except Exception:
            log.aborted = True
            return log
        obs, reward, terminated, truncated, info = env.step(action)
        log.actions.append(Action(action).name)
        log.rewards.append(reward)
        log.length += 1
        if terminated:
            log.solved = True
            return log
        if truncated:
            return log


def run_episode(config: RunConfig, policy: Policy, pool: ImagePool | None,
                rng: RandomSource) -> EpisodeLog:
    """One full episode under the given policy."""
    return _drive_episode(PuzzleEnv(config, rng, pool), policy)


def run_batch(config: RunConfig, policy: Policy, pool: ImagePool | None = None):
    """Round-robin batch run; returns (MetricsReport, list of EpisodeLog).

    Environment i draws from the keyed stream child(i) of the run seed, so the
    log stream is a pure function of (config, seed).  Partial episodes cut off
    by the run ending are flushed with run_truncated=True, keeping the step
    accounting exact: the lengths of all logs sum to total_steps.  A policy
    failure mid-episode aborts and logs that episode; a failure on an
    episode's first action is re-raised (it would loop without consuming
    steps).
    """
    cfg = config
    envs = [PuzzleEnv(cfg, RandomSource(cfg.seed, key=(i,)), pool) for i in range(cfg.num_envs)]
    obs = []
    partials = []
    for env in envs:
        o, info = env.reset()
        policy.reset()
        obs.append(o)
        partials.append(_new_partial(env, info))

    indicators = [0.0] * cfg.num_envs
    logs: list[EpisodeLog] = []
    total_steps = 0
    steps_to_threshold: int | None = None
    consecutive_solved = 0
    early = False

    while total_steps < cfg.total_step_cap and not early:
        for i, env in enumerate(envs):
            log = partials[i]
            try:
                action = policy.select_action(obs[i], env.state, env.rng)
            except Exception:
                if log.length == 0:
                    raise
                log.aborted = True
                logs.append(log)
                indicators[i] = 0.0
                consecutive_solved = 0
                obs[i], info = env.reset()
                policy.reset()
                partials[i] = _new_partial(env, info)
                continue
            o, reward, terminated, truncated, info = env.step(action)
            obs[i] = o
            total_steps += 1
            log.actions.append(Action(action).name)
            log.rewards.append(reward)
            log.length += 1
            if terminated or truncated:
                log.solved = terminated
                logs.append(log)
                indicators[i] = 1.0 if log.solved else 0.0
                consecutive_solved = consecutive_solved + 1 if log.solved else 0
                if steps_to_threshold is None and \
                        sum(indicators) / cfg.num_envs >= SUCCESS_THRESHOLD:
                    steps_to_threshold = total_steps
                if consecutive_solved >= cfg.early_term_window:
                    early = True
                obs[i], info = env.reset()
                policy.reset()
                partials[i] = _new_partial(env, info)
            if total_steps >= cfg.total_step_cap or early:
                break

    for log in partials:
        if log.length > 0:
            log.run_truncated = True
            logs.append(log)

    completed = [l for l in logs if not l.run_truncated]
    window = completed[-cfg.early_term_window:] if completed else []
    report = MetricsReport(
        seed=cfg.seed,
        success_rate=sum(l.solved for l in window) / len(window) if window else 0.0,
        steps_to_threshold=steps_to_threshold if steps_to_threshold is not None
        else cfg.total_step_cap,
        censored=steps_to_threshold is None,
        mean_episode_length=sum(l.length for l in window) / len(window) if window else 0.0,
        episodes=len(completed),
        total_steps=total_steps,
        early_terminated=early,
    )
    return report, logs


def _new_partial(env: PuzzleEnv, info: dict) -> EpisodeLog:
    return EpisodeLog(
        seed=env.rng.describe(),
        image_index=env.image_index,
        start_state=info["state"],
        actions=[],
        rewards=[],
        length=0,
        solved=False,
    )


OOD_EPISODES = 100


def eval_ood_easy(config: RunConfig, policy: Policy, train_pool: ImagePool,
                  augment_names=AUGMENT_NAMES, episodes_per_augment: int = OOD_EPISODES) -> dict:
    """Success rate under each augmentation, 100 episodes each, on training images.

    Augmentations are redrawn at every step, matching how they are applied to
    replayed training observations.
    """
    results = {}
    episode_counts = {}
    for k, name in enumerate(augment_names):
        cfg = replace(config, augments=(AugmentSpec(name),), num_envs=1)
        rng = RandomSource(cfg.seed, key=(1, k))
        solved = 0
        for _ in range(episodes_per_augment):
            log = run_episode(cfg, policy, train_pool, rng)
            solved += log.solved
        results[name] = solved / episodes_per_augment
        episode_counts[name] = episodes_per_augment
    results["overall"] = sum(results[n] for n in augment_names) / len(augment_names)
    return {"success": results, "episodes": episode_counts}


def eval_ood_hard(config: RunConfig, policy: Policy, train_pool: ImagePool,
                  heldout_dir, episodes: int = OOD_EPISODES) -> dict:
    """Success rate over 100 episodes on images never seen in training.

    Disjointness is enforced by source id: any overlap with the training pool
    is a configuration error.
    """
    from .observation import list_dataset

    available = list_dataset(heldout_dir)
    heldout = load_pool(
        heldout_dir,
        p=min(len(available), episodes),
        render_size=config.obs.render_size,
        pool_seed=config.seed,
    )
    overlap = set(heldout.source_ids) & set(train_pool.source_ids)
    if overlap:
        raise ConfigurationError(
            f"held-out images overlap the training pool: {sorted(overlap)[:5]}"
        )
    cfg = replace(config, num_envs=1, augments=())
    rng = RandomSource(cfg.seed, key=(2,))
    solved = 0
    for _ in range(episodes):
        log = run_episode(cfg, policy, heldout, rng)
        solved += log.solved
    return {"success_rate": solved / episodes, "episodes": episodes}


def export_probe_dataset(config: RunConfig, pool: ImagePool, n_samples: int,
                         out_path) -> int:
    """(observation, one-hot state) pairs for linear-probe training.

    Writes interleaved raw tensor records: observation, then its label, for
    each uniformly sampled solvable state rendered on a random pool image.
    """
    if config.obs.modality != Modality.IMAGE:
        raise ConfigurationError("probe export needs the image modality")
    rng = RandomSource(config.seed, key=(3,))
    with open(out_path, "wb") as fh:
        for _ in range(n_samples):
            state = sample_uniform_solvable(config.dims, rng)
            image = pool.images[select_episode_image(pool, rng)]
            obs = make_observation(state, config.obs, image, config.blank_fill)
            write_tensor(fh, obs)
            write_tensor(fh, render_onehot_obs(state))
    return n_samples
