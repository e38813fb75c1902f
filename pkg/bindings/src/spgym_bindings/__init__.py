"""Gym-style bindings for the sliding-puzzle engine.

``make(**config)`` is the single constructor; the returned handle follows the
widely adopted environment API shape: ``reset(seed=...) -> (obs, info)`` and
``step(action) -> (obs, reward, terminated, truncated, info)``.  Actions are
integers 0..3 in the fixed order UP, DOWN, LEFT, RIGHT.  Observations cross
the boundary as C-contiguous little-endian float32 arrays.

A handle with seed s steps exactly like environment instance 0 of an engine
batch run with the same seed, so traces line up element-for-element with the
engine's own logs.
"""

from __future__ import annotations

import numpy as np

from spgym import (
    Action,
    ConfigurationError,
    GridDims,
    Modality,
    ObsSpec,
    PuzzleEnv,
    RandomSource,
    RunConfig,
    load_pool,
    parse_augments,
)

__all__ = ["make", "EnvHandle", "ACTION_NAMES", "ClosedHandleError"]

ACTION_NAMES = ("UP", "DOWN", "LEFT", "RIGHT")

_CONFIG_KEYS = (
    "dims", "pool_size", "pool_seed", "seed", "max_episode_steps",
    "modality", "render_size", "augment", "dataset_dir", "blank_fill",
)


class ClosedHandleError(RuntimeError):
    """The handle was closed; create a new one with make()."""


def _parse_dims(value) -> GridDims:
    if isinstance(value, GridDims):
        return value
    if isinstance(value, str):
        return GridDims.parse(value)
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return GridDims(int(value[0]), int(value[1]))
    raise ConfigurationError(f"dims: expected 'HxW' or (H, W), got {value!r}")


def make(**config) -> "EnvHandle":
    """Build an environment handle from a flat config mapping.

    Keys: dims, pool_size, pool_seed, seed, max_episode_steps, modality,
    render_size, augment, dataset_dir, blank_fill.  Unknown keys and unusable
    values raise ConfigurationError naming the offending field.
    """
    unknown = set(config) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"{sorted(unknown)[0]}: unknown config key")

    def field(name, default):
        return config.get(name, default)

    try:
        dims = _parse_dims(field("dims", "3x3"))
    except Exception as exc:
        raise ConfigurationError(f"dims: {exc}") from exc
    try:
        modality = Modality(field("modality", "image"))
    except ValueError as exc:
        raise ConfigurationError(f"modality: {exc}") from exc
    try:
        obs_spec = ObsSpec(modality, int(field("render_size", 84)))
    except Exception as exc:
        raise ConfigurationError(f"render_size: {exc}") from exc
    augment = field("augment", "")
    try:
        augments = parse_augments(augment) if augment else ()
    except Exception as exc:
        raise ConfigurationError(f"augment: {exc}") from exc

    try:
        run_config = RunConfig(
            dims=dims,
            pool_size=int(field("pool_size", 1)),
            obs=obs_spec,
            num_envs=1,
            max_episode_steps=int(field("max_episode_steps", 1000)),
            seed=int(field("seed", 0)),
            augments=augments,
            blank_fill=str(field("blank_fill", "black")),
        )
    except ConfigurationError:
        raise
    except Exception as exc:
        raise ConfigurationError(f"config: {exc}") from exc

    pool = None
    if modality == Modality.IMAGE:
        dataset_dir = field("dataset_dir", None)
        if not dataset_dir:
            raise ConfigurationError("dataset_dir: required for the image modality")
        pool = load_pool(
            dataset_dir,
            p=run_config.pool_size,
            render_size=obs_spec.render_size,
            pool_seed=int(field("pool_seed", 0)),
        )
    return EnvHandle(run_config, pool)


class EnvHandle:
    """Single-owner environment instance; not shareable across threads."""

    def __init__(self, config: RunConfig, pool=None):
        self._config = config
        self._pool = pool
        # key (0,) mirrors environment instance 0 of an engine batch run
        self._env = PuzzleEnv(config, RandomSource(config.seed, key=(0,)), pool)
        self._closed = False
        self._needs_reset = True

    @property
    def action_count(self) -> int:
        return 4

    @property
    def observation_shape(self) -> tuple[int, ...]:
        n = self._config.dims.n
        s = self._config.obs.render_size
        if self._config.obs.modality == Modality.IMAGE:
            return (s, s, 3)
        if self._config.obs.modality == Modality.ONEHOT:
            return (n, n)
        return (n,)

    def _check_open(self):
        if self._closed:
            raise ClosedHandleError("environment handle is closed")

    def reset(self, seed: int | None = None):
        """Start a new episode; optionally reseed the handle's stream."""
        self._check_open()
        if seed is not None:
            self._env = PuzzleEnv(self._config, RandomSource(int(seed), key=(0,)),
                                  self._pool)
        obs, info = self._env.reset()
        self._needs_reset = False
        return self._export(obs), dict(info)

    def step(self, action: int):
        self._check_open()
        if self._needs_reset:
            raise RuntimeError("call reset() before step()")
        if not 0 <= int(action) <= 3:
            raise ValueError(f"action must be 0..3, got {action!r}")
        obs, reward, terminated, truncated, info = self._env.step(Action(int(action)))
        if terminated or truncated:
            self._needs_reset = True
        return self._export(obs), float(reward), bool(terminated), bool(truncated), dict(info)

    def close(self) -> None:
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    @staticmethod
    def _export(obs) -> np.ndarray:
        return np.ascontiguousarray(obs, dtype="<f4")
