"""Sliding-puzzle environment engine, optimal solver, and evaluation harness."""

from .augment import (
    AUGMENT_NAMES,
    AugmentSpec,
    adjust_brightness,
    adjust_contrast,
    adjust_hue,
    adjust_saturation,
    apply_augments,
    channel_shuffle,
    color_jitter,
    crop,
    grayscale,
    invert,
    parse_augments,
    shift,
    standard_pipeline,
)
from .core import (
    Action,
    GridDims,
    PuzzleState,
    StepOutcome,
    apply_action,
    apply_move,
    goal_position,
    inversion_count,
    is_solvable,
    is_solved,
    manhattan_sum,
    normalized_manhattan,
    reward_denominator,
    sample_uniform_solvable,
    shuffle_from_solved,
    solved_tiles,
    valid_actions,
)
from .errors import ConfigurationError, DomainError
from .harness import (
    EpisodeLog,
    MemorizerPolicy,
    MetricsReport,
    Policy,
    PuzzleEnv,
    RandomPolicy,
    RunConfig,
    ScriptedPolicy,
    aggregate_reports,
    eval_ood_easy,
    eval_ood_hard,
    export_probe_dataset,
    run_batch,
    run_episode,
)
from .observation import (
    ImagePool,
    Modality,
    ObsSpec,
    decode_image,
    decode_onehot,
    load_pool,
    make_observation,
    partition_patches,
    read_tensor,
    read_tensor_file,
    render_image_obs,
    render_onehot_obs,
    render_state_obs,
    resize_bilinear,
    save_png,
    select_episode_image,
    write_tensor,
)
from .rng import RandomSource
from .solver import (
    EnumerationReport,
    NodeBudgetExceeded,
    SolveResult,
    SolverPolicy,
    bfs_distances,
    bfs_enumerate,
    ida_star,
    manhattan_heuristic,
    pack_tiles,
    unpack_tiles,
)

__version__ = "0.1.0"

__all__ = [
    "AUGMENT_NAMES",
    "Action",
    "AugmentSpec",
    "ConfigurationError",
    "DomainError",
    "EnumerationReport",
    "EpisodeLog",
    "GridDims",
    "ImagePool",
    "MemorizerPolicy",
    "MetricsReport",
    "Modality",
    "NodeBudgetExceeded",
    "ObsSpec",
    "Policy",
    "PuzzleEnv",
    "PuzzleState",
    "RandomPolicy",
    "RandomSource",
    "RunConfig",
    "ScriptedPolicy",
    "SolveResult",
    "SolverPolicy",
    "StepOutcome",
    "adjust_brightness",
    "adjust_contrast",
    "adjust_hue",
    "adjust_saturation",
    "aggregate_reports",
    "apply_action",
    "apply_augments",
    "apply_move",
    "bfs_distances",
    "bfs_enumerate",
    "channel_shuffle",
    "color_jitter",
    "crop",
    "decode_image",
    "decode_onehot",
    "eval_ood_easy",
    "eval_ood_hard",
    "export_probe_dataset",
    "goal_position",
    "grayscale",
    "ida_star",
    "invert",
    "inversion_count",
    "is_solvable",
    "is_solved",
    "load_pool",
    "make_observation",
    "manhattan_heuristic",
    "manhattan_sum",
    "normalized_manhattan",
    "pack_tiles",
    "parse_augments",
    "partition_patches",
    "read_tensor",
    "read_tensor_file",
    "render_image_obs",
    "render_onehot_obs",
    "render_state_obs",
    "resize_bilinear",
    "reward_denominator",
    "run_batch",
    "run_episode",
    "sample_uniform_solvable",
    "save_png",
    "select_episode_image",
    "shift",
    "shuffle_from_solved",
    "solved_tiles",
    "standard_pipeline",
    "unpack_tiles",
    "valid_actions",
    "write_tensor",
]
