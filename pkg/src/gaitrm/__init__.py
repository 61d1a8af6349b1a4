"""Gait specification via guarded reward automata, a desk-scale toy
quadruped environment, and a tabular cross-product learner."""

from .guards import (
    ALL_LABEL_SETS,
    And,
    EMPTY_LABEL_SET,
    Guard,
    GuardSyntaxError,
    LabelSet,
    Lit,
    Not,
    Or,
    Prop,
    UnknownPropositionError,
    eval_guard,
    parse_guard,
    render_guard,
    satisfying_sets,
    semantically_equal,
    truth_table,
)
from .machine import (
    Gait,
    RewardMachine,
    RewardParams,
    RewardSpec,
    RmFormatError,
    RmState,
    RmStepError,
    RmValidationWarning,
    SwitchPoseBonus,
    Transition,
    ValidationReport,
    Walk,
    build_gait_rm,
    compute_reward,
    load_rm,
    rm_step,
    save_rm,
    transition_table,
    validate,
)
from .env import (
    EpisodeFinishedError,
    FootPhase,
    FootState,
    InvalidConfigError,
    StepInfo,
    ToyEnvConfig,
    ToyEnvState,
    ToyQuadrupedEnv,
    label,
    observe,
    observe_rich,
    reset,
    step,
)
from .wrappers import (
    AugmentedWrapper,
    CrossProductObservation,
    CrossProductWrapper,
    GaitEnvWrapper,
    GaitShape,
    GaitShapeError,
    MilestoneLatch,
    NaiveWrapper,
    NoGaitWrapper,
    Stack3Wrapper,
    WrapperKind,
    base_pattern,
    gait_shape,
    make_wrapper,
    oracle_reward_step,
)
from .learn import (
    EvalMetrics,
    LearnerConfig,
    PoseTransitionTracker,
    QTable,
    ReferenceGaitPolicy,
    Rollout,
    RolloutStep,
    discretize,
    evaluate,
    greedy_action,
    key_space_size,
    q_update,
    rollout,
    train,
)

__version__ = "0.1.0"
