"""Desk-scale toy quadruped environment.

The environment keeps exactly what the gait rewards read: forward
progress, a power scalar, and per-foot heights. Actions are target
contact patterns (one bit per foot, bit set = lift that foot); a
commanded foot settles in a single step, so the contact pattern is the
whole observable state and tabular learners apply directly.

Dynamics per step:
  - a lifted foot reaches ``lift_height``, a dropped foot returns to 0;
  - the base advances by ``stride_gain`` iff at least two feet stay
    planted and the airborne set changed this step;
  - power is ``lift_power_cost`` per airborne foot;
  - fewer than two planted feet is a stumble: no progress and, when
    ``stumble_terminates``, the episode ends;
  - the episode truncates after ``episode_length`` actions.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

from .guards import ALL_LABEL_SETS, LabelSet, PROP_ORDER


class InvalidConfigError(ValueError):
    """Environment configuration violates a construction invariant."""


class EpisodeFinishedError(RuntimeError):
    """step() was called on a terminated or truncated episode."""


class FootPhase(enum.Enum):
    PLANTED = "planted"
    LIFTING = "lifting"


@dataclass(frozen=True, slots=True)
class FootState:
    """Height above ground (0 when planted) and the commanded phase."""

    height: float
    phase: FootPhase


@dataclass(frozen=True, slots=True)
class ToyEnvConfig:
    clearance: float = 0.05
    lift_height: float = 0.10
    stride_gain: float = 0.05
    lift_power_cost: float = 5.0
    episode_length: int = 100
    stumble_terminates: bool = True
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.clearance <= 0.0:
            raise InvalidConfigError(f"clearance must be > 0, got {self.clearance}")
        if self.lift_height < self.clearance:
            raise InvalidConfigError(
                f"lift_height {self.lift_height} is below clearance "
                f"{self.clearance}; no foot could ever register as airborne"
            )
        if self.stride_gain < 0.0:
            raise InvalidConfigError(f"stride_gain must be >= 0, got {self.stride_gain}")
        if self.lift_power_cost < 0.0:
            raise InvalidConfigError(
                f"lift_power_cost must be >= 0, got {self.lift_power_cost}"
            )
        if self.episode_length <= 0:
            raise InvalidConfigError(
                f"episode_length must be positive, got {self.episode_length}"
            )


@dataclass(frozen=True, slots=True)
class StepInfo:
    """Per-step physical outcome read by the reward functions.

    ``power`` is the precomputed mechanical power scalar; adapters with
    access to raw joint data may instead supply ``torques`` and
    ``joint_velocities``, which take precedence in the walk reward.
    """

    delta_x: float
    power: float
    foot_heights: tuple[float, float, float, float]
    terminated: bool
    truncated: bool
    torques: tuple[float, ...] | None = None
    joint_velocities: tuple[float, ...] | None = None


@dataclass(frozen=True, slots=True)
class ToyEnvState:
    feet: tuple[FootState, FootState, FootState, FootState]
    base_x: float
    prev_base_x: float
    fallen: bool
    step_count: int

    @property
    def airborne(self) -> LabelSet:
        code = 0
        for i, foot in enumerate(self.feet):
            if foot.phase is FootPhase.LIFTING:
                code |= 1 << i
        return ALL_LABEL_SETS[code]

    @property
    def foot_heights(self) -> tuple[float, float, float, float]:
        return tuple(f.height for f in self.feet)  # type: ignore[return-value]


_PLANTED_FOOT = FootState(0.0, FootPhase.PLANTED)


@functools.lru_cache(maxsize=None)
def _settled_feet(lift_height: float) -> tuple:
    """Feet tuples indexed by commanded airborne code; settling takes a
    single step, so the outcome depends only on the command."""
    lifted = FootState(lift_height, FootPhase.LIFTING)
    return tuple(
        tuple(
            lifted if code >> prop.value & 1 else _PLANTED_FOOT
            for prop in PROP_ORDER
        )
        for code in range(16)
    )


def reset(config: ToyEnvConfig, seed: int | None = None) -> ToyEnvState:
    """Initial rest state: all feet planted at the origin.

    The dynamics are deterministic; ``seed`` is accepted for interface
    symmetry with stochastic environments and does not alter the state.
    """
    del seed
    return ToyEnvState(
        feet=(_PLANTED_FOOT,) * 4,
        base_x=0.0,
        prev_base_x=0.0,
        fallen=False,
        step_count=0,
    )


def is_terminated(state: ToyEnvState, config: ToyEnvConfig) -> bool:
    return state.fallen and config.stumble_terminates


def is_truncated(state: ToyEnvState, config: ToyEnvConfig) -> bool:
    return state.step_count >= config.episode_length


def _action_code(action: int | LabelSet) -> int:
    if isinstance(action, LabelSet):
        return action.code
    if not 0 <= action < 16:
        raise ValueError(f"action code must be in [0, 16), got {action}")
    return action


def step(
    state: ToyEnvState, action: int | LabelSet, config: ToyEnvConfig
) -> tuple[ToyEnvState, StepInfo]:
    """Apply one target contact pattern; returns the settled state and
    the step's physical outcome."""
    if is_terminated(state, config) or is_truncated(state, config):
        raise EpisodeFinishedError(
            "episode already finished; reset before stepping again"
        )
    commanded = ALL_LABEL_SETS[_action_code(action)]
    previous_airborne = state.airborne

    feet = _settled_feet(config.lift_height)[commanded.code]
    n_airborne = len(commanded)
    n_planted = 4 - n_airborne
    stumbled = n_planted < 2
    changed = commanded != previous_airborne

    # Balanced support = at least two planted feet; a stumble never advances.
    delta_x = config.stride_gain if (changed and not stumbled) else 0.0
    power = config.lift_power_cost * n_airborne
    step_count = state.step_count + 1
    terminated = stumbled and config.stumble_terminates
    truncated = step_count >= config.episode_length

    next_state = ToyEnvState(
        feet=feet,  # type: ignore[arg-type]
        base_x=state.base_x + delta_x,
        prev_base_x=state.base_x,
        fallen=stumbled,
        step_count=step_count,
    )
    info = StepInfo(
        delta_x=delta_x,
        power=power,
        foot_heights=next_state.foot_heights,
        terminated=terminated,
        truncated=truncated,
    )
    return next_state, info


def label(
    source: StepInfo | ToyEnvState | tuple[float, float, float, float],
    clearance: float,
) -> LabelSet:
    """Labeling function: a foot's proposition is true iff its height is
    at least ``clearance`` above the ground."""
    if isinstance(source, StepInfo):
        heights = source.foot_heights
    elif isinstance(source, ToyEnvState):
        heights = source.foot_heights
    else:
        heights = source
    code = 0
    for i, h in enumerate(heights):
        if h >= clearance:
            code |= 1 << i
    return ALL_LABEL_SETS[code]


def observe(state: ToyEnvState, config: ToyEnvConfig) -> int:
    """Canonical discrete observation: the contact pattern as a 4-bit
    code (bit set = foot in the air), FL=bit0, FR=bit1, BL=bit2, BR=bit3."""
    del config
    return state.airborne.code


def observe_rich(state: ToyEnvState, config: ToyEnvConfig) -> dict:
    """Richer observation for non-tabular learners; the tabular key
    remains the 4-bit code."""
    return {
        "pattern": observe(state, config),
        "foot_heights": state.foot_heights,
        "last_delta_x": state.base_x - state.prev_base_x,
    }


class ToyQuadrupedEnv:
    """Stateful shell over the functional dynamics.

    Single-threaded; run one instance per training run. Distinct
    instances are independent.
    """

    def __init__(self, config: ToyEnvConfig | None = None):
        self.config = config if config is not None else ToyEnvConfig()
        self._state = reset(self.config)

    @property
    def state(self) -> ToyEnvState:
        return self._state

    def reset(self, seed: int | None = None) -> int:
        self._state = reset(self.config, seed)
        return observe(self._state, self.config)

    def step(self, action: int | LabelSet) -> tuple[int, StepInfo]:
        self._state, info = step(self._state, action, self.config)
        return observe(self._state, self.config), info

    def set_state(self, state: ToyEnvState) -> None:
        self._state = state
