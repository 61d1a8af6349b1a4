"""Environment wrappers: the cross-product construction plus the
baseline observation schemes, all reward-equivalent except no-gait.

The cross-product wrapper pairs the base observation with the automaton
state, making the gait reward Markovian. The naive, stacked and
augmented wrappers instead score steps with a history-based oracle that
latches the most recent milestone pose; their reward streams match the
cross-product stream step for step, they only differ in what the agent
gets to observe.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Any

from .env import StepInfo, ToyEnvConfig, ToyQuadrupedEnv, label
from .guards import Guard, LabelSet, truth_table
from .machine import (
    RewardMachine,
    RewardParams,
    RewardSpec,
    RmState,
    Walk,
    compute_reward,
    transition_table,
)


class WrapperKind(enum.Enum):
    CROSS_PRODUCT = "cross_product"
    NO_GAIT = "no_gait"
    NAIVE = "naive"
    STACK3 = "stack3"
    AUGMENTED = "augmented"


@dataclass(frozen=True, slots=True)
class CrossProductObservation:
    """Base environment observation paired with the automaton state."""

    base: int
    rm_state: RmState


class MilestoneLatch(enum.Enum):
    """Memory of the most recent milestone pose, if any."""

    NONE = "none"
    POSE_A = "pose_a"
    POSE_B = "pose_b"


class GaitShapeError(ValueError):
    """The machine is not a two-state gait machine."""


@dataclass(frozen=True)
class GaitShape:
    """The two-state gait structure extracted from a machine: the pose
    guards on the cross transitions and the reward specs on all four
    edges. ``mask_a``/``mask_b`` are 16-bit satisfying-set masks."""

    guard_a: Guard
    guard_b: Guard
    mask_a: int
    mask_b: int
    bonus_a: RewardSpec
    bonus_b: RewardSpec
    loop_q0: RewardSpec
    loop_q1: RewardSpec


@functools.lru_cache(maxsize=None)
def gait_shape(rm: RewardMachine) -> GaitShape:
    """Extract the gait structure, or raise GaitShapeError if the
    machine does not have exactly two states with one transition each
    way plus one self-loop each."""
    if len(rm.states) != 2:
        raise GaitShapeError(f"expected 2 states, found {len(rm.states)}")
    q0 = rm.initial
    (q1,) = tuple(s for s in rm.states if s != q0)
    forward = [t for t in rm.transitions_from(q0) if t.dst == q1]
    loop0 = [t for t in rm.transitions_from(q0) if t.dst == q0]
    backward = [t for t in rm.transitions_from(q1) if t.dst == q0]
    loop1 = [t for t in rm.transitions_from(q1) if t.dst == q1]
    if len(forward) != 1 or len(backward) != 1 or len(loop0) != 1 or len(loop1) != 1:
        raise GaitShapeError(
            "expected exactly one transition each way and one self-loop per state"
        )
    guard_a = forward[0].guard
    guard_b = backward[0].guard
    return GaitShape(
        guard_a=guard_a,
        guard_b=guard_b,
        mask_a=truth_table(guard_a),
        mask_b=truth_table(guard_b),
        bonus_a=forward[0].reward,
        bonus_b=backward[0].reward,
        loop_q0=loop0[0].reward,
        loop_q1=loop1[0].reward,
    )


def _latch_step(
    shape: GaitShape,
    latch: MilestoneLatch,
    code: int,
    info: StepInfo,
    params: RewardParams,
) -> tuple[float, MilestoneLatch]:
    if shape.mask_a >> code & 1 and latch is not MilestoneLatch.POSE_A:
        return compute_reward(shape.bonus_a, info, params), MilestoneLatch.POSE_A
    if shape.mask_b >> code & 1 and latch is MilestoneLatch.POSE_A:
        return compute_reward(shape.bonus_b, info, params), MilestoneLatch.POSE_B
    loop = shape.loop_q1 if latch is MilestoneLatch.POSE_A else shape.loop_q0
    return compute_reward(loop, info, params), latch


def oracle_reward_step(
    latch: MilestoneLatch,
    labels: LabelSet,
    info: StepInfo,
    rm: RewardMachine,
    params: RewardParams,
) -> tuple[float, MilestoneLatch]:
    """History-based reward without the automaton.

    A pose-A label pays the bonus unless pose A was already the latched
    milestone; a pose-B label pays only when pose A is latched (there is
    no fresh-start allowance on the B side). Everything else earns the
    walking reward and leaves the latch alone.
    """
    return _latch_step(gait_shape(rm), latch, labels.code, info, params)


def base_pattern(observation: Any) -> int:
    """The current 4-bit contact pattern under any wrapper's observation."""
    if isinstance(observation, int):
        return observation
    if isinstance(observation, CrossProductObservation):
        return observation.base
    if isinstance(observation, tuple):
        if len(observation) == 3:
            return observation[-1]
        if len(observation) == 5:
            return observation[0]
    raise TypeError(f"unrecognized observation: {observation!r}")


class GaitEnvWrapper:
    """Shared wrapper shell: owns the environment instance and the
    wrapper-specific reward/observation state. One instance per run."""

    kind: WrapperKind

    def __init__(self, env: ToyQuadrupedEnv | None = None):
        self.env = env if env is not None else ToyQuadrupedEnv()

    @property
    def config(self) -> ToyEnvConfig:
        return self.env.config

    @property
    def machine(self) -> RewardMachine | None:
        return None

    def reset(self, seed: int | None = None) -> Any:
        raise NotImplementedError

    def step(self, action: int | LabelSet) -> tuple[Any, float, bool, bool, StepInfo]:
        raise NotImplementedError

    def snapshot(self) -> tuple:
        raise NotImplementedError

    def restore(self, snap: tuple) -> None:
        raise NotImplementedError

    def clone(self) -> "GaitEnvWrapper":
        raise NotImplementedError


class CrossProductWrapper(GaitEnvWrapper):
    """Observations live in (environment observation) x (machine state);
    rewards come from the machine's transitions."""

    kind = WrapperKind.CROSS_PRODUCT

    def __init__(
        self,
        env: ToyQuadrupedEnv | None = None,
        rm: RewardMachine | None = None,
        params: RewardParams | None = None,
    ):
        super().__init__(env)
        if rm is None:
            raise ValueError("cross-product wrapper requires a reward machine")
        self.rm = rm
        self.params = params if params is not None else RewardParams()
        self._table = transition_table(rm)
        self._u = rm.initial

    @property
    def machine(self) -> RewardMachine:
        return self.rm

    @property
    def rm_state(self) -> RmState:
        return self._u

    def reset(self, seed: int | None = None) -> CrossProductObservation:
        base = self.env.reset(seed)
        self._u = self.rm.initial
        return CrossProductObservation(base, self._u)

    def step(
        self, action: int | LabelSet
    ) -> tuple[CrossProductObservation, float, bool, bool, StepInfo]:
        base, info = self.env.step(action)
        labels = label(info, self.config.clearance)
        dst, spec = self._table[(self._u.index, labels.code)]
        reward = compute_reward(spec, info, self.params)
        self._u = dst
        terminated = info.terminated or dst in self.rm.accepting
        return (
            CrossProductObservation(base, dst),
            reward,
            terminated,
            info.truncated,
            info,
        )

    def snapshot(self) -> tuple:
        return (self.env.state, self._u)

    def restore(self, snap: tuple) -> None:
        state, u = snap
        self.env.set_state(state)
        self._u = u

    def clone(self) -> "CrossProductWrapper":
        return CrossProductWrapper(
            ToyQuadrupedEnv(self.config), self.rm, self.params
        )


class NoGaitWrapper(GaitEnvWrapper):
    """Plain walking reward on the base observation; no machine."""

    kind = WrapperKind.NO_GAIT

    def __init__(
        self,
        env: ToyQuadrupedEnv | None = None,
        params: RewardParams | None = None,
    ):
        super().__init__(env)
        self.params = params if params is not None else RewardParams()
        self._walk = Walk()

    def reset(self, seed: int | None = None) -> int:
        return self.env.reset(seed)

    def step(self, action: int | LabelSet) -> tuple[int, float, bool, bool, StepInfo]:
        base, info = self.env.step(action)
        reward = compute_reward(self._walk, info, self.params)
        return base, reward, info.terminated, info.truncated, info

    def snapshot(self) -> tuple:
        return (self.env.state,)

    def restore(self, snap: tuple) -> None:
        self.env.set_state(snap[0])

    def clone(self) -> "NoGaitWrapper":
        return NoGaitWrapper(ToyQuadrupedEnv(self.config), self.params)


class _LatchRewardWrapper(GaitEnvWrapper):
    """Shared core for the baselines that score with the milestone-latch
    oracle instead of the automaton. The observation process of these
    wrappers is non-Markovian: the reward depends on the latch, which the
    agent never sees."""

    def __init__(
        self,
        env: ToyQuadrupedEnv | None = None,
        rm: RewardMachine | None = None,
        params: RewardParams | None = None,
    ):
        super().__init__(env)
        if rm is None:
            raise ValueError(f"{type(self).__name__} requires a reward machine")
        self.rm = rm
        self.params = params if params is not None else RewardParams()
        self._shape = gait_shape(rm)
        self._latch = MilestoneLatch.NONE

    @property
    def machine(self) -> RewardMachine:
        return self.rm

    @property
    def latch(self) -> MilestoneLatch:
        return self._latch

    def _reset_observation(self, base: int) -> Any:
        return base

    def _step_observation(self, base: int) -> Any:
        return base

    def reset(self, seed: int | None = None) -> Any:
        base = self.env.reset(seed)
        self._latch = MilestoneLatch.NONE
        return self._reset_observation(base)

    def step(self, action: int | LabelSet) -> tuple[Any, float, bool, bool, StepInfo]:
        base, info = self.env.step(action)
        labels = label(info, self.config.clearance)
        reward, self._latch = _latch_step(
            self._shape, self._latch, labels.code, info, self.params
        )
        return (
            self._step_observation(base),
            reward,
            info.terminated,
            info.truncated,
            info,
        )

    def snapshot(self) -> tuple:
        return (self.env.state, self._latch)

    def restore(self, snap: tuple) -> None:
        state, latch = snap
        self.env.set_state(state)
        self._latch = latch

    def clone(self) -> "_LatchRewardWrapper":
        return type(self)(ToyQuadrupedEnv(self.config), self.rm, self.params)


class NaiveWrapper(_LatchRewardWrapper):
    """Base observation only; the gait reward stays non-Markovian."""

    kind = WrapperKind.NAIVE


class Stack3Wrapper(_LatchRewardWrapper):
    """Observation is the three most recent base observations in
    chronological order, padded by repeating the reset observation."""

    kind = WrapperKind.STACK3

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._stack = (0, 0, 0)

    def _reset_observation(self, base: int) -> tuple[int, int, int]:
        self._stack = (base, base, base)
        return self._stack

    def _step_observation(self, base: int) -> tuple[int, int, int]:
        self._stack = (self._stack[1], self._stack[2], base)
        return self._stack

    def snapshot(self) -> tuple:
        return (self.env.state, self._latch, self._stack)

    def restore(self, snap: tuple) -> None:
        state, latch, stack = snap
        self.env.set_state(state)
        self._latch = latch
        self._stack = stack


class AugmentedWrapper(_LatchRewardWrapper):
    """Base observation with the labeling function's four bits appended.

    In the toy environment these bits duplicate the base pattern; the
    scheme is kept for protocol fidelity with richer environments.
    """

    kind = WrapperKind.AUGMENTED

    def _reset_observation(self, base: int) -> tuple[int, int, int, int, int]:
        return self._labelled(base)

    def _step_observation(self, base: int) -> tuple[int, int, int, int, int]:
        return self._labelled(base)

    def _labelled(self, base: int) -> tuple[int, int, int, int, int]:
        bits = label(self.env.state, self.config.clearance).bits()
        return (base, *bits)


def make_wrapper(
    kind: WrapperKind | str,
    env: ToyQuadrupedEnv | None = None,
    rm: RewardMachine | None = None,
    params: RewardParams | None = None,
) -> GaitEnvWrapper:
    if isinstance(kind, str):
        kind = WrapperKind(kind)
    if kind is WrapperKind.NO_GAIT:
        return NoGaitWrapper(env, params)
    if kind is WrapperKind.CROSS_PRODUCT:
        return CrossProductWrapper(env, rm, params)
    cls = {
        WrapperKind.NAIVE: NaiveWrapper,
        WrapperKind.STACK3: Stack3Wrapper,
        WrapperKind.AUGMENTED: AugmentedWrapper,
    }[kind]
    return cls(env, rm, params)
