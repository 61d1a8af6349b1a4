"""Tabular Q-learning over wrapped environments, plus the evaluation
protocol that scores every approach with the same pose-transition
tracker.

Policies are Q-tables mapping discrete observation keys to 16-entry
action-value rows. Evaluation deploys a policy greedily for a fixed
number of episodes and reports mean return, mean pose transitions (via
a passive automaton tracker, regardless of what the policy observed
during training) and mean distance travelled.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Any, Callable, Union

from .env import label
from .machine import Gait, RewardMachine, RmState, transition_table
from .wrappers import (
    CrossProductObservation,
    GaitEnvWrapper,
    WrapperKind,
    base_pattern,
)

log = logging.getLogger(__name__)

NUM_ACTIONS = 16

QTable = dict[int, list[float]]


@dataclass(frozen=True, slots=True)
class LearnerConfig:
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_fraction: float = 0.5
    total_steps: int = 200_000
    eval_every: int = 5_000
    eval_episodes: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        for name in ("epsilon_start", "epsilon_end"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.epsilon_fraction <= 1.0:
            raise ValueError(
                f"epsilon_fraction must be in (0, 1], got {self.epsilon_fraction}"
            )
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.eval_every <= 0:
            raise ValueError(f"eval_every must be positive, got {self.eval_every}")
        if self.eval_episodes <= 0:
            raise ValueError(f"eval_episodes must be positive, got {self.eval_episodes}")


def epsilon_at(config: LearnerConfig, step: int) -> float:
    """Linear decay from epsilon_start to epsilon_end over the first
    ``epsilon_fraction`` of total steps, constant afterwards."""
    horizon = config.epsilon_fraction * config.total_steps
    if horizon <= 0:
        return config.epsilon_end
    frac = min(1.0, step / horizon)
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac


def greedy_action(q: QTable, key: int) -> int:
    """Highest-valued action with lowest-index tie-breaking. Unseen keys
    act on an all-zero row, i.e. deterministically pick action 0."""
    row = q.get(key)
    if row is None:
        return 0
    best = 0
    best_value = row[0]
    for a in range(1, NUM_ACTIONS):
        if row[a] > best_value:
            best = a
            best_value = row[a]
    return best


def q_update(
    q: QTable,
    key: int,
    action: int,
    reward: float,
    next_key: int,
    done: bool,
    config: LearnerConfig,
) -> QTable:
    """One-step Q-learning update, in place."""
    row = q.get(key)
    if row is None:
        row = [0.0] * NUM_ACTIONS
        q[key] = row
    if done:
        target = reward
    else:
        next_row = q.get(next_key)
        target = reward + config.gamma * (max(next_row) if next_row else 0.0)
    row[action] += config.alpha * (target - row[action])
    return q


class UnknownWrapperError(ValueError):
    pass


def key_space_size(kind: WrapperKind, n_rm_states: int = 2) -> int:
    if kind is WrapperKind.CROSS_PRODUCT:
        return 16 * n_rm_states
    if kind in (WrapperKind.NAIVE, WrapperKind.NO_GAIT):
        return 16
    if kind is WrapperKind.STACK3:
        return 16**3
    if kind is WrapperKind.AUGMENTED:
        return 16 * 16
    raise UnknownWrapperError(f"unknown wrapper kind: {kind!r}")


def discretize(observation: Any, kind: WrapperKind) -> int:
    """Injective observation -> table key encoding per wrapper kind."""
    if kind is WrapperKind.CROSS_PRODUCT:
        if not isinstance(observation, CrossProductObservation):
            raise UnknownWrapperError(
                f"cross-product key needs a CrossProductObservation, got {observation!r}"
            )
        return observation.base + 16 * observation.rm_state.index
    if kind in (WrapperKind.NAIVE, WrapperKind.NO_GAIT):
        return observation
    if kind is WrapperKind.STACK3:
        a, b, c = observation
        return a + 16 * b + 256 * c
    if kind is WrapperKind.AUGMENTED:
        base, fl, fr, bl, br = observation
        return base + 16 * (fl | fr << 1 | bl << 2 | br << 3)
    raise UnknownWrapperError(f"unknown wrapper kind: {kind!r}")


PolicyFn = Callable[[Any, int], int]
Policy = Union[QTable, PolicyFn]


class ReferenceGaitPolicy:
    """Hand-coded gait controller used as the evaluation yardstick.

    It spends its first action settling at the rest pose (reading the
    contact sensors before committing to a swing), then reacts: from
    pose A it commands pose B, from anything else it commands pose A.
    Over a 100-action episode this walks exactly 99 milestone
    transitions and 99 strides.
    """

    def __init__(self, gait: Gait):
        self.gait = gait

    def __call__(self, observation: Any, step_index: int) -> int:
        if step_index == 0:
            return 0
        pattern = base_pattern(observation)
        if pattern == self.gait.pose_a.code:
            return self.gait.pose_b.code
        return self.gait.pose_a.code


def as_policy_fn(policy: Policy, kind: WrapperKind) -> PolicyFn:
    if isinstance(policy, dict):
        return lambda obs, t: greedy_action(policy, discretize(obs, kind))
    if callable(policy):
        return policy
    raise TypeError(f"not a policy: {policy!r}")


class PoseTransitionTracker:
    """Passive automaton tracker: replays the label sequence through the
    machine to count milestone transitions, independent of whatever the
    evaluated policy observed."""

    def __init__(self, rm: RewardMachine):
        self.rm = rm
        self._table = transition_table(rm)
        self._u = rm.initial

    @property
    def state(self) -> RmState:
        return self._u

    def reset(self) -> None:
        self._u = self.rm.initial

    def update(self, label_code: int) -> tuple[RmState, bool]:
        nxt, _ = self._table[(self._u.index, label_code)]
        transitioned = nxt != self._u
        self._u = nxt
        return nxt, transitioned


@dataclass(frozen=True, slots=True)
class RolloutStep:
    """One logged environment step of a greedy rollout."""

    index: int
    action: int
    foot_heights: tuple[float, float, float, float]
    label_bits: tuple[int, int, int, int]
    delta_x: float
    power: float
    reward: float
    rm_state: str
    transition: bool
    terminated: bool
    truncated: bool


@dataclass(frozen=True, slots=True)
class Rollout:
    steps: tuple[RolloutStep, ...]
    total_reward: float
    pose_transitions: int
    distance: float


def rollout(
    policy: Policy,
    wrapper: GaitEnvWrapper,
    tracker_rm: RewardMachine | None = None,
    max_steps: int | None = None,
) -> Rollout:
    """Deploy a policy greedily for one episode, logging every step."""
    if tracker_rm is None:
        tracker_rm = wrapper.machine
    tracker = PoseTransitionTracker(tracker_rm) if tracker_rm is not None else None
    policy_fn = as_policy_fn(policy, wrapper.kind)
    clearance = wrapper.config.clearance
    horizon = wrapper.config.episode_length
    if max_steps is not None:
        horizon = min(horizon, max_steps)

    obs = wrapper.reset()
    steps = []
    total_reward = 0.0
    transitions = 0
    for t in range(horizon):
        action = policy_fn(obs, t)
        obs, reward, terminated, truncated, info = wrapper.step(action)
        labels = label(info, clearance)
        total_reward += reward
        if tracker is not None:
            rm_state, transitioned = tracker.update(labels.code)
            rm_name = rm_state.name
            transitions += transitioned
        else:
            rm_name = ""
            transitioned = False
        steps.append(
            RolloutStep(
                index=t + 1,
                action=action if isinstance(action, int) else action.code,
                foot_heights=info.foot_heights,
                label_bits=labels.bits(),
                delta_x=info.delta_x,
                power=info.power,
                reward=reward,
                rm_state=rm_name,
                transition=transitioned,
                terminated=terminated,
                truncated=truncated,
            )
        )
        if terminated or truncated:
            break
    return Rollout(
        steps=tuple(steps),
        total_reward=total_reward,
        pose_transitions=transitions,
        distance=wrapper.env.state.base_x,
    )


@dataclass(frozen=True, slots=True)
class EvalMetrics:
    """Evaluation summary across greedy episodes."""

    mean_return: float
    mean_pose_transitions: float
    mean_distance: float
    episodes: int


def evaluate(
    policy: Policy,
    wrapper: GaitEnvWrapper,
    tracker_rm: RewardMachine | None = None,
    episodes: int = 10,
) -> EvalMetrics:
    """Deploy a policy greedily for ``episodes`` full episodes."""
    if episodes <= 0:
        raise ValueError(f"episodes must be positive, got {episodes}")
    if tracker_rm is None:
        tracker_rm = wrapper.machine
    if tracker_rm is None:
        log.info("no machine available for pose tracking; transitions report 0")
    returns = 0.0
    transitions = 0
    distance = 0.0
    for _ in range(episodes):
        run = rollout(policy, wrapper, tracker_rm)
        returns += run.total_reward
        transitions += run.pose_transitions
        distance += run.distance
    return EvalMetrics(
        mean_return=returns / episodes,
        mean_pose_transitions=transitions / episodes,
        mean_distance=distance / episodes,
        episodes=episodes,
    )


def train(
    wrapper: GaitEnvWrapper,
    config: LearnerConfig,
    tracker_rm: RewardMachine | None = None,
) -> tuple[QTable, list[tuple[int, EvalMetrics]]]:
    """Epsilon-greedy tabular Q-learning on the wrapper's observations.

    Returns the learned table and a curve of periodic greedy
    evaluations. Fully determined by (config.seed, configs).
    """
    rng = random.Random(config.seed)
    q: QTable = {}
    eval_wrapper = wrapper.clone()
    curve: list[tuple[int, EvalMetrics]] = []

    obs = wrapper.reset()
    key = discretize(obs, wrapper.kind)
    for t in range(config.total_steps):
        eps = epsilon_at(config, t)
        if rng.random() < eps:
            action = rng.randrange(NUM_ACTIONS)
        else:
            action = greedy_action(q, key)
        obs, reward, terminated, truncated, _ = wrapper.step(action)
        next_key = discretize(obs, wrapper.kind)
        # The task is continuing; the 100-action cutoff is a rollout
        # boundary, not a terminal state, so bootstrap across it.
        # Treating truncation as terminal makes cycle values depend on
        # the hidden time-to-cutoff and destabilizes the greedy policy.
        q_update(q, key, action, reward, next_key, terminated, config)
        if terminated or truncated:
            obs = wrapper.reset()
            key = discretize(obs, wrapper.kind)
        else:
            key = next_key
        step_number = t + 1
        if step_number % config.eval_every == 0 or step_number == config.total_steps:
            metrics = evaluate(
                q, eval_wrapper, tracker_rm=tracker_rm, episodes=config.eval_episodes
            )
            curve.append((step_number, metrics))
    return q, curve
