"""Shared test utilities: random guard generation and the exhaustive
reward-equivalence walker used by both the fast suite and acceptance."""

from __future__ import annotations

import random

from gaitrm.env import ToyEnvConfig, ToyQuadrupedEnv
from gaitrm.guards import And, Guard, Lit, Not, Or, Prop
from gaitrm.machine import Gait, RewardMachine, build_gait_rm
from gaitrm.wrappers import (
    CrossProductWrapper,
    MilestoneLatch,
    NaiveWrapper,
)

PROPS = tuple(Prop)

# Action codes that keep at least two feet planted; commanding three or
# more airborne feet stumbles immediately.
NON_STUMBLE_ACTIONS = tuple(a for a in range(16) if bin(a).count("1") <= 2)


def random_guard(rng: random.Random, depth: int) -> Guard:
    """Uniform-ish random guard AST of at most the given depth."""
    if depth <= 0 or rng.random() < 0.25:
        return Lit(rng.choice(PROPS))
    kind = rng.randrange(3)
    if kind == 0:
        return Not(random_guard(rng, depth - 1))
    if kind == 1:
        return And(random_guard(rng, depth - 1), random_guard(rng, depth - 1))
    return Or(random_guard(rng, depth - 1), random_guard(rng, depth - 1))


def make_pair(
    gait: Gait, config: ToyEnvConfig | None = None
) -> tuple[CrossProductWrapper, NaiveWrapper, RewardMachine]:
    rm = build_gait_rm(gait)
    cross = CrossProductWrapper(ToyQuadrupedEnv(config), rm)
    naive = NaiveWrapper(ToyQuadrupedEnv(config), rm)
    return cross, naive, rm


def check_equivalence_exhaustive(gait: Gait, depth: int) -> int:
    """Walk every action sequence up to ``depth`` (pruning finished
    episodes), asserting the cross-product and latch-oracle reward
    streams are bit-identical and that the latch mirrors the automaton
    state. Returns the number of compared steps."""
    cross, naive, rm = make_pair(gait)
    q1_index = 1
    cross.reset()
    naive.reset()
    compared = 0

    def recurse(remaining: int) -> None:
        nonlocal compared
        snap_cross = cross.snapshot()
        snap_naive = naive.snapshot()
        for action in range(16):
            _, r_cross, term_c, trunc_c, _ = cross.step(action)
            _, r_naive, term_n, trunc_n, _ = naive.step(action)
            compared += 1
            if r_cross != r_naive:
                raise AssertionError(
                    f"{gait}: reward divergence on action {action}: "
                    f"{r_cross!r} != {r_naive!r}"
                )
            if (term_c, trunc_c) != (term_n, trunc_n):
                raise AssertionError(f"{gait}: episode-end flags diverged")
            in_q1 = cross.rm_state.index == q1_index
            latched_a = naive.latch is MilestoneLatch.POSE_A
            if in_q1 != latched_a:
                raise AssertionError(
                    f"{gait}: latch/state mismatch: q1={in_q1} latch={naive.latch}"
                )
            if remaining > 1 and not (term_c or trunc_c):
                recurse(remaining - 1)
            cross.restore(snap_cross)
            naive.restore(snap_naive)

    recurse(depth)
    return compared


def check_equivalence_rollouts(
    gait: Gait,
    episodes: int,
    rng: random.Random,
    stumble_free: bool = False,
) -> int:
    """Random-policy rollouts (full episodes) comparing the two reward
    streams element by element. Returns total steps compared."""
    cross, naive, _ = make_pair(gait)
    actions = NON_STUMBLE_ACTIONS if stumble_free else tuple(range(16))
    compared = 0
    for _ in range(episodes):
        cross.reset()
        naive.reset()
        done = False
        while not done:
            action = rng.choice(actions)
            _, r_cross, term, trunc, _ = cross.step(action)
            _, r_naive, term_n, trunc_n, _ = naive.step(action)
            compared += 1
            assert r_cross == r_naive, (gait, action, r_cross, r_naive)
            assert (term, trunc) == (term_n, trunc_n)
            done = term or trunc
    return compared
