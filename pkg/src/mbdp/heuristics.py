"""Belief trajectory generators used to pick selection points for planning.

Each heuristic simulates forward from the initial belief and records the
belief after every step.  The MDP heuristic acts greedily against the
value function of the underlying fully-observable problem, the random
heuristic samples joint actions uniformly, and the replay heuristic
walks a previously computed joint policy (sampling observations and
conditioning the belief on them, which the other two do not need).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import BeliefState, DecPomdp
from .policy import CompiledPolicy, JointPolicy


@dataclass(frozen=True)
class BeliefTrajectory:
    """A simulated belief sequence: len(beliefs) == len(actions) + 1.

    ``conditioned`` marks trajectories whose beliefs were updated on
    sampled observations (stored in ``observations``) rather than
    marginalized over all of them.
    """

    beliefs: tuple[BeliefState, ...]
    actions: tuple[int, ...]
    observations: tuple[int, ...] | None = None
    conditioned: bool = False

    def __post_init__(self):
        if len(self.beliefs) != len(self.actions) + 1:
            raise ConfigError("trajectory needs one belief per step plus the start")
        if self.conditioned and (
            self.observations is None or len(self.observations) != len(self.actions)
        ):
            raise ConfigError("conditioned trajectory must record its observations")


def solve_underlying_mdp(model: DecPomdp, horizon: int | None = None):
    """Finite-horizon value iteration on states with joint actions.

    Returns (values, greedy) where values[k] is the optimal state value
    with k steps to go and greedy[k] the lexicographically first optimal
    joint action, for k = 0..horizon.
    """
    horizon = model.horizon if horizon is None else horizon
    num_s = model.num_states
    values = np.zeros((horizon + 1, num_s))
    greedy = np.zeros((horizon + 1, num_s), dtype=np.int64)
    for k in range(1, horizon + 1):
        q = (model.transition * (model.reward + values[k - 1][None, None, :])).sum(axis=2)
        values[k] = q.max(axis=0)
        greedy[k] = q.argmax(axis=0)
    return values, greedy


class MdpHeuristic:
    """Greedy joint action for the most likely state, marginal belief updates."""

    name = "mdp"

    def __init__(self, model: DecPomdp, horizon: int | None = None):
        self.model = model
        self.values, self.greedy = solve_underlying_mdp(model, horizon)

    def action(self, belief: BeliefState, steps_remaining: int, rng) -> int:
        k = min(max(steps_remaining, 1), self.values.shape[0] - 1)
        return int(self.greedy[k][belief.most_likely_state()])

    def step(self, belief: BeliefState, action: int, rng):
        return self.model.propagate(belief, action), None


class RandomHeuristic:
    """Uniform joint actions, marginal belief updates."""

    name = "random"

    def __init__(self, model: DecPomdp):
        self.model = model

    def action(self, belief: BeliefState, steps_remaining: int, rng) -> int:
        return int(rng.integers(self.model.num_joint_actions))

    def step(self, belief: BeliefState, action: int, rng):
        return self.model.propagate(belief, action), None


class PolicyReplayHeuristic:
    """Replays a joint policy, sampling observations and conditioning on them.

    Past the policy's depth it falls back to uniform random actions, still
    conditioning on sampled observations.
    """

    name = "replay"

    def __init__(self, model: DecPomdp, policy: JointPolicy):
        self.model = model
        self.compiled = CompiledPolicy(model, policy)
        self.depth = policy.depth
        self.reset()

    def reset(self):
        self._level = 0
        self._nodes = [0] * self.model.num_agents

    def action(self, belief: BeliefState, steps_remaining: int, rng) -> int:
        if self._level >= self.depth:
            return int(rng.integers(self.model.num_joint_actions))
        locals_ = tuple(
            int(self.compiled.actions[i][self._level][self._nodes[i]])
            for i in range(self.model.num_agents)
        )
        return self.model.joint_action_index(locals_)

    def step(self, belief: BeliefState, action: int, rng):
        probs = self.model.observation_probabilities(belief, action)
        jo = int(rng.choice(len(probs), p=probs / probs.sum()))
        nxt = self.model.bayes_update(belief, action, jo)
        if self._level < self.depth - 1:
            local = self.model.joint_observation(jo)
            for i in range(self.model.num_agents):
                self._nodes[i] = int(
                    self.compiled.children[i][self._level][self._nodes[i], local[i]]
                )
        self._level += 1
        return nxt, jo


def generate_belief(
    heuristic, model: DecPomdp, depth: int, rng: np.random.Generator
) -> BeliefTrajectory:
    """Runs ``heuristic`` for ``depth`` steps from the initial belief.

    Trajectories are prefixes of the full problem, so the heuristic is
    told the steps remaining out of the model horizon, not the depth.
    """
    if depth < 0:
        raise ConfigError("trajectory depth must be >= 0")
    if hasattr(heuristic, "reset"):
        heuristic.reset()
    beliefs = [model.initial_belief]
    actions: list[int] = []
    observations: list[int] = []
    conditioned = False
    for step in range(depth):
        a = heuristic.action(beliefs[-1], model.horizon - step, rng)
        nxt, obs = heuristic.step(beliefs[-1], a, rng)
        beliefs.append(nxt)
        actions.append(a)
        if obs is not None:
            observations.append(obs)
            conditioned = True
    return BeliefTrajectory(
        beliefs=tuple(beliefs),
        actions=tuple(actions),
        observations=tuple(observations) if conditioned else None,
        conditioned=conditioned,
    )


def build_portfolio(model: DecPomdp, names: tuple[str, ...] | list[str]):
    """Instantiates heuristics from names ("mdp", "random")."""
    out = []
    for name in names:
        if name == "mdp":
            out.append(MdpHeuristic(model))
        elif name == "random":
            out.append(RandomHeuristic(model))
        else:
            raise ConfigError(f"unknown heuristic '{name}' (expected mdp or random)")
    if not out:
        raise ConfigError("heuristic portfolio is empty")
    return out
