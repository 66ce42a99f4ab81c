import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbdp import (
    ConfigError,
    MdpHeuristic,
    PolicyReplayHeuristic,
    RandomHeuristic,
    build_portfolio,
    build_tiger,
    exact_solve,
    generate_belief,
    improved_mbdp,
    solve_underlying_mdp,
    SolverConfig,
)

import _reference as ref
from conftest import random_model


class TestUnderlyingMdp:
    def test_self_loop_chain_accumulates_reward(self):
        model = random_model(0, num_states=2, action_counts=(1, 1), obs_counts=(1, 1), horizon=3)
        transition = np.zeros((1, 2, 2))
        transition[0, 0, 0] = 1.0
        transition[0, 1, 1] = 1.0
        reward = np.zeros((1, 2, 2))
        reward[0, 0, 0] = 1.0
        model = type(model)(
            states=model.states,
            actions=model.actions,
            observations=model.observations,
            transition=transition,
            observation=model.observation,
            reward=reward,
            initial_belief=np.array([1.0, 0.0]),
            horizon=3,
        )
        values, greedy = solve_underlying_mdp(model)
        assert values[3][0] == pytest.approx(3.0)
        assert values[3][1] == pytest.approx(0.0)
        assert greedy[1][0] == 0

    def test_two_branch_choice(self):
        # from s0: action (0,0) pays 2 then 1.5 per step, action (1,0)
        # pays 1 then 3 per step; two steps favor the second branch
        model = random_model(1, num_states=3, action_counts=(2, 1), obs_counts=(1, 1), horizon=2)
        transition = np.zeros((2, 3, 3))
        transition[:, 1, 1] = 1.0
        transition[:, 2, 2] = 1.0
        transition[0, 0, 1] = 1.0
        transition[1, 0, 2] = 1.0
        reward = np.zeros((2, 3, 3))
        reward[0, 0, 1] = 2.0
        reward[1, 0, 2] = 1.0
        reward[:, 1, 1] = 1.5
        reward[:, 2, 2] = 3.0
        model = type(model)(
            states=model.states,
            actions=model.actions,
            observations=model.observations,
            transition=transition,
            observation=model.observation,
            reward=reward,
            initial_belief=np.array([1.0, 0.0, 0.0]),
            horizon=2,
        )
        values, greedy = solve_underlying_mdp(model)
        assert values[1][0] == pytest.approx(2.0)
        assert values[2][0] == pytest.approx(4.0)
        assert greedy[2][0] == 1

    @given(seed=st.integers(0, 5_000), steps=st.integers(1, 4))
    @settings(max_examples=25)
    def test_matches_reference_value_iteration(self, seed, steps):
        model = random_model(seed, horizon=steps)
        values, _ = solve_underlying_mdp(model, steps)
        want = ref.value_iteration(model.transition, model.reward, steps)
        for k in range(steps + 1):
            np.testing.assert_allclose(values[k], want[k], atol=1e-10)

    @given(seed=st.integers(0, 3_000))
    @settings(max_examples=10)
    def test_centralized_value_upper_bounds_exact(self, seed):
        model = random_model(seed, num_states=2, horizon=2)
        values, _ = solve_underlying_mdp(model)
        upper = float(model.initial_belief.probs @ values[model.horizon])
        assert upper >= exact_solve(model).value - 1e-9


class TestTrajectories:
    def test_lengths_and_simplex(self, mabc):
        rng = np.random.default_rng(0)
        heuristic = RandomHeuristic(mabc)
        traj = generate_belief(heuristic, mabc, depth=2, rng=rng)
        assert len(traj.actions) == 2
        assert len(traj.beliefs) == 3
        for b in traj.beliefs:
            assert abs(float(b.probs.sum()) - 1.0) < 1e-9

    def test_mdp_heuristic_is_deterministic_in_actions(self, mabc):
        heuristic = MdpHeuristic(mabc)
        t1 = generate_belief(heuristic, mabc, 2, np.random.default_rng(0))
        t2 = generate_belief(heuristic, mabc, 2, np.random.default_rng(99))
        assert t1.actions == t2.actions

    def test_random_heuristic_covers_action_space(self, mabc):
        heuristic = RandomHeuristic(mabc)
        seen = set()
        for seed in range(40):
            traj = generate_belief(heuristic, mabc, 1, np.random.default_rng(seed))
            seen.add(traj.actions[0])
        assert len(seen) > 1

    def test_replay_follows_policy_root(self, tiger):
        report = improved_mbdp(tiger, SolverConfig(max_trees=2, seed=0))
        heuristic = PolicyReplayHeuristic(tiger, report.policy)
        traj = generate_belief(heuristic, tiger, 1, np.random.default_rng(0))
        want = tuple(t.action for t in report.policy.trees)
        assert traj.actions[0] == tiger.joint_action_index(want)

    def test_replay_survives_beyond_policy_depth(self, tiger):
        report = improved_mbdp(tiger, SolverConfig(max_trees=2, seed=0))
        heuristic = PolicyReplayHeuristic(tiger, report.policy)
        traj = generate_belief(heuristic, tiger, 5, np.random.default_rng(1))
        assert len(traj.actions) == 5


class TestPortfolio:
    def test_known_names(self, tiger):
        portfolio = build_portfolio(tiger, ("mdp", "random"))
        assert [h.name for h in portfolio] == ["mdp", "random"]

    def test_unknown_name_rejected(self, tiger):
        with pytest.raises(ConfigError):
            build_portfolio(tiger, ("mdp", "annealing"))

    def test_recursion_keeps_best_round(self):
        model = random_model(21, num_states=3, horizon=4)
        report = improved_mbdp(model, SolverConfig(max_trees=2, seed=3, recursion_depth=2))
        assert len(report.round_values) == 3
        assert report.value == pytest.approx(max(report.round_values))

    def test_recursion_never_hurts_shared_seed(self):
        model = random_model(22, num_states=3, horizon=4)
        base = improved_mbdp(model, SolverConfig(max_trees=2, seed=5))
        deep = improved_mbdp(model, SolverConfig(max_trees=2, seed=5, recursion_depth=1))
        assert deep.value >= base.value - 1e-12
