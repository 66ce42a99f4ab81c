import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbdp import (
    BeliefState,
    DecPomdp,
    ImpossibleEvidenceError,
    ModelError,
    PROB_TOL,
    build_mabc,
    build_tiger,
    validate,
)

from conftest import random_model


def two_state_chain():
    """One effective agent (partner has a single action and observation)."""
    transition = np.array([[[0.8, 0.2], [0.3, 0.7]]])
    observation = np.array([[[0.9, 0.1], [0.2, 0.8]]])
    reward = np.ones((1, 2, 2))
    return DecPomdp(
        states=("left", "right"),
        actions=(("go",), ("idle",)),
        observations=(("hot", "cold"), ("none",)),
        transition=transition,
        observation=observation,
        reward=reward,
        initial_belief=np.array([0.5, 0.5]),
        horizon=3,
        name="chain",
    )


class TestConstruction:
    def test_initial_belief_array_is_wrapped(self):
        m = two_state_chain()
        assert isinstance(m.initial_belief, BeliefState)
        np.testing.assert_allclose(m.initial_belief.probs, [0.5, 0.5])

    def test_bad_transition_shape_rejected(self):
        with pytest.raises(ModelError):
            DecPomdp(
                states=("a", "b"),
                actions=(("x",), ("y",)),
                observations=(("u",), ("v",)),
                transition=np.ones((1, 2, 3)) / 3,
                observation=np.ones((1, 2, 1)),
                reward=np.zeros((1, 2, 2)),
                initial_belief=np.array([1.0, 0.0]),
                horizon=1,
            )

    def test_validate_flags_broken_rows(self):
        m = two_state_chain()
        bad = m.transition.copy()
        bad[0, 0] = [0.5, 0.6]
        broken = DecPomdp(
            states=m.states,
            actions=m.actions,
            observations=m.observations,
            transition=bad,
            observation=m.observation,
            reward=m.reward,
            initial_belief=m.initial_belief,
            horizon=m.horizon,
        )
        problems = broken.validate()
        assert problems and any("transition" in p for p in problems)

    def test_builtins_validate_clean(self):
        assert validate(build_mabc()) == []
        assert validate(build_tiger()) == []


class TestBeliefs:
    def test_point_mass_and_uniform(self):
        b = BeliefState.point_mass(1, 3)
        assert b.most_likely_state() == 1
        u = BeliefState.uniform(4)
        np.testing.assert_allclose(u.probs, 0.25)

    def test_propagate_matches_hand_computation(self):
        m = two_state_chain()
        post = m.propagate(m.initial_belief, 0)
        np.testing.assert_allclose(post.probs, [0.55, 0.45])

    def test_bayes_update_matches_hand_computation(self):
        m = two_state_chain()
        probs = m.observation_probabilities(m.initial_belief, 0)
        np.testing.assert_allclose(probs, [0.585, 0.415])
        post = m.bayes_update(m.initial_belief, 0, 0)
        np.testing.assert_allclose(post.probs, [0.495 / 0.585, 0.09 / 0.585])

    def test_impossible_evidence_raises(self):
        m = two_state_chain()
        zero_obs = m.observation.copy()
        zero_obs[0, :, 1] = 0.0
        zero_obs[0, :, 0] = 1.0
        m2 = DecPomdp(
            states=m.states,
            actions=m.actions,
            observations=m.observations,
            transition=m.transition,
            observation=zero_obs,
            reward=m.reward,
            initial_belief=m.initial_belief,
            horizon=m.horizon,
        )
        with pytest.raises(ImpossibleEvidenceError):
            m2.bayes_update(m2.initial_belief, 0, 1)

    @given(seed=st.integers(0, 10_000), action=st.integers(0, 3))
    def test_propagate_stays_on_simplex(self, seed, action):
        m = random_model(seed)
        post = m.propagate(m.initial_belief, action)
        assert abs(float(post.probs.sum()) - 1.0) < 1e-9
        assert (post.probs >= 0).all()

    @given(seed=st.integers(0, 10_000), action=st.integers(0, 3))
    def test_observation_probabilities_normalize(self, seed, action):
        m = random_model(seed)
        probs = m.observation_probabilities(m.initial_belief, action)
        assert abs(float(probs.sum()) - 1.0) < 1e-9

    @given(seed=st.integers(0, 10_000))
    def test_bayes_update_agrees_with_direct_formula(self, seed):
        m = random_model(seed)
        b = m.initial_belief
        post = b.probs @ m.transition[1]
        joint = post * m.observation[1][:, 2]
        if joint.sum() <= PROB_TOL:
            return
        np.testing.assert_allclose(
            m.bayes_update(b, 1, 2).probs, joint / joint.sum(), atol=1e-12
        )


class TestJointIndexing:
    def test_round_trip_all_actions(self, tiger):
        for ja in range(tiger.num_joint_actions):
            assert tiger.joint_action_index(tiger.joint_action(ja)) == ja

    def test_agent_zero_is_most_significant(self, tiger):
        # index 0 is (0, 0); incrementing the last agent moves by one slot
        assert tiger.joint_action(0) == (0, 0)
        assert tiger.joint_action(1) == (0, 1)
        assert tiger.joint_action(3) == (1, 0)

    def test_expected_reward_table(self, tiger):
        want = (tiger.transition * tiger.reward).sum(axis=2)
        np.testing.assert_allclose(tiger.expected_reward, want)

    def test_reward_extremes(self, tiger):
        assert tiger.reward_max == tiger.reward.max()
        assert tiger.reward_min == tiger.reward.min()
