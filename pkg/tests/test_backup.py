import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbdp import (
    BeliefState,
    CandidateSet,
    CapacityError,
    DecPomdp,
    ObservationSelection,
    PolicyTree,
    exhaustive_backup,
    fill_missing,
    partial_backup,
    pointwise_prune,
    rank_observations,
)

import _reference as ref
from conftest import random_model


def leaves(model, agent, count):
    actions = model.action_counts[agent]
    return tuple(PolicyTree(i % actions) for i in range(count))


def leaf_sets(model, count):
    return CandidateSet(tuple(leaves(model, i, count) for i in range(model.num_agents)))


def obs_table_model(joint_probs):
    """Two agents, one action each, 2x2 observations, fixed joint obs row."""
    probs = np.asarray(joint_probs, dtype=float).reshape(1, 1, 4)
    return DecPomdp(
        states=("only",),
        actions=(("go",), ("go",)),
        observations=(("x0", "x1"), ("y0", "y1")),
        transition=np.ones((1, 1, 1)),
        observation=probs,
        reward=np.zeros((1, 1, 1)),
        initial_belief=np.array([1.0]),
        horizon=2,
    )


class TestCounts:
    @given(
        num_src=st.integers(1, 4),
        actions=st.integers(1, 3),
        obs=st.integers(1, 3),
    )
    def test_exhaustive_size_law(self, num_src, actions, obs):
        model = random_model(0, num_states=2, action_counts=(actions, actions), obs_counts=(obs, obs))
        out = exhaustive_backup(model, leaf_sets(model, num_src))
        assert out.sizes == (actions * num_src**obs,) * 2

    def test_published_count_example(self):
        # 2 actions and 5 observations over 5 sources: 2 * 5^5 = 6250 per
        # agent, 6250^2 = 39,062,500 joint pairs
        model = random_model(1, num_states=2, action_counts=(2, 2), obs_counts=(5, 5))
        out = exhaustive_backup(model, leaf_sets(model, 5), cap=10_000)
        assert out.sizes == (6250, 6250)
        assert out.sizes[0] * out.sizes[1] == 39_062_500

    def test_partial_size_law(self):
        model = random_model(2, num_states=2, action_counts=(2, 2), obs_counts=(3, 3))
        sel = ObservationSelection(((0, 2), (1,)))
        out = partial_backup(model, leaf_sets(model, 4), sel)
        assert out.sizes == (2 * 4**2, 2 * 4**1)

    def test_cap_enforced(self):
        model = random_model(3, num_states=2, action_counts=(2, 2), obs_counts=(4, 4))
        with pytest.raises(CapacityError):
            exhaustive_backup(model, leaf_sets(model, 6), cap=1000)

    def test_depth_grows_by_one(self, tiger):
        out = exhaustive_backup(tiger, leaf_sets(tiger, 2))
        assert all(t.depth == 2 for agent in out.trees for t in agent)


class TestPartial:
    def test_full_selection_matches_exhaustive_order(self, tiger):
        src = leaf_sets(tiger, 2)
        full = exhaustive_backup(tiger, src)
        part = partial_backup(tiger, src, ObservationSelection.full(tiger))
        assert part.sizes == full.sizes
        for agent in range(2):
            for a, b in zip(full.trees[agent], part.trees[agent]):
                assert a.action == b.action
                assert [k.uid for k in a.children] == [k.uid for k in b.children]

    def test_unselected_slots_are_holes(self):
        model = random_model(4, num_states=2, action_counts=(2, 2), obs_counts=(3, 3))
        out = partial_backup(model, leaf_sets(model, 2), ObservationSelection(((1,), (0, 2))))
        tree = out.trees[0][0]
        assert tree.children[1] is not None
        assert tree.children[0] is None and tree.children[2] is None
        assert not tree.complete


class TestRanking:
    def test_hand_ranked_masses(self):
        model = obs_table_model([0.1, 0.4, 0.3, 0.2])
        sel = rank_observations(model, model.initial_belief, 0, max_obs=1)
        # joint obs sorted by mass: (0,1)=0.4 first, so each agent keeps
        # its component of that pair
        assert sel.per_agent == ((0,), (1,))

    def test_tie_breaks_by_index(self):
        model = obs_table_model([0.25, 0.25, 0.25, 0.25])
        sel = rank_observations(model, model.initial_belief, 0, max_obs=1)
        assert sel.per_agent == ((0,), (0,))

    def test_quota_capped_at_alphabet(self):
        model = obs_table_model([0.1, 0.4, 0.3, 0.2])
        sel = rank_observations(model, model.initial_belief, 0, max_obs=9)
        assert sel.is_full(model)

    def test_components_sorted_ascending(self, mabc):
        sel = rank_observations(mabc, mabc.initial_belief, 0, max_obs=2)
        for agent in sel.per_agent:
            assert list(agent) == sorted(agent)


class TestFill:
    def fill_case(self, seed):
        # donors live at the child depth: hole slots take whole donor trees
        model = random_model(seed, num_states=3, action_counts=(2, 2), obs_counts=(2, 2))
        donors = leaf_sets(model, 3)
        sel = ObservationSelection(((0,), (1,)))
        partial = partial_backup(model, leaf_sets(model, 2), sel)
        return model, donors, partial

    def test_output_complete_and_hole_count_preserved(self):
        model, donors, partial = self.fill_case(11)
        filled = fill_missing(model, partial, donors, model.initial_belief)
        assert filled.sizes == partial.sizes
        assert all(t.complete for agent in filled.trees for t in agent)

    def test_holes_filled_from_donor_pool(self):
        model, donors, partial = self.fill_case(12)
        donor_uids = {t.uid for agent in donors.trees for t in agent}
        filled = fill_missing(model, partial, donors, model.initial_belief)
        for agent_idx, agent in enumerate(filled.trees):
            for tree, orig in zip(agent, partial.trees[agent_idx]):
                for slot, kid in enumerate(tree.children):
                    if orig.children[slot] is None:
                        assert kid.uid in donor_uids
                    else:
                        assert kid.uid == orig.children[slot].uid

    def test_no_worse_than_any_uniform_donor_assignment(self):
        """Hill climbing starts from paired donor assignments, so the
        result must dominate every single-donor completion."""
        model, donors, partial = self.fill_case(13)
        filled = fill_missing(model, partial, donors, model.initial_belief)
        b = model.initial_belief

        def best_pair(sets):
            return max(
                ref.belief_value(model, (t0, t1), b)
                for t0 in sets.trees[0]
                for t1 in sets.trees[1]
            )

        got = best_pair(filled)
        for donor_idx in range(min(len(donors.trees[0]), len(donors.trees[1]))):
            uniform = complete_with_donor(partial, donors, donor_idx)
            assert got >= best_pair(uniform) - 1e-9

    def test_identity_on_complete_input(self, tiger):
        complete = exhaustive_backup(tiger, leaf_sets(tiger, 2))
        filled = fill_missing(tiger, complete, leaf_sets(tiger, 2), tiger.initial_belief)
        for agent in range(2):
            assert [t.uid for t in filled.trees[agent]] == [t.uid for t in complete.trees[agent]]

    def test_deterministic(self):
        model, donors, partial = self.fill_case(14)
        a = fill_missing(model, partial, donors, model.initial_belief)
        b = fill_missing(model, partial, donors, model.initial_belief)
        for agent in range(2):
            for x, y in zip(a.trees[agent], b.trees[agent]):
                assert x.same_structure(y)


def complete_with_donor(partial, donors, donor_idx):
    out = []
    for agent, trees in enumerate(partial.trees):
        donor = donors.trees[agent][donor_idx]
        fixed = []
        for t in trees:
            kids = tuple(donor if kid is None else kid for kid in t.children)
            fixed.append(PolicyTree(t.action, kids))
        out.append(tuple(fixed))
    return CandidateSet(tuple(out))


class TestPrune:
    def grid(self, num_states, step=5):
        axes = [np.linspace(0, 1, step)] * (num_states - 1)
        for mix in itertools.product(*axes):
            rest = 1.0 - sum(mix)
            if rest < -1e-12:
                continue
            yield BeliefState(np.array(list(mix) + [max(rest, 0.0)]))

    @given(seed=st.integers(0, 2_000))
    @settings(max_examples=15)
    def test_upper_envelope_preserved(self, seed):
        model = random_model(seed, num_states=3)
        sets = exhaustive_backup(model, leaf_sets(model, 2))
        pruned = pointwise_prune(model, sets)
        assert all(len(p) >= 1 for p in pruned.trees)

        def pair_vectors(cs):
            return [
                np.array([ref.tree_value(model, (t0, t1), s) for s in range(3)])
                for t0 in cs.trees[0]
                for t1 in cs.trees[1]
            ]

        before_v = pair_vectors(sets)
        after_v = pair_vectors(pruned)
        for b in self.grid(3, step=4):
            before = max(float(b.probs @ v) for v in before_v)
            after = max(float(b.probs @ v) for v in after_v)
            assert after == pytest.approx(before, abs=1e-9)

    def test_duplicates_are_merged(self, tiger):
        t = PolicyTree(0)
        dup = CandidateSet(((t, PolicyTree(0), PolicyTree(1)), (PolicyTree(0), PolicyTree(2))))
        pruned = pointwise_prune(tiger, dup)
        assert pruned.sizes[0] == 2
        assert pruned.sizes[1] == 2
        assert pruned.trees[0][0].uid == t.uid
