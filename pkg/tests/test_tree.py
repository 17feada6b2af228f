"""Reasoning-tree unit and property tests.

Expected UCT/backprop numbers were computed with an independent one-line
evaluation of the formulas before the tree code existed; the property tests
re-derive them with local oracles rather than trusting the implementation.
"""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svagen.tree import (
    AnswerContent,
    ReasoningNode,
    ReasoningTree,
    SearchParams,
    TreeError,
    compute_uct,
)


def evaluated_node(q: float, visits: int, node_id: int = 0) -> ReasoningNode:
    return ReasoningNode(
        id=node_id,
        parent=None,
        answer=AnswerContent(assertions=["assert property (a);"]),
        q_value=q,
        visit_count=visits,
        reward_samples=[q] * max(visits, 1),
    )


def new_tree(signal: str = "sig") -> ReasoningTree:
    return ReasoningTree(signal, AnswerContent(assertions=["assert property (a);"]))


class TestSearchParams:
    def test_defaults(self):
        params = SearchParams()
        assert params.c == 1.4
        assert params.epsilon == 1e-6
        assert params.n_rollouts == 4
        assert params.score_cap == 95.0
        assert (params.score_min, params.score_max) == (-100.0, 100.0)

    def test_invalid_ranges_rejected(self):
        with pytest.raises(ValueError):
            SearchParams(c=-0.1)
        with pytest.raises(ValueError):
            SearchParams(epsilon=0.0)
        with pytest.raises(ValueError):
            SearchParams(n_rollouts=0)
        with pytest.raises(ValueError):
            SearchParams(score_cap=101.0)
        with pytest.raises(ValueError):
            SearchParams(score_min=0.0, score_cap=-1.0)


class TestComputeUct:
    def test_worked_example(self, params):
        node = evaluated_node(q=50.0, visits=1)
        assert compute_uct(node, 2, params) == pytest.approx(51.8217, abs=1e-3)

    def test_zero_exploration_constant(self):
        params = SearchParams(c=0.0)
        node = evaluated_node(q=30.0, visits=7)
        assert compute_uct(node, 3, params) == 30.0

    def test_ln_one_collapses_numerator(self, params):
        node = evaluated_node(q=0.0, visits=1)
        assert compute_uct(node, 1, params) == pytest.approx(1.4000, abs=1e-3)

    def test_unevaluated_node_rejected(self, params):
        node = ReasoningNode(id=0, parent=None, answer=AnswerContent())
        with pytest.raises(TreeError):
            compute_uct(node, 1, params)

    def test_zero_parent_visits_rejected(self, params):
        node = evaluated_node(q=10.0, visits=0)
        node.reward_samples = [10.0]  # evaluated but zero visits is the ln(0) case
        node.visit_count = 0
        with pytest.raises(TreeError):
            compute_uct(node, 0, params)


class TestSelectNode:
    def test_single_node(self, params):
        tree = new_tree()
        tree.record_reward(0, 10.0, params)
        assert tree.select_node(params) == 0

    def test_less_visited_child_wins_on_equal_q(self, params):
        tree = new_tree()
        for _ in range(3):
            tree.record_reward(0, 50.0, params)
        child = tree.add_child(0, AnswerContent())
        tree.record_reward(child, 50.0, params)
        assert tree.select_node(params) == child

    def test_q_dominates_at_equal_visits(self, params):
        tree = new_tree()
        tree.record_reward(0, 10.0, params)
        a = tree.add_child(0, AnswerContent())
        b = tree.add_child(0, AnswerContent())
        # avoid backprop so the configured Q values stay put
        tree.nodes[a].reward_samples = [80.0]
        tree.nodes[a].q_value = 80.0
        tree.nodes[a].visit_count = 1
        tree.nodes[b].reward_samples = [20.0]
        tree.nodes[b].q_value = 20.0
        tree.nodes[b].visit_count = 1
        assert tree.select_node(params) == a

    def test_tie_breaks_to_earliest_node(self, params):
        tree = new_tree()
        tree.record_reward(0, 60.0, params)
        child = tree.add_child(0, AnswerContent())
        tree.nodes[child].reward_samples = [60.0]
        tree.nodes[child].q_value = 60.0
        tree.nodes[child].visit_count = 1
        # root parent term == own visits == 1 == child's parent term
        assert tree.select_node(params) == 0

    def test_unevaluated_node_fails_selection(self, params):
        tree = new_tree()
        tree.record_reward(0, 10.0, params)
        tree.add_child(0, AnswerContent())
        with pytest.raises(TreeError):
            tree.select_node(params)


class TestAddChild:
    def test_adds_under_root(self):
        tree = new_tree()
        child = tree.add_child(0, AnswerContent())
        assert len(tree) == 2
        assert tree.nodes[0].children == [child]
        assert tree.nodes[child].q_value == 0.0
        assert tree.nodes[child].visit_count == 0
        assert tree.nodes[child].reward_samples == []

    def test_chain_of_four_gives_five_nodes(self):
        tree = new_tree()
        parent = 0
        for _ in range(4):
            parent = tree.add_child(parent, AnswerContent())
        assert len(tree) == 5
        tree.validate()

    def test_unknown_parent(self):
        tree = new_tree()
        with pytest.raises(TreeError):
            tree.add_child(99, AnswerContent())


class TestRecordReward:
    def test_first_reward(self, params):
        tree = new_tree()
        tree.record_reward(0, 60.0, params)
        assert tree.nodes[0].q_value == 60.0
        assert tree.nodes[0].visit_count == 1

    def test_mean_of_two(self, params):
        tree = new_tree()
        tree.record_reward(0, 60.0, params)
        tree.record_reward(0, 20.0, params)
        assert tree.nodes[0].q_value == 40.0

    def test_out_of_range_rejected(self, params):
        tree = new_tree()
        with pytest.raises(TreeError):
            tree.record_reward(0, 150.0, params)
        with pytest.raises(TreeError):
            tree.record_reward(0, -100.5, params)


class TestBackpropagate:
    def test_parent_update(self, params):
        tree = new_tree()
        tree.record_reward(0, 50.0, params)
        a = tree.add_child(0, AnswerContent())
        b = tree.add_child(0, AnswerContent())
        tree.nodes[a].reward_samples = [40.0]
        tree.nodes[a].q_value = 40.0
        tree.nodes[b].reward_samples = [70.0]
        tree.nodes[b].q_value = 70.0
        tree.backpropagate(b)
        assert tree.nodes[0].q_value == 60.0

    def test_chain_propagation(self, params):
        tree = new_tree()
        tree.record_reward(0, 0.0, params)
        mid = tree.add_child(0, AnswerContent())
        tree.nodes[mid].reward_samples = [10.0]
        tree.nodes[mid].q_value = 10.0
        leaf = tree.add_child(mid, AnswerContent())
        tree.nodes[leaf].reward_samples = [100.0]
        tree.nodes[leaf].q_value = 100.0
        tree.backpropagate(leaf)
        assert tree.nodes[mid].q_value == 55.0
        assert tree.nodes[0].q_value == 27.5
        assert tree.nodes[leaf].q_value == 100.0  # starting node untouched

    def test_from_root_is_noop(self, params):
        tree = new_tree()
        tree.record_reward(0, 33.0, params)
        before = tree.dumps()
        tree.backpropagate(0)
        assert tree.dumps() == before

    def test_unknown_node(self):
        tree = new_tree()
        with pytest.raises(TreeError):
            tree.backpropagate(42)


class TestSerialization:
    def test_round_trip(self, params):
        tree = new_tree("wb_clk_i")
        tree.record_reward(0, 12.5, params)
        child = tree.add_child(0, AnswerContent(assertions=["assert property (x);"]))
        tree.record_reward(child, 80.0, params)
        tree.backpropagate(child)
        tree.rollouts_completed = 1
        loaded = ReasoningTree.loads(tree.dumps())
        assert loaded.dumps() == tree.dumps()
        assert loaded.signal_name == "wb_clk_i"
        assert loaded.nodes[child].reward_samples == [80.0]


# --------------------------------------------------------------------------
# Property tests over random operation sequences.
#
# An operation sequence is a list of (kind, data) tuples interpreted against
# the tree; the oracle re-derives invariants from scratch each time.

_PARAMS = SearchParams()

_ops = st.lists(
    st.tuples(
        st.sampled_from(["add", "reward", "backprop"]),
        st.integers(min_value=0, max_value=10_000),
        st.floats(min_value=-100, max_value=100, allow_nan=False),
    ),
    min_size=1,
    max_size=40,
)


def _apply_ops(tree: ReasoningTree, ops, params: SearchParams) -> None:
    tree.record_reward(tree.root, 0.0, params)
    for kind, pick, value in ops:
        ids = sorted(tree.nodes)
        target = ids[pick % len(ids)]
        if kind == "add":
            child = tree.add_child(target, AnswerContent())
            tree.record_reward(child, value, params)
        elif kind == "reward":
            tree.record_reward(target, value, params)
        else:
            tree.backpropagate(target)


@given(ops=_ops)
@settings(max_examples=150, deadline=None)
def test_tree_integrity_and_q_bounds(ops):
    params = _PARAMS
    tree = new_tree()
    _apply_ops(tree, ops, params)
    tree.validate()
    for node in tree.nodes.values():
        assert -100.0 <= node.q_value <= 100.0
        assert node.visit_count == len(node.reward_samples)


@given(ops=_ops)
@settings(max_examples=75, deadline=None)
def test_determinism_bit_identical(ops):
    params = _PARAMS
    t1, t2 = new_tree(), new_tree()
    _apply_ops(t1, ops, params)
    _apply_ops(t2, ops, params)
    assert t1.dumps() == t2.dumps()


@given(ops=_ops)
@settings(max_examples=75, deadline=None)
def test_selection_is_greedy(ops):
    params = _PARAMS
    tree = new_tree()
    _apply_ops(tree, ops, params)
    chosen = tree.select_node(params)
    chosen_uct = compute_uct(
        tree.nodes[chosen], tree.parent_visit_count(chosen), params
    )
    for node_id in tree.nodes:
        other = compute_uct(
            tree.nodes[node_id], tree.parent_visit_count(node_id), params
        )
        assert chosen_uct >= other or math.isclose(chosen_uct, other)


@given(
    parent_q=st.floats(min_value=-100, max_value=100, allow_nan=False),
    child_q=st.floats(min_value=-100, max_value=100, allow_nan=False),
)
@settings(max_examples=100, deadline=None)
def test_monotone_attraction(parent_q, child_q):
    params = _PARAMS
    tree = new_tree()
    tree.record_reward(0, parent_q, params)
    child = tree.add_child(0, AnswerContent())
    tree.record_reward(child, child_q, params)
    before = tree.nodes[0].q_value
    tree.backpropagate(child)
    after = tree.nodes[0].q_value
    if child_q > parent_q:
        assert after > before
    assert -100.0 <= after <= 100.0
