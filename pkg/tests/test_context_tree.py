"""Tests for the MAP context tree, pruning and the total suffix tree."""

import itertools
import math

import numpy as np
import pytest

from src.domain.context_tree import (
    UNIFORM,
    ContextTree,
    ContextTreeError,
    build_tst,
    kld_prune_delta,
    likelihood_prune_delta,
    likelihood_term,
    lookup,
    node_cost,
    prior_weight,
    prune,
    straightness,
    truncate_history,
)
from src.domain.geometry import DccSymbol
from src.domain.training import CountNode, TrainingCorpus, TreeParams, build_initial_tree, fill_to_full
from src.domain.synthetic import markov_corpus, random_transitions

FIG3_CONTEXTS = ["l", "sll", "sls", "slr", "ss", "sr", "rl", "rs", "rr"]


def random_full_contexts(rng, depth=3):
    contexts = []

    def grow(context):
        if len(context) < depth and (not context or rng.random() < 0.6):
            for symbol in "lsr":
                grow(context + symbol)
        else:
            contexts.append(context)

    grow("")
    return contexts


def all_prunings(node):
    """Every full subtree rooted at ``node``, as lists of end nodes."""
    options = [[node]]
    if not node.is_leaf:
        child_options = [all_prunings(child) for child in node.ordered_children()]
        for combination in itertools.product(*child_options):
            options.append([n for part in combination for n in part])
    return options


class TestStraightness:
    """Straightness of context paths."""

    def test_reference_vectors(self):
        """Known values for three contexts."""
        assert straightness("srrl") == pytest.approx(4 * math.sqrt(5) / 5, abs=1e-9)
        assert straightness("lrl") == pytest.approx(math.sqrt(2) / 2, abs=1e-9)
        assert straightness("ss") == pytest.approx(0.0, abs=1e-9)

    def test_root_is_straight(self):
        """The empty context is a single edge."""
        assert straightness("") == 0.0

    def test_closed_path_uses_distance_from_start(self):
        """A degenerate chord falls back to the distance from the first point."""
        assert straightness("rrr") == pytest.approx(math.sqrt(2))


class TestCosts:
    """Likelihood and prior terms."""

    def test_likelihood_term(self):
        """Zero counts contribute nothing."""
        assert likelihood_term([2, 2, 0], 4) == pytest.approx(math.log(2))
        assert likelihood_term([0, 0, 0], 4) == 0.0

    def test_prior_weight(self):
        """alpha / L = a ln L / L."""
        assert prior_weight(100, 0.25) == pytest.approx(0.25 * math.log(100) / 100)
        assert prior_weight(1, 0.25) == 0.0

    def test_node_cost(self):
        """f(w) is the likelihood term plus the weighted straightness."""
        node = CountNode("srrl", [1, 2, 3])
        expected = likelihood_term([1, 2, 3], 50) + prior_weight(50, 0.25) * straightness("srrl")
        assert node_cost(node, 50, 0.25) == pytest.approx(expected)

    def test_kld_identity(self):
        """Pruning delta in KLD form equals the direct likelihood difference."""
        rng = np.random.default_rng(5)
        for _ in range(1000):
            parent = CountNode("s")
            for symbol in "lsr":
                counts = rng.integers(0, 50, size=3) * (rng.random(3) > 0.2)
                parent.children[symbol] = CountNode("s" + symbol, counts)
            parent.counts = [sum(c.counts[i] for c in parent.children.values()) for i in range(3)]
            length = max(1, int(parent.total))
            direct = likelihood_prune_delta(parent, length)
            assert kld_prune_delta(parent, length) == pytest.approx(direct, rel=1e-12, abs=1e-12)
            assert kld_prune_delta(parent, length) <= 1e-15

    def test_kld_form_needs_leaf_children(self):
        """Only nodes whose three children are end nodes qualify."""
        with pytest.raises(ContextTreeError):
            kld_prune_delta(CountNode("", [1, 1, 1]), 3)


class TestContextTree:
    """Construction, lookup and code length."""

    def test_from_contexts(self, fig3_tree):
        """The worked example tree has exactly the given contexts."""
        assert sorted(fig3_tree.contexts()) == sorted(FIG3_CONTEXTS)
        assert fig3_tree.max_depth == 3

    def test_missing_sibling_rejected(self):
        """A context set must form a full tree."""
        with pytest.raises(ContextTreeError):
            ContextTree.from_contexts(["l", "s"], TreeParams(depth=1, budget=3))

    def test_prefix_context_rejected(self):
        """A context cannot also be an intermediate node."""
        with pytest.raises(ContextTreeError):
            ContextTree.from_contexts(["l", "s", "r", "sl", "ss", "sr"], TreeParams(depth=2, budget=9))

    def test_non_full_root_rejected(self):
        """The constructor validates fullness."""
        root = CountNode("")
        root.children["l"] = CountNode("l")
        with pytest.raises(ContextTreeError):
            ContextTree(root, TreeParams(depth=1, budget=3), 1)

    def test_lookup_uses_deepest_context(self):
        """Smoothed distribution of the matched end node."""
        tree = ContextTree.from_contexts(FIG3_CONTEXTS, TreeParams(depth=3, budget=81), 10, {"sls": (3, 1, 0)})
        assert tree.lookup("slsrr") == pytest.approx((4 / 7, 2 / 7, 1 / 7))
        assert lookup([DccSymbol.STRAIGHT, DccSymbol.LEFT, DccSymbol.STRAIGHT], tree) == tree.lookup("sls")
        assert tree.lookup("r") == pytest.approx(UNIFORM)
        assert tree.probabilities_at("slsl", 3) == tree.lookup("sls")

    def test_code_length_of_uniform_tree(self, fig3_tree, fig2_contour):
        """Zero counts give log2(3) bits per symbol."""
        assert fig3_tree.code_length(fig2_contour.symbols) == pytest.approx(len(fig2_contour) * math.log2(3))

    def test_cost_splits_into_likelihood_and_prior(self, trained_model):
        """F(T) = likelihood part + prior part."""
        tree = trained_model.tree
        assert tree.cost() == pytest.approx(tree.likelihood_cost() + tree.prior_cost())


class TestPrune:
    """Optimal pruning."""

    def test_matches_exhaustive_minimum(self):
        """prune finds the cheapest full subtree on random trees of depth <= 3."""
        rng = np.random.default_rng(6)
        for _ in range(200):
            contexts = random_full_contexts(rng)
            counts = {c: tuple(int(v) for v in rng.integers(0, 30, size=3)) for c in contexts}
            a = float(rng.choice([0.0, 0.25, 1.0, 4.0]))
            tree = ContextTree.from_contexts(contexts, TreeParams(depth=3, budget=81, a=a), 0, counts)
            tree.length = max(2, int(tree.root.total))

            best = min(
                sum(node_cost(n, tree.length, a) for n in option)
                for option in all_prunings(tree.root)
            )
            pruned = prune(tree)
            assert pruned.cost() == pytest.approx(best, rel=0, abs=1e-12)
            assert pruned.cost() <= tree.cost() + 1e-12

    def test_ties_prune(self):
        """A constant corpus collapses to the root."""
        corpus = TrainingCorpus(("s" * 1000,))
        params = TreeParams.for_length(corpus.length)
        initial = ContextTree.from_trie(fill_to_full(build_initial_tree(corpus, params)))
        pruned = prune(initial)
        assert pruned.contexts() == [""]
        assert pruned.cost() <= initial.cost()

    @pytest.mark.parametrize("source", ["natural", "markov"])
    def test_smaller_prior_weight_keeps_more_contexts(self, training_contours, source):
        """End-node counts never shrink as a falls from 0.5 to 0.25 to 0."""
        if source == "natural":
            corpus = TrainingCorpus.from_contours(training_contours)
        else:
            corpus = markov_corpus(random_transitions(np.random.default_rng(8)), 20, 400, seed=9)
        sizes = []
        for a in [0.5, 0.25, 0.0]:
            params = TreeParams.for_length(corpus.length, a=a)
            initial = ContextTree.from_trie(fill_to_full(build_initial_tree(corpus, params)))
            sizes.append(len(prune(initial).end_nodes()))
        assert sizes[0] <= sizes[1] <= sizes[2]

    def test_pruned_tree_is_full(self, trained_model):
        """Pruning keeps the tree full."""
        for node in trained_model.tree.root.iter_preorder():
            assert len(node.children) in (0, 3)


class TestTotalSuffixTree:
    """Suffix closure used to compact histories."""

    def test_worked_example(self, fig3_tst):
        """End nodes of the worked example's total suffix tree."""
        assert set(fig3_tst.end_nodes) == {"ll", "ls", "lr", "sll", "sls", "slr", "ss", "sr", "rl", "rs", "rr"}
        assert fig3_tst.sorted_end_nodes()[0] == "ll"
        assert "sl" in fig3_tst

    def test_truncate_history(self, fig3_tst):
        """Shortest prefix that is an end node, or the whole history."""
        assert truncate_history("slrrr", fig3_tst) == "slr"
        assert truncate_history("ssl", fig3_tst) == "ss"
        assert truncate_history("s", fig3_tst) == "s"
        assert truncate_history("", fig3_tst) == ""

    def test_truncation_preserves_lookup(self, trained_model):
        """Truncated histories select the same context as the full ones."""
        tree, tst = trained_model.tree, trained_model.tst
        rng = np.random.default_rng(8)
        for _ in range(500):
            history = "".join("lsr"[i] for i in rng.integers(0, 3, size=int(rng.integers(0, 12))))
            truncated = truncate_history(history, tst)
            assert tree.find_context(truncated) is tree.find_context(history)

    def test_tst_is_suffix_closed(self, trained_model):
        """Dropping the most recent symbol of a node gives a node."""
        tst = build_tst(trained_model.tree)
        for node in tst.nodes:
            if node:
                assert node[1:] in tst
                assert node[:-1] in tst
