"""MAP context tree: straightness prior, node costs, pruning, lookup, total suffix tree."""

import logging
import math
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .geometry import SYMBOLS, AbsoluteDirection, DccContour, GridPoint, endpoints
from .training import CountNode, CountTrie, TreeParams, context_sort_key

logger = logging.getLogger(__name__)

Distribution = Tuple[float, float, float]
UNIFORM: Distribution = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


class ContextTreeError(ValueError):
    """Malformed context tree or context set."""
    pass


@lru_cache(maxsize=65536)
def straightness(w: str) -> float:
    """Largest deviation of the grid path of ``w`` from its chord.

    The path starts at (0, 0) with an East edge to (1, 0); symbols are then
    applied in written order, giving |w| + 2 points.
    """
    points = np.vstack([[0, 0], endpoints(DccContour(GridPoint(0, 0), AbsoluteDirection.E, w))]).astype(float)
    chord = points[-1] - points[0]
    offsets = points - points[0]
    norm = math.hypot(chord[0], chord[1])
    if norm == 0.0:
        return float(np.max(np.hypot(offsets[:, 0], offsets[:, 1])))
    cross = np.abs(chord[0] * offsets[:, 1] - chord[1] * offsets[:, 0])
    return float(np.max(cross) / norm)


def likelihood_term(counts: Sequence[float], length: int) -> float:
    """-(1/L) sum_x N(x·w) ln(N(x·w)/N(w)); zero counts contribute nothing."""
    total = sum(counts)
    if total <= 0 or length <= 0:
        return 0.0
    return -sum(n * math.log(n / total) for n in counts if n > 0) / length


def prior_weight(length: int, a: float) -> float:
    """alpha / L = a ln L / L."""
    if length <= 1:
        return 0.0
    return a * math.log(length) / length


def node_cost(w: CountNode, length: int, a: float) -> float:
    """End-node cost f(w) = likelihood term + a ln L / L * s(w)."""
    return likelihood_term(w.counts, length) + prior_weight(length, a) * straightness(w.context)


def kld(p: Sequence[float], q: Sequence[float]) -> float:
    """KL divergence in nats, skipping zero-probability terms of ``p``."""
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q) if pi > 0)


def _empirical(counts: Sequence[float]) -> Optional[Distribution]:
    total = sum(counts)
    if total <= 0:
        return None
    return tuple(c / total for c in counts)


def kld_prune_delta(u: CountNode, length: int) -> float:
    """Likelihood change from keeping u's three end-node children instead of u.

    Equals -(1/L) sum_v N(u·v) KLD(P(.|u·v) || P(.|u)); never positive.
    """
    if len(u.children) != 3 or any(not child.is_leaf for child in u.children.values()):
        raise ContextTreeError(f"Node {u.context!r} must have three end-node children")
    parent = _empirical(u.counts)
    if parent is None:
        return 0.0
    total = 0.0
    for child in u.ordered_children():
        distribution = _empirical(child.counts)
        if distribution is not None:
            total += child.total * kld(distribution, parent)
    return -total / length


def likelihood_prune_delta(u: CountNode, length: int) -> float:
    """Same quantity as kld_prune_delta, evaluated directly from likelihood terms."""
    children = sum(likelihood_term(child.counts, length) for child in u.children.values())
    return children - likelihood_term(u.counts, length)


class ContextTree:
    """Full ternary context tree with counts at every node."""

    def __init__(self, root: CountNode, params: TreeParams, length: int):
        self.root = root
        self.params = params
        self.length = length
        self._distributions: Dict[str, Distribution] = {}
        self._validate()

    def _validate(self) -> None:
        for node in self.root.iter_preorder():
            if len(node.children) not in (0, 3):
                raise ContextTreeError(
                    f"Node {node.context!r} has {len(node.children)} children; a full tree needs 0 or 3"
                )

    @classmethod
    def from_trie(cls, trie: CountTrie) -> "ContextTree":
        return cls(trie.root.copy(), trie.params, trie.length)

    @classmethod
    def from_contexts(
        cls,
        contexts: Iterable[str],
        params: TreeParams,
        length: int = 0,
        counts: Optional[Mapping[str, Sequence[float]]] = None
    ) -> "ContextTree":
        """Full tree whose end nodes are exactly ``contexts``.

        End-node counts come from ``counts`` (zeros when absent); intermediate
        counts are the sums of their children.
        """
        counts = counts or {}
        contexts = sorted(set(contexts), key=lambda c: (len(c), context_sort_key(c)))
        root = CountNode("")
        for context in contexts:
            node = root
            for symbol in context:
                if symbol not in SYMBOLS:
                    raise ContextTreeError(f"Context {context!r} has symbols outside '{SYMBOLS}'")
                if symbol not in node.children:
                    node.children[symbol] = CountNode(node.context + symbol)
                node = node.children[symbol]

        leaves = set(contexts)
        for node in root.iter_preorder():
            if not node.is_leaf and node.context in leaves:
                raise ContextTreeError(f"Context {node.context!r} is a prefix of another context")
            if node.is_leaf and node.context not in leaves:
                raise ContextTreeError(f"Context set is not full: {node.context!r} missing siblings")

        def accumulate(node: CountNode) -> None:
            if node.is_leaf:
                node.counts = [float(c) for c in counts.get(node.context, (0.0, 0.0, 0.0))]
                return
            totals = [0.0, 0.0, 0.0]
            for child in node.children.values():
                accumulate(child)
                totals = [t + c for t, c in zip(totals, child.counts)]
            node.counts = totals

        accumulate(root)
        return cls(root, params, length)

    def end_nodes(self) -> List[CountNode]:
        return [node for node in self.root.iter_preorder() if node.is_leaf]

    def contexts(self) -> List[str]:
        return [node.context for node in self.end_nodes()]

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.root.iter_preorder())

    @property
    def max_depth(self) -> int:
        return max(node.depth for node in self.root.iter_preorder())

    def likelihood_cost(self) -> float:
        return sum(likelihood_term(node.counts, self.length) for node in self.end_nodes())

    def prior_cost(self) -> float:
        weight = prior_weight(self.length, self.params.a)
        return sum(weight * straightness(node.context) for node in self.end_nodes())

    def cost(self) -> float:
        """F(T) = sum of end-node costs."""
        return sum(node_cost(node, self.length, self.params.a) for node in self.end_nodes())

    def find_context(self, history: str) -> CountNode:
        """Deepest node matched by a recent-first history."""
        node = self.root
        for symbol in history:
            child = node.children.get(symbol)
            if child is None:
                break
            node = child
        return node

    def distribution(self, node: CountNode) -> Distribution:
        """Smoothed (N(x·w) + beta) / (N(w) + 3 beta), cached per node."""
        cached = self._distributions.get(node.context)
        if cached is not None:
            return cached
        beta = self.params.beta
        denominator = node.total + 3 * beta
        if denominator <= 0:
            result = UNIFORM
        else:
            result = tuple((c + beta) / denominator for c in node.counts)
        self._distributions[node.context] = result
        return result

    def lookup(self, history: str) -> Distribution:
        return self.distribution(self.find_context(history))

    def probabilities_at(self, symbols: str, i: int) -> Distribution:
        """Distribution of ``symbols[i]`` given ``symbols[:i]`` in forward order."""
        node = self.root
        k = i - 1
        while k >= 0:
            child = node.children.get(symbols[k])
            if child is None:
                break
            node = child
            k -= 1
        return self.distribution(node)

    def code_length(self, symbols: str) -> float:
        """Ideal code length in bits, history starting empty."""
        bits = 0.0
        for i, symbol in enumerate(symbols):
            bits -= math.log2(self.probabilities_at(symbols, i)[SYMBOLS.index(symbol)])
        return bits


def lookup(history: Sequence, tree: ContextTree) -> Distribution:
    """Probability triple over (l, s, r) for a recent-first history."""
    return tree.lookup("".join(getattr(h, "value", h) for h in history))


def prune(tree: ContextTree) -> ContextTree:
    """Cost-minimizing full subtree; equal costs prune."""
    length, a = tree.length, tree.params.a

    def best(node: CountNode) -> Tuple[float, CountNode]:
        own = node_cost(node, length, a)
        if node.is_leaf:
            return own, CountNode(node.context, node.counts)
        kept = CountNode(node.context, node.counts)
        subtotal = 0.0
        for symbol, child in node.children.items():
            child_cost, child_copy = best(child)
            subtotal += child_cost
            kept.children[symbol] = child_copy
        if own <= subtotal:
            return own, CountNode(node.context, node.counts)
        return subtotal, kept

    total, root = best(tree.root)
    pruned = ContextTree(root, tree.params, length)
    logger.info(
        f"Pruned tree from {len(tree.end_nodes())} to {len(pruned.end_nodes())} end nodes, F={total:.6f}"
    )
    return pruned


class TotalSuffixTree:
    """Full tree over the suffix closure of a context set."""

    def __init__(self, nodes: Set[str]):
        self.nodes = frozenset(nodes)
        children = {node[:-1] for node in self.nodes if node}
        self.end_nodes = frozenset(node for node in self.nodes if node not in children)
        self.max_depth = max((len(node) for node in self.nodes), default=0)

    def __contains__(self, context: str) -> bool:
        return context in self.nodes

    def sorted_end_nodes(self) -> List[str]:
        return sorted(self.end_nodes, key=lambda c: (len(c), context_sort_key(c)))


def build_tst(tree: ContextTree) -> TotalSuffixTree:
    """Close the contexts of ``tree`` under dropping their most recent symbol, then fill siblings."""
    closure: Set[str] = set()
    for context in tree.contexts():
        for start in range(len(context) + 1):
            closure.add(context[start:])

    nodes: Set[str] = set()
    for context in closure:
        nodes.update(context[:k] for k in range(len(context) + 1))

    for node in [n for n in nodes if n]:
        parent = node[:-1]
        nodes.update(parent + symbol for symbol in SYMBOLS)

    tst = TotalSuffixTree(nodes)
    logger.debug(f"Total suffix tree: {len(tst.nodes)} nodes, {len(tst.end_nodes)} end nodes")
    return tst


def truncate_history(history: str, tst: TotalSuffixTree) -> str:
    """Longest recent-first prefix of ``history`` that ends at a TST end node, or all of it."""
    end_nodes = tst.end_nodes
    k = 0
    while k < len(history) and history[:k] not in end_nodes:
        k += 1
    return history[:k]
