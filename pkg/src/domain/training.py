"""Occurrence statistics and the bounded initial context tree."""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .geometry import SYMBOLS, DccContour
from ..config.constants import DefaultValues

logger = logging.getLogger(__name__)

SYMBOL_INDEX = {symbol: index for index, symbol in enumerate(SYMBOLS)}


class TrainingError(ValueError):
    """Invalid training corpus or parameters."""
    pass


def context_sort_key(context: str) -> Tuple[int, ...]:
    """Order contexts l < s < r position by position."""
    return tuple(SYMBOL_INDEX[c] for c in context)


@dataclass(frozen=True)
class TrainingCorpus:
    """M symbol strings over {l, s, r}."""
    strings: Tuple[str, ...]

    def __post_init__(self):
        strings = tuple(self.strings)
        for string in strings:
            if string.strip(SYMBOLS):
                raise TrainingError(f"Corpus string contains symbols outside '{SYMBOLS}'")
        object.__setattr__(self, "strings", strings)

    @classmethod
    def from_contours(cls, contours: Iterable[DccContour]) -> "TrainingCorpus":
        return cls(tuple(contour.symbols for contour in contours))

    @property
    def size(self) -> int:
        """M, the number of strings."""
        return len(self.strings)

    @property
    def length(self) -> int:
        """L, the total number of symbols."""
        return sum(len(s) for s in self.strings)

    def merged(self, other: "TrainingCorpus") -> "TrainingCorpus":
        return TrainingCorpus(self.strings + other.strings)


def default_depth(length: int) -> int:
    """Smallest D >= 1 with 3^D >= L, i.e. max(1, ceil(ln L / ln 3)) without float rounding."""
    depth, capacity = 1, 3
    while capacity < length:
        depth += 1
        capacity *= 3
    return depth


def default_budget(depth: int) -> int:
    return DefaultValues.BUDGET_FACTOR * depth ** 3


@dataclass(frozen=True)
class TreeParams:
    """Depth D, node budget K, prior weight a and lookup smoothing beta."""
    depth: int
    budget: int
    a: float = DefaultValues.DEFAULT_PRIOR_WEIGHT
    beta: float = DefaultValues.DEFAULT_SMOOTHING

    def __post_init__(self):
        if self.depth < 0:
            raise TrainingError(f"Depth must be non-negative, got {self.depth}")
        if self.budget < 0:
            raise TrainingError(f"Node budget must be non-negative, got {self.budget}")
        if self.a < 0:
            raise TrainingError(f"Prior weight must be non-negative, got {self.a}")
        if self.beta < 0:
            raise TrainingError(f"Smoothing must be non-negative, got {self.beta}")

    @classmethod
    def for_length(
        cls,
        length: int,
        a: float = DefaultValues.DEFAULT_PRIOR_WEIGHT,
        beta: float = DefaultValues.DEFAULT_SMOOTHING,
        depth: Optional[int] = None,
        budget: Optional[int] = None
    ) -> "TreeParams":
        """Fill unset depth and budget from the training size."""
        depth = default_depth(length) if depth is None else depth
        budget = default_budget(depth) if budget is None else budget
        return cls(depth=depth, budget=budget, a=a, beta=beta)


class CountNode:
    """Trie node for a recent-first context u.

    ``counts[i]`` holds N(x·u) for x = SYMBOLS[i]; the node total is N(u).
    """

    __slots__ = ("context", "counts", "children", "clamped")

    def __init__(self, context: str = "", counts: Optional[Sequence[float]] = None):
        self.context = context
        self.counts: List[float] = [float(c) for c in counts] if counts is not None else [0.0, 0.0, 0.0]
        self.children: Dict[str, "CountNode"] = {}
        self.clamped = False

    def __repr__(self) -> str:
        return f"CountNode({self.context!r}, {self.counts}, children={sorted(self.children)})"

    @property
    def total(self) -> float:
        return self.counts[0] + self.counts[1] + self.counts[2]

    @property
    def depth(self) -> int:
        return len(self.context)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def ordered_children(self) -> List["CountNode"]:
        return [self.children[s] for s in SYMBOLS if s in self.children]

    def iter_preorder(self) -> Iterator["CountNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.ordered_children()))

    def copy(self, max_depth: Optional[int] = None) -> "CountNode":
        """Deep copy, optionally cut below ``max_depth``."""
        clone = CountNode(self.context, self.counts)
        clone.clamped = self.clamped
        if max_depth is None or self.depth < max_depth:
            for symbol, child in self.children.items():
                clone.children[symbol] = child.copy(max_depth)
        return clone

    def find(self, context: str) -> Optional["CountNode"]:
        node = self
        for symbol in context:
            node = node.children.get(symbol)
            if node is None:
                return None
        return node


@dataclass
class CountTrie:
    """Count trie plus the bookkeeping of the pass that built it."""
    root: CountNode
    params: TreeParams
    length: int
    peak_nodes: int = 0
    rejected: int = 0

    @property
    def node_count(self) -> int:
        """Non-root nodes."""
        return sum(1 for _ in self.root.iter_preorder()) - 1

    def contexts(self) -> List[str]:
        return [node.context for node in self.root.iter_preorder()]


def count_occurrences(corpus: TrainingCorpus, u: str) -> int:
    """Occurrences of the recent-first sub-string ``u`` over all corpus strings."""
    if not u:
        raise TrainingError("Sub-string must be non-empty")
    forward = u[::-1]
    width = len(forward)
    total = 0
    for string in corpus.strings:
        for i in range(len(string) - width + 1):
            if string.startswith(forward, i):
                total += 1
    return total


def build_initial_tree(corpus: TrainingCorpus, params: TreeParams) -> CountTrie:
    """Single-pass context counting bounded to 2K nodes, then the top-K contexts.

    Positions i >= D+2 (1-indexed) are matched against reversed prefixes of
    lengths 1..D. A missing node is admitted while fewer than 2K nodes exist.
    """
    depth, budget = params.depth, params.budget
    window = 2 * budget
    root = CountNode("")
    admitted = 0
    rejected = 0

    for string in corpus.strings:
        for i in range(depth + 1, len(string)):
            x = SYMBOL_INDEX[string[i]]
            root.counts[x] += 1
            node = root
            for k in range(1, depth + 1):
                symbol = string[i - k]
                child = node.children.get(symbol)
                if child is None:
                    if admitted >= window:
                        rejected += 1
                        break
                    child = CountNode(node.context + symbol)
                    node.children[symbol] = child
                    admitted += 1
                child.counts[x] += 1
                node = child

    logger.debug(f"Counting pass admitted {admitted} nodes (window {window}), {rejected} rejected matches")

    candidates = [node for node in root.iter_preorder() if node.context]
    candidates.sort(key=lambda n: (-n.total, n.depth, context_sort_key(n.context)))
    kept = {node.context for node in candidates[:budget]}
    for context in list(kept):
        kept.update(context[:k] for k in range(1, len(context)))

    trimmed = CountNode("", root.counts)
    for node in root.iter_preorder():
        if not node.context or node.context not in kept:
            continue
        parent = trimmed.find(node.context[:-1])
        parent.children[node.context[-1]] = CountNode(node.context, node.counts)

    trie = CountTrie(root=trimmed, params=params, length=corpus.length, peak_nodes=admitted, rejected=rejected)
    logger.info(f"Initial tree: L={corpus.length}, D={depth}, K={budget}, kept {trie.node_count} contexts")
    return trie


def fill_to_full(trie: CountTrie) -> CountTrie:
    """Give every intermediate node all three children.

    Added children share the parent's remaining occurrences equally and inherit
    its conditional distribution. A negative remainder is clamped to zero.
    """
    root = trie.root.copy()
    added = 0
    for node in list(root.iter_preorder()):
        if node.is_leaf or len(node.children) == 3:
            continue
        missing = [s for s in SYMBOLS if s not in node.children]
        remainder = node.total - sum(child.total for child in node.children.values())
        if remainder < 0:
            node.clamped = True
            remainder = 0.0
        share = remainder / len(missing)
        parent_total = node.total
        for symbol in missing:
            if parent_total > 0:
                counts = [share * c / parent_total for c in node.counts]
            else:
                counts = [0.0, 0.0, 0.0]
            node.children[symbol] = CountNode(node.context + symbol, counts)
            added += 1

    logger.debug(f"Filled tree with {added} added children")
    return CountTrie(
        root=root,
        params=trie.params,
        length=trie.length,
        peak_nodes=trie.peak_nodes,
        rejected=trie.rejected
    )
