"""Rate-distortion contour approximation by dynamic programming.

The search runs forward, one layer per emitted symbol. A state is the
compacted history, the lattice coordinate and the heading. Histories are
compacted either through the total suffix tree or by cutting at the tree
depth. Local costs are non-negative, so a state reached in an earlier layer
at no higher cost dominates later arrivals: it has at least as much length
budget left. Dominated arrivals are dropped and every kept state stores a
single parent pointer.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .context_tree import ContextTree, TotalSuffixTree, truncate_history
from .geometry import (
    SYMBOLS,
    AbsoluteDirection,
    DccContour,
    endpoints,
    is_self_intersecting,
    rotate,
    squared_distances,
)
from ..config.constants import ApproximationMode, DefaultValues, ErrorMessages, HistoryMode

logger = logging.getLogger(__name__)

# straighter output first on ties
_SYMBOL_ORDER = "slr"
_STEPS = {
    AbsoluteDirection.N: (0, -1),
    AbsoluteDirection.E: (1, 0),
    AbsoluteDirection.S: (0, 1),
    AbsoluteDirection.W: (-1, 0),
}
_DIRECTIONS = list(AbsoluteDirection)
_DIRECTION_INDEX = {direction: index for index, direction in enumerate(_DIRECTIONS)}
# (heading, step, symbol index) per (direction, symbol)
_MOVES = {
    direction: [
        (rotate(direction, symbol), _STEPS[rotate(direction, symbol)], SYMBOLS.index(symbol), symbol)
        for symbol in _SYMBOL_ORDER
    ]
    for direction in AbsoluteDirection
}

Coordinate = Tuple[int, int]


class InfeasibleApproximationError(ValueError):
    """No approximation satisfies the endpoint, length and region constraints."""
    pass


class SelfIntersectionError(InfeasibleApproximationError):
    """Approximation crosses itself and self-intersections were rejected."""
    pass


@dataclass(frozen=True)
class RdParams:
    """Objective and feasible-region parameters for one approximation."""
    lambda_: float = DefaultValues.DEFAULT_LAMBDA
    d_max: float = DefaultValues.DEFAULT_D_MAX
    mode: ApproximationMode = ApproximationMode.SSDD
    history: HistoryMode = HistoryMode.TST
    reject_self_intersecting: bool = False
    max_states: int = DefaultValues.DEFAULT_MAX_STATES

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lambda_}")
        if self.d_max < 0:
            raise ValueError(f"d_max must be non-negative, got {self.d_max}")
        if self.max_states < 1:
            raise ValueError(f"max_states must be positive, got {self.max_states}")
        object.__setattr__(self, "mode", ApproximationMode(self.mode))
        object.__setattr__(self, "history", HistoryMode(self.history))


@dataclass(frozen=True)
class ApproxResult:
    """Approximated contour with its rate, distortions and search statistics."""
    contour: DccContour
    rate_bits: float
    ssdd: float
    madd: float
    objective: float
    states_expanded: int
    mode: ApproximationMode


def build_region(x: DccContour, d_max: float) -> Dict[Coordinate, int]:
    """Lattice points within ``d_max`` of an endpoint of ``x``, mapped to their squared distance."""
    points = endpoints(x)
    reach = int(math.floor(d_max))
    dx, dy = np.meshgrid(np.arange(-reach, reach + 1), np.arange(-reach, reach + 1), indexing="ij")
    offsets = np.stack([dx.ravel(), dy.ravel()], axis=1)
    offsets = offsets[np.einsum("ij,ij->i", offsets, offsets) <= d_max * d_max]
    candidates = np.unique((points[:, None, :] + offsets[None, :, :]).reshape(-1, 2), axis=0)
    distances = squared_distances(candidates, x)
    inside = distances <= d_max * d_max
    return {
        (int(px), int(py)): int(d2)
        for (px, py), d2 in zip(candidates[inside], distances[inside])
    }


def measure(x: DccContour, x_hat: DccContour) -> Tuple[float, float]:
    """(SSDD, MADD) of x_hat's endpoints against the endpoints of x."""
    distances = squared_distances(endpoints(x_hat), x)
    return float(np.sum(distances)), float(math.sqrt(int(np.max(distances))))


def validate_simple(contour: DccContour) -> bool:
    """True when the contour does not revisit a lattice point."""
    return not is_self_intersecting(contour)


class _RateTable:
    """-log2 P(v | history) per compacted history."""

    def __init__(self, tree: ContextTree):
        self._tree = tree
        self._cache: Dict[str, Tuple[float, float, float]] = {}

    def bits(self, history: str) -> Tuple[float, float, float]:
        cached = self._cache.get(history)
        if cached is None:
            cached = tuple(-math.log2(p) for p in self._tree.lookup(history))
            self._cache[history] = cached
        return cached


def _compactor(tree: ContextTree, tst: Optional[TotalSuffixTree], mode: HistoryMode):
    if mode == HistoryMode.TST:
        if tst is None:
            raise ValueError("A total suffix tree is required for TST history compaction")
        cache: Dict[str, str] = {}

        def compact(history: str) -> str:
            result = cache.get(history)
            if result is None:
                result = truncate_history(history, tst)
                cache[history] = result
            return result
        return compact

    depth = tree.max_depth
    return lambda history: history[:depth]


def approximate(
    x: DccContour,
    tree: ContextTree,
    tst: Optional[TotalSuffixTree],
    params: RdParams
) -> ApproxResult:
    """Optimal approximation of ``x`` under ``params.mode``.

    The first edge is kept, the path ends at the first visit of x's last
    endpoint, uses at most len(x) symbols and stays inside the region.
    Raises InfeasibleApproximationError when no such path exists or the
    search keeps more than ``params.max_states`` states.
    """
    points = endpoints(x)
    origin = (int(points[0][0]), int(points[0][1]))
    target = (int(points[-1][0]), int(points[-1][1]))
    budget = len(x)
    ssdd_mode = params.mode == ApproximationMode.SSDD
    weight = params.lambda_

    region = build_region(x, params.d_max)
    if origin not in region:
        raise InfeasibleApproximationError(f"{ErrorMessages.INFEASIBLE}: empty feasible region")
    cells = {point: (index, d2) for index, (point, d2) in enumerate(region.items())}
    cell_count = len(cells)

    rates = _RateTable(tree)
    compact = _compactor(tree, tst, params.history)
    history_ids: Dict[str, int] = {}

    def key(history: str, cell: int, heading: AbsoluteDirection) -> int:
        history_id = history_ids.setdefault(history, len(history_ids))
        return (history_id * cell_count + cell) * 4 + _DIRECTION_INDEX[heading]

    # entry 0 is the initial state; parents[i] and moves[i] lead into entry i
    parents: List[int] = [-1]
    moves: List[str] = [""]
    initial = key("", cells[origin][0], x.initial)
    settled: Dict[int, float] = {initial: 0.0}
    frontier: Dict[int, Tuple[float, int, str, int, int, AbsoluteDirection]] = {
        initial: (0.0, 0, "", origin[0], origin[1], x.initial)
    }

    # the incumbent only tightens between layers so pruning is independent of visit order
    best_cost, best_entry, best_symbol = math.inf, -1, ""
    if origin == target:
        best_cost = 0.0
        frontier = {}

    for layer in range(budget):
        if not frontier:
            break
        remaining = budget - layer - 1
        bound = best_cost
        following: Dict[int, Tuple[float, int, str, int, int, AbsoluteDirection]] = {}
        for cost, entry, history, px, py, direction in frontier.values():
            if cost >= bound:
                continue
            bits = rates.bits(history)
            for heading, (dx, dy), index, symbol in _MOVES[direction]:
                point = (px + dx, py + dy)
                cell = cells.get(point)
                if cell is None:
                    continue
                local = cell[1] + weight * bits[index] if ssdd_mode else bits[index]
                total = cost + local
                if total >= bound:
                    continue
                if point == target:
                    if total < best_cost:
                        best_cost, best_entry, best_symbol = total, entry, symbol
                    continue
                if remaining == 0 or abs(target[0] - point[0]) + abs(target[1] - point[1]) > remaining:
                    continue
                successor_history = compact(symbol + history)
                successor = key(successor_history, cell[0], heading)
                if settled.get(successor, math.inf) <= total:
                    continue
                settled[successor] = total
                previous = following.get(successor)
                if previous is not None:
                    slot = previous[1]
                    parents[slot] = entry
                    moves[slot] = symbol
                else:
                    slot = len(parents)
                    if slot >= params.max_states:
                        raise InfeasibleApproximationError(
                            f"{ErrorMessages.STATE_BUDGET_EXCEEDED} ({params.max_states} states)"
                        )
                    parents.append(entry)
                    moves.append(symbol)
                following[successor] = (total, slot, successor_history, point[0], point[1], heading)
        frontier = following

    states_expanded = len(parents)
    if math.isinf(best_cost):
        raise InfeasibleApproximationError(
            f"{ErrorMessages.INFEASIBLE}: no path reaches {target} within {budget} symbols and d_max={params.d_max}"
        )

    symbols = [best_symbol] if best_entry >= 0 else []
    entry = best_entry
    while entry > 0:
        symbols.append(moves[entry])
        entry = parents[entry]
    symbols.reverse()

    contour = DccContour(x.start, x.initial, "".join(symbols))
    ssdd, madd = measure(x, contour)
    rate_bits = tree.code_length(contour.symbols)
    if params.reject_self_intersecting and not validate_simple(contour):
        raise SelfIntersectionError("Approximation intersects itself")

    logger.debug(
        f"Approximated {len(x)} symbols by {len(contour)} ({params.mode.value}), "
        f"rate={rate_bits:.3f} bits, ssdd={ssdd}, madd={madd:.3f}, states={states_expanded}"
    )
    return ApproxResult(
        contour=contour,
        rate_bits=rate_bits,
        ssdd=ssdd,
        madd=madd,
        objective=best_cost,
        states_expanded=states_expanded,
        mode=params.mode
    )


def approx_ssdd(x: DccContour, tree: ContextTree, tst: Optional[TotalSuffixTree], params: RdParams) -> ApproxResult:
    """Minimize squared endpoint distortion plus lambda times rate."""
    if params.mode != ApproximationMode.SSDD:
        raise ValueError(f"approx_ssdd needs mode ssdd, got {params.mode.value}")
    return approximate(x, tree, tst, params)


def approx_madd(x: DccContour, tree: ContextTree, tst: Optional[TotalSuffixTree], params: RdParams) -> ApproxResult:
    """Minimize rate with every endpoint within d_max of the original."""
    if params.mode != ApproximationMode.MADD:
        raise ValueError(f"approx_madd needs mode madd, got {params.mode.value}")
    return approximate(x, tree, tst, params)
