"""Chain-code geometry: alphabets, edge conversion, mask tracing, distances.

Coordinates are between-pixel lattice points in the image frame: x grows to
the right, y grows downward. North is therefore (0, -1).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

SYMBOLS = "lsr"
_CLOCKWISE = "NESW"


class ContourError(ValueError):
    """Invalid chain code or edge sequence."""
    pass


class AbsoluteDirection(str, Enum):
    """Absolute edge direction on the lattice."""
    N = "N"
    E = "E"
    S = "S"
    W = "W"

    @property
    def vector(self) -> Tuple[int, int]:
        return _VECTORS[self]


class DccSymbol(str, Enum):
    """Relative turn between consecutive edges."""
    LEFT = "l"
    STRAIGHT = "s"
    RIGHT = "r"


_VECTORS = {
    AbsoluteDirection.N: (0, -1),
    AbsoluteDirection.E: (1, 0),
    AbsoluteDirection.S: (0, 1),
    AbsoluteDirection.W: (-1, 0),
}
_TURN_OFFSET = {"l": -1, "s": 0, "r": 1}

# (direction, symbol) -> direction, all twelve entries
_TURNS = {
    (direction, symbol): AbsoluteDirection(_CLOCKWISE[(_CLOCKWISE.index(direction.value) + offset) % 4])
    for direction in AbsoluteDirection
    for symbol, offset in _TURN_OFFSET.items()
}
# (previous, next) -> symbol; reversals are absent
_RELATIVE = {(previous, _TURNS[(previous, symbol)]): symbol for (previous, symbol) in _TURNS}


class GridPoint(NamedTuple):
    """Integer lattice coordinate."""
    x: int
    y: int

    def step(self, direction: AbsoluteDirection) -> "GridPoint":
        dx, dy = _VECTORS[direction]
        return GridPoint(self.x + dx, self.y + dy)


class Edge(NamedTuple):
    """An edge identified by its endpoint and its absolute direction."""
    end: GridPoint
    direction: AbsoluteDirection


@dataclass(frozen=True)
class DccContour:
    """Starting point, initial absolute direction and relative-symbol string."""
    start: GridPoint
    initial: AbsoluteDirection
    symbols: str = ""

    def __post_init__(self):
        object.__setattr__(self, "start", GridPoint(int(self.start[0]), int(self.start[1])))
        object.__setattr__(self, "initial", AbsoluteDirection(self.initial))
        symbols = "".join(s.value if isinstance(s, DccSymbol) else s for s in self.symbols)
        if symbols.strip(SYMBOLS):
            raise ContourError(f"Symbols must be drawn from '{SYMBOLS}': {symbols!r}")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def edge_count(self) -> int:
        return len(self.symbols) + 1


def normalize_symbol(symbol) -> str:
    """Accept a DccSymbol member or a one-character string."""
    value = symbol.value if isinstance(symbol, DccSymbol) else symbol
    if value not in _TURN_OFFSET:
        raise ContourError(f"Unknown relative symbol: {symbol!r}")
    return value


def rotate(direction: AbsoluteDirection, symbol) -> AbsoluteDirection:
    """Apply a relative turn: l is counterclockwise, r clockwise, s identity."""
    return _TURNS[(AbsoluteDirection(direction), normalize_symbol(symbol))]


def relative_symbol(previous: AbsoluteDirection, following: AbsoluteDirection) -> str:
    """Symbol turning ``previous`` into ``following``; reversals are rejected."""
    try:
        return _RELATIVE[(previous, following)]
    except KeyError:
        raise ContourError(f"Edge reverses direction: {previous.value} -> {following.value}") from None


def dcc_to_edges(contour: DccContour) -> List[Edge]:
    """Decode a contour to its N+1 edges; entry 0 is the initial edge."""
    direction = contour.initial
    point = contour.start.step(direction)
    edges = [Edge(point, direction)]
    for symbol in contour.symbols:
        direction = _TURNS[(direction, symbol)]
        point = point.step(direction)
        edges.append(Edge(point, direction))
    return edges


def edges_to_dcc(edges: Sequence[Tuple[GridPoint, AbsoluteDirection]]) -> DccContour:
    """Inverse of dcc_to_edges."""
    if not edges:
        raise ContourError("At least one edge is required")

    first_end, first_direction = edges[0]
    first_direction = AbsoluteDirection(first_direction)
    dx, dy = _VECTORS[first_direction]
    start = GridPoint(first_end[0] - dx, first_end[1] - dy)

    symbols = []
    previous_end, previous_direction = GridPoint(*first_end), first_direction
    for index, (end, direction) in enumerate(edges[1:], start=1):
        direction = AbsoluteDirection(direction)
        symbols.append(relative_symbol(previous_direction, direction))
        expected = previous_end.step(direction)
        if tuple(end) != expected:
            raise ContourError(f"Edge {index} is not adjacent to its predecessor: {tuple(end)} != {expected}")
        previous_end, previous_direction = expected, direction

    return DccContour(start, first_direction, "".join(symbols))


def endpoints(contour: DccContour) -> np.ndarray:
    """All N+1 edge endpoints as an (N+1, 2) integer array."""
    direction_index = _CLOCKWISE.index(contour.initial.value)
    headings = [direction_index]
    for symbol in contour.symbols:
        direction_index = (direction_index + _TURN_OFFSET[symbol]) % 4
        headings.append(direction_index)
    steps = _STEP_TABLE[np.asarray(headings, dtype=np.intp)]
    return np.cumsum(steps, axis=0) + np.asarray(contour.start, dtype=np.int64)


_STEP_TABLE = np.array([_VECTORS[AbsoluteDirection(d)] for d in _CLOCKWISE], dtype=np.int64)


def min_distance(p: Tuple[int, int], contour: DccContour) -> float:
    """Euclidean distance from ``p`` to the nearest edge endpoint of ``contour``."""
    points = endpoints(contour)
    deltas = points - np.asarray(p, dtype=np.int64)
    return float(np.sqrt(np.min(np.einsum("ij,ij->i", deltas, deltas))))


def squared_distances(candidates: np.ndarray, contour: DccContour) -> np.ndarray:
    """Exact integer squared distance from each candidate point to the nearest contour endpoint."""
    points = endpoints(contour)
    candidates = np.asarray(candidates, dtype=np.int64).reshape(-1, 2)
    if len(candidates) == 0:
        return np.zeros(0, dtype=np.int64)
    _, nearest = cKDTree(points).query(candidates)
    deltas = candidates - points[nearest]
    return np.einsum("ij,ij->i", deltas, deltas)


def is_closed(contour: DccContour) -> bool:
    """True when the last edge ends where the first edge starts."""
    return tuple(endpoints(contour)[-1]) == tuple(contour.start)


def is_self_intersecting(contour: DccContour) -> bool:
    """True if any lattice point other than a closing start/end is visited twice."""
    points = [tuple(p) for p in endpoints(contour)]
    visited = {tuple(contour.start)}
    for index, point in enumerate(points):
        closes = index == len(points) - 1 and point == tuple(contour.start)
        if point in visited and not closes:
            return True
        visited.add(point)
    return False


# Pixels ahead-right and ahead-left of a vertex (vx, vy) when heading in a direction,
# as offsets of the pixel's top-left corner from the vertex.
_AHEAD = {
    AbsoluteDirection.E: ((0, 0), (0, -1)),
    AbsoluteDirection.S: ((-1, 0), (0, 0)),
    AbsoluteDirection.W: ((-1, -1), (-1, 0)),
    AbsoluteDirection.N: ((0, -1), (-1, -1)),
}


def _trace_region(padded: np.ndarray, start: GridPoint) -> DccContour:
    """Follow a region boundary clockwise with the foreground on the right."""

    def foreground(px: int, py: int) -> bool:
        return bool(padded[py + 1, px + 1])

    direction = AbsoluteDirection.E
    vertex = start.step(direction)
    symbols = []
    while vertex != start:
        (rx, ry), (lx, ly) = _AHEAD[direction]
        if not foreground(vertex.x + rx, vertex.y + ry):
            symbol = "r"
        elif foreground(vertex.x + lx, vertex.y + ly):
            symbol = "l"
        else:
            symbol = "s"
        direction = _TURNS[(direction, symbol)]
        vertex = vertex.step(direction)
        symbols.append(symbol)
    return DccContour(start, AbsoluteDirection.E, "".join(symbols))


def trace_mask(mask: np.ndarray) -> List[DccContour]:
    """Trace the outer boundary of every 4-connected foreground region.

    Contours are ordered by starting point (y, then x); each starts at the
    top-left corner of its region's topmost-leftmost pixel heading East.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ContourError(f"Mask must be two-dimensional, got shape {mask.shape}")
    if not mask.any():
        return []

    labels, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(2, 1))
    padded = np.pad(mask, 1, constant_values=False)

    contours = []
    for label, region in enumerate(ndimage.find_objects(labels), start=1):
        rows, cols = region
        y, x = np.argwhere(labels[rows, cols] == label)[0]
        start = GridPoint(int(x + cols.start), int(y + rows.start))
        contours.append(_trace_region(padded, start))

    contours.sort(key=lambda c: (c.start.y, c.start.x))
    logger.debug(f"Traced {len(contours)} contours from {mask.shape[1]}x{mask.shape[0]} mask")
    return contours


def translate(contour: DccContour, dx: int, dy: int) -> DccContour:
    """Same contour moved by (dx, dy)."""
    return DccContour(GridPoint(contour.start.x + dx, contour.start.y + dy), contour.initial, contour.symbols)


def bounding_box(contours: Iterable[DccContour]) -> Tuple[int, int, int, int]:
    """(min_x, min_y, max_x, max_y) over starting points and endpoints."""
    boxes = []
    for contour in contours:
        points = np.vstack([np.asarray(contour.start, dtype=np.int64)[None, :], endpoints(contour)])
        boxes.append((*points.min(axis=0), *points.max(axis=0)))
    if not boxes:
        return (0, 0, 0, 0)
    array = np.asarray(boxes)
    return (int(array[:, 0].min()), int(array[:, 1].min()), int(array[:, 2].max()), int(array[:, 3].max()))
