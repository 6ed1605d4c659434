"""Seeded synthetic sources: order-2 Markov strings, natural-looking contours, mask suites."""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .geometry import SYMBOLS, AbsoluteDirection, DccContour, GridPoint, bounding_box, translate
from .training import TrainingCorpus
from ..config.constants import DefaultValues

logger = logging.getLogger(__name__)


def random_transitions(rng: np.random.Generator, concentration: float = 0.5) -> np.ndarray:
    """Order-2 transition tensor P[a, b, c] = P(next=c | previous two a, b)."""
    return rng.dirichlet(np.full(3, concentration), size=(3, 3))


def entropy_rate(transitions: np.ndarray) -> float:
    """Entropy rate in bits/symbol of the stationary order-2 chain."""
    transitions = np.asarray(transitions, dtype=float)
    pair_chain = np.zeros((9, 9))
    for a in range(3):
        for b in range(3):
            for c in range(3):
                pair_chain[3 * a + b, 3 * b + c] = transitions[a, b, c]
    values, vectors = np.linalg.eig(pair_chain.T)
    stationary = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    stationary = stationary / stationary.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(transitions > 0, np.log2(transitions), 0.0)
    conditional = -np.sum(transitions * logs, axis=2).reshape(9)
    return float(np.dot(stationary, conditional))


def markov_string(transitions: np.ndarray, length: int, rng: np.random.Generator) -> str:
    """Sample a string; the first two symbols are uniform."""
    if length <= 0:
        return ""
    indices = list(rng.integers(0, 3, size=min(2, length)))
    cumulative = np.cumsum(transitions, axis=2)
    draws = rng.random(max(0, length - 2))
    for u in draws:
        row = cumulative[indices[-2], indices[-1]]
        indices.append(min(int(np.searchsorted(row, u, side="right")), 2))
    return "".join(SYMBOLS[i] for i in indices)


def markov_corpus(
    transitions: np.ndarray,
    count: int,
    length: int,
    seed: int = DefaultValues.DEFAULT_SEED
) -> TrainingCorpus:
    rng = np.random.default_rng(seed)
    return TrainingCorpus(tuple(markov_string(transitions, length, rng) for _ in range(count)))


def natural_symbols(rng: np.random.Generator, length: int, straight: float = 0.8) -> str:
    """Long runs of s broken by turns; a turn is usually undone by the opposite one."""
    symbols = []
    pending: Optional[str] = None
    while len(symbols) < length:
        if rng.random() < straight:
            symbols.append("s")
        elif pending is not None and rng.random() < 0.7:
            symbols.append(pending)
            pending = None
        else:
            turn = "l" if rng.random() < 0.5 else "r"
            symbols.append(turn)
            pending = "r" if turn == "l" else "l"
    return "".join(symbols)


def random_contour(rng: np.random.Generator, length: int) -> DccContour:
    """Uniform random symbols with the start placed so every coordinate is non-negative."""
    symbols = "".join(SYMBOLS[i] for i in rng.integers(0, 3, size=length))
    initial = AbsoluteDirection("NESW"[int(rng.integers(0, 4))])
    return normalize_position(DccContour(GridPoint(0, 0), initial, symbols))


def natural_contour(rng: np.random.Generator, length: int) -> DccContour:
    initial = AbsoluteDirection("NESW"[int(rng.integers(0, 4))])
    return normalize_position(DccContour(GridPoint(0, 0), initial, natural_symbols(rng, length)))


def normalize_position(contour: DccContour) -> DccContour:
    """Translate so the smallest coordinate on each axis is zero."""
    min_x, min_y, _, _ = bounding_box([contour])
    return translate(contour, -min_x, -min_y)


def image_size(contours: List[DccContour]) -> Tuple[int, int]:
    """Smallest (width, height) whose lattice holds every contour."""
    _, _, max_x, max_y = bounding_box(contours)
    return max(max_x, 1), max(max_y, 1)


def _disc(shape: Tuple[int, int], center: Tuple[float, float], radii: Tuple[float, float]) -> np.ndarray:
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    return ((xx - center[0]) / radii[0]) ** 2 + ((yy - center[1]) / radii[1]) ** 2 <= 1.0


def mask_suite(seed: int = DefaultValues.DEFAULT_SEED, size: int = 64) -> List[np.ndarray]:
    """Sixteen binary masks: rectangles, discs, ellipses, blobs, rings and multi-part scenes."""
    rng = np.random.default_rng(seed)
    shape = (size, size)
    masks: List[np.ndarray] = []

    single = np.zeros(shape, dtype=bool)
    single[size // 2, size // 2] = True
    masks.append(single)

    for _ in range(3):
        mask = np.zeros(shape, dtype=bool)
        x0, y0 = rng.integers(1, size // 2, size=2)
        x1, y1 = rng.integers(size // 2, size - 1, size=2)
        mask[y0:y1, x0:x1] = True
        masks.append(mask)

    for _ in range(3):
        center = tuple(rng.uniform(size * 0.35, size * 0.65, size=2))
        radius = rng.uniform(size * 0.1, size * 0.3)
        masks.append(_disc(shape, center, (radius, radius)))

    for _ in range(3):
        center = tuple(rng.uniform(size * 0.35, size * 0.65, size=2))
        radii = tuple(rng.uniform(size * 0.08, size * 0.3, size=2))
        masks.append(_disc(shape, center, radii))

    for _ in range(3):
        noise = ndimage.gaussian_filter(rng.random(shape), sigma=size / 12)
        masks.append(noise > np.quantile(noise, 0.6))

    ring = _disc(shape, (size / 2, size / 2), (size * 0.35, size * 0.35))
    ring &= ~_disc(shape, (size / 2, size / 2), (size * 0.2, size * 0.2))
    masks.append(ring)

    scattered = np.zeros(shape, dtype=bool)
    for _ in range(6):
        x, y = rng.integers(0, size - 6, size=2)
        w, h = rng.integers(1, 6, size=2)
        scattered[y:y + h, x:x + w] = True
    masks.append(scattered)

    staircase = np.tril(np.ones(shape, dtype=bool))
    staircase[:, size - 4:] = False
    masks.append(staircase)

    logger.debug(f"Generated {len(masks)} synthetic masks of {size}x{size}")
    return masks
