"""Tests for the seeded synthetic sources."""

import math

import numpy as np
import pytest

from src.domain.geometry import bounding_box
from src.domain.synthetic import (
    entropy_rate,
    image_size,
    markov_corpus,
    markov_string,
    mask_suite,
    natural_contour,
    natural_symbols,
    random_contour,
    random_transitions,
)


class TestMarkovSource:
    """Order-2 chains over l, s, r."""

    def test_transitions_are_distributions(self):
        """Every (a, b) row sums to one."""
        transitions = random_transitions(np.random.default_rng(60))
        assert transitions.shape == (3, 3, 3)
        assert np.allclose(transitions.sum(axis=2), 1.0)

    def test_uniform_entropy_rate(self):
        """Uniform transitions give log2(3) bits per symbol."""
        assert entropy_rate(np.full((3, 3, 3), 1 / 3)) == pytest.approx(math.log2(3))

    def test_memoryless_entropy_rate(self):
        """Transitions that ignore the past give the entropy of the marginal."""
        p = np.array([0.2, 0.5, 0.3])
        transitions = np.broadcast_to(p, (3, 3, 3))
        expected = -float(np.sum(p * np.log2(p)))
        assert entropy_rate(transitions) == pytest.approx(expected)

    def test_strings_are_reproducible(self):
        """Same seed, same corpus."""
        transitions = random_transitions(np.random.default_rng(61))
        first = markov_corpus(transitions, count=3, length=200, seed=5)
        second = markov_corpus(transitions, count=3, length=200, seed=5)
        assert first == second
        assert first.length == 600
        assert set("".join(first.strings)) <= set("lsr")

    def test_short_strings(self):
        """Lengths below the order are honoured."""
        transitions = random_transitions(np.random.default_rng(62))
        rng = np.random.default_rng(63)
        assert markov_string(transitions, 0, rng) == ""
        assert len(markov_string(transitions, 1, rng)) == 1

    def test_empirical_frequencies_follow_transitions(self):
        """A long sample visits pairs at their stationary rate."""
        p = np.array([0.1, 0.7, 0.2])
        transitions = np.broadcast_to(p, (3, 3, 3))
        sample = markov_string(transitions, 60000, np.random.default_rng(64))
        frequencies = np.array([sample.count(c) for c in "lsr"]) / len(sample)
        assert np.allclose(frequencies, p, atol=0.01)


class TestContourSources:
    """Natural-looking and random contours."""

    def test_natural_symbols_length(self):
        """Exactly the requested number of symbols, mostly straight."""
        symbols = natural_symbols(np.random.default_rng(65), 5000)
        assert len(symbols) == 5000
        assert symbols.count("s") / len(symbols) > 0.7

    @pytest.mark.parametrize("factory", [random_contour, natural_contour])
    def test_positions_are_non_negative(self, factory):
        """Generated contours touch both axes and never go negative."""
        rng = np.random.default_rng(66)
        for length in [0, 1, 10, 300]:
            contour = factory(rng, length)
            min_x, min_y, _, _ = bounding_box([contour])
            assert (min_x, min_y) == (0, 0)
            assert len(contour) == length

    def test_image_size_holds_contours(self):
        """The lattice covers every endpoint."""
        rng = np.random.default_rng(67)
        contours = [natural_contour(rng, 100) for _ in range(4)]
        width, height = image_size(contours)
        _, _, max_x, max_y = bounding_box(contours)
        assert (width, height) == (max(max_x, 1), max(max_y, 1))


class TestMaskSuite:
    """Binary test images."""

    def test_sixteen_masks(self):
        """Deterministic set of square masks."""
        masks = mask_suite(seed=7, size=48)
        assert len(masks) == 16
        assert all(m.shape == (48, 48) and m.dtype == bool for m in masks)
        assert all(m.any() for m in masks)
        again = mask_suite(seed=7, size=48)
        assert all(np.array_equal(a, b) for a, b in zip(masks, again))

    def test_seed_changes_shapes(self):
        """Different seeds draw different shapes."""
        first, second = mask_suite(seed=1), mask_suite(seed=2)
        assert any(not np.array_equal(a, b) for a, b in zip(first, second))
