"""Synthetic dense-text annotations for tests, demos and benchmarks.

Rendered word width is proportional to character count, so the aspect
ratio of every instance tracks its length.  Word lengths follow a
long-tailed distribution concentrated on 4 to 10 characters.
"""

from __future__ import annotations

import math
import string

import numpy as np

from .annotations import Dataset, ImageAnnotation, TextInstance, Transcription
from .geometry import Polygon

ALPHABET = string.ascii_letters + string.digits


def length_distribution(n_max: int = 25, mode: float = 6.0, spread: float = 0.45) -> np.ndarray:
    """Log-normal-shaped probabilities over lengths ``1..n_max`` (index 0 is length 1)."""
    n = np.arange(1, n_max + 1)
    w = np.exp(-(np.log(n) - math.log(mode)) ** 2 / (2 * spread ** 2))
    return w / w.sum()


def sample_lengths(rng: np.random.Generator, size: int, n_max: int = 25) -> np.ndarray:
    return rng.choice(np.arange(1, n_max + 1), size=size, p=length_distribution(n_max))


def random_word(rng: np.random.Generator, length: int) -> str:
    return "".join(rng.choice(list(ALPHABET), size=length))


def _rotate(points, angle, cx, cy):
    c, s = math.cos(angle), math.sin(angle)
    return [(cx + (x - cx) * c - (y - cy) * s, cy + (x - cx) * s + (y - cy) * c) for x, y in points]


def word_polygon(rng, length, width, height, curved=False, max_angle=0.2):
    """Outline of a rendered word placed at random inside a ``width x height`` frame."""
    char_h = rng.uniform(12.0, 28.0)
    char_w = 0.55 * char_h * rng.uniform(0.9, 1.1)
    word_w = length * char_w
    limit = 0.8 * width
    if word_w > limit:
        char_h *= limit / word_w
        word_w = limit
    x0 = rng.uniform(0.05 * width, width - word_w - 0.05 * width)
    y0 = rng.uniform(0.1 * height, 0.9 * height - char_h)
    if curved:
        k = 4
        xs = np.linspace(x0, x0 + word_w, k)
        bend = rng.uniform(-0.5, 0.5) * char_h
        offs = bend * np.sin(np.linspace(0, math.pi, k))
        top = [(float(x), float(y0 + o)) for x, o in zip(xs, offs)]
        bottom = [(float(x), float(y0 + o + char_h)) for x, o in zip(xs[::-1], offs[::-1])]
        return Polygon(tuple(top + bottom))
    pts = [(x0, y0), (x0 + word_w, y0), (x0 + word_w, y0 + char_h), (x0, y0 + char_h)]
    angle = rng.uniform(-max_angle, max_angle)
    return Polygon(tuple(_rotate(pts, angle, x0 + word_w / 2, y0 + char_h / 2)))


def make_image(rng, image_id, n_words, width=1280, height=960, n_max=25,
               curved_frac=0.2, ignore_frac=0.0) -> ImageAnnotation:
    instances = []
    for n in sample_lengths(rng, n_words, n_max):
        poly = word_polygon(rng, int(n), width, height, curved=rng.random() < curved_frac)
        if rng.random() < ignore_frac:
            text = Transcription("###", True)
        else:
            text = Transcription(random_word(rng, int(n)))
        instances.append(TextInstance(poly, text))
    return ImageAnnotation(image_id, width, height, tuple(instances))


def make_dataset(n_images=10, words_per_image=(5, 40), seed=0, name="synthetic",
                 n_max=25, curved_frac=0.2, ignore_frac=0.05) -> Dataset:
    """Reproducible synthetic dataset; ``words_per_image`` is an inclusive range."""
    rng = np.random.default_rng(seed)
    lo, hi = words_per_image
    images = [make_image(rng, f"img_{i:04d}", int(rng.integers(lo, hi + 1)), n_max=n_max,
                         curved_frac=curved_frac, ignore_frac=ignore_frac)
              for i in range(n_images)]
    return Dataset(tuple(images), name=name)


def make_corpus(n_words=10_000, words_per_image=50, seed=0, n_max=25) -> Dataset:
    """Exactly ``n_words`` non-ignored words spread over full images of ``words_per_image``."""
    rng = np.random.default_rng(seed)
    images = []
    remaining = n_words
    i = 0
    while remaining > 0:
        k = min(words_per_image, remaining)
        images.append(make_image(rng, f"img_{i:05d}", k, n_max=n_max, curved_frac=0.1))
        remaining -= k
        i += 1
    return Dataset(tuple(images), name="corpus")
