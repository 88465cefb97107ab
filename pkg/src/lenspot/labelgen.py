"""Supervision targets generated from annotations.

* word-length priors: per-instance aspect ratio and character count, each
  normalised to ``[0, 1]``;
* segmentation-map labels: a ``H x W`` grid that is 0 on background, 0.5
  on regular-length words and 1 on extreme-length words;
* dataset statistics over word length and instance density.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .annotations import Dataset, ImageAnnotation, char_count
from .errors import DegenerateGeometry, OutOfRange
from .geometry import aspect_ratio, rasterize_polygon

DEFAULT_N_MAX = 25
LINE_LEVEL_N_MAX = 100
DEFAULT_RATIO_CAP = 20.0
DEFAULT_MAP_SIZE = (224, 224)

REGULAR_MIN = 4
REGULAR_MAX = 10

REGULAR_VALUE = 0.5
EXTREME_VALUE = 1.0


class LengthClass(enum.Enum):
    REGULAR = "regular"
    EXTREME = "extreme"


@dataclass(frozen=True)
class WordLengthPrior:
    ratio_raw: float
    char_count: int
    ratio_norm: float
    count_norm: float

    @classmethod
    def from_raw(cls, ratio_raw, char_count, ratio_cap=DEFAULT_RATIO_CAP, n_max=DEFAULT_N_MAX):
        return cls(ratio_raw, char_count,
                   min(ratio_raw / ratio_cap, 1.0), min(char_count / n_max, 1.0))

    def pair(self) -> tuple[float, float]:
        return (self.ratio_norm, self.count_norm)


@dataclass(frozen=True)
class PriorLabelSet:
    image_id: str
    priors: tuple[WordLengthPrior, ...] = ()


@dataclass(frozen=True)
class SegMapLabel:
    """Label grid stored row-major as ``values[y, x]`` with shape ``(H, W)``."""

    values: np.ndarray

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class LengthHistogram:
    buckets: dict[int, int] = field(default_factory=dict)
    short: int = 0
    regular: int = 0
    long: int = 0

    @property
    def total(self) -> int:
        return sum(self.buckets.values())


def classify_length(n: int, n_max: int = DEFAULT_N_MAX) -> LengthClass:
    """Regular for 4..10 characters inclusive, extreme for every other count up to ``n_max``."""
    if n < 1 or n > n_max:
        raise OutOfRange(f"character count {n} outside [1, {n_max}]")
    if REGULAR_MIN <= n <= REGULAR_MAX:
        return LengthClass.REGULAR
    return LengthClass.EXTREME


def length_bucket(n: int) -> str:
    """``'short'``, ``'regular'`` or ``'long'``; unbounded above, unlike :func:`classify_length`."""
    if n < REGULAR_MIN:
        return "short"
    if n <= REGULAR_MAX:
        return "regular"
    return "long"


def instance_prior(inst, ratio_cap=DEFAULT_RATIO_CAP, n_max=DEFAULT_N_MAX) -> WordLengthPrior:
    n = char_count(inst.transcription)
    if n > n_max:
        raise OutOfRange(f"character count {n} exceeds N_max={n_max}")
    return WordLengthPrior.from_raw(aspect_ratio(inst.polygon).ratio, n, ratio_cap, n_max)


def gen_prior_labels(ann: ImageAnnotation, ratio_cap: float = DEFAULT_RATIO_CAP,
                     n_max: int = DEFAULT_N_MAX) -> PriorLabelSet:
    """One :class:`WordLengthPrior` per non-ignored instance of ``ann``.

    Raises:
        DegenerateGeometry: an instance polygon has no measurable height.
        OutOfRange: an instance is longer than ``n_max``.
    Both messages name the offending instance index.
    """
    priors = []
    for i, inst in enumerate(ann.instances):
        if inst.ignore:
            continue
        try:
            priors.append(instance_prior(inst, ratio_cap, n_max))
        except DegenerateGeometry as exc:
            raise DegenerateGeometry(f"image {ann.image_id!r} instance {i}: {exc}") from None
        except OutOfRange as exc:
            raise OutOfRange(f"image {ann.image_id!r} instance {i}: {exc}") from None
    return PriorLabelSet(ann.image_id, tuple(priors))


def gen_segmap_label(ann: ImageAnnotation, width: int = DEFAULT_MAP_SIZE[0],
                     height: int = DEFAULT_MAP_SIZE[1], n_max: int = DEFAULT_N_MAX) -> SegMapLabel:
    """Rasterise every non-ignored instance onto a ``height x width`` grid.

    Polygons are rescaled from image pixels to map cells and sampled at cell
    centres.  Where instances overlap the larger value wins, so extreme
    words are never masked by regular ones.
    """
    if width < 8 or height < 8:
        raise ValueError(f"map size must be at least 8x8, got {width}x{height}")
    grid = np.zeros((height, width), dtype=float)
    sx, sy = width / ann.width, height / ann.height
    for i, inst in enumerate(ann.instances):
        if inst.ignore:
            continue
        cls = classify_length(char_count(inst.transcription), n_max)
        value = EXTREME_VALUE if cls is LengthClass.EXTREME else REGULAR_VALUE
        covered = rasterize_polygon(inst.polygon.scaled(sx, sy), width, height)
        np.maximum(grid, np.where(covered, value, 0.0), out=grid)
    return SegMapLabel(grid)


def dataset_length_histogram(ds: Dataset) -> LengthHistogram:
    counts = Counter(char_count(inst.transcription) for img in ds for inst in img.cared())
    hist = LengthHistogram(dict(sorted(counts.items())))
    for n, c in counts.items():
        bucket = length_bucket(n)
        setattr(hist, bucket, getattr(hist, bucket) + c)
    return hist


def density_histogram(ds: Dataset) -> dict[int, int]:
    """Map from non-ignored instances per image to the number of such images."""
    counts = Counter(len(img.cared()) for img in ds)
    return dict(sorted(counts.items()))
