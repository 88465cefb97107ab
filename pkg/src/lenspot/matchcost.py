"""Set-prediction costs, one-to-one assignment and detection/recognition losses.

All functions are pure and operate on plain values. Boxes are normalised
``(x1, y1, x2, y2)`` rectangles; masks and maps are 2-D numpy arrays in
``[0, 1]``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptySequence, InfeasibleMatrix, ShapeMismatch, ValidationError
from .geometry import Polygon, pixel_center_grid, points_in_polygon

EPS = 1e-8
DEFAULT_MASK_SIZE = 28


@dataclass(frozen=True)
class BoxRect:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box {vals}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"box corners out of order {vals}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class CostWeights:
    cls: float = 2.0
    prior: float = 1.0
    map: float = 2.0
    l1: float = 5.0
    giou: float = 2.0
    l2: float = 2.0
    dice: float = 2.0
    alpha: float = 0.25
    gamma: float = 2.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("cls", "prior", "map", "l1", "giou", "l2", "dice", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"weight {name} must be finite and >= 0, got {v}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"focal alpha must lie in (0, 1), got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"smooth-L1 beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class Prediction:
    class_prob: float
    box: BoxRect
    mask: np.ndarray
    prior: tuple[float, float]
    transcript: str = ""
    step_probs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.transcript and self.step_probs and len(self.step_probs) != len(self.transcript):
            raise ValueError("step_probs length must equal transcript length")


@dataclass(frozen=True)
class GroundTruthTarget:
    box: BoxRect
    mask: np.ndarray
    prior: tuple[float, float]
    transcript: str = ""


@dataclass(frozen=True)
class PairCost:
    """Unweighted components of one prediction/target cost plus the weighted total."""

    cls: float
    l1: float
    giou: float
    l2: float
    dice: float
    prior: float
    total: float

    def as_dict(self) -> dict:
        return {"cls": self.cls, "l1": self.l1, "giou": self.giou, "l2": self.l2,
                "dice": self.dice, "prior": self.prior, "total": self.total}


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float
    per_pair_costs: tuple[float, ...]
    breakdowns: tuple[PairCost, ...] = ()

    @property
    def matched_predictions(self) -> frozenset:
        return frozenset(p for _, p in self.pairs)


@dataclass(frozen=True)
class DetectionLoss:
    """Normalised loss components; ``total`` applies the weights."""

    cls: float
    l1: float
    giou: float
    l2: float
    dice: float
    prior: float
    map: float | None
    total: float
    terms: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"cls": self.cls, "l1": self.l1, "giou": self.giou, "l2": self.l2,
                "dice": self.dice, "prior": self.prior, "map": self.map,
                "total": self.total, "weighted": dict(self.terms)}


# -- elementary losses -------------------------------------------------------

def focal_loss(p: float, matched: bool, alpha: float = 0.25, gamma: float = 2.0) -> float:
    """Sigmoid focal loss for one query's text/no-text probability."""
    p = min(1.0, max(0.0, float(p)))
    if matched:
        return -alpha * (1.0 - p) ** gamma * math.log(min(1 - EPS, max(EPS, p)))
    return -(1.0 - alpha) * p ** gamma * math.log(1.0 - min(1 - EPS, max(EPS, p)))


def box_iou(a: BoxRect, b: BoxRect) -> float:
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def giou(a: BoxRect, b: BoxRect) -> float:
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = iw * ih
    union = a.area + b.area - inter
    enclosing = (max(a.x2, b.x2) - min(a.x1, b.x1)) * (max(a.y2, b.y2) - min(a.y1, b.y1))
    return inter / union - (enclosing - union) / enclosing


def giou_loss(a: BoxRect, b: BoxRect) -> float:
    return 1.0 - giou(a, b)


def l1_box_loss(a: BoxRect, b: BoxRect) -> float:
    return math.fsum(abs(u - v) for u, v in zip(a.as_tuple(), b.as_tuple()))


def _same_shape(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"grid shapes differ: {a.shape} vs {b.shape}")
    return a, b


def dice_loss(a, b) -> float:
    """Soft dice loss; 0 when both grids are empty."""
    a, b = _same_shape(a, b)
    denom = float(a.sum() + b.sum())
    if denom == 0:
        return 0.0
    return 1.0 - 2.0 * float((a * b).sum()) / denom


def l2_mask_loss(a, b) -> float:
    a, b = _same_shape(a, b)
    return float(np.mean((a - b) ** 2))


def smooth_l1_prior_loss(pred: Sequence[float], gt: Sequence[float], beta: float = 1.0) -> float:
    total = 0.0
    for u, v in zip(pred, gt):
        x = abs(u - v)
        total += 0.5 * x * x / beta if x < beta else x - 0.5 * beta
    return total


def recognition_loss(step_probs: Sequence[float]) -> float:
    """Mean negative log-likelihood of the target characters."""
    if len(step_probs) == 0:
        raise EmptySequence("recognition loss needs at least one step")
    return -math.fsum(math.log(min(1.0, max(EPS, p))) for p in step_probs) / len(step_probs)


# -- target construction -----------------------------------------------------

def box_from_polygon(poly: Polygon, width: float, height: float) -> BoxRect:
    """Normalised bounding rectangle of ``poly``, clipped to the image."""
    x0, y0, x1, y1 = poly.bounds()
    clip = lambda v: min(1.0, max(0.0, v))
    box = (clip(x0 / width), clip(y0 / height), clip(x1 / width), clip(y1 / height))
    if not (box[0] < box[2] and box[1] < box[3]):
        raise ValidationError("polygon has an empty bounding box inside the image",
                              [f"bounds {poly.bounds()} in {width}x{height}"])
    return BoxRect(*box)


def mask_from_polygon(poly: Polygon, size: int = DEFAULT_MASK_SIZE) -> np.ndarray:
    """Binary ``size x size`` mask of ``poly`` over its own bounding rectangle."""
    x0, y0, x1, y1 = poly.bounds()
    gx, gy = pixel_center_grid(x0, y0, x1, y1, size, size)
    return points_in_polygon(gx, gy, poly.as_array()).astype(float)


# -- costs and assignment ----------------------------------------------------

def pair_cost(p: Prediction, g: GroundTruthTarget, w: CostWeights = CostWeights()) -> PairCost:
    """Weighted matching cost of assigning prediction ``p`` to target ``g``.

    The per-image map term is not pairwise and is left to :func:`detection_loss`.
    """
    cls = focal_loss(p.class_prob, True, w.alpha, w.gamma)
    l1 = l1_box_loss(p.box, g.box)
    gi = giou_loss(p.box, g.box)
    l2 = l2_mask_loss(p.mask, g.mask)
    dice = dice_loss(p.mask, g.mask)
    prior = smooth_l1_prior_loss(p.prior, g.prior, w.beta)
    total = math.fsum((w.cls * cls, w.l1 * l1, w.giou * gi, w.l2 * l2, w.dice * dice,
                       w.prior * prior))
    return PairCost(cls, l1, gi, l2, dice, prior, total)


def cost_matrix(preds: Sequence[Prediction], gts: Sequence[GroundTruthTarget],
                w: CostWeights = CostWeights()) -> tuple[np.ndarray, list[list[PairCost]]]:
    """``Q x Y`` matrix of pair totals and the matching breakdown table."""
    table = [[pair_cost(p, g, w) for g in gts] for p in preds]
    mat = np.array([[c.total for c in row] for row in table], dtype=float).reshape(len(preds), len(gts))
    return mat, table


def _hungarian(cost: np.ndarray):
    """Shortest-augmenting-path Hungarian method for ``n <= m``.

    Returns ``(row_to_col, u, v)`` with dual potentials satisfying
    ``u[i] + v[j] <= cost[i, j]`` and equality on the assignment.
    """
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = np.zeros(m + 1, dtype=int)  # 1-based row owning column j; 0 = free
    way = np.zeros(m + 1, dtype=int)
    a = np.zeros((n + 1, m + 1))
    a[1:, 1:] = cost
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            cur = a[i0] - u[i0] - v
            free = ~used
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    row_to_col = np.empty(n, dtype=int)
    for j in range(1, m + 1):
        if owner[j]:
            row_to_col[owner[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


_DUMMY = -1


def _lexicographic_optimum(cost: np.ndarray, row_to_col: np.ndarray, u, v) -> np.ndarray:
    """Among all optimal assignments pick the one with the smallest column per row, row by row.

    Optimal assignments are exactly the perfect matchings of the tight
    subgraph once the ``m - n`` unassigned columns are covered by zero-cost
    dummy rows; dummies may only sit on columns whose dual is zero.
    """
    n, m = cost.shape
    tol = 1e-9 * max(1.0, float(np.abs(cost).max()) if cost.size else 1.0)
    tight = (cost - u[:, None] - v[None, :]) <= tol
    dummy_ok = v >= -tol
    owner = np.full(m, _DUMMY, dtype=int)
    owner[row_to_col] = np.arange(n)
    assigned = row_to_col.copy()
    locked = np.zeros(m, dtype=bool)

    def neighbours(row):
        return np.flatnonzero(tight[row] if row != _DUMMY else dummy_ok)

    def reroute(start_row, target_col):
        # BFS over alternating paths: start_row needs a column, target_col is the only free one.
        parent = {}
        queue = deque([(start_row, None)])
        seen = set()
        while queue:
            row, via = queue.popleft()
            for col in neighbours(row):
                col = int(col)
                if locked[col] or col in seen:
                    continue
                seen.add(col)
                parent[col] = (via, row)
                if col == target_col:
                    chain = []
                    c = col
                    while c is not None:
                        prev, r = parent[c]
                        chain.append((c, r))
                        c = prev
                    return chain
                queue.append((int(owner[col]), col))
        return None

    for i in range(n):
        current = int(assigned[i])
        for j in neighbours(i):
            j = int(j)
            if j >= current:
                break
            if locked[j]:
                continue
            displaced = int(owner[j])
            locked[j] = True
            chain = reroute(displaced, current)
            if chain is None:
                locked[j] = False
                continue
            for col, row in chain:
                owner[col] = row
                if row != _DUMMY:
                    assigned[row] = col
            owner[j] = i
            assigned[i] = j
            locked[j] = False
            break
        locked[assigned[i]] = True
    return assigned


def hungarian_assign(cost_matrix: np.ndarray) -> Assignment:
    """Minimum-cost one-to-one assignment of ground truths to predictions.

    Args:
        cost_matrix: ``Q x Y`` array, rows are predictions and columns
            ground-truth targets, with ``Q >= Y``.

    Returns:
        An :class:`Assignment` whose ``pairs`` are ``(gt_index, pred_index)``
        sorted by ground truth.  Among equal-cost optima the
        lexicographically smallest pair list is returned.

    Raises:
        InfeasibleMatrix: fewer predictions than targets, or non-finite costs.
    """
    c = np.asarray(cost_matrix, dtype=float)
    if c.ndim != 2:
        raise InfeasibleMatrix(f"cost matrix must be 2-D, got shape {c.shape}")
    q, y = c.shape
    if q < y:
        raise InfeasibleMatrix(f"{q} predictions cannot cover {y} ground truths")
    if not np.all(np.isfinite(c)):
        raise InfeasibleMatrix("cost matrix has non-finite entries")
    if y == 0:
        return Assignment((), 0.0, ())
    gt_by_pred = c.T
    row_to_col, u, v = _hungarian(gt_by_pred)
    row_to_col = _lexicographic_optimum(gt_by_pred, row_to_col, u, v)
    pairs = tuple((g, int(row_to_col[g])) for g in range(y))
    costs = tuple(float(c[p, g]) for g, p in pairs)
    return Assignment(pairs, math.fsum(costs), costs)


def match(preds: Sequence[Prediction], gts: Sequence[GroundTruthTarget],
          w: CostWeights = CostWeights()) -> Assignment:
    """Build the pairwise cost matrix and solve it, keeping per-pair breakdowns."""
    mat, table = cost_matrix(preds, gts, w)
    a = hungarian_assign(mat)
    return Assignment(a.pairs, a.total_cost, a.per_pair_costs,
                      tuple(table[p][g] for g, p in a.pairs))


def detection_loss(preds: Sequence[Prediction], gts: Sequence[GroundTruthTarget],
                   assignment: Assignment, w: CostWeights = CostWeights(),
                   pred_map=None, gt_map=None) -> DetectionLoss:
    """Image-level detection loss under a fixed assignment.

    Classification sums the matched focal term over assigned predictions and
    the unmatched term over the rest, divided by the number of targets.  Box,
    mask and prior terms are averaged over matched pairs.  The map dice term
    is added once when both maps are supplied.
    """
    matched = assignment.matched_predictions
    cls_terms = [focal_loss(p.class_prob, k in matched, w.alpha, w.gamma) for k, p in enumerate(preds)]
    cls = math.fsum(cls_terms) / max(len(gts), 1)
    l1, gi, l2, dice, prior = [], [], [], [], []
    for g_idx, p_idx in assignment.pairs:
        p, g = preds[p_idx], gts[g_idx]
        l1.append(l1_box_loss(p.box, g.box))
        gi.append(giou_loss(p.box, g.box))
        l2.append(l2_mask_loss(p.mask, g.mask))
        dice.append(dice_loss(p.mask, g.mask))
        prior.append(smooth_l1_prior_loss(p.prior, g.prior, w.beta))
    mean = lambda xs: math.fsum(xs) / len(xs) if xs else 0.0
    seg = None
    if pred_map is not None and gt_map is not None:
        gt_values = getattr(gt_map, "values", gt_map)
        seg = dice_loss(pred_map, gt_values)
    terms = {
        "cls": w.cls * cls,
        "l1": w.l1 * mean(l1),
        "giou": w.giou * mean(gi),
        "l2": w.l2 * mean(l2),
        "dice": w.dice * mean(dice),
        "prior": w.prior * mean(prior),
        "map": w.map * seg if seg is not None else 0.0,
    }
    return DetectionLoss(cls, mean(l1), mean(gi), mean(l2), mean(dice), mean(prior), seg,
                         math.fsum(terms.values()), terms)
