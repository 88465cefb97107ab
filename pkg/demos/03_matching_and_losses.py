"""
Bipartite matching and the detection loss
==========================================

Each prediction is scored against each ground truth by a weighted sum of focal
classification, box L1 and gIoU, mask L2 and dice, and a smooth-L1 prior term.
The Hungarian solver then picks the cheapest one-to-one assignment.
"""

import numpy as np

from lenspot.matchcost import (BoxRect, CostWeights, GroundTruthTarget, Prediction,
                               cost_matrix, detection_loss, match)

rng = np.random.default_rng(0)
weights = CostWeights()

full = np.ones((4, 4))
gts = [GroundTruthTarget(BoxRect(0.1, 0.1, 0.3, 0.2), full, (0.10, 0.20)),
       GroundTruthTarget(BoxRect(0.5, 0.5, 0.9, 0.6), full, (0.20, 0.48))]

# Five queries: two near the targets, three scattered decoys.
preds = [Prediction(0.9, BoxRect(0.11, 0.1, 0.31, 0.21), full, (0.1, 0.2)),
         Prediction(0.7, BoxRect(0.52, 0.5, 0.88, 0.61), full, (0.2, 0.4))]
for _ in range(3):
    x, y = rng.uniform(0, 0.7, size=2)
    preds.append(Prediction(float(rng.uniform(0, 0.3)), BoxRect(x, y, x + 0.2, y + 0.1),
                            rng.random((4, 4)), (0.1, 0.1)))

print("cost matrix (rows predictions, columns targets):")
print(np.round(cost_matrix(preds, gts, weights)[0], 3))

assignment = match(preds, gts, weights)
print("pairs (target, prediction):", assignment.pairs)
for (g, p), b in zip(assignment.pairs, assignment.breakdowns):
    print(f"  target {g} <- prediction {p}:", {k: round(v, 4) for k, v in b.as_dict().items()})

loss = detection_loss(preds, gts, assignment, weights)
# Without segmentation maps the map term is reported as None.
for name in ("cls", "l1", "giou", "l2", "dice", "prior", "map", "total"):
    value = getattr(loss, name)
    print(f"  {name:>6s}", "n/a" if value is None else f"{value:.4f}")
