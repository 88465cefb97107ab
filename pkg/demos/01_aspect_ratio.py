"""
Aspect ratio of straight and curved text outlines
==================================================

A quadrilateral's horizontal length is the mean of its top and bottom edges.
Its vertical length averages the lateral edges, each projected by the sine of
its corner angle.  Curved outlines are cut into quads and summed along the
reading direction.
"""

import math

import numpy as np

from lenspot.geometry import (Polygon, Quad, curved_aspect_ratio, polyline_decompose,
                              quad_aspect_ratio)

# A plain 40 x 10 box: the ratio is just width over height.
box = Quad.from_points([(0, 0), (40, 0), (40, 10), (0, 10)])
print("box:", quad_aspect_ratio(box))

# Slanting the box keeps the horizontal length but the sine factor shrinks
# the vertical one to the true perpendicular height.
slanted = Quad.from_points([(0, 0), (40, 0), (45, 10), (5, 10)])
print("slanted:", quad_aspect_ratio(slanted))

# Rotation does not change anything.
theta = math.radians(35)
rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
turned = Quad.from_points([tuple(rot @ p) for p in [(0, 0), (40, 0), (40, 10), (0, 10)]])
print("rotated ratio:", quad_aspect_ratio(turned).ratio)

# An 8-point arc: top edge left to right, bottom edge right to left.
arc = Polygon(((0, 0), (2, 1), (4, 1), (6, 0), (6, 2), (4, 3), (2, 3), (0, 2)))
for q in polyline_decompose(arc):
    print("  piece", [(p.x, p.y) for p in q.points], "->", round(quad_aspect_ratio(q).ratio, 4))
print("arc:", curved_aspect_ratio(arc))
