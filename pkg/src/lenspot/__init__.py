"""Word-length-aware dense text spotting toolkit.

Annotation ingestion, word-length prior and segmentation-map labels,
set-prediction matching costs and losses, optimal assignment, and
detection / end-to-end evaluation with word-length buckets.
"""

from .annotations import (Dataset, ImageAnnotation, TextInstance, Transcription, char_count,
                          load_dataset, parse_icdar_line)
from .errors import *  # noqa: F401,F403
from .geometry import (AspectMeasurement, Point2, Polygon, Quad, aspect_ratio,
                       curved_aspect_ratio, interior_angle, point_in_polygon, polygon_iou,
                       polyline_decompose, quad_aspect_ratio, quad_horizontal_length,
                       quad_vertical_length)
from .labelgen import (LengthClass, LengthHistogram, PriorLabelSet, SegMapLabel,
                       WordLengthPrior, classify_length, dataset_length_histogram,
                       density_histogram, gen_prior_labels, gen_segmap_label)
from .matchcost import (Assignment, BoxRect, CostWeights, GroundTruthTarget, Prediction,
                        detection_loss, dice_loss, focal_loss, giou, hungarian_assign,
                        l1_box_loss, l2_mask_loss, pair_cost, recognition_loss,
                        smooth_l1_prior_loss)
from .metrics import (DetPrediction, EvalConfig, EvalReport, detection_prf, e2e_eval,
                      edit_distance, length_bucket_recall, match_detections)

__version__ = "0.1.0"
