"""
Word-length priors and segmentation map labels
===============================================

Every annotated word gets a prior pair (aspect ratio, character count), both
scaled into [0, 1].  The segmentation map paints regular-length words
(4 to 10 characters) at 0.5 and the rarer short or long words at 1.
"""

import numpy as np

from lenspot.labelgen import gen_prior_labels, gen_segmap_label
from lenspot.synthetic import make_dataset

ds = make_dataset(n_images=1, words_per_image=(40, 40), seed=3)
img = ds.images[0]

for inst, prior in zip(img.cared(), gen_prior_labels(img).priors):
    print(f"{inst.transcription.text:>16s}  R={prior.ratio_raw:6.2f}  N={prior.char_count:2d}"
          f"  -> ({prior.ratio_norm:.3f}, {prior.count_norm:.3f})")

label = gen_segmap_label(img, 224, 224)
values, counts = np.unique(label.values, return_counts=True)
print("map cells per value:", dict(zip(values.tolist(), counts.tolist())))

# A coarse text rendering of the map, one character per 4 x 4 block.
glyph = {0.0: ".", 0.5: "o", 1.0: "#"}
for row in label.values[::4, ::4]:
    print("".join(glyph[v] for v in row))
