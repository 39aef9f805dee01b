# Finding raindrops on a lens from a short image sequence
#
# A drop stuck on the glass stays put while the world behind it moves, and it blurs
# whatever is seen through it. So averaged over a few frames, its pixels carry almost
# no gradient, while the moving background keeps lighting up everywhere.

import numpy as np

from raindet import detector, rainsynth

# Ten frames of random texture sliding 2 px per frame, with one static drop composited
# onto each frame. The scene also gives us the true drop mask.

scene = rainsynth.drop_scene(seed=4)
seq = scene.sequence
print("frames:", seq.frames.shape, "drop radius:", scene.specs[0].radius)

# The default kernel sizes (Gaussian d=271, dilation m=91) belong to 1920x1080 footage.
# For a 128x128 toy scene we scale them by the ratio of frame diagonals.

params = detector.scale_params(detector.DetectorParams(), 128, 128)
print(params)

res = detector.detect(seq, params)
print("detected:", res.detected, "fraction: %.3f" % res.artifact_fraction)

# Look at the averaged gradient map itself: low inside the drop, high outside.

g = res.averaged_gradient
print("mean gradient inside drop:  %.1f" % g[scene.mask].mean())
print("mean gradient outside drop: %.1f" % g[~scene.mask].mean())

# And compare the mask to the ground truth.

inter = np.count_nonzero(res.mask & scene.mask)
union = np.count_nonzero(res.mask | scene.mask)
print("IoU vs truth: %.3f" % (inter / union))

# A static scene is the degenerate case: nothing moves, so everything looks like a drop.

flat = np.full((10, 128, 128), 100, np.uint8)
print("constant frames ->", detector.detect(flat, params).artifact_fraction)
