# The correlation baseline next to the gradient detector
#
# Older approaches look for image regions that stay the same between neighbouring frames:
# a windowed normalized cross-correlation near 1 means "nothing changed here". It works,
# but computing local means and variances of two images costs more than one Sobel pass.

import time

from raindet import detector, nccbase, rainsynth

scene = rainsynth.drop_scene(seed=7)
params = detector.scale_params(detector.DetectorParams(), 128, 128)

grad = detector.detect(scene.sequence, params)
ncc = nccbase.ncc_detect(scene.sequence, nccbase.NccParams(window=11, t_c=0.8))
print("gradient: detected=%s fraction=%.3f" % (grad.detected, grad.artifact_fraction))
print("NCC:      detected=%s fraction=%.3f" % (ncc.detected, ncc.artifact_fraction))

# the NCC result keeps its mean correlation map where the gradient result keeps the gradient
corr = ncc.averaged_gradient
print("mean correlation inside drop %.2f, outside %.2f" % (corr[scene.mask].mean(), corr[~scene.mask].mean()))

# The drop shows a blurred, warped view of the moving background, so its interior still
# changes between frames and correlates only weakly. It is, however, smooth, which is
# exactly what the gradient detector looks for.

# Timing on something closer to a real camera frame.

big = rainsynth.moving_noise_sequence(640, 480, n_frames=10, seed=1).sequence
t0 = time.perf_counter()
detector.detect(big)
t1 = time.perf_counter()
nccbase.ncc_detect(big)
t2 = time.perf_counter()
print("640x480x10: gradient %.3fs, NCC %.3fs" % (t1 - t0, t2 - t1))
