# Scoring detectors: ROC over the binarization threshold, and segmentation overlap
#
# Each sequence is one yes/no decision. Sweeping t_b from 0.10 to 0.90 moves the detector
# from conservative to trigger-happy, tracing out an ROC curve.

import numpy as np

from raindet import detector, evalkit, rainsynth

params = detector.scale_params(detector.DetectorParams(), 128, 128)

pos = [rainsynth.drop_scene(seed) for seed in range(8)]
neg = [rainsynth.moving_noise_sequence(128, 128, seed=200 + k).sequence for k in range(8)]
items = [(s.sequence, True) for s in pos] + [(s, False) for s in neg]

curve = evalkit.roc_sweep(items, evalkit.gradient_sweeper(params))
for t, fpr, tpr in curve.points[::4]:
    print("t_b=%.2f  FPR=%.2f  TPR=%.2f" % (t, fpr, tpr))
print("AUC (trapezoid) = %.3f" % evalkit.auc(curve))

# Segmentation quality on the positives.

pairs = []
for s in pos:
    pred = detector.segment(s.sequence, params)
    sc = evalkit.seg_scores(pred, s.mask)
    pairs.append(evalkit.overlap_counts(pred, s.mask))
    print("r=%2d  IoU %.3f  Dice %.3f  acc %.3f" % (s.specs[0].radius, sc.iou, sc.dice, sc.accuracy))

# Dataset-level Dice pools the counts before dividing. "literal" leaves out the factor 2,
# so a perfect prediction would score 0.5 instead of 1.
print("accumulated Dice: %.3f (literal %.3f)" % (
    evalkit.accumulated_dice(pairs), evalkit.accumulated_dice(pairs, style="literal")))
print("mean IoU: %.3f" % np.mean([evalkit.seg_scores(detector.segment(s.sequence, params), s.mask).iou for s in pos]))
