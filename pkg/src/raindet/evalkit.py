"""Evaluation: segmentation scores, accumulated Dice, ROC sweeps, AUC and timing."""

import csv
import json
import re
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import detector as det
from . import imgcore, nccbase
from .dataio import SequenceManifest, load_sequence
from .errors import ParameterError, ProtocolError, ValidationError

# 0.10, 0.15, ..., 0.90
TB_SWEEP = tuple(round(0.10 + 0.05 * i, 2) for i in range(17))
# correlation thresholds from strict to lenient, so flagged area grows along the sweep
TC_SWEEP = tuple(round(0.90 - 0.05 * i, 2) for i in range(17))


@dataclass(frozen=True)
class SegScores:
    iou: float
    dice: float
    accuracy: float


def _confusion(pred, gt):
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    imgcore.same_shape(pred, gt, "prediction and ground truth")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = pred.size - tp - fp - fn
    return tp, fp, fn, tn


def seg_scores(pred, gt):
    """IoU, Dice and pixel accuracy of the artifact class. Two empty masks score 1 on all three."""
    tp, fp, fn, tn = _confusion(pred, gt)
    total = tp + fp + fn + tn
    if tp + fp + fn == 0:
        return SegScores(1.0, 1.0, 1.0)
    return SegScores(
        iou=tp / (tp + fp + fn),
        dice=2 * tp / (2 * tp + fp + fn),
        accuracy=(tp + tn) / total,
    )


def overlap_counts(pred, gt, area="sum"):
    """``(I, U)`` for accumulated Dice.

    ``area="sum"`` gives U = |pred| + |gt|; ``area="union"`` gives U = |pred or gt|.
    """
    tp, fp, fn, _ = _confusion(pred, gt)
    if area == "sum":
        return tp, 2 * tp + fp + fn
    if area == "union":
        return tp, tp + fp + fn
    raise ParameterError(f"area must be 'sum' or 'union', got {area!r}")


def accumulated_dice(pairs, style="doubled"):
    """Dataset-level Dice from per-sequence ``(intersection, area)`` counts.

    ``style="doubled"`` returns 2*sum(I)/sum(U), so a perfect prediction scores 1 and a single
    pair reduces to ordinary Dice. ``style="literal"`` returns sum(I)/sum(U) without the factor 2.
    An all-empty dataset (sum(U) == 0) scores 1.
    """
    if style not in ("doubled", "literal"):
        raise ParameterError(f"style must be 'doubled' or 'literal', got {style!r}")
    si = su = 0
    for i, u in pairs:
        if i < 0 or u < 0:
            raise ValidationError(f"negative overlap count ({i}, {u})")
        if i > u:
            raise ValidationError(f"intersection {i} exceeds area {u}")
        si += i
        su += u
    if su == 0:
        return 1.0
    score = (2.0 if style == "doubled" else 1.0) * si / su
    return min(max(score, 0.0), 1.0)


@dataclass
class RocCurve:
    """Operating points ``(threshold, fpr, tpr)`` in sweep order.

    ``records`` keeps the per-sequence outcomes ``(sequence_id, threshold, detected, fraction)``.
    """

    points: list
    records: list = field(default_factory=list)

    def rates(self):
        """``(fpr, tpr)`` pairs including the virtual endpoints, sorted for integration."""
        pts = [(0.0, 0.0), (1.0, 1.0)] + [(f, t) for _, f, t in self.points]
        return sorted(pts)


def auc(curve):
    """Trapezoidal area under ``curve`` with (0,0) and (1,1) forced in.

    ``curve`` is a RocCurve or an iterable of ``(fpr, tpr)`` pairs.
    """
    pts = curve.rates() if isinstance(curve, RocCurve) else sorted(
        [(0.0, 0.0), (1.0, 1.0)] + [(float(f), float(t)) for f, t in curve]
    )
    area = 0.0
    for (f0, t0), (f1, t1) in zip(pts, pts[1:]):
        area += (f1 - f0) * (t0 + t1) / 2.0
    return min(max(area, 0.0), 1.0)


def gradient_sweeper(base=None, threads=1):
    """Sweep function for :func:`roc_sweep` running the gradient detector over ``t_b`` values."""
    base = base or det.DetectorParams()

    def run(seq, thresholds):
        fr = det.fractions_over_tb(seq, base, thresholds, threads)
        return [(f > base.t_d, f) for f in fr]

    return run


def ncc_sweeper(base=None):
    """Sweep function for :func:`roc_sweep` running the NCC baseline over ``t_c`` values."""
    base = base or nccbase.NccParams()

    def run(seq, thresholds):
        fr = nccbase.fractions_over_tc(seq, base, thresholds)
        return [(f > base.t_d, f) for f in fr]

    return run


def detector_sweeper(detect_fn):
    """Adapt ``detect_fn(seq, threshold) -> DetectionResult`` into a sweep function."""

    def run(seq, thresholds):
        out = []
        for t in thresholds:
            r = detect_fn(seq, t)
            out.append((bool(r.detected), float(r.artifact_fraction)))
        return out

    return run


def roc_sweep(items, sweeper=None, thresholds=TB_SWEEP, resize=None):
    """Classify every sequence at every threshold and collect ROC operating points.

    ``items`` holds SequenceManifest objects (labelled by ``has_drops``) or
    ``(sequence, has_drops)`` pairs. ``sweeper(seq, thresholds)`` returns one
    ``(detected, fraction)`` per threshold; the default runs the gradient detector at its
    default parameters.
    """
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise ParameterError("threshold sweep is empty")
    sweeper = sweeper or gradient_sweeper()
    pos_hits = np.zeros(len(thresholds), dtype=np.int64)
    neg_hits = np.zeros(len(thresholds), dtype=np.int64)
    n_pos = n_neg = 0
    records = []
    for k, item in enumerate(items):
        if isinstance(item, SequenceManifest):
            if item.has_drops is None:
                raise ProtocolError(f"sequence {item.sequence_id!r} has no has_drops label")
            seq, label = load_sequence(item, resize), item.has_drops
        else:
            seq, label = item
            seq = det.as_sequence(seq)
        sid = seq.source_id or f"seq{k:04d}"
        outcomes = sweeper(seq, thresholds)
        hits = np.array([bool(d) for d, _ in outcomes])
        if label:
            n_pos += 1
            pos_hits += hits
        else:
            n_neg += 1
            neg_hits += hits
        records.extend((sid, t, bool(d), float(f)) for t, (d, f) in zip(thresholds, outcomes))
    if n_pos == 0 or n_neg == 0:
        raise ProtocolError(f"ROC needs both classes, got {n_pos} positive and {n_neg} negative sequences")
    points = [(t, neg_hits[i] / n_neg, pos_hits[i] / n_pos) for i, t in enumerate(thresholds)]
    return RocCurve([(t, float(f), float(p)) for t, f, p in points], records)


def bench_pipeline(seq, gradient_params=None, ncc_params=None, repeats=5):
    """Median wall-clock seconds of both detectors on the same sequence, single-threaded.

    The gradient entry also carries the median of each stage.
    """
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    gradient_params = gradient_params or det.DetectorParams()
    ncc_params = ncc_params or nccbase.NccParams()
    seq = det.as_sequence(seq)
    grad_total, ncc_total = [], []
    stages = {}
    for _ in range(repeats):
        timings = {}
        t0 = time.perf_counter()
        det.detect(seq, gradient_params, threads=1, timings=timings)
        grad_total.append(time.perf_counter() - t0)
        for k, v in timings.items():
            stages.setdefault(k, []).append(v)
        t0 = time.perf_counter()
        nccbase.ncc_detect(seq, ncc_params)
        ncc_total.append(time.perf_counter() - t0)
    h, w = seq.shape
    g, n = statistics.median(grad_total), statistics.median(ncc_total)
    return {
        "frames": len(seq),
        "width": int(w),
        "height": int(h),
        "repeats": repeats,
        "threads": 1,
        "gradient_median_s": g,
        "gradient_stages_median_s": {k: statistics.median(v) for k, v in stages.items()},
        "gradient_per_frame_s": g / len(seq),
        "ncc_median_s": n,
        "ncc_per_frame_s": n / len(seq),
        "ncc_over_gradient": n / g if g > 0 else float("inf"),
    }


# --- writers --------------------------------------------------------------------------------

def _fmt(x):
    return f"{x:.6f}"


def write_metrics_csv(path, records):
    """``sequence_id, t_b, detected, fraction`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sequence_id", "t_b", "detected", "fraction"])
        for sid, t, d, f in records:
            w.writerow([sid, _fmt(t), str(bool(d)).lower(), _fmt(f)])


def write_roc_csv(path, curve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_b", "fpr", "tpr"])
        for t, f, p in curve.points:
            w.writerow([_fmt(t), _fmt(f), _fmt(p)])


_FLOAT_TAG = re.compile(r'"@@(-?[0-9.]+|inf|-inf|nan)@@"')


def _tag_floats(obj):
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        return f"@@{_fmt(float(obj))}@@"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_fixed(obj):
    """JSON text in which every float is written with exactly six decimals."""
    text = json.dumps(_tag_floats(obj), indent=2, sort_keys=True)

    def sub(m):
        v = m.group(1)
        return v if v[0].isdigit() or v[0] == "-" and v[1:2].isdigit() else f'"{v}"'

    return _FLOAT_TAG.sub(sub, text) + "\n"


def write_summary_json(path, summary):
    Path(path).write_text(dumps_fixed(summary))
