"""Normalized cross-correlation baseline detector.

Consecutive frames are correlated pixel-wise over a sliding window. Static, textured content
(including anything stuck on the lens) correlates strongly across frames; moving scene content
does not. The per-pair maps are averaged and thresholded.
"""

from dataclasses import asdict, dataclass

import numpy as np

from . import imgcore
from .detector import DetectionResult, as_sequence
from .errors import InputError, ParameterError


@dataclass(frozen=True)
class NccParams:
    window: int = 11
    eps: float = 1e-4  # added to both windowed variances, intensities scaled to [0, 1]
    t_c: float = 0.8
    t_d: float = 0.1

    def __post_init__(self):
        imgcore.check_kernel_size(self.window, "NCC window")
        imgcore.check_fraction(self.t_c, "t_c", -1.0, 1.0)
        imgcore.check_fraction(self.t_d, "t_d")
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")

    def to_dict(self):
        return asdict(self)


def _moments(x, window):
    mean = imgcore.box_filter(x, window)
    var = imgcore.box_filter(x * x, window) - mean * mean
    return mean, var


def ncc_map(a, b, window=11, eps=1e-4):
    """Windowed Pearson correlation of two equally sized gray images, clamped to [-1, 1].

    Windowed moments come from the summed-area box filter. ``eps`` keeps flat windows finite.
    The expression is symmetric in ``a`` and ``b`` so swapping them gives identical bits.
    """
    imgcore.same_shape(a, b, "NCC inputs")
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    a = np.asarray(a, dtype=np.float64) / 255.0
    b = np.asarray(b, dtype=np.float64) / 255.0
    ma, va = _moments(a, window)
    mb, vb = _moments(b, window)
    cov = imgcore.box_filter(a * b, window) - ma * mb
    # variances from E[x^2]-E[x]^2 can dip a hair below zero
    va = np.maximum(va, 0.0)
    vb = np.maximum(vb, 0.0)
    r = cov / np.sqrt((va + eps) * (vb + eps))
    return np.clip(r, -1.0, 1.0)


def mean_ncc(seq, window=11, eps=1e-4):
    """Mean of ``ncc_map`` over all consecutive frame pairs."""
    seq = as_sequence(seq)
    if len(seq) < 2:
        raise InputError(f"NCC needs at least 2 frames, got {len(seq)}")
    acc = np.zeros(seq.shape, dtype=np.float64)
    for prev, cur in zip(seq.frames[:-1], seq.frames[1:]):
        acc += ncc_map(prev, cur, window, eps)
    return acc / (len(seq) - 1)


def ncc_detect(seq, params=None):
    """Flag pixels whose mean inter-frame correlation reaches ``t_c``; detect on area > ``t_d``."""
    params = params or NccParams()
    corr = mean_ncc(seq, params.window, params.eps)
    mask = corr >= params.t_c
    fraction = float(np.count_nonzero(mask)) / mask.size
    return DetectionResult(
        detected=fraction > params.t_d,
        artifact_fraction=fraction,
        mask=mask,
        averaged_gradient=corr,  # the diagnostic map slot holds the mean correlation here
        params=params,
    )


def fractions_over_tc(seq, params, t_c_values):
    """Artifact fraction for every correlation threshold, computing the mean map once."""
    corr = mean_ncc(seq, params.window, params.eps)
    return [float(np.count_nonzero(corr >= t)) / corr.size for t in t_c_values]
