"""Gradient-based raindrop detector.

Drops on the lens are static and blurred, so across a sequence their pixels keep a low
gradient magnitude while the moving scene around them does not. The pipeline:

    per-frame Sobel magnitude -> mean over frames -> Gaussian blur
    -> inverse binarization (low = drop) -> dilation -> area fraction vs. t_d
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import imgcore
from .errors import DimensionError, InputError


@dataclass(frozen=True)
class FrameSequence:
    """``N >= 1`` equally sized gray frames stacked as an ``(N, H, W)`` uint8 array."""

    frames: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 3 or f.shape[0] < 1 or f.shape[1] < 1 or f.shape[2] < 1:
            raise InputError(f"a sequence needs at least one non-empty frame, got shape {f.shape}")
        if f.dtype != np.uint8:
            f = np.clip(f, 0, 255).astype(np.uint8)
        object.__setattr__(self, "frames", f)

    @classmethod
    def from_frames(cls, frames, source_id=""):
        frames = [np.asarray(f) for f in frames]
        if not frames:
            raise InputError("empty frame sequence")
        for i, f in enumerate(frames):
            if f.ndim != 2:
                raise DimensionError(f"frame {i} is not a 2-D gray image (shape {f.shape})")
            if f.shape != frames[0].shape:
                raise DimensionError(
                    f"frame {i} has size {f.shape[1]}x{f.shape[0]}, "
                    f"frame 0 has {frames[0].shape[1]}x{frames[0].shape[0]}"
                )
        return cls(np.stack(frames), source_id)

    def __len__(self):
        return self.frames.shape[0]

    def __iter__(self):
        return iter(self.frames)

    @property
    def shape(self):
        """``(H, W)`` of every frame."""
        return self.frames.shape[1:]


def as_sequence(seq):
    if isinstance(seq, FrameSequence):
        return seq
    if isinstance(seq, np.ndarray) and seq.ndim == 3:
        return FrameSequence(seq)
    return FrameSequence.from_frames(seq)


@dataclass(frozen=True)
class DetectorParams:
    """Defaults are the operating point selected on the full-resolution dataset."""

    sobel_aperture: int = 5
    d: int = 271
    t_b: float = 0.18
    m: int = 91
    t_d: float = 0.1

    def __post_init__(self):
        imgcore.sobel_kernels(self.sobel_aperture)  # raises on anything but 3 or 5
        imgcore.check_kernel_size(self.d, "d")
        imgcore.check_kernel_size(self.m, "m")
        imgcore.check_fraction(self.t_b, "t_b")
        imgcore.check_fraction(self.t_d, "t_d")

    def to_dict(self):
        return asdict(self)


# Frame size the default d and m were tuned for; see scale_params.
REFERENCE_SIZE = (1920, 1080)


def _odd(x):
    k = max(1, int(np.floor(x + 0.5)))
    return k if k % 2 else k + 1


def scale_params(params, width, height, reference=REFERENCE_SIZE):
    """Rescale the spatial kernel sizes ``d`` and ``m`` to a ``width`` x ``height`` frame.

    Sizes scale with the ratio of frame diagonals and are rounded to the nearest odd integer
    (ties go up). Thresholds are dimensionless and kept as-is.
    """
    ratio = float(np.hypot(width, height) / np.hypot(*reference))
    return replace(params, d=_odd(params.d * ratio), m=_odd(params.m * ratio))


@dataclass
class DetectionResult:
    detected: bool
    artifact_fraction: float
    mask: np.ndarray
    averaged_gradient: np.ndarray
    params: object = None
    timings: dict = field(default_factory=dict)


def _frame_magnitude(frame, aperture):
    gx, gy = imgcore.sobel_gradients(frame, aperture)
    return imgcore.gradient_magnitude(gx, gy)


def averaged_gradient(seq, aperture=5, threads=1):
    """Pixel-wise mean of the per-frame Sobel gradient magnitudes.

    Frames may be processed on ``threads`` workers; the reduction always runs in frame order,
    so the result does not depend on the thread count.
    """
    seq = as_sequence(seq)
    imgcore.sobel_kernels(aperture)
    if threads and threads > 1 and len(seq) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            mags = list(pool.map(lambda f: _frame_magnitude(f, aperture), seq.frames))
    else:
        mags = [_frame_magnitude(f, aperture) for f in seq.frames]
    acc = np.zeros(seq.shape, dtype=np.float64)
    for g in mags:
        acc += g
    return acc / len(mags)


def _timed(timings, key, fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    if timings is not None:
        timings[key] = timings.get(key, 0.0) + time.perf_counter() - t0
    return out


def _run(seq, params, threads, timings):
    g = _timed(timings, "gradient", averaged_gradient, seq, params.sobel_aperture, threads)
    blurred = _timed(timings, "blur", imgcore.gaussian_blur, g, params.d)
    binary = _timed(timings, "threshold", imgcore.threshold_inverse, blurred, params.t_b)
    mask = _timed(timings, "dilate", imgcore.dilate, binary, params.m)
    return g, mask


def segment(seq, params=None, threads=1):
    """Binary drop mask for a sequence (True = drop)."""
    params = params or DetectorParams()
    return _run(as_sequence(seq), params, threads, None)[1]


def detect(seq, params=None, threads=1, timings=None):
    """Segment the sequence and flag it when the drop area fraction exceeds ``t_d``.

    Pass a dict as ``timings`` to collect per-stage wall-clock seconds.
    """
    params = params or DetectorParams()
    seq = as_sequence(seq)
    g, mask = _run(seq, params, threads, timings)
    fraction = float(np.count_nonzero(mask)) / mask.size
    return DetectionResult(
        detected=fraction > params.t_d,
        artifact_fraction=fraction,
        mask=mask,
        averaged_gradient=g,
        params=params,
        timings=dict(timings) if timings is not None else {},
    )


def fractions_over_tb(seq, params, t_b_values, threads=1):
    """Artifact fraction for every ``t_b`` in ``t_b_values``.

    Same as calling ``detect`` once per value, but the gradient and blur stages run once.
    """
    seq = as_sequence(seq)
    g = averaged_gradient(seq, params.sobel_aperture, threads)
    blurred = imgcore.gaussian_blur(g, params.d)
    out = []
    for t in t_b_values:
        mask = imgcore.dilate(imgcore.threshold_inverse(blurred, t), params.m)
        out.append(float(np.count_nonzero(mask)) / mask.size)
    return out
