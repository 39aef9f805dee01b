"""Raster primitives shared by the detectors, the synthesizer and the evaluation code.

Rasters are plain numpy arrays indexed ``[row, col]`` (row-major, ``y`` first):

* gray images are ``uint8`` arrays of shape ``(H, W)``,
* scalar maps (gradients, correlations) are ``float64`` arrays of shape ``(H, W)``,
* binary masks are ``bool`` arrays of shape ``(H, W)``; ``True`` marks an artifact pixel.

Every filter uses clamp-to-edge (replicate) borders.
"""

from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage as ndi

from .errors import DimensionError, ImageIOError, ParameterError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# (smoothing, derivative) 1-D factors of the separable Sobel kernels
_SOBEL_FACTORS = {
    3: (np.array([1.0, 2.0, 1.0]), np.array([-1.0, 0.0, 1.0])),
    5: (np.array([1.0, 4.0, 6.0, 4.0, 1.0]), np.array([-1.0, -2.0, 0.0, 2.0, 1.0])),
}


def check_kernel_size(size, name="kernel size"):
    """Return ``size`` as int, raising ParameterError unless it is a positive odd integer."""
    try:
        k = int(size)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be an odd positive integer, got {size!r}") from None
    if k != size or k < 1 or k % 2 == 0:
        raise ParameterError(f"{name} must be an odd positive integer, got {size!r}")
    return k


def check_fraction(t, name="threshold", lo=0.0, hi=1.0):
    t = float(t)
    if not (lo <= t <= hi):
        raise ParameterError(f"{name} must lie in [{lo}, {hi}], got {t}")
    return t


def _as_2d(a, name="image"):
    a = np.asarray(a)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    return a


def same_shape(a, b, what="inputs"):
    if np.shape(a) != np.shape(b):
        raise DimensionError(f"{what} differ in shape: {np.shape(a)} vs {np.shape(b)}")


def to_grayscale(rgb):
    """BT.601 luma of an RGB raster, rounded half-up to uint8.

    ``rgb`` is either an ``(H, W, 3)`` array or a sequence of three ``(H, W)`` channel arrays.
    A 2-D input is taken as already gray and returned as uint8.
    """
    if isinstance(rgb, (list, tuple)):
        if len(rgb) != 3:
            raise DimensionError(f"expected 3 channels, got {len(rgb)}")
        chans = [np.asarray(c, dtype=np.float64) for c in rgb]
        for c in chans[1:]:
            same_shape(chans[0], c, "color channels")
        r, g, b = chans
    else:
        arr = np.asarray(rgb)
        if arr.ndim == 2:
            return np.clip(arr, 0, 255).astype(np.uint8)
        if arr.ndim != 3 or arr.shape[2] < 3:
            raise DimensionError(f"expected an (H, W, 3) raster, got shape {arr.shape}")
        arr = arr.astype(np.float64)
        r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    wr, wg, wb = LUMA_WEIGHTS
    luma = np.floor(wr * r + wg * g + wb * b + 0.5)
    return np.clip(luma, 0, 255).astype(np.uint8)


def sobel_kernels(aperture):
    """The full 2-D Sobel kernels ``(kx, ky)`` for ``aperture`` in {3, 5} (correlation form)."""
    if aperture not in _SOBEL_FACTORS:
        raise ParameterError(f"Sobel aperture must be 3 or 5, got {aperture!r}")
    smooth, deriv = _SOBEL_FACTORS[aperture]
    return np.outer(smooth, deriv), np.outer(deriv, smooth)


def sobel_gradients(img, aperture=5):
    """Horizontal and vertical Sobel responses of ``img`` as float64 maps.

    Unscaled integer-weight kernels; only magnitudes relative to the map maximum matter downstream.
    """
    if aperture not in _SOBEL_FACTORS:
        raise ParameterError(f"Sobel aperture must be 3 or 5, got {aperture!r}")
    x = _as_2d(img).astype(np.float64)
    smooth, deriv = _SOBEL_FACTORS[aperture]
    gx = ndi.correlate1d(ndi.correlate1d(x, smooth, axis=0, mode="nearest"), deriv, axis=1, mode="nearest")
    gy = ndi.correlate1d(ndi.correlate1d(x, deriv, axis=0, mode="nearest"), smooth, axis=1, mode="nearest")
    return gx, gy


def gradient_magnitude(gx, gy):
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    same_shape(gx, gy, "gradient maps")
    return np.sqrt(gx * gx + gy * gy)


def gaussian_sigma(d):
    """Sigma implied by kernel size ``d`` (the usual size-to-sigma heuristic)."""
    d = check_kernel_size(d, "Gaussian kernel size")
    return 0.3 * ((d - 1) * 0.5 - 1) + 0.8


def gaussian_kernel(d):
    """Normalized 1-D Gaussian weights of length ``d``."""
    sigma = gaussian_sigma(d)
    x = np.arange(d, dtype=np.float64) - (d - 1) / 2
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(scalar_map, d):
    """Separable Gaussian blur with a ``d``-tap kernel; ``d == 1`` returns a copy."""
    d = check_kernel_size(d, "Gaussian kernel size")
    x = _as_2d(scalar_map, "map").astype(np.float64)
    if d == 1:
        return x.copy()
    k = gaussian_kernel(d)
    out = ndi.correlate1d(x, k, axis=0, mode="nearest")
    out = ndi.correlate1d(out, k, axis=1, mode="nearest")
    # a normalized non-negative kernel is a convex combination; strip rounding overshoot
    return np.clip(out, x.min(), x.max(), out=out)


def threshold_inverse(scalar_map, t):
    """Mark pixels at or below ``t`` times the map maximum as artifact.

    Low gradient means blurred/static content, i.e. a drop candidate. A map whose maximum
    is zero is flagged everywhere.
    """
    t = check_fraction(t, "binarization threshold")
    x = _as_2d(scalar_map, "map")
    top = float(x.max())
    if top <= 0.0:
        return np.ones(x.shape, dtype=bool)
    return x <= t * top


def dilate(mask, m):
    """Binary dilation with an ``m`` x ``m`` square structuring element."""
    m = check_kernel_size(m, "dilation kernel size")
    mask = _as_2d(mask, "mask").astype(bool)
    if m == 1:
        return mask.copy()
    return ndi.maximum_filter(mask, size=m, mode="nearest")


def box_filter(scalar_map, w):
    """Mean over a ``w`` x ``w`` replicate-padded window via a summed-area table.

    Cost per pixel is four lookups regardless of ``w``.
    """
    w = check_kernel_size(w, "box window")
    x = _as_2d(scalar_map, "map").astype(np.float64)
    if w == 1:
        return x.copy()
    r = w // 2
    p = np.pad(x, r, mode="edge")
    sat = np.zeros((p.shape[0] + 1, p.shape[1] + 1))
    np.cumsum(p, axis=0, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    h, wd = x.shape
    s = sat[w:w + h, w:w + wd] - sat[:h, w:w + wd] - sat[w:w + h, :wd] + sat[:h, :wd]
    return s / float(w * w)


def resize_nearest(img, width, height):
    """Nearest-neighbour resample to ``(width, height)``; source index = floor(dst * src / dst)."""
    img = _as_2d(img)
    width, height = int(width), int(height)
    if width < 1 or height < 1:
        raise ParameterError(f"target size must be positive, got {width}x{height}")
    h, w = img.shape
    rows = np.minimum((np.arange(height) * h) // height, h - 1)
    cols = np.minimum((np.arange(width) * w) // width, w - 1)
    return img[rows[:, None], cols[None, :]].copy()


def parse_size(text):
    """Parse ``"WxH"`` into ``(W, H)``."""
    try:
        w, h = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise ParameterError(f"size must look like WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise ParameterError(f"size must be positive, got {text!r}")
    return w, h


def normalize_for_view(scalar_map):
    """Min-max scale a map to uint8 for inspection only."""
    x = np.asarray(scalar_map, dtype=np.float64)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return np.zeros(x.shape, dtype=np.uint8)
    return np.floor((x - lo) * (255.0 / (hi - lo)) + 0.5).astype(np.uint8)


# --- file I/O -------------------------------------------------------------------------------

def read_gray(path):
    """Decode a PNG/JPEG (any mode) into a uint8 gray image."""
    path = Path(path)
    if not path.is_file():
        raise ImageIOError(path, "no such file")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "1"):
                return np.asarray(im.convert("L"), dtype=np.uint8).copy()
            if im.mode in ("I;16", "I"):
                return np.clip(np.asarray(im), 0, 255).astype(np.uint8)
            return to_grayscale(np.asarray(im.convert("RGB")))
    except (OSError, SyntaxError, ValueError) as exc:
        raise ImageIOError(path, f"cannot decode image ({exc})") from exc


def read_mask(path):
    """Read a 0/255 mask PNG; any nonzero pixel counts as artifact."""
    return read_gray(path) > 127


def write_gray(path, img):
    img = np.asarray(img)
    if img.dtype != np.uint8:
        img = np.clip(np.floor(img.astype(np.float64) + 0.5), 0, 255).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img).save(path, format="PNG")


def write_mask(path, mask):
    write_gray(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))
