"""Synthetic raindrops for data augmentation.

One drop of radius R is rendered from a 5R x 4R (width x height) transparency map:

1. draw the drop silhouette (circle, egg or two-Bezier lens) at ``alpha_brightness`` and blur it;
2. cut the 5R x 4R patch P around the drop center, blur it and apply barrel distortion;
3. paste a darkened copy P' = darken_factor * P through the alpha map (dark rim);
4. paste P through the same alpha map on top (refracted core).

Compositing is ``out = a * fg + (1 - a) * bg`` with ``a = alpha / 255``, rounded to integers
after each pass. The ground-truth mask is ``alpha > 127``.
"""

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import imgcore
from .dataio import polygon_mask
from .detector import FrameSequence
from .errors import ParameterError

MASK_LEVEL = 127


class DropShape(enum.IntEnum):
    CIRCLE = 0
    EGG = 1
    BEZIER = 2


EGG_TOP = 1.4  # vertical semi-axis of the egg's upper half, in units of R
BEZIER_PULL = 1.2  # default control-point offset of the Bezier lens, in units of R


@dataclass(frozen=True)
class DropSpec:
    shape: DropShape
    radius: int
    center: tuple  # (x, y) pixel coordinates
    alpha_brightness: int = 255
    alpha_blur: int = 1
    patch_blur: int = 1
    fisheye_strength: float = 0.0
    darken_factor: float = 0.3
    bezier_pull: tuple = (BEZIER_PULL, BEZIER_PULL)  # (upper, lower) control offsets / R

    def __post_init__(self):
        object.__setattr__(self, "shape", DropShape(int(self.shape)))
        object.__setattr__(self, "center", (int(self.center[0]), int(self.center[1])))
        object.__setattr__(self, "bezier_pull", tuple(float(v) for v in self.bezier_pull))
        if int(self.radius) != self.radius or self.radius < 1:
            raise ParameterError(f"drop radius must be an integer >= 1, got {self.radius}")
        if not 0 <= self.alpha_brightness <= 255:
            raise ParameterError(f"alpha_brightness must be in [0, 255], got {self.alpha_brightness}")
        imgcore.check_kernel_size(self.alpha_blur, "alpha_blur")
        imgcore.check_kernel_size(self.patch_blur, "patch_blur")
        imgcore.check_fraction(self.darken_factor, "darken_factor")
        if self.fisheye_strength < 0:
            raise ParameterError(f"fisheye strength must be >= 0, got {self.fisheye_strength}")

    def to_json(self):
        d = asdict(self)
        d["shape"] = int(self.shape)
        d["center"] = list(self.center)
        d["bezier_pull"] = list(self.bezier_pull)
        return d


@dataclass(frozen=True)
class SynthConfig:
    """Sampling ranges for :func:`generate_drops`; every range is inclusive."""

    drops_per_image: tuple = (1, 3)
    r_min: int = 10
    r_max: int = 40
    brightness: tuple = (160, 255)
    shapes: tuple = (0, 1, 2)
    alpha_blur_frac: tuple = (0.1, 0.3)  # alpha blur kernel as a fraction of R
    patch_blur_frac: tuple = (0.5, 1.0)
    fisheye: tuple = (0.2, 0.6)
    bezier_pull: tuple = (1.0, 1.4)
    darken_factor: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        lo, hi = self.drops_per_image
        if lo < 1 or hi < lo:
            raise ParameterError(f"drops_per_image must satisfy 1 <= min <= max, got {self.drops_per_image}")
        if self.r_min < 1 or self.r_max < self.r_min:
            raise ParameterError(f"need 1 <= r_min <= r_max, got {self.r_min}, {self.r_max}")
        b0, b1 = self.brightness
        if not 0 <= b0 <= b1 <= 255:
            raise ParameterError(f"brightness range must lie in [0, 255], got {self.brightness}")
        if not self.shapes:
            raise ParameterError("at least one drop shape is required")

    def to_json(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def _bezier(p0, p1, p2, p3, n):
    t = np.linspace(0.0, 1.0, n)[:, None]
    return ((1 - t) ** 3) * p0 + 3 * ((1 - t) ** 2) * t * p1 + 3 * (1 - t) * t * t * p2 + t ** 3 * p3


def drop_silhouette(shape, r, pull=(BEZIER_PULL, BEZIER_PULL)):
    """Boolean 4R x 5R (rows x cols) silhouette of a drop, sampled at pixel centers."""
    r = int(r)
    if r < 1:
        raise ParameterError(f"drop radius must be >= 1, got {r}")
    shape = DropShape(int(shape))
    h, w = 4 * r, 5 * r
    cx, cy = 2.5 * r, 2.0 * r
    yy, xx = np.mgrid[0:h, 0:w] + 0.5
    dx, dy = xx - cx, yy - cy
    if shape is DropShape.CIRCLE:
        return dx * dx + dy * dy <= r * r
    if shape is DropShape.EGG:
        below = (dy >= 0) & (dx * dx + dy * dy <= r * r)
        above = (dy < 0) & ((dx / r) ** 2 + (dy / (EGG_TOP * r)) ** 2 <= 1.0)
        return below | above
    up, down = pull
    left, right = np.array([cx - r, cy]), np.array([cx + r, cy])
    top = _bezier(left, left + [0, -up * r], right + [0, -up * r], right, 64)
    bottom = _bezier(right, right + [0, down * r], left + [0, down * r], left, 64)
    return polygon_mask(np.vstack([top[:-1], bottom[:-1]]), w, h)


def make_alpha_map(shape, r, brightness=255, blur=1, pull=(BEZIER_PULL, BEZIER_PULL)):
    """Float transparency map (4R rows x 5R cols): silhouette at ``brightness``, then blurred."""
    if not 0 <= brightness <= 255:
        raise ParameterError(f"brightness must be in [0, 255], got {brightness}")
    sil = drop_silhouette(shape, r, pull)
    alpha = np.where(sil, float(brightness), 0.0)
    return imgcore.gaussian_blur(alpha, blur)


def _bilinear(img, sx, sy):
    h, w = img.shape
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.minimum(np.floor(sx).astype(np.intp), w - 1)
    y0 = np.minimum(np.floor(sy).astype(np.intp), h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx, fy = sx - x0, sy - y0
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def fisheye_source_radius(r_dst, strength, r_max):
    """Radius sampled by the barrel remap for an output pixel at ``r_dst`` from the center."""
    return r_dst * (1.0 + strength * (r_dst / r_max) ** 2)


def fisheye(patch, strength):
    """Barrel distortion about the patch center with bilinear sampling and clamped borders.

    An output pixel at radius r samples the input at r * (1 + strength * (r / r_max)^2), where
    r_max is the center-to-corner distance, so content is pulled toward the center.
    uint8 input gives uint8 output; anything else is returned as float64.
    """
    if strength < 0:
        raise ParameterError(f"fisheye strength must be >= 0, got {strength}")
    src = np.asarray(patch)
    if src.ndim != 2 or src.size == 0:
        raise ParameterError(f"patch must be a non-empty 2-D array, got shape {src.shape}")
    x = src.astype(np.float64)
    h, w = x.shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    r_max = float(np.hypot(cx, cy))
    if strength == 0 or r_max == 0:
        out = x.copy()
    else:
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        dx, dy = xx - cx, yy - cy
        scale = 1.0 + strength * (dx * dx + dy * dy) / (r_max * r_max)
        out = _bilinear(x, cx + dx * scale, cy + dy * scale)
    if src.dtype == np.uint8:
        return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return out


def _blend(alpha, fg, bg):
    a = alpha / 255.0
    return np.floor(a * fg + (1.0 - a) * bg + 0.5)


def composite_drop(img, spec):
    """Render one drop onto a gray image.

    Returns ``(image, mask)``. Pixels outside the drop's 5R x 4R rectangle are untouched. The
    patch around drops near the border is filled by edge replication before distortion.
    """
    img = np.asarray(img)
    if img.ndim != 2 or img.size == 0:
        raise ParameterError(f"image must be a non-empty 2-D array, got shape {img.shape}")
    h, w = img.shape
    cx, cy = spec.center
    if not (0 <= cx < w and 0 <= cy < h):
        raise ParameterError(f"drop center {spec.center} outside {w}x{h} image")
    r = spec.radius
    pw, ph = 5 * r, 4 * r
    x0, y0 = cx - pw // 2, cy - ph // 2
    ix0, iy0 = max(x0, 0), max(y0, 0)
    ix1, iy1 = min(x0 + pw, w), min(y0 + ph, h)
    if ix0 >= ix1 or iy0 >= iy1:
        raise ParameterError(f"drop at {spec.center} with R={r} has no visible area")

    alpha = make_alpha_map(spec.shape, r, spec.alpha_brightness, spec.alpha_blur, spec.bezier_pull)
    rows = np.clip(np.arange(y0, y0 + ph), 0, h - 1)
    cols = np.clip(np.arange(x0, x0 + pw), 0, w - 1)
    patch = img[rows[:, None], cols[None, :]].astype(np.float64)
    patch = fisheye(imgcore.gaussian_blur(patch, spec.patch_blur), spec.fisheye_strength)
    dark = spec.darken_factor * patch

    sl = (slice(iy0 - y0, iy1 - y0), slice(ix0 - x0, ix1 - x0))
    a = alpha[sl]
    bg = img[iy0:iy1, ix0:ix1].astype(np.float64)
    rim = _blend(a, dark[sl], bg)
    core = _blend(a, patch[sl], rim)

    out = img.astype(np.uint8, copy=True)
    out[iy0:iy1, ix0:ix1] = np.clip(core, 0, 255).astype(np.uint8)
    mask = np.zeros((h, w), dtype=bool)
    mask[iy0:iy1, ix0:ix1] = a > MASK_LEVEL
    return out, mask


def _odd_at_least_1(x):
    k = max(1, int(np.floor(x + 0.5)))
    return k if k % 2 else k + 1


def sample_drop(rng, width, height, config):
    """Draw one DropSpec from ``config`` using ``rng`` (a numpy Generator)."""
    r = int(rng.integers(config.r_min, config.r_max + 1))
    cx = int(rng.integers(0, width))
    cy = int(rng.integers(0, height))
    shape = DropShape(int(config.shapes[rng.integers(0, len(config.shapes))]))
    bright = int(rng.integers(config.brightness[0], config.brightness[1] + 1))
    ab = _odd_at_least_1(r * rng.uniform(*config.alpha_blur_frac))
    pb = _odd_at_least_1(r * rng.uniform(*config.patch_blur_frac))
    fish = float(rng.uniform(*config.fisheye))
    pull = (float(rng.uniform(*config.bezier_pull)), float(rng.uniform(*config.bezier_pull)))
    return DropSpec(shape, r, (cx, cy), bright, ab, pb, fish, config.darken_factor, pull)


def generate_drops(img, config, max_tries=100):
    """Composite a random number of random drops onto ``img``.

    Returns ``(image, mask, specs)``; ``mask`` is the union of the per-drop masks. Drops whose
    mask would be empty (faint or clipped away) are redrawn. The output is a pure function of
    ``img`` and ``config`` (including ``config.rng_seed``).
    """
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    rng = np.random.default_rng(config.rng_seed)
    n = int(rng.integers(config.drops_per_image[0], config.drops_per_image[1] + 1))
    out = img.copy()
    mask = np.zeros((h, w), dtype=bool)
    specs = []
    for _ in range(n):
        for _ in range(max_tries):
            spec = sample_drop(rng, w, h, config)
            rendered, m = composite_drop(out, spec)
            if m.any():
                break
        else:
            raise ParameterError(f"could not place a visible drop in {max_tries} attempts")
        out = rendered
        mask |= m
        specs.append(spec)
    return out, mask, specs


def specs_to_json(specs, config=None):
    doc = {"drops": [s.to_json() for s in specs]}
    if config is not None:
        doc["config"] = config.to_json()
    return json.dumps(doc, indent=1)


@dataclass
class SyntheticScene:
    sequence: FrameSequence
    mask: np.ndarray
    specs: list = field(default_factory=list)


def moving_noise_sequence(width, height, n_frames=10, shift=2, seed=0, drops=()):
    """Uniform-noise background panning ``shift`` px/frame, with optional static drops.

    Every frame is a window onto one wide noise canvas; each spec in ``drops`` is composited at
    the same place in every frame, so the drops stay put while the scene moves behind them.
    """
    rng = np.random.default_rng(seed)
    canvas = rng.integers(0, 256, size=(height, width + shift * (n_frames - 1)), dtype=np.uint8)
    frames = []
    mask = np.zeros((height, width), dtype=bool)
    for i in range(n_frames):
        f = canvas[:, i * shift:i * shift + width].copy()
        for spec in drops:
            f, m = composite_drop(f, spec)
            if i == 0:
                mask |= m
        frames.append(f)
    return SyntheticScene(FrameSequence(np.stack(frames), f"noise-{seed}"), mask, list(drops))


def drop_scene(seed, size=128, n_frames=10, shift=2, r_range=(15, 30), config=None):
    """Moving-noise sequence with one static drop whose silhouette lies fully inside the frame.

    Radius, shape, opacity and blur come from ``config`` (default SynthConfig) with the radius
    range overridden by ``r_range``; everything is drawn from ``seed``.
    """
    config = config or SynthConfig()
    config = SynthConfig(**{**asdict(config), "r_min": r_range[0], "r_max": r_range[1]})
    rng = np.random.default_rng(seed)
    spec = sample_drop(rng, size, size, config)
    r = spec.radius
    top = int(np.ceil(EGG_TOP * r))
    center = (int(rng.integers(r, size - r)), int(rng.integers(top, size - r)))
    spec = DropSpec(spec.shape, r, center, spec.alpha_brightness, spec.alpha_blur,
                    spec.patch_blur, spec.fisheye_strength, spec.darken_factor, spec.bezier_pull)
    return moving_noise_sequence(size, size, n_frames, shift, seed=seed, drops=[spec])
