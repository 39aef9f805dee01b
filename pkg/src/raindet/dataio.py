"""Dataset ingestion: polygon annotations, masks, sequence manifests.

Annotation file (one per keyframe)::

    {"image": "frame_0000.png",
     "shapes": [{"label": "raindrop", "points": [[x1, y1], [x2, y2], ...]}, ...]}

LabelMe documents (``imagePath`` instead of ``image``) are accepted as-is. Anything else can be
mapped onto this layout by passing an ``adapter`` callable to :func:`parse_annotations`.

Sequence manifest::

    {"sequence_id": "seq_001", "has_drops": true,
     "frames": ["frames/0000.png", ...],
     "keyframes": {"0": "labels/0000.json", "50": "labels/0050.json"}}

Relative paths are resolved against the manifest's directory.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgcore
from .detector import FrameSequence
from .errors import AnnotationParseError, DimensionError, ValidationError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


@dataclass(frozen=True)
class PolygonAnnotation:
    label: str
    points: tuple

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) < 3:
            raise ValidationError(f"polygon {self.label!r} has {len(pts)} points, need at least 3")
        if not all(math.isfinite(v) for p in pts for v in p):
            raise ValidationError(f"polygon {self.label!r} has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def to_json(self):
        return {"label": self.label, "points": [list(p) for p in self.points]}


def _default_adapter(doc):
    if not isinstance(doc, dict):
        raise ValidationError("annotation document must be a JSON object")
    shapes = doc.get("shapes", [])
    if not isinstance(shapes, list):
        raise ValidationError("'shapes' must be a list")
    return shapes


def parse_annotations(text, adapter=None, source=None):
    """Decode an annotation document into a list of PolygonAnnotation.

    ``adapter`` takes the decoded JSON and returns the list of shape dicts
    (``{"label": ..., "points": [[x, y], ...]}``).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationParseError(exc.msg, exc.lineno, exc.colno, source) from exc
    shapes = (adapter or _default_adapter)(doc)
    out = []
    for i, shape in enumerate(shapes):
        where = f"shape #{i}" + (f" in {source}" if source else "")
        try:
            label = str(shape.get("label", ""))
            points = shape["points"]
            out.append(PolygonAnnotation(label, tuple((p[0], p[1]) for p in points)))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
        except (AttributeError, KeyError, TypeError, IndexError, ValueError) as exc:
            raise ValidationError(f"{where}: malformed shape ({exc!r})") from None
    return out


def dump_annotations(polygons, image=""):
    """Serialize polygons into the annotation schema; floats round-trip exactly."""
    return json.dumps({"image": image, "shapes": [p.to_json() for p in polygons]}, indent=1)


def read_annotations(path, adapter=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read annotation file ({exc.strerror})") from exc
    return parse_annotations(text, adapter, source=str(path))


def polygon_mask(points, width, height):
    """Even-odd fill of one polygon sampled at pixel centers ``(col + 0.5, row + 0.5)``.

    Parts of the polygon outside the raster are ignored.
    """
    pts = np.asarray(points, dtype=np.float64)
    # parity[r, c] counts edges crossing row r to the right of column c's center
    parity = np.zeros((height, width + 1), dtype=np.int32)
    xs, ys = pts[:, 0], pts[:, 1]
    for i in range(len(pts)):
        x1, y1 = xs[i - 1], ys[i - 1]
        x2, y2 = xs[i], ys[i]
        if y1 == y2:
            continue
        lo = max(0, int(math.floor(min(y1, y2) - 0.5)))
        hi = min(height - 1, int(math.ceil(max(y1, y2) - 0.5)))
        if lo > hi:
            continue
        rows = np.arange(lo, hi + 1)
        py = rows + 0.5
        rows = rows[(y1 > py) != (y2 > py)]
        if rows.size == 0:
            continue
        py = rows + 0.5
        xint = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        n = np.clip(np.ceil(xint - 0.5), 0, width).astype(np.int64)
        parity[rows, 0] += 1
        parity[rows, n] -= 1
    return (np.cumsum(parity[:, :width], axis=1) % 2).astype(bool)


def rasterize(polygons, width, height):
    """Union of the even-odd fills of ``polygons`` on a ``width`` x ``height`` mask."""
    width, height = int(width), int(height)
    if width < 1 or height < 1:
        raise DimensionError(f"mask size must be positive, got {width}x{height}")
    mask = np.zeros((height, width), dtype=bool)
    for poly in polygons:
        pts = poly.points if isinstance(poly, PolygonAnnotation) else poly
        mask |= polygon_mask(pts, width, height)
    return mask


@dataclass
class SequenceManifest:
    sequence_id: str
    frame_paths: list
    has_drops: bool = None
    keyframe_annotations: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frame_paths = [Path(p) for p in self.frame_paths]
        if not self.frame_paths:
            raise ValidationError(f"manifest {self.sequence_id!r} lists no frames")
        n = len(self.frame_paths)
        kf = {}
        for k, polys in self.keyframe_annotations.items():
            idx = int(k)
            if not 0 <= idx < n:
                raise ValidationError(
                    f"manifest {self.sequence_id!r}: keyframe index {idx} outside 0..{n - 1}"
                )
            kf[idx] = list(polys)
        self.keyframe_annotations = dict(sorted(kf.items()))


def load_manifest(path, adapter=None):
    """Read a manifest JSON and the keyframe annotation files it references."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read manifest ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise AnnotationParseError(exc.msg, exc.lineno, exc.colno, str(path)) from exc
    if not isinstance(doc, dict) or "frames" not in doc:
        raise ValidationError(f"{path}: manifest must be an object with a 'frames' list")
    base = path.parent
    frames = [base / f for f in doc["frames"]]
    keyframes = {}
    for k, ann in (doc.get("keyframes") or {}).items():
        try:
            idx = int(k)
        except ValueError:
            raise ValidationError(f"{path}: keyframe key {k!r} is not an integer") from None
        keyframes[idx] = read_annotations(base / ann, adapter)
    has = doc.get("has_drops")
    return SequenceManifest(
        sequence_id=str(doc.get("sequence_id", path.stem)),
        frame_paths=frames,
        has_drops=None if has is None else bool(has),
        keyframe_annotations=keyframes,
    )


def save_manifest(manifest, path):
    """Write ``manifest`` plus one annotation file per keyframe next to it.

    Frame paths are stored relative to the manifest directory when possible.
    """
    path = Path(path)
    base = path.parent
    base.mkdir(parents=True, exist_ok=True)

    def rel(p):
        try:
            return Path(p).resolve().relative_to(base.resolve()).as_posix()
        except ValueError:
            return str(Path(p).resolve())

    keyframes = {}
    for idx, polys in manifest.keyframe_annotations.items():
        name = f"{manifest.sequence_id}_kf{idx:05d}.json"
        image = manifest.frame_paths[idx].name
        (base / name).write_text(dump_annotations(polys, image))
        keyframes[str(idx)] = name
    doc = {
        "sequence_id": manifest.sequence_id,
        "has_drops": manifest.has_drops,
        "frames": [rel(p) for p in manifest.frame_paths],
        "keyframes": keyframes,
    }
    path.write_text(json.dumps(doc, indent=1))
    return path


def manifest_from_dir(directory, sequence_id=None, has_drops=None):
    """Manifest for a directory of frame images taken in sorted filename order."""
    directory = Path(directory)
    frames = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not frames:
        raise ValidationError(f"{directory}: no image files found")
    return SequenceManifest(sequence_id or directory.name, frames, has_drops)


def find_manifests(root):
    """All manifest JSON files under ``root`` (files whose top level has a 'frames' key)."""
    root = Path(root)
    if root.is_file():
        return [root]
    found = []
    for p in sorted(root.rglob("*.json")):
        try:
            doc = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError):
            continue
        if isinstance(doc, dict) and "frames" in doc:
            found.append(p)
    return found


def propagate_labels(manifest, width, height):
    """One mask per frame: the rasterized mask of the nearest keyframe at or before it.

    Frames before the first keyframe get an empty mask.
    """
    n = len(manifest.frame_paths)
    masks = []
    current = np.zeros((height, width), dtype=bool)
    for i in range(n):
        if i in manifest.keyframe_annotations:
            current = rasterize(manifest.keyframe_annotations[i], width, height)
        masks.append(current.copy())
    return masks


def load_sequence(manifest, resize=None):
    """Decode every frame to gray (optionally resized to ``(W, H)``), preserving order."""
    frames = []
    for p in manifest.frame_paths:
        img = imgcore.read_gray(p)
        if frames and img.shape != frames[0][1].shape:
            h0, w0 = frames[0][1].shape
            raise DimensionError(
                f"{p}: frame size {img.shape[1]}x{img.shape[0]} differs from "
                f"{frames[0][0]} size {w0}x{h0}"
            )
        frames.append((p, img))
    imgs = [f for _, f in frames]
    if resize is not None:
        imgs = [imgcore.resize_nearest(f, *resize) for f in imgs]
    return FrameSequence(np.stack(imgs), manifest.sequence_id)
