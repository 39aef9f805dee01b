# Turning polygon annotations into per-frame masks
#
# Annotators outline drops as polygons on a few keyframes. Every other frame borrows the
# outline of the closest keyframe before it, since drops barely move within a sequence.

import json
import tempfile
from pathlib import Path

import numpy as np

from raindet import dataio, imgcore
from raindet.errors import AnnotationParseError

root = Path(tempfile.mkdtemp(prefix="dataset_"))

# build a tiny sequence: 6 frames, annotated at frames 0 and 3
paths = []
for i in range(6):
    p = root / "frames" / ("%04d.png" % i)
    p.parent.mkdir(parents=True, exist_ok=True)
    imgcore.write_gray(p, np.full((40, 60), 30 * i, np.uint8))
    paths.append(p)

labels = root / "labels"
labels.mkdir()
(labels / "0000.json").write_text(json.dumps(
    {"image": "0000.png", "shapes": [{"label": "raindrop", "points": [[5, 5], [25, 5], [15, 25]]}]}))
(labels / "0003.json").write_text(json.dumps(
    {"image": "0003.png", "shapes": [{"label": "raindrop", "points": [[30, 10], [55, 10], [55, 35], [30, 35]]}]}))
(root / "seq.json").write_text(json.dumps({
    "sequence_id": "demo", "has_drops": True,
    "frames": ["frames/%04d.png" % i for i in range(6)],
    "keyframes": {"0": "labels/0000.json", "3": "labels/0003.json"},
}))

man = dataio.load_manifest(root / "seq.json")
seq = dataio.load_sequence(man)
masks = dataio.propagate_labels(man, 60, 40)
for i, m in enumerate(masks):
    print("frame %d: %3d drop pixels" % (i, m.sum()))

# Broken annotation files are reported with their location, not with a traceback.
try:
    dataio.parse_annotations('{"shapes": [ {"points": [[1,2] [3,4]]} ]}', source="bad.json")
except AnnotationParseError as e:
    print("error:", e)
