# Synthetic raindrops for augmentation
#
# Each drop is an alpha map (circle, egg or Bezier blob), a blurred and fisheye-warped copy
# of the image region behind it, and a darkened rim. Everything comes from one seed.

import sys
import tempfile
from pathlib import Path

import numpy as np

from raindet import imgcore, rainsynth

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="drops_"))
out.mkdir(parents=True, exist_ok=True)

# a smooth gradient with some stripes is easier to eyeball than noise
yy, xx = np.mgrid[0:240, 0:320]
img = (120 + 80 * np.sin(xx / 9.0) * np.cos(yy / 23.0)).astype(np.uint8)

cfg = rainsynth.SynthConfig(drops_per_image=(3, 5), r_min=12, r_max=30, rng_seed=42)
rendered, mask, specs = rainsynth.generate_drops(img, cfg)
for s in specs:
    print(s.shape.name, "r=%d" % s.radius, "at", s.center, "fisheye %.2f" % s.fisheye_strength)
print("drop pixels: %d (%.1f%% of the image)" % (mask.sum(), 100 * mask.mean()))

# same seed, same pixels
again, _, _ = rainsynth.generate_drops(img, cfg)
print("reproducible:", np.array_equal(rendered, again))

imgcore.write_gray(out / "clean.png", img)
imgcore.write_gray(out / "drops.png", rendered)
imgcore.write_mask(out / "drops_mask.png", mask)
(out / "drops.json").write_text(rainsynth.specs_to_json(specs, cfg))

# One drop on its own, to see the fisheye at work: stripes inside bend toward the centre.
one = rainsynth.DropSpec(rainsynth.DropShape.CIRCLE, 40, (160, 120), 255, 5, 7, 0.6)
lens, _ = rainsynth.composite_drop(img, one)
imgcore.write_gray(out / "single_drop.png", lens)
print("wrote", sorted(p.name for p in out.iterdir()), "to", out)
