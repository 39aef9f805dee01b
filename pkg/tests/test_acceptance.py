"""Acceptance gate. Each test checks one criterion at its stated tolerance and records a
PASS/FAIL line, listed under "acceptance criteria" at the end of the pytest run."""

import json
import math
import os
import statistics
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import oracles
from raindet import cli, dataio, evalkit, imgcore, nccbase, rainsynth
from raindet import detector as det
from raindet.dataio import PolygonAnnotation, SequenceManifest


def _odd(rng, lo, hi):
    return int(rng.integers(lo // 2, hi // 2 + 1)) * 2 + 1


# --- 1 ------------------------------------------------------------------------------------------

def test_c1_kernel_oracles(acceptance):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = {"sobel": 0.0, "gaussian": 0.0, "box": 0.0}
    mismatches = {"dilate": 0, "rasterize": 0}
    for k in range(200):
        h, w = (int(v) for v in rng.integers(1, 33, 2))
        img = rng.integers(0, 256, (h, w), dtype=np.uint8)
        ap = 3 if k % 2 else 5
        gx, gy = imgcore.sobel_gradients(img, ap)
        ox, oy = oracles.sobel(img, ap)
        worst["sobel"] = max(worst["sobel"], np.abs(gx - ox).max(), np.abs(gy - oy).max())

        d = _odd(rng, 1, 11)
        worst["gaussian"] = max(worst["gaussian"], np.abs(
            imgcore.gaussian_blur(img, d) - oracles.correlate_replicate(img, oracles.gaussian_2d(d))).max())

        bw = _odd(rng, 1, 9)
        worst["box"] = max(worst["box"], np.abs(imgcore.box_filter(img, bw) - oracles.window_mean(img, bw)).max())

        mask = rng.random((h, w)) < rng.uniform(0.02, 0.3)
        m = _odd(rng, 1, 9)
        mismatches["dilate"] += not np.array_equal(imgcore.dilate(mask, m), oracles.window_max(mask, m))

        polys = [oracles.random_polygon(rng, w, h) for _ in range(int(rng.integers(1, 4)))]
        mismatches["rasterize"] += not np.array_equal(dataio.rasterize(polys, w, h), oracles.rasterize(polys, w, h))
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1e-6 for v in worst.values()) and not any(mismatches.values()) and elapsed < 60
    detail = ", ".join(f"{k} max|err|={v:.2e}" for k, v in worst.items())
    detail += ", " + ", ".join(f"{k} mismatches={v}" for k, v in mismatches.items())
    acceptance(1, ok, f"200 images <=32x32; {detail}; {elapsed:.1f}s (limit 60s)")
    assert ok


# --- 2 ------------------------------------------------------------------------------------------

def test_c2_ncc_oracle(acceptance):
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        a = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        b = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        if rng.random() < 0.3:  # correlated pairs exercise values near +1
            b = np.clip(a.astype(int) + rng.integers(-20, 21, a.shape), 0, 255).astype(np.uint8)
        for win in (3, 5, 11):
            got = nccbase.ncc_map(a, b, win, 1e-4)
            worst = max(worst, np.abs(got - oracles.windowed_pearson(a, b, win, 1e-4)).max())
    flat = np.full((16, 16), 128, np.uint8)
    noisy = rng.integers(0, 256, (16, 16), dtype=np.uint8)
    finite = all(
        np.isfinite(nccbase.ncc_map(x, y, win)).all()
        for x, y in [(flat, flat), (flat, noisy), (noisy, flat), (np.zeros_like(flat), flat)]
        for win in (3, 5, 11)
    )
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and finite and elapsed < 60
    acceptance(2, ok, f"100 pairs 16x16, windows 3/5/11; max|err|={worst:.2e}; flat patches finite={finite}; "
                      f"{elapsed:.1f}s (limit 60s)")
    assert ok


# --- 3 ------------------------------------------------------------------------------------------

def test_c3_detector_invariants(acceptance):
    t0 = time.perf_counter()
    params = det.DetectorParams()
    scene = rainsynth.drop_scene(5)
    frames = scene.sequence.frames
    perm = np.random.default_rng(3).permutation(len(frames))
    a, b = det.detect(frames, params), det.detect(frames[perm], params)
    perm_ok = (np.array_equal(a.mask, b.mask) and a.artifact_fraction == b.artifact_fraction
               and np.allclose(a.averaged_gradient, b.averaged_gradient, rtol=0, atol=1e-9))

    mono_ok = True
    for seq in (frames, rainsynth.moving_noise_sequence(128, 128, seed=9).sequence):
        fr = [det.detect(seq, replace(params, t_b=t)).artifact_fraction for t in evalkit.TB_SWEEP]
        mono_ok &= all(x <= y for x, y in zip(fr, fr[1:]))

    const = det.detect(np.full((10, 128, 128), 77, np.uint8), params)
    const_ok = const.detected and const.artifact_fraction == 1.0
    noise = det.detect(rainsynth.moving_noise_sequence(128, 128, seed=7).sequence, params)
    noise_ok = not noise.detected
    elapsed = time.perf_counter() - t0
    ok = perm_ok and mono_ok and const_ok and noise_ok and elapsed < 120
    acceptance(3, ok, f"permutation={perm_ok} t_b-monotone(17 pts)={mono_ok} constant->fraction "
                      f"{const.artifact_fraction:.6f}/detected={const.detected} noise->detected={noise.detected} "
                      f"(fraction {noise.artifact_fraction:.4f}); {elapsed:.1f}s (limit 120s)")
    assert ok


# --- 4 ------------------------------------------------------------------------------------------

def test_c4_synthetic_recovery(acceptance):
    t0 = time.perf_counter()
    params = det.scale_params(det.DetectorParams(), 128, 128)
    positives = [rainsynth.drop_scene(seed) for seed in range(20)]
    negatives = [rainsynth.moving_noise_sequence(128, 128, seed=100 + k).sequence for k in range(20)]

    ious, pos_hits, neg_hits = [], 0, 0
    for sc in positives:
        r = det.detect(sc.sequence, params)
        ious.append(evalkit.seg_scores(r.mask, sc.mask).iou)
        pos_hits += r.detected
    for seq in negatives:
        neg_hits += det.detect(seq, params).detected
    items = [(sc.sequence, True) for sc in positives] + [(s, False) for s in negatives]
    curve = evalkit.roc_sweep(items, evalkit.gradient_sweeper(params))
    area = evalkit.auc(curve)
    separating = [t for t, f, p in curve.points if f == 0 and p == 1]
    elapsed = time.perf_counter() - t0

    iou_ok = statistics.mean(ious) >= 0.5
    default_ok = pos_hits == 20 and neg_hits == 0
    ok = iou_ok and default_ok and area == 1.0 and elapsed < 180
    acceptance(4, ok, f"d={params.d} m={params.m}; mean IoU={statistics.mean(ious):.3f} (>=0.5: {iou_ok}); "
                      f"at t_b={params.t_b}: {pos_hits}/20 drop fixtures flagged, {neg_hits}/20 clean flagged; "
                      f"sweep AUC={area:.6f}, separating t_b={separating}; {elapsed:.1f}s (limit 180s)")
    assert ok


@pytest.mark.skipif(not os.environ.get("RAINDET_DATASET"), reason="set RAINDET_DATASET to a downloaded test split")
def test_c4_real_dataset(acceptance):
    manifests = [dataio.load_manifest(p) for p in dataio.find_manifests(os.environ["RAINDET_DATASET"])]
    area = evalkit.auc(evalkit.roc_sweep(manifests, evalkit.gradient_sweeper(det.DetectorParams(), threads=4)))
    ok = 0.75 <= area <= 0.90
    acceptance("4-dataset", ok, f"{len(manifests)} sequences at default parameters, AUC={area:.6f} (accept 0.75..0.90)")
    assert ok


# --- 5 ------------------------------------------------------------------------------------------

def test_c5_metric_identities(acceptance):
    rng = np.random.default_rng(5)
    worst_id = worst_acc = 0.0
    tested = 0
    while tested < 1000:
        h, w = (int(v) for v in rng.integers(1, 40, 2))
        a = rng.random((h, w)) < rng.uniform(0, 0.6)
        b = rng.random((h, w)) < rng.uniform(0, 0.6)
        if not (a | b).any():
            continue
        tested += 1
        s = evalkit.seg_scores(a, b)
        worst_id = max(worst_id, abs(s.dice - 2 * s.iou / (1 + s.iou)))
        worst_acc = max(worst_acc, abs(evalkit.accumulated_dice([evalkit.overlap_counts(a, b)]) - s.dice))
    hand = evalkit.auc([(0, 0), (0.2, 0.6), (0.5, 0.9), (1, 1)])
    expected = 0.2 * (0 + 0.6) / 2 + 0.3 * (0.6 + 0.9) / 2 + 0.5 * (0.9 + 1) / 2
    diag = evalkit.auc([(0, 0), (1, 1)])
    ok = (worst_id <= 1e-12 and worst_acc <= 1e-12 and hand == expected and abs(hand - 0.76) < 1e-12
          and diag == 0.5)
    acceptance(5, ok, f"1000 pairs: max|dice-2iou/(1+iou)|={worst_id:.1e}, max|accDice(L=1)-dice|={worst_acc:.1e}; "
                      f"auc(3-point)={hand!r}; auc(diagonal)={diag!r}")
    assert ok


# --- 6 ------------------------------------------------------------------------------------------

def test_c6_relative_performance(acceptance):
    big = rainsynth.moving_noise_sequence(640, 480, n_frames=10, seed=1).sequence
    rep = evalkit.bench_pipeline(big, det.DetectorParams(), nccbase.NccParams(), repeats=5)
    ratio = rep["ncc_median_s"] / rep["gradient_median_s"]

    small = rainsynth.moving_noise_sequence(216, 216, n_frames=10, seed=2).sequence
    runs = []
    for _ in range(5):
        t0 = time.perf_counter()
        det.segment(small, det.DetectorParams())
        runs.append((time.perf_counter() - t0) / len(small))
    per_frame = statistics.median(runs)
    ok = ratio > 1.0 and per_frame < 0.1
    acceptance(6, ok, f"640x480x10 medians: gradient {rep['gradient_median_s']:.3f}s, NCC {rep['ncc_median_s']:.3f}s "
                      f"(NCC/gradient={ratio:.2f}, need >1); 216x216 segmentation {1000 * per_frame:.1f} ms/frame "
                      f"(limit 100 ms)")
    assert ok


# --- 7 ------------------------------------------------------------------------------------------

def _tree_bytes(root, skip=()):
    return {p.name: p.read_bytes() for p in sorted(Path(root).iterdir()) if p.name not in skip}


def test_c7_determinism(acceptance, tmp_path, capsys):
    src = tmp_path / "images"
    src.mkdir()
    rng = np.random.default_rng(8)
    for i in range(4):
        imgcore.write_gray(src / f"img{i}.png", rng.integers(0, 256, (120, 160), dtype=np.uint8))
    synth = {}
    for threads in (1, 4):
        for rep in (0, 1):
            out = tmp_path / f"synth_t{threads}_{rep}"
            assert cli.main(["synth", "--input", str(src), "--output", str(out), "--seed", "42",
                             "--threads", str(threads)]) == 0
            synth[threads, rep] = _tree_bytes(out, skip={"run.json"})
            synth[threads, rep, "run"] = (out / "run.json").read_bytes()
    synth_ok = (synth[1, 0] == synth[1, 1] == synth[4, 0] == synth[4, 1]
                and synth[1, 0, "run"] == synth[1, 1, "run"] and synth[4, 0, "run"] == synth[4, 1, "run"])

    scene = rainsynth.drop_scene(2)
    seq_dir = tmp_path / "seq"
    seq_dir.mkdir()
    paths = []
    for i, f in enumerate(scene.sequence.frames):
        imgcore.write_gray(seq_dir / f"{i:03d}.png", f)
        paths.append(seq_dir / f"{i:03d}.png")
    manifest = dataio.save_manifest(SequenceManifest("drop", paths, True), seq_dir / "seq.json")
    capsys.readouterr()
    runs = {}
    for threads in (1, 4):
        for rep in (0, 1):
            out = tmp_path / f"det_t{threads}_{rep}"
            # kernels scaled to 128x128 so the drop is actually segmented
            assert cli.main(["detect", "--input", str(manifest), "--output", str(out), "--gauss-d", "23",
                             "--dilate-m", "7", "--threads", str(threads)]) == 0
            runs[threads, rep] = (capsys.readouterr().out, _tree_bytes(out, skip={"run.json"}))
    detect_ok = runs[1, 0] == runs[1, 1] == runs[4, 0] == runs[4, 1]
    ok = synth_ok and detect_ok
    acceptance(7, ok, f"synth --seed 42 byte-identical over 2 runs x threads{{1,4}}: {synth_ok} "
                      f"({len(synth[1, 0])} files); detect outputs identical: {detect_ok} "
                      f"[{runs[1, 0][0].strip()}]")
    assert ok


# --- 8 ------------------------------------------------------------------------------------------

def test_c8_ingestion_roundtrip(acceptance, tmp_path):
    rng = np.random.default_rng(88)
    bad = 0
    for k in range(50):
        w, h = (int(v) for v in rng.integers(8, 64, 2))
        polys = [PolygonAnnotation("raindrop", tuple(oracles.random_polygon(rng, w, h)))
                 for _ in range(int(rng.integers(1, 6)))]
        before = dataio.rasterize(polys, w, h)
        path = tmp_path / f"ann{k}.json"
        path.write_text(dataio.dump_annotations(polys, f"frame{k}.png"))
        after = dataio.rasterize(dataio.read_annotations(path), w, h)
        bad += not np.array_equal(before, after)

    frames_dir = tmp_path / "frames"
    frames_dir.mkdir()
    paths = []
    for i in range(10):
        imgcore.write_gray(frames_dir / f"{i:02d}.png", np.full((24, 32), i, np.uint8))
        paths.append(frames_dir / f"{i:02d}.png")
    shapes = {i: [PolygonAnnotation("raindrop", ((2 + 2 * i, 2), (10 + 2 * i, 2), (6 + 2 * i, 12)))]
              for i in range(10)}
    cases = {"kf0": [0], "none": [], "kf0+5": [0, 5], "kf3+7": [3, 7], "all": list(range(10))}
    prop_ok = True
    for name, kfs in cases.items():
        man = SequenceManifest(name, paths, bool(kfs), {i: shapes[i] for i in kfs})
        loaded = dataio.load_manifest(dataio.save_manifest(man, tmp_path / name / "m.json"))
        masks = dataio.propagate_labels(loaded, 32, 24)
        for i, m in enumerate(masks):
            prev = [k for k in kfs if k <= i]
            want = dataio.rasterize(shapes[max(prev)], 32, 24) if prev else np.zeros((24, 32), bool)
            prop_ok &= np.array_equal(m, want)
        prop_ok &= len(masks) == 10
    ok = bad == 0 and prop_ok
    acceptance(8, ok, f"50 polygon sets rasterize->serialize->parse->rasterize mismatches={bad}; "
                      f"nearest-preceding propagation on {len(cases)} 10-frame manifests: {prop_ok}")
    assert ok
