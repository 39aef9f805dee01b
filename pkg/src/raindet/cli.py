"""Command-line front end.

    raindet detect   --input SEQ --output DIR     # prints detected=<bool> fraction=<f>
    raindet segment  --input SEQ --output DIR
    raindet synth    --input IMG_OR_DIR --output DIR --seed 42
    raindet ingest   --input DATASET --output DIR
    raindet eval-roc --input DATASET --output DIR [--ncc]
    raindet eval-seg --input PRED_DIR --gt GT_DIR --output DIR   (or --input DATASET)
    raindet bench    [--input SEQ] --output DIR

SEQ is a sequence manifest JSON or a directory of frames; DATASET is a manifest or a
directory searched recursively for manifests. Every command writes ``run.json`` with the
resolved parameters.

Exit status: 0 success, 2 usage or invalid parameter, 3 bad input data, 4 output not writable.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, dataio, evalkit, imgcore, rainsynth
from .detector import DetectorParams, detect, segment
from .errors import ImageIOError, ParameterError, RaindetError
from .nccbase import NccParams

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_OUTPUT = 0, 2, 3, 4


class _OutputError(Exception):
    pass


def _add_common(p):
    p.add_argument("--input", help="input path")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for per-frame work")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resize", help="resize frames to WxH before processing")


def _add_detector(p):
    d = DetectorParams()
    p.add_argument("--sobel", type=int, default=d.sobel_aperture, choices=(3, 5))
    p.add_argument("--gauss-d", type=int, default=d.d)
    p.add_argument("--tb", type=float, default=d.t_b)
    p.add_argument("--dilate-m", type=int, default=d.m)
    p.add_argument("--td", type=float, default=d.t_d)


def _add_ncc(p):
    n = NccParams()
    p.add_argument("--ncc-window", type=int, default=n.window)
    p.add_argument("--ncc-tc", type=float, default=n.t_c)


def build_parser():
    ap = argparse.ArgumentParser(prog="raindet", description="Raindrop detection on image sequences")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    for name in ("detect", "segment"):
        p = sub.add_parser(name, help=f"{name} raindrops in one sequence")
        _add_common(p)
        _add_detector(p)

    p = sub.add_parser("synth", help="add synthetic drops to images")
    _add_common(p)
    p.add_argument("--drops", default="1,3", help="MIN,MAX drops per image")
    p.add_argument("--r-min", type=int, default=rainsynth.SynthConfig.r_min)
    p.add_argument("--r-max", type=int, default=rainsynth.SynthConfig.r_max)

    p = sub.add_parser("ingest", help="validate a dataset and write per-frame label masks")
    _add_common(p)

    p = sub.add_parser("eval-roc", help="ROC sweep over a labelled dataset")
    _add_common(p)
    _add_detector(p)
    _add_ncc(p)
    p.add_argument("--ncc", action="store_true", help="also sweep the NCC baseline")

    p = sub.add_parser("eval-seg", help="segmentation scores")
    _add_common(p)
    _add_detector(p)
    p.add_argument("--gt", help="directory of ground-truth mask PNGs matching --input by name")
    p.add_argument("--dice-style", choices=("doubled", "literal"), default="doubled")

    p = sub.add_parser("bench", help="time the gradient pipeline against NCC")
    _add_common(p)
    _add_detector(p)
    _add_ncc(p)
    p.add_argument("--repeats", type=int, default=5)
    return ap


# --- helpers --------------------------------------------------------------------------------

def _detector_params(a):
    return DetectorParams(a.sobel, a.gauss_d, a.tb, a.dilate_m, a.td)


def _ncc_params(a):
    return NccParams(window=a.ncc_window, t_c=a.ncc_tc)


def _resize(a):
    return imgcore.parse_size(a.resize) if a.resize else None


def _need_input(a):
    if not a.input:
        raise ParameterError(f"{a.command} requires --input")
    p = Path(a.input)
    if not p.exists():
        raise ImageIOError(p, "no such file or directory")
    return p


def _sequence_manifest(path):
    return dataio.manifest_from_dir(path) if path.is_dir() else dataio.load_manifest(path)


def _dataset(path):
    found = dataio.find_manifests(path)
    if not found:
        raise RaindetError(f"{path}: no sequence manifests found")
    return [dataio.load_manifest(p) for p in found]


def _out_dir(a):
    out = Path(a.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _OutputError(f"{out}: {exc.strerror}") from exc
    return out


def _write_run(out, a, extra):
    cfg = {
        "command": a.command,
        "version": __version__,
        "input": a.input,
        "seed": a.seed,
        "threads": a.threads,
        "resize": a.resize,
    }
    cfg.update(extra)
    (out / "run.json").write_text(evalkit.dumps_fixed(cfg))


# --- commands -------------------------------------------------------------------------------

def _cmd_detect(a, segment_only=False):
    params = _detector_params(a)
    seq = dataio.load_sequence(_sequence_manifest(_need_input(a)), _resize(a))
    out = _out_dir(a)
    if segment_only:
        imgcore.write_mask(out / "mask.png", segment(seq, params, a.threads))
    else:
        res = detect(seq, params, a.threads)
        print(f"detected={str(res.detected).lower()} fraction={res.artifact_fraction:.6f}")
        imgcore.write_mask(out / "mask.png", res.mask)
        imgcore.write_gray(out / "gradient.png", imgcore.normalize_for_view(res.averaged_gradient))
    _write_run(out, a, {"detector": params.to_dict(), "frames": len(seq)})


def _parse_range(text):
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError:
        raise ParameterError(f"expected MIN,MAX, got {text!r}") from None
    return lo, hi


def _cmd_synth(a):
    src = _need_input(a)
    images = (sorted(p for p in src.iterdir() if p.suffix.lower() in dataio.IMAGE_SUFFIXES)
              if src.is_dir() else [src])
    if not images:
        raise RaindetError(f"{src}: no images found")
    base = rainsynth.SynthConfig(drops_per_image=_parse_range(a.drops), r_min=a.r_min, r_max=a.r_max)
    out = _out_dir(a)
    seeds = np.random.SeedSequence(a.seed).generate_state(len(images), dtype=np.uint64)
    size = _resize(a)
    for path, s in zip(images, seeds):
        img = imgcore.read_gray(path)
        if size:
            img = imgcore.resize_nearest(img, *size)
        cfg = rainsynth.SynthConfig(**{**asdict(base), "rng_seed": int(s)})
        rendered, mask, specs = rainsynth.generate_drops(img, cfg)
        imgcore.write_gray(out / f"{path.stem}.png", rendered)
        imgcore.write_mask(out / f"{path.stem}_mask.png", mask)
        (out / f"{path.stem}.json").write_text(rainsynth.specs_to_json(specs, cfg))
    _write_run(out, a, {"synth": base.to_json(), "images": len(images)})


def _cmd_ingest(a):
    manifests = _dataset(_need_input(a))
    out = _out_dir(a)
    size = _resize(a)
    summary = []
    for m in manifests:
        seq = dataio.load_sequence(m)  # validates every frame decodes and sizes agree
        h, w = seq.shape
        masks = dataio.propagate_labels(m, w, h)
        seq_dir = out / m.sequence_id
        for path, mask in zip(m.frame_paths, masks):
            if size:
                mask = imgcore.resize_nearest(mask, *size)
            imgcore.write_mask(seq_dir / f"{path.stem}_mask.png", mask)
        summary.append({"sequence_id": m.sequence_id, "frames": len(m.frame_paths),
                        "keyframes": sorted(m.keyframe_annotations), "has_drops": m.has_drops})
        print(f"{m.sequence_id}: {len(masks)} masks")
    (out / "ingest.json").write_text(evalkit.dumps_fixed({"sequences": summary}))
    _write_run(out, a, {"sequences": len(manifests)})


def _cmd_eval_roc(a):
    params = _detector_params(a)
    manifests = _dataset(_need_input(a))
    size = _resize(a)
    out = _out_dir(a)
    curve = evalkit.roc_sweep(manifests, evalkit.gradient_sweeper(params, a.threads),
                              evalkit.TB_SWEEP, resize=size)
    evalkit.write_roc_csv(out / "roc_gradient.csv", curve)
    evalkit.write_metrics_csv(out / "metrics_gradient.csv", curve.records)
    summary = {"auc_gradient": evalkit.auc(curve), "sequences": len(manifests)}
    extra = {"detector": params.to_dict(), "t_b_sweep": list(evalkit.TB_SWEEP)}
    if a.ncc:
        ncc = _ncc_params(a)
        nc = evalkit.roc_sweep(manifests, evalkit.ncc_sweeper(ncc), evalkit.TC_SWEEP, resize=size)
        evalkit.write_roc_csv(out / "roc_ncc.csv", nc)
        evalkit.write_metrics_csv(out / "metrics_ncc.csv", nc.records)
        summary["auc_ncc"] = evalkit.auc(nc)
        extra.update(ncc=ncc.to_dict(), t_c_sweep=list(evalkit.TC_SWEEP))
    evalkit.write_summary_json(out / "summary.json", summary)
    print(" ".join(f"{k}={v:.6f}" for k, v in summary.items() if isinstance(v, float)))
    _write_run(out, a, extra)


def _seg_pairs_from_dirs(pred_dir, gt_dir, size):
    preds = sorted(p for p in Path(pred_dir).iterdir() if p.suffix.lower() in dataio.IMAGE_SUFFIXES)
    if not preds:
        raise RaindetError(f"{pred_dir}: no mask images found")
    for p in preds:
        g = Path(gt_dir) / p.name
        pm, gm = imgcore.read_mask(p), imgcore.read_mask(g)
        if size:
            pm, gm = imgcore.resize_nearest(pm, *size), imgcore.resize_nearest(gm, *size)
        yield p.stem, pm, gm


def _seg_pairs_from_dataset(manifests, params, size, threads):
    for m in manifests:
        seq = dataio.load_sequence(m, size)
        h, w = seq.shape
        nat = imgcore.read_gray(m.frame_paths[-1]).shape
        gt = dataio.propagate_labels(m, nat[1], nat[0])[-1]
        if size:
            gt = imgcore.resize_nearest(gt, w, h)
        yield m.sequence_id, segment(seq, params, threads), gt


def _cmd_eval_seg(a):
    src = _need_input(a)
    size = _resize(a)
    params = _detector_params(a)
    if a.gt:
        pairs = _seg_pairs_from_dirs(src, a.gt, size)
    else:
        pairs = _seg_pairs_from_dataset(_dataset(src), params, size, a.threads)
    out = _out_dir(a)
    rows, counts = [], []
    for name, pred, gt in pairs:
        s = evalkit.seg_scores(pred, gt)
        i, u = evalkit.overlap_counts(pred, gt)
        rows.append((name, s, i, u))
        counts.append((i, u))
    with open(out / "seg_scores.csv", "w") as fh:
        fh.write("name,iou,dice,accuracy,intersection,area_sum\n")
        for name, s, i, u in rows:
            fh.write(f"{name},{s.iou:.6f},{s.dice:.6f},{s.accuracy:.6f},{i},{u}\n")
    summary = {
        "count": len(rows),
        "mean_iou": float(np.mean([r[1].iou for r in rows])),
        "mean_dice": float(np.mean([r[1].dice for r in rows])),
        "mean_accuracy": float(np.mean([r[1].accuracy for r in rows])),
        "accumulated_dice": evalkit.accumulated_dice(counts, a.dice_style),
        "dice_style": a.dice_style,
    }
    evalkit.write_summary_json(out / "summary.json", summary)
    print(" ".join(f"{k}={v:.6f}" for k, v in summary.items() if isinstance(v, float)))
    extra = {"dice_style": a.dice_style, "gt": a.gt}
    if not a.gt:
        extra["detector"] = params.to_dict()
    _write_run(out, a, extra)


def _cmd_bench(a):
    if a.input:
        seq = dataio.load_sequence(_sequence_manifest(_need_input(a)), _resize(a))
    else:
        w, h = _resize(a) or (640, 480)
        seq = rainsynth.moving_noise_sequence(w, h, 10, 2, seed=a.seed).sequence
    if a.repeats < 1:
        raise ParameterError("--repeats must be >= 1")
    out = _out_dir(a)
    params, ncc = _detector_params(a), _ncc_params(a)
    report = evalkit.bench_pipeline(seq, params, ncc, a.repeats)
    (out / "bench.json").write_text(evalkit.dumps_fixed(report))
    print(f"gradient={report['gradient_median_s']:.6f}s ncc={report['ncc_median_s']:.6f}s")
    _write_run(out, a, {"detector": params.to_dict(), "ncc": ncc.to_dict(), "repeats": a.repeats})


COMMANDS = {
    "detect": _cmd_detect,
    "segment": lambda a: _cmd_detect(a, segment_only=True),
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "eval-roc": _cmd_eval_roc,
    "eval-seg": _cmd_eval_seg,
    "bench": _cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)  # exits with status 2 on bad flags
    if a.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        COMMANDS[a.command](a)
    except ParameterError as exc:
        print(f"raindet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _OutputError as exc:
        print(f"raindet: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    except (RaindetError, json.JSONDecodeError) as exc:
        print(f"raindet: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"raindet: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
