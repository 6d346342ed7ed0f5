"""Single `texpipe` executable exposing the pipeline as subcommands.

Exit codes partition failures: 0 success, 1 usage (bad flags, bad config),
2 data (malformed or inconsistent inputs). Diagnostics go to stderr;
results go to files or stdout. Every subcommand is a thin adapter over the
library: identical parameters produce byte-identical outputs.

Settings resolve as flags > config file > defaults. Config files are flat
`key = value` lines (# comments allowed); known keys and their types are
listed in KEY_TYPES.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import atlas as atlas_mod
from . import augment as augment_mod
from . import metrics as metrics_mod
from . import probe as probe_mod
from . import relevance as relevance_mod
from . import render as render_mod
from .correspondence import Frame, read_frame_png, read_iuv, read_mask_png, write_frame_png
from .errors import BadConfigSyntax, DataError, UnknownKey, UsageError

KEY_TYPES = {
    "seed": int,
    "k": int,
    "kappa": float,
    "a": float,
    "jobs": int,
    "threshold": float,
    "steps": int,
    "batch_size": int,
    "lr": float,
    "pairs": int,
}

DEFAULTS = {
    "seed": 0,
    "k": augment_mod.DEFAULT_SOURCES_PER_VIDEO,
    "kappa": metrics_mod.DEFAULT_KAPPA,
    "a": None,
    "jobs": 1,
    "threshold": 0.5,
    "steps": 5000,
    "batch_size": 32,
    "lr": 0.1,
    "pairs": 2,
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exceptions, not exit(2)."""

    def error(self, message):
        raise UsageError(message)


def parse_config_file(path) -> dict:
    """Flat key = value lines; unknown keys and untypable values are rejected."""
    settings = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BadConfigSyntax(f"{path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise BadConfigSyntax(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEY_TYPES:
            raise UnknownKey(f"{path}:{lineno}: unknown key {key!r}")
        try:
            settings[key] = KEY_TYPES[key](value)
        except ValueError as exc:
            raise BadConfigSyntax(
                f"{path}:{lineno}: value {value!r} for {key} is not {KEY_TYPES[key].__name__}"
            ) from exc
    return settings


def validate_config(args) -> dict:
    """Normalized settings: defaults, then config file, then explicit flags."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(parse_config_file(args.config))
    for key in KEY_TYPES:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            settings[key] = flag_value
    if getattr(args, "verbose", False):
        for key in sorted(settings):
            print(f"setting {key} = {settings[key]}", file=sys.stderr)
    return settings


# -- subcommand implementations ---------------------------------------------------

def _sorted_files(directory, pattern) -> list:
    d = Path(directory)
    if not d.is_dir():
        raise DataError(f"not a directory: {directory}")
    return sorted(d.glob(pattern))


def cmd_atlas_extract(args, settings) -> int:
    frames = _sorted_files(args.frames_dir, "*.png")
    maps = _sorted_files(args.iuv_dir, "*.iuv")
    if len(frames) != len(maps):
        raise DataError(f"{len(frames)} frames vs {len(maps)} correspondence maps")
    if not frames:
        raise DataError("no input frames found")
    acc = atlas_mod.TextureAtlasAccumulator.empty()
    for frame_path, iuv_path in zip(frames, maps):
        atlas_mod.accumulate(acc, read_frame_png(frame_path), read_iuv(iuv_path.read_bytes()))
    Path(args.out).write_bytes(atlas_mod.accumulator_to_bytes(acc))
    print(f"accumulated {len(frames)} frames into {args.out}", file=sys.stderr)
    return 0


def _load_accumulator(path):
    return atlas_mod.accumulator_from_bytes(Path(path).read_bytes())


def cmd_atlas_show(args, settings) -> int:
    acc = _load_accumulator(args.atlas)
    atl = atlas_mod.finalize(acc)
    write_frame_png(atlas_mod.to_grid_image(atl), args.out)
    if args.occ:
        Path(args.occ).write_bytes(atlas_mod.occupancy_to_bytes(atl.occupied))
    if args.stack:
        stack = render_mod.atlas_feature_stack(atl)
        grid = render_mod.appearance_stack_to_grid(stack)
        from PIL import Image
        Image.fromarray(grid, mode="L").save(args.stack, format="PNG")
    for part, fraction in enumerate(atlas_mod.coverage(acc), start=1):
        print(f"part {part} {fraction:.6f}")
    return 0


def cmd_atlas_inpaint(args, settings) -> int:
    acc = _load_accumulator(args.atlas)
    atl = atlas_mod.inpaint(atlas_mod.finalize(acc))
    write_frame_png(atlas_mod.to_grid_image(atl), args.out_png)
    Path(args.out_occ).write_bytes(atlas_mod.occupancy_to_bytes(atl.occupied))
    return 0


def _load_finalized_atlas(png_path, occ_path):
    frame = read_frame_png(png_path)
    occupied = atlas_mod.occupancy_from_bytes(Path(occ_path).read_bytes())
    return atlas_mod.atlas_from_grid(frame, occupied)


def cmd_rerender(args, settings) -> int:
    frame = read_frame_png(args.frame)
    m = read_iuv(Path(args.iuv).read_bytes())
    atl = _load_finalized_atlas(args.atlas_png, args.atlas_occ)
    write_frame_png(render_mod.rerender(frame, m, atl), args.out)
    return 0


def cmd_iuv_render(args, settings) -> int:
    m = read_iuv(Path(args.iuv).read_bytes())
    if args.frame:
        out = render_mod.replace_human_regions(read_frame_png(args.frame), m)
    else:
        out = render_mod.render_iuv_rgb(m)
    write_frame_png(out, args.out)
    return 0


def cmd_six_channel(args, settings) -> int:
    frame = read_frame_png(args.frame)
    m = read_iuv(Path(args.iuv).read_bytes())
    six = render_mod.assemble_six_channel(frame, m)
    write_frame_png(Frame(six.channels[:, :, :3].copy()), args.out_rgb)
    write_frame_png(Frame(six.channels[:, :, 3:].copy()), args.out_iuv)
    line = json.dumps({
        "rgb": str(args.out_rgb),
        "iuv": str(args.out_iuv),
        "width": six.width,
        "height": six.height,
    })
    with open(args.manifest, "a") as fh:
        fh.write(line + "\n")
    return 0


def _load_manifest(args):
    manifest = augment_mod.read_manifest(args.manifest)
    if getattr(args, "exclude_file", None):
        classes = {
            line.strip()
            for line in Path(args.exclude_file).read_text().splitlines()
            if line.strip()
        }
        manifest = augment_mod.mark_excluded_classes(manifest, classes)
    return manifest


def cmd_augment_plan(args, settings) -> int:
    manifest = _load_manifest(args)
    plan = augment_mod.build_pairing(manifest, seed=settings["seed"], k=settings["k"])
    augment_mod.write_pairing_plan(plan, args.out)
    print(f"planned {augment_mod.expanded_count(manifest, plan)} clips "
          f"({len(manifest)} originals)", file=sys.stderr)
    if args.batches:
        batches = augment_mod.make_batches(plan, seed=settings["seed"],
                                           pairs_per_batch=settings["pairs"])
        augment_mod.write_batch_plan(batches, args.batches)
        if batches.dropped:
            print(f"dropped trailing pair: {batches.dropped[0][1]}", file=sys.stderr)
    return 0


def cmd_augment_run(args, settings) -> int:
    manifest = _load_manifest(args)
    plan = augment_mod.read_pairing_plan(args.plan)
    report = augment_mod.run_rerender_job(manifest, plan, args.out, jobs=settings["jobs"])
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n")
    print(report.to_json())
    return 0


def cmd_eval_gps(args, settings) -> int:
    errors = metrics_mod.read_error_set(Path(args.errors).read_text())
    thresholds = [settings["a"]] if settings["a"] is not None else list(metrics_mod.DEFAULT_AUC_THRESHOLDS)
    for a in thresholds:
        print(f"AUC_{a:.2f} {metrics_mod.auc(errors, a):.4f}")
    params = metrics_mod.GpsParams(settings["kappa"])
    mean_score = float(np.mean([metrics_mod.gps_score(e, params) for e in errors]))
    print(f"GPS_mean {mean_score:.4f}")
    return 0


def cmd_eval_iou(args, settings) -> int:
    if args.pred_dir or args.gt_dir:
        if not (args.pred_dir and args.gt_dir):
            raise UsageError("--pred-dir and --gt-dir must be given together")
        preds = _sorted_files(args.pred_dir, "*.png")
        gts = _sorted_files(args.gt_dir, "*.png")
        if len(preds) != len(gts) or not preds:
            raise DataError(f"{len(preds)} predictions vs {len(gts)} ground truths")
        ious = []
        for p, g in zip(preds, gts):
            value = metrics_mod.iou(read_mask_png(p), read_mask_png(g))
            ious.append(value)
            print(f"IoU {p.name} {value:.4f}")
        print(f"AP_r {metrics_mod.ap_r(ious):.4f}")
        print(f"PCP@{settings['threshold']:g} {metrics_mod.pcp(ious, settings['threshold']):.4f}")
    else:
        if not (args.pred and args.gt):
            raise UsageError("eval-iou needs --pred/--gt or --pred-dir/--gt-dir")
        value = metrics_mod.iou(read_mask_png(args.pred), read_mask_png(args.gt))
        print(f"IoU {value:.4f}")
    return 0


def cmd_relevance(args, settings) -> int:
    counts = np.loadtxt(args.joint, delimiter=",", dtype=np.int64, ndmin=2)
    joint = relevance_mod.CategoricalJoint(counts)
    print(f"IG {relevance_mod.information_gain(joint):.6f} bits")
    print(f"MI {relevance_mod.mutual_information(joint):.6f} bits")
    return 0


def cmd_probe(args, settings) -> int:
    features = probe_mod.matrix_from_bytes(Path(args.features).read_bytes())
    labels = probe_mod.read_labels(Path(args.labels).read_text())
    if labels.shape[0] != features.shape[0]:
        raise DataError(f"{features.shape[0]} feature rows vs {labels.shape[0]} labels")
    config = probe_mod.TrainConfig(
        steps=settings["steps"],
        batch_size=settings["batch_size"],
        learning_rate=settings["lr"],
        seed=settings["seed"],
    )
    trace = probe_mod.train_probe(features, labels, config)
    Path(args.out).write_text(trace.to_csv())
    print(f"final_loss {trace.final_loss:.6f}")
    print(f"final_accuracy {trace.final_accuracy:.6f}")
    return 0


# -- parser wiring ------------------------------------------------------------------

def build_parser() -> _Parser:
    # SUPPRESS keeps subparser defaults from clobbering values already
    # parsed at the top level (texpipe --verbose SUBCOMMAND ...)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="flat key=value settings file")
    common.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="echo normalized settings")

    parser = _Parser(prog="texpipe", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    p = sub.add_parser("atlas-extract", parents=[common],
                       help="accumulate frames into an ATL1 texture accumulator")
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--iuv-dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_atlas_extract)

    p = sub.add_parser("atlas-show", parents=[common],
                       help="finalize an accumulator to the 1200x800 grid PNG")
    p.add_argument("--atlas", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--occ", help="also write the OCC1 occupancy sidecar")
    p.add_argument("--stack", help="also write the 24-channel luminance grid PNG")
    p.set_defaults(func=cmd_atlas_show)

    p = sub.add_parser("atlas-inpaint", parents=[common],
                       help="finalize, inpaint, and write grid PNG + occupancy")
    p.add_argument("--atlas", required=True)
    p.add_argument("--out-png", required=True)
    p.add_argument("--out-occ", required=True)
    p.set_defaults(func=cmd_atlas_inpaint)

    p = sub.add_parser("rerender", parents=[common],
                       help="replace human pixels from an inpainted atlas")
    p.add_argument("--frame", required=True)
    p.add_argument("--iuv", required=True)
    p.add_argument("--atlas-png", required=True)
    p.add_argument("--atlas-occ", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerender)

    p = sub.add_parser("iuv-render", parents=[common],
                       help="false-color a correspondence map (optionally into a frame)")
    p.add_argument("--iuv", required=True)
    p.add_argument("--frame", help="composite over this frame's background")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_iuv_render)

    p = sub.add_parser("six-channel", parents=[common],
                       help="write RGB + IUV PNG pair and append a binding manifest line")
    p.add_argument("--frame", required=True)
    p.add_argument("--iuv", required=True)
    p.add_argument("--out-rgb", required=True)
    p.add_argument("--out-iuv", required=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_six_channel)

    p = sub.add_parser("augment-plan", parents=[common],
                       help="build the texture-source pairing plan (and batches)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batches", help="also write a paired-batch plan here")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--exclude-file", help="file of class names to exclude")
    p.set_defaults(func=cmd_augment_plan)

    p = sub.add_parser("augment-run", parents=[common],
                       help="execute the re-render job for a pairing plan")
    p.add_argument("--manifest", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int)
    p.add_argument("--report", help="also write the JSON report here")
    p.add_argument("--exclude-file", help="file of class names to exclude")
    p.set_defaults(func=cmd_augment_run)

    p = sub.add_parser("eval-gps", parents=[common],
                       help="AUC of the correct-point curve plus mean GPS score")
    p.add_argument("--errors", required=True, help="one geodesic error (meters) per line")
    p.add_argument("--a", type=float)
    p.add_argument("--kappa", type=float)
    p.set_defaults(func=cmd_eval_gps)

    p = sub.add_parser("eval-iou", parents=[common],
                       help="IoU of mask PNGs; directories add AP_r and PCP")
    p.add_argument("--pred")
    p.add_argument("--gt")
    p.add_argument("--pred-dir")
    p.add_argument("--gt-dir")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_eval_iou)

    p = sub.add_parser("relevance", parents=[common],
                       help="information gain and mutual information of a CSV count table")
    p.add_argument("--joint", required=True, help="CSV, rows = values, columns = labels")
    p.set_defaults(func=cmd_relevance)

    p = sub.add_parser("probe", parents=[common],
                       help="train the softmax probe on MTX1 features")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True, help="training trace CSV")
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_probe)

    return parser


def dispatch(argv) -> int:
    """Run one invocation; returns the process exit code."""
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        settings = validate_config(args)
        return args.func(args, settings)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
