#!/usr/bin/env python3
"""End-to-end demo on synthetic media.

Generates a handful of tiny videos (PNG frames plus IUV correspondence
maps), then drives the whole pipeline: texture accumulation, inpainting,
grid rendering, pairing plan, batch plan, and the re-render job. Everything
lands under --workdir so the outputs can be inspected.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from texpipe import atlas as tpa
from texpipe import augment as aug
from texpipe.correspondence import map_from_fractions, Frame, write_frame_png, write_iuv


def synth_video(rng, root, vid, frames=4, size=48):
    """A colored blob wobbling over a dark background, with matching IUV."""
    frame_dir = root / "media" / vid / "frames"
    iuv_dir = root / "media" / vid / "iuv"
    frame_dir.mkdir(parents=True, exist_ok=True)
    iuv_dir.mkdir(parents=True, exist_ok=True)
    base_color = rng.integers(60, 255, size=3)
    for t in range(frames):
        pixels = np.zeros((size, size, 3), np.uint8)
        pixels[:] = (10, 10, 20)
        cx = size // 2 + int(6 * np.sin(t))
        cy = size // 2 + int(4 * np.cos(t))
        yy, xx = np.mgrid[0:size, 0:size]
        blob = (xx - cx) ** 2 + (yy - cy) ** 2 < (size // 4) ** 2
        shade = (base_color[None, None, :] * (0.6 + 0.4 * yy[..., None] / size)).astype(np.uint8)
        pixels[blob] = shade[blob]

        part = np.zeros((size, size), np.uint8)
        part[blob] = 1 + (t % 3)
        u = xx / (size - 1)
        v = yy / (size - 1)
        m = map_from_fractions(part, u, v)
        write_frame_png(Frame(pixels), frame_dir / f"{t:02d}.png")
        (iuv_dir / f"{t:02d}.iuv").write_bytes(write_iuv(m))
    return {"id": vid, "class": "wobble", "frame_dir": f"media/{vid}/frames",
            "iuv_dir": f"media/{vid}/iuv"}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="demo_out")
    ap.add_argument("--videos", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--jobs", type=int, default=2)
    args = ap.parse_args(argv)

    root = Path(args.workdir)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    records = [synth_video(rng, root, f"vid{i}") for i in range(args.videos)]
    manifest_path = root / "manifest.jsonl"
    manifest_path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    manifest = aug.read_manifest(manifest_path)
    print(f"wrote {len(manifest)} synthetic videos under {root / 'media'}")

    # one atlas for show: first video
    acc = tpa.TextureAtlasAccumulator.empty()
    from texpipe.correspondence import read_frame_png, read_iuv
    for fp, ip in zip(manifest[0].frame_paths, manifest[0].iuv_paths):
        tpa.accumulate(acc, read_frame_png(fp), read_iuv(Path(ip).read_bytes()))
    print("vid0 coverage (nonzero parts):",
          {i + 1: round(float(c), 5) for i, c in enumerate(tpa.coverage(acc)) if c > 0})
    atlas = tpa.inpaint(tpa.finalize(acc))
    write_frame_png(tpa.to_grid_image(atlas), root / "vid0_atlas.png")
    (root / "vid0_atlas.occ1").write_bytes(tpa.occupancy_to_bytes(atlas.occupied))
    print(f"atlas grid written to {root / 'vid0_atlas.png'}")

    plan = aug.build_pairing(manifest, seed=args.seed, k=args.k)
    aug.write_pairing_plan(plan, root / "plan.jsonl")
    batches = aug.make_batches(plan, seed=args.seed)
    aug.write_batch_plan(batches, root / "batches.jsonl")
    print(f"pairing plan: {aug.expanded_count(manifest, plan)} clips after expansion; "
          f"{len(batches.batches)} batches, {len(batches.dropped)} dropped pair(s)")

    report = aug.run_rerender_job(manifest, plan, root / "rerendered", jobs=args.jobs)
    print(f"re-render job: {report.items_rendered} items rendered, "
          f"{report.frames_written} frames written, {len(report.failures)} failures")
    (root / "report.json").write_text(report.to_json() + "\n")
    print(f"job report written to {root / 'report.json'}")


if __name__ == "__main__":
    main()
