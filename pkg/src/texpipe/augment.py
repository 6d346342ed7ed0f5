"""Dataset-level orchestration: pairing plans, batch plans, re-render jobs.

Every video in a manifest is assigned k texture-source videos (default 9,
giving the x10 dataset expansion: each clip plus its k re-rendered
variants). Sampling is driven by the documented SplitMix64 generator so a
(manifest, seed) pair always reproduces the same plan, batches, and output
bytes, regardless of worker count.

File formats, all JSON lines:
    manifest: {"id", "class", "frame_dir", "iuv_dir", "excluded"?} per video;
        directories are resolved relative to the manifest file and scanned
        in sorted order (frames *.png, maps *.iuv).
    pairing plan: header {"kind": "pairing", "seed", "k"}, then
        {"target", "sources"} per video (excluded targets keep []).
    batch plan: header {"kind": "batches", "seed", "dropped"}, then
        {"pairs": [[orig, variant], [orig, variant]]} per batch.

Re-render outputs land under <out>/<targetId>/v<i>/<frameIndex>.png with
frame indices zero-padded to four digits.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from PIL import Image

from . import atlas as atlas_mod
from .correspondence import read_frame_png, read_iuv, write_frame_png
from .errors import (
    DataError,
    MissingInput,
    NotEnoughPairs,
    NotEnoughSources,
    WriteFailure,
)
from .render import rerender
from .rng import SplitMix64

DEFAULT_SOURCES_PER_VIDEO = 9

# Classes whose identity lives in facial detail that part textures cannot
# carry; flagging them bars the class from both target and source roles.
FACE_CENTRIC_CLASSES = frozenset({
    "brush_hair", "chew", "eat", "drink", "dribble",
    "kiss", "laugh", "smile", "smoke", "talk",
})


@dataclass(frozen=True)
class VideoRecord:
    id: str
    class_label: str
    frame_paths: tuple = ()
    iuv_paths: tuple = ()
    excluded: bool = False

    def __post_init__(self):
        object.__setattr__(self, "frame_paths", tuple(str(p) for p in self.frame_paths))
        object.__setattr__(self, "iuv_paths", tuple(str(p) for p in self.iuv_paths))
        if len(self.frame_paths) != len(self.iuv_paths):
            raise MissingInput(
                f"video {self.id}: {len(self.frame_paths)} frames vs {len(self.iuv_paths)} maps"
            )


@dataclass(frozen=True)
class PairingPlan:
    """Ordered target -> texture-source assignment; excluded targets keep []."""

    targets: dict            # id -> list of source ids, manifest order
    seed: int
    k: int


@dataclass(frozen=True)
class BatchPlan:
    """Batches of two (original, variant) pairs; four clips per batch."""

    batches: tuple           # ((orig, variant), (orig, variant)) per batch
    dropped: tuple           # trailing odd pair, if any
    seed: int


def variant_id(target_id: str, index: int) -> str:
    """Stable id of a re-rendered variant; index is 1-based."""
    return f"{target_id}/v{index}"


def mark_excluded_classes(manifest, class_names=FACE_CENTRIC_CLASSES):
    """Copy of the manifest with records of the given classes flagged excluded."""
    return [
        replace(r, excluded=True) if r.class_label in class_names else r
        for r in manifest
    ]


def build_pairing(manifest, seed: int, k: int = DEFAULT_SOURCES_PER_VIDEO) -> PairingPlan:
    """Assign k distinct non-excluded source videos to each non-excluded target.

    Sources are a seeded Fisher-Yates prefix of the eligible candidates in
    manifest order; the same (manifest, seed, k) always yields the same plan.
    """
    eligible = [r.id for r in manifest if not r.excluded]
    if len(eligible) < k + 1:
        raise NotEnoughSources(
            f"need at least {k + 1} non-excluded videos for k={k}, have {len(eligible)}"
        )
    position = {vid: i for i, vid in enumerate(eligible)}
    rng = SplitMix64(seed)
    targets = {}
    for record in manifest:
        if record.excluded:
            targets[record.id] = []
            continue
        # eligible candidates in manifest order, minus the target itself
        pos = position[record.id]
        candidates = eligible[:pos] + eligible[pos + 1:]
        targets[record.id] = rng.sample_prefix(candidates, k)
    return PairingPlan(targets=targets, seed=seed, k=k)


def expanded_count(manifest, plan: PairingPlan) -> int:
    """Clip count after augmentation: originals plus every planned variant."""
    return len(manifest) + sum(len(s) for s in plan.targets.values())


def make_batches(plan: PairingPlan, seed: int, pairs_per_batch: int = 2) -> BatchPlan:
    """Shuffle all (original, variant) pairs and group them into batches.

    Two pairs per batch by default (four clips). Trailing pairs that cannot
    fill a batch are dropped and reported in the plan.
    """
    if pairs_per_batch < 1:
        raise ValueError("pairs_per_batch must be >= 1")
    pairs = [
        (target, variant_id(target, i))
        for target, sources in plan.targets.items()
        for i in range(1, len(sources) + 1)
    ]
    if len(pairs) < pairs_per_batch:
        raise NotEnoughPairs(
            f"need at least {pairs_per_batch} (original, variant) pairs, have {len(pairs)}"
        )
    shuffled = SplitMix64(seed).shuffle(pairs)
    trailing = len(shuffled) % pairs_per_batch
    dropped = tuple(shuffled[len(shuffled) - trailing:]) if trailing else ()
    usable = shuffled[: len(shuffled) - trailing]
    batches = tuple(
        tuple(usable[i: i + pairs_per_batch])
        for i in range(0, len(usable), pairs_per_batch)
    )
    return BatchPlan(batches=batches, dropped=dropped, seed=seed)


# -- JSONL formats --------------------------------------------------------------

def read_manifest(path) -> list:
    """Load a manifest, resolving frame/iuv directories against its location."""
    path = Path(path)
    base = path.parent
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MissingInput(f"{path}:{lineno}: bad JSON: {exc}") from exc
        frame_dir = base / obj["frame_dir"] if obj.get("frame_dir") else None
        iuv_dir = base / obj["iuv_dir"] if obj.get("iuv_dir") else None
        frames = sorted(str(p) for p in frame_dir.glob("*.png")) if frame_dir and frame_dir.is_dir() else []
        iuvs = sorted(str(p) for p in iuv_dir.glob("*.iuv")) if iuv_dir and iuv_dir.is_dir() else []
        records.append(VideoRecord(
            id=str(obj["id"]),
            class_label=str(obj["class"]),
            frame_paths=frames,
            iuv_paths=iuvs,
            excluded=bool(obj.get("excluded", False)),
        ))
    return records


def write_pairing_plan(plan: PairingPlan, path) -> None:
    lines = [json.dumps({"kind": "pairing", "seed": plan.seed, "k": plan.k})]
    for target, sources in plan.targets.items():
        lines.append(json.dumps({"target": target, "sources": list(sources)}))
    Path(path).write_text("\n".join(lines) + "\n")


def read_pairing_plan(path) -> PairingPlan:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise MissingInput(f"{path}: empty plan file")
    header = json.loads(lines[0])
    if header.get("kind") != "pairing":
        raise MissingInput(f"{path}: not a pairing plan")
    targets = {}
    for line in lines[1:]:
        obj = json.loads(line)
        targets[obj["target"]] = list(obj["sources"])
    return PairingPlan(targets=targets, seed=int(header["seed"]), k=int(header["k"]))


def write_batch_plan(plan: BatchPlan, path) -> None:
    lines = [json.dumps({
        "kind": "batches",
        "seed": plan.seed,
        "dropped": [list(p) for p in plan.dropped],
    })]
    for first, second in plan.batches:
        lines.append(json.dumps({"pairs": [list(first), list(second)]}))
    Path(path).write_text("\n".join(lines) + "\n")


def read_batch_plan(path) -> BatchPlan:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise MissingInput(f"{path}: empty batch file")
    header = json.loads(lines[0])
    if header.get("kind") != "batches":
        raise MissingInput(f"{path}: not a batch plan")
    batches = []
    for line in lines[1:]:
        first, second = json.loads(line)["pairs"]
        batches.append((tuple(first), tuple(second)))
    return BatchPlan(
        batches=tuple(batches),
        dropped=tuple(tuple(p) for p in header.get("dropped", [])),
        seed=int(header["seed"]),
    )


# -- the re-render job -----------------------------------------------------------

@dataclass
class JobReport:
    items_total: int = 0
    items_rendered: int = 0
    items_skipped: int = 0
    frames_written: int = 0
    frames_skipped: int = 0
    failures: list = field(default_factory=list)   # {"target", "variant", "error"}
    coverage: dict = field(default_factory=dict)   # source id -> 24 fractions

    def to_json(self) -> str:
        return json.dumps({
            "items_total": self.items_total,
            "items_rendered": self.items_rendered,
            "items_skipped": self.items_skipped,
            "frames_written": self.frames_written,
            "frames_skipped": self.frames_skipped,
            "failures": self.failures,
            "coverage": self.coverage,
        }, indent=2, sort_keys=True)


def _build_source_atlas(record: VideoRecord, report: JobReport):
    if not record.frame_paths:
        raise MissingInput(f"source {record.id}: no frames on disk")
    acc = atlas_mod.TextureAtlasAccumulator.empty()
    for frame_path, iuv_path in zip(record.frame_paths, record.iuv_paths):
        try:
            frame = read_frame_png(frame_path)
            m = read_iuv(Path(iuv_path).read_bytes())
            atlas_mod.accumulate(acc, frame, m)
        except MissingInput:
            raise
        except (OSError, ValueError, DataError) as exc:
            raise MissingInput(f"source {record.id}: {exc}") from exc
    report.coverage[record.id] = [float(c) for c in atlas_mod.coverage(acc)]
    return atlas_mod.inpaint(atlas_mod.finalize(acc))


def _output_is_complete(path: Path, height: int, width: int) -> bool:
    """An already-written frame counts as done when it decodes to the right shape."""
    if not path.is_file():
        return False
    try:
        with Image.open(path) as im:
            return im.size == (width, height) and im.mode in ("RGB", "P", "L")
    except OSError:
        return False


def _render_item(target: VideoRecord, index: int, source_atlas, out_root: Path):
    out_dir = Path(out_root) / target.id / f"v{index}"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = skipped = 0
    if not target.frame_paths:
        raise MissingInput(f"target {target.id}: no frames on disk")
    for frame_idx, (frame_path, iuv_path) in enumerate(zip(target.frame_paths, target.iuv_paths)):
        try:
            frame = read_frame_png(frame_path)
            m = read_iuv(Path(iuv_path).read_bytes())
        except (OSError, ValueError, DataError) as exc:
            raise MissingInput(f"target {target.id}: {exc}") from exc
        out_path = out_dir / f"{frame_idx:04d}.png"
        if _output_is_complete(out_path, frame.height, frame.width):
            skipped += 1
            continue
        rendered = rerender(frame, m, source_atlas)
        try:
            write_frame_png(rendered, out_path)
        except OSError as exc:
            raise WriteFailure(f"{out_path}: {exc}") from exc
        written += 1
    return written, skipped


def run_rerender_job(manifest, plan: PairingPlan, out_root, jobs: int = 1) -> JobReport:
    """Re-render every planned (target, source) item under out_root.

    Output bytes are a pure function of (manifest contents, plan): items are
    independent files, so worker count and completion order never change
    results. Items whose outputs already decode completely are skipped, and
    per-item failures are collected while the job continues.
    """
    records = {r.id: r for r in manifest}
    out_root = Path(out_root)
    report = JobReport()

    items = []
    for target_id, sources in plan.targets.items():
        for index, source_id in enumerate(sources, start=1):
            items.append((target_id, index, source_id))
    report.items_total = len(items)
    if not items:
        return report

    source_ids = []
    for _, _, source_id in items:
        if source_id not in source_ids:
            source_ids.append(source_id)

    atlases = {}
    source_errors = {}

    def build(source_id):
        record = records.get(source_id)
        if record is None:
            raise MissingInput(f"source {source_id}: not in manifest")
        return _build_source_atlas(record, report)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {sid: pool.submit(build, sid) for sid in source_ids}
        for sid, fut in futures.items():
            try:
                atlases[sid] = fut.result()
            except (MissingInput, WriteFailure) as exc:
                source_errors[sid] = str(exc)

    def render(item):
        target_id, index, source_id = item
        if source_id in source_errors:
            raise MissingInput(source_errors[source_id])
        target = records.get(target_id)
        if target is None:
            raise MissingInput(f"target {target_id}: not in manifest")
        return _render_item(target, index, atlases[source_id], out_root)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [(item, pool.submit(render, item)) for item in items]
        for (target_id, index, _), fut in futures:
            try:
                written, skipped = fut.result()
            except (MissingInput, WriteFailure) as exc:
                report.failures.append({
                    "target": target_id,
                    "variant": variant_id(target_id, index),
                    "error": str(exc),
                })
                continue
            report.frames_written += written
            report.frames_skipped += skipped
            if written == 0 and skipped > 0:
                report.items_skipped += 1
            else:
                report.items_rendered += 1

    report.failures.sort(key=lambda f: (f["target"], f["variant"]))
    return report
