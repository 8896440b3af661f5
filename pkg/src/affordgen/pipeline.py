"""End-to-end pipeline: generate scenes, render, label, mix, evaluate, viz.

Scene jobs are independent and deterministic per (config, scene index), so
runs are reproducible byte-for-byte and worker count never changes outputs.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .affordance import (
    InstructionSample,
    draw_prompt,
    free_space_from_rerender,
    prompt_pixels,
    prompts_for_refs,
    sample_points_in_mask,
)
from .assets import AssetRepository, build_fixture, default_repository
from .camera import Camera
from .datamix import MixSpec, assemble_mix, convert_detection, passthrough_vqa
from .errors import DataError, GenerationError, LabelError, PredictionParseError
from .evalkit import EvalReport, evaluate, load_benchmark, load_predictions, parse_points
from .points import format_points, point_to_pixel
from .procgen import GenConfig, camera_validity, generate_layout, place_objects, sample_cameras
from .raster import (
    Mask,
    instance_mask,
    load_mask_png,
    load_rgb_png,
    rasterize,
    save_depth_png,
    save_instance_png,
    save_mask_png,
    save_rgb_png,
)
from .relations import RelationConfig
from .scene import Scene, scene_from_json, scene_to_json
from .seeding import stream
from .templates import (
    OBJECT_REF,
    SPACE_REF,
    default_template_table,
    instantiate_template,
    load_template_table,
    validate_template_table,
)

log = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1


@dataclass
class PipelineConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    relations: RelationConfig = field(default_factory=RelationConfig)
    mix: MixSpec = field(default_factory=MixSpec)
    points_per_sample: tuple[int, int] = (4, 10)
    prompt_stroke: int = 2
    space_ref_enabled: bool = True
    assets_dir: str | None = None
    templates_path: str | None = None
    sources: dict = field(default_factory=dict)  # mix inputs: synthetic/vqa/detection paths
    out_dir: str = "out"
    workers: int = 1

    def __post_init__(self):
        lo, hi = self.points_per_sample
        if not (1 <= lo <= hi <= 50):
            raise DataError("points_per_sample must lie inside [1, 50]")

    @property
    def seed(self) -> int:
        return self.gen.seed

    def to_json(self) -> dict:
        return {
            "version": CONFIG_SCHEMA_VERSION,
            "gen": self.gen.to_json(),
            "relations": self.relations.to_json(),
            "mix": self.mix.to_json(),
            "points_per_sample": list(self.points_per_sample),
            "prompt_stroke": self.prompt_stroke,
            "space_ref_enabled": self.space_ref_enabled,
            "assets_dir": self.assets_dir,
            "templates_path": self.templates_path,
            "sources": self.sources,
            "out_dir": self.out_dir,
            "workers": self.workers,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PipelineConfig":
        if doc.get("version", CONFIG_SCHEMA_VERSION) != CONFIG_SCHEMA_VERSION:
            raise DataError(f"unsupported config version {doc.get('version')!r}")
        return cls(
            gen=GenConfig.from_json(doc["gen"]) if "gen" in doc else GenConfig(),
            relations=RelationConfig.from_json(doc["relations"]) if "relations" in doc else RelationConfig(),
            mix=MixSpec.from_json(doc["mix"]) if "mix" in doc else MixSpec(),
            points_per_sample=tuple(doc.get("points_per_sample", (4, 10))),
            prompt_stroke=doc.get("prompt_stroke", 2),
            space_ref_enabled=doc.get("space_ref_enabled", True),
            assets_dir=doc.get("assets_dir"),
            templates_path=doc.get("templates_path"),
            sources=doc.get("sources", {}),
            out_dir=doc.get("out_dir", "out"),
            workers=doc.get("workers", 1),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def config_hash(self) -> str:
        # out_dir and workers never affect outputs, so they stay out of the hash
        doc = self.to_json()
        doc.pop("out_dir")
        doc.pop("workers")
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()


def _template_table(config: PipelineConfig):
    if config.templates_path:
        return load_template_table(config.templates_path)
    table = default_template_table()
    validate_template_table(table)
    return table


def _repository(config: PipelineConfig) -> AssetRepository:
    if config.assets_dir:
        return AssetRepository.load_dir(config.assets_dir)
    return default_repository()


# ---------------------------------------------------------------------------
# per-scene generation job


def _empty_drops() -> dict:
    return {
        "no_support": 0,
        "free_region_invisible": 0,
        "prompt_occluded": 0,
        "unreferencable": 0,
        "ref_invisible": 0,
    }


def generate_scene(config: PipelineConfig, scene_idx: int, out_dir: str | Path) -> tuple[dict, list[dict]]:
    """Generate, render, and label one scene; returns (summary, sample rows).

    Written artifacts live under out_dir/scenes/scene_{idx:05d}/; sample rows
    reference them by path relative to out_dir.
    """
    cfg = config.gen
    root = cfg.seed
    out_dir = Path(out_dir)
    scene_dir = out_dir / "scenes" / f"scene_{scene_idx:05d}"
    rel_scene = f"scenes/scene_{scene_idx:05d}"
    table = _template_table(config)
    repo = _repository(config)

    summary = {
        "index": scene_idx,
        "dropped": False,
        "reason": None,
        "cameras": 0,
        "pairs": 0,
        "samples": {OBJECT_REF: 0, SPACE_REF: 0},
        "drops": _empty_drops(),
    }

    try:
        scene = generate_layout(cfg, stream(root, "layout", scene_idx))
        scene = place_objects(scene, repo, cfg, stream(root, "objects", scene_idx))
    except GenerationError as exc:
        log.warning("scene %d dropped: %s", scene_idx, exc)
        summary["dropped"] = True
        summary["reason"] = str(exc)
        return summary, []

    cameras = sample_cameras(
        scene,
        lambda s, c: rasterize(s, c, with_rgb=False),
        cfg,
        stream(root, "cameras", scene_idx),
        config.relations,
    )
    if not cameras:
        log.warning("scene %d dropped: no valid camera", scene_idx)
        summary["dropped"] = True
        summary["reason"] = "no valid camera"
        return summary, []

    scene_dir.mkdir(parents=True, exist_ok=True)
    with open(scene_dir / "scene.json", "w", encoding="utf-8") as fh:
        json.dump(scene_to_json(scene), fh, sort_keys=True)

    samples: list[dict] = []
    pmin, pmax = config.points_per_sample
    w, h = cfg.image_size
    for cam_idx, cam in enumerate(cameras):
        fb = rasterize(scene, cam, with_rgb=True)
        ok, visible, tuples = camera_validity(scene, cam, fb, cfg, config.relations, cam_id=cam_idx)
        if not ok:
            continue
        cam_dir = scene_dir / f"cam_{cam_idx:02d}"
        rel_cam = f"{rel_scene}/cam_{cam_idx:02d}"
        (cam_dir / "samples").mkdir(parents=True, exist_ok=True)
        with open(cam_dir / "camera.json", "w", encoding="utf-8") as fh:
            json.dump(cam.to_json(), fh, sort_keys=True)
        save_rgb_png(fb.rgb, cam_dir / "rgb.png")
        save_instance_png(fb.instance_map, cam_dir / "instance.png")
        save_depth_png(fb.depth_map, cam_dir / "depth_mm.png")

        summary["cameras"] += 1
        summary["pairs"] += len(tuples)
        removal_cache: dict[int, object] = {}

        for t_idx, tup in enumerate(tuples):
            rng_t = stream(root, "points", scene_idx, cam_idx, t_idx)
            base_id = f"s{scene_idx:05d}c{cam_idx:02d}t{t_idx:03d}"
            tup_doc = {
                "subject": tup.subject,
                "relation": tup.relation.name,
                "refs": list(tup.refs),
            }

            for kind, tag in ((OBJECT_REF, "object"), (SPACE_REF, "space")):
                if kind == SPACE_REF and not config.space_ref_enabled:
                    continue
                if kind == SPACE_REF:
                    subject = scene.object_by_id(tup.subject)
                    if subject.support_id is None:
                        summary["drops"]["no_support"] += 1
                        continue
                    if tup.subject in removal_cache:
                        fb_kind = removal_cache[tup.subject]
                    else:
                        fb_kind = rasterize(scene.without_object(tup.subject), cam, with_rgb=True)
                        removal_cache[tup.subject] = fb_kind
                    try:
                        mask = free_space_from_rerender(scene, tup.subject, cam, fb_kind)
                    except LabelError:
                        summary["drops"]["free_region_invisible"] += 1
                        continue
                else:
                    fb_kind = fb
                    mask = instance_mask(fb, tup.subject)

                try:
                    prompts = prompts_for_refs(list(tup.refs), fb_kind, config.prompt_stroke)
                except LabelError:
                    summary["drops"]["ref_invisible"] += 1
                    continue
                allowed = mask.minus(prompt_pixels(prompts, w, h))
                if allowed.is_empty():
                    summary["drops"]["prompt_occluded"] += 1
                    continue
                n_points = int(rng_t.integers(pmin, pmax + 1))
                try:
                    ps = sample_points_in_mask(allowed, n_points, rng_t)
                except LabelError:
                    summary["drops"]["unreferencable"] += 1
                    continue
                query = instantiate_template(tup, kind, rng_t, table)
                image = draw_prompt(fb_kind.rgb, prompts)
                img_name = f"samples/t{t_idx:03d}_{tag}.png"
                mask_name = f"samples/t{t_idx:03d}_{tag}_mask.png"
                save_rgb_png(image, cam_dir / img_name)
                save_mask_png(mask, cam_dir / mask_name)
                samples.append(
                    {
                        "id": f"{base_id}{tag[0]}",
                        "image": f"{rel_cam}/{img_name}",
                        "query": query,
                        "answer": format_points(ps),
                        "kind": kind,
                        "annotations": {
                            "scene": scene_idx,
                            "camera": cam_idx,
                            "camera_file": f"{rel_cam}/camera.json",
                            "tuple": tup_doc,
                            "mask": f"{rel_cam}/{mask_name}",
                            "points_raw": [[x, y] for x, y in ps.raw],
                        },
                    }
                )
                summary["samples"][kind] += 1

    if summary["cameras"] == 0:
        summary["dropped"] = True
        summary["reason"] = "no valid camera"
    return summary, samples


def _scene_job(args: tuple[dict, int, str]) -> tuple[dict, list[dict]]:
    config_doc, scene_idx, out_dir = args
    config = PipelineConfig.from_json(config_doc)
    return generate_scene(config, scene_idx, out_dir)


def cmd_gen(config: PipelineConfig, out_dir: str | Path | None = None, workers: int | None = None) -> dict:
    """Run the full generation pipeline; returns (and writes) the manifest."""
    out_dir = Path(out_dir if out_dir is not None else config.out_dir)
    workers = workers if workers is not None else config.workers
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(config.to_json(), i, str(out_dir)) for i in range(config.gen.n_scenes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scene_job, jobs))
    else:
        results = [_scene_job(j) for j in jobs]

    summaries = [r[0] for r in results]
    all_samples = [s for _, rows in results for s in rows]
    with open(out_dir / "dataset.jsonl", "w", encoding="utf-8") as fh:
        for row in all_samples:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    n_scenes = len(summaries)
    totals = {
        "scenes": n_scenes,
        "scenes_dropped": sum(1 for s in summaries if s["dropped"]),
        "cameras": sum(s["cameras"] for s in summaries),
        "pairs": sum(s["pairs"] for s in summaries),
        "samples": {
            OBJECT_REF: sum(s["samples"][OBJECT_REF] for s in summaries),
            SPACE_REF: sum(s["samples"][SPACE_REF] for s in summaries),
        },
        "drops": {
            k: sum(s["drops"][k] for s in summaries) for k in _empty_drops()
        },
    }
    manifest = {
        "version": 1,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "pairs_mean_per_scene": totals["pairs"] / n_scenes if n_scenes else 0.0,
        "scenes": summaries,
        "totals": totals,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    log.info(
        "generated %d samples (%d object_ref, %d space_ref) over %d scenes",
        totals["samples"][OBJECT_REF] + totals["samples"][SPACE_REF],
        totals["samples"][OBJECT_REF],
        totals["samples"][SPACE_REF],
        n_scenes,
    )
    return manifest


# ---------------------------------------------------------------------------
# mix


def load_dataset_jsonl(path: str | Path) -> list[InstructionSample]:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                samples.append(InstructionSample.from_json(json.loads(line)))
    return samples


def cmd_mix(config: PipelineConfig, out_dir: str | Path | None = None) -> dict:
    """Assemble the four-source mix into out_dir/mix.jsonl."""
    out_dir = Path(out_dir if out_dir is not None else config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    synthetic_path = config.sources.get("synthetic", str(out_dir / "dataset.jsonl"))
    sources: dict[str, list[InstructionSample]] = {k: [] for k in (OBJECT_REF, SPACE_REF)}
    if Path(synthetic_path).exists():
        for s in load_dataset_jsonl(synthetic_path):
            if s.kind in sources:
                sources[s.kind].append(s)
    if config.sources.get("vqa"):
        with open(config.sources["vqa"], "r", encoding="utf-8") as fh:
            sources["vqa"] = passthrough_vqa(json.load(fh))
    if config.sources.get("detection"):
        with open(config.sources["detection"], "r", encoding="utf-8") as fh:
            sources["detection"] = convert_detection(json.load(fh))

    manifest = assemble_mix(sources, config.mix, out_dir / "mix.jsonl", config.config_hash())
    with open(out_dir / "mix_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


# ---------------------------------------------------------------------------
# eval


def cmd_eval(
    benchmark_dir: str | Path,
    predictions_path: str | Path,
    runs: int = 3,
    out_dir: str | Path | None = None,
) -> EvalReport:
    records = load_benchmark(benchmark_dir)
    predictions = load_predictions(predictions_path)
    report = evaluate(records, predictions, runs)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=1, sort_keys=True)
        with open(out_dir / "report.txt", "w", encoding="utf-8") as fh:
            fh.write(report.table() + "\n")
    return report


# ---------------------------------------------------------------------------
# viz

GT_CROSS_COLOR = (0, 255, 255)
PRED_CROSS_COLOR = (255, 0, 0)
TINT_COLOR = np.array([64, 160, 255], dtype=float)


def _draw_cross(img: np.ndarray, i: int, j: int, color, arm: int = 4) -> None:
    h, w = img.shape[:2]
    for d in range(-arm, arm + 1):
        if 0 <= i + d < w and 0 <= j < h:
            img[j, i + d] = color
        if 0 <= i < w and 0 <= j + d < h:
            img[j + d, i] = color


def viz_overlay(
    rgb: np.ndarray,
    mask: Mask | None,
    gt_points: list[tuple[float, float]],
    pred_points: list[tuple[float, float]] | None = None,
) -> np.ndarray:
    """Mask tint plus GT (cyan) and prediction (red) crosses."""
    out = rgb.copy()
    h, w = out.shape[:2]
    if mask is not None:
        tinted = (out[mask.pixels] * 0.55 + TINT_COLOR * 0.45).astype(np.uint8)
        out[mask.pixels] = tinted
    for x, y in gt_points:
        i, j = point_to_pixel(x, y, w, h)
        _draw_cross(out, i, j, GT_CROSS_COLOR)
    for x, y in pred_points or []:
        i, j = point_to_pixel(x, y, w, h)
        _draw_cross(out, i, j, PRED_CROSS_COLOR)
    return out


def cmd_viz(
    dataset_path: str | Path,
    index: int,
    out_dir: str | Path,
    pred_text: str | None = None,
) -> Path:
    """Overlay one dataset record's mask and points onto its image."""
    dataset_path = Path(dataset_path)
    base = dataset_path.parent
    with open(dataset_path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not (0 <= index < len(lines)):
        raise DataError(f"record index {index} out of range (dataset has {len(lines)} lines)")
    row = json.loads(lines[index])
    img_path = base / row["image"]
    if not img_path.exists():
        raise DataError(f"missing image file {img_path}")
    rgb = load_rgb_png(img_path)
    mask = None
    ann = row.get("annotations") or {}
    if ann.get("mask"):
        mask_path = base / ann["mask"]
        if not mask_path.exists():
            raise DataError(f"missing mask file {mask_path}")
        mask = load_mask_png(mask_path)
    gt_points: list[tuple[float, float]] = []
    if row.get("answer"):
        try:
            gt_points = parse_points(row["answer"]).points
        except PredictionParseError:
            gt_points = []  # e.g. detection/vqa rows: tint only
    pred_points = parse_points(pred_text).points if pred_text else None
    overlay = viz_overlay(rgb, mask, gt_points, pred_points)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"overlay_{index:05d}.png"
    save_rgb_png(overlay, out_path)
    return out_path


# ---------------------------------------------------------------------------
# scene reload helper (kept with the pipeline so the repo/fixture builders
# resolve the same way generation did)


def load_scene(scene_json_path: str | Path, config: PipelineConfig) -> Scene:
    repo = _repository(config)
    with open(scene_json_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return scene_from_json(
        doc,
        mesh_for_asset=repo.mesh_for,
        build_fixture_mesh=lambda arch, dims, states: build_fixture(arch, dims, states)[0],
    )
