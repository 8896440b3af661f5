"""Points-in-mask benchmark harness.

Scores prediction text against ground-truth masks: accuracy is the fraction
of predicted points whose pixels land inside the target mask, averaged per
run, reported as mean and population standard deviation over runs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError, PredictionParseError
from .points import MAX_POINTS, PointSet, point_to_pixel
from .raster import Mask, load_mask_png

_PAIR_RE = re.compile(
    r"\(\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*,"
    r"\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\)"
)


@dataclass
class BenchmarkRecord:
    id: str
    image: str
    instruction: str
    gt_mask: Mask


@dataclass
class EvalReport:
    runs: int
    run_means: list[float]
    mean: float  # fraction in [0, 1]
    std: float  # population std of run means
    per_record: dict[str, list[float]]
    unparseable: int

    def mean_pct(self) -> float:
        return round(self.mean * 100.0, 2)

    def std_pct(self) -> float:
        return round(self.std * 100.0, 2)

    def summary(self) -> str:
        return f"{self.mean_pct():.2f} ± {self.std_pct():.2f}"

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "run_means": self.run_means,
            "mean_pct": self.mean_pct(),
            "std_pct": self.std_pct(),
            "per_record": self.per_record,
            "unparseable": self.unparseable,
        }

    def table(self) -> str:
        lines = [
            f"{'record':<24} " + " ".join(f"run{r:<5}" for r in range(self.runs)),
        ]
        for rid in sorted(self.per_record):
            accs = self.per_record[rid]
            lines.append(f"{rid:<24} " + " ".join(f"{a * 100:7.2f}" for a in accs))
        lines.append("-" * len(lines[0]))
        lines.append(f"overall: {self.summary()}   (unparseable predictions: {self.unparseable})")
        return "\n".join(lines)


def parse_points(text: str) -> PointSet:
    """Extract "(x, y)" pairs from prediction text.

    Pairs with a coordinate outside [0, 1] are rejected, not clamped. With no
    valid pair left (or more than the point-set maximum), the prediction is
    unparseable.
    """
    pts = []
    for mx, my in _PAIR_RE.findall(text or ""):
        x, y = float(mx), float(my)
        if 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0:
            pts.append((x, y))
    if not pts or len(pts) > MAX_POINTS:
        raise PredictionParseError("unparseable prediction")
    return PointSet(pts)


def accuracy(points: PointSet, mask: Mask) -> float:
    """Fraction of points whose pixel lies inside the mask."""
    hit = 0
    for x, y in points.points:
        i, j = point_to_pixel(x, y, mask.width, mask.height)
        if mask.contains(i, j):
            hit += 1
    return hit / len(points)


def baseline_bbox_points(bbox: tuple[float, float, float, float], k: int) -> PointSet:
    """Evenly spaced grid inside a normalized rectangle.

    k points are taken row-major from a ceil(sqrt(k)) grid with half-cell
    interior offsets, so no point ever lies on the rectangle boundary. A
    degenerate rectangle collapses to its center point.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x0, y0, x1, y1 = bbox
    w, h = x1 - x0, y1 - y0
    if w <= 0 or h <= 0:
        cx = (x0 + x1) / 2.0
        cy = (y0 + y1) / 2.0
        return PointSet([(min(max(cx, 0.0), 1.0), min(max(cy, 0.0), 1.0))])
    m = int(np.ceil(np.sqrt(k)))
    pts = []
    for r in range(m):
        for c in range(m):
            if len(pts) == k:
                break
            pts.append((x0 + (c + 0.5) * w / m, y0 + (r + 0.5) * h / m))
    return PointSet(pts)


def evaluate(
    records: list[BenchmarkRecord],
    predictions: dict[tuple[str, int], str],
    runs: int,
) -> EvalReport:
    """Score one prediction text per (record, run).

    Unparseable predictions score 0 for their record and are tallied
    separately rather than dropped.
    """
    for rec in records:
        for run in range(runs):
            if (rec.id, run) not in predictions:
                raise DataError(f"missing prediction for record {rec.id!r} run {run}")
    per_record: dict[str, list[float]] = {}
    unparseable = 0
    run_means = []
    for run in range(runs):
        accs = []
        for rec in records:
            try:
                ps = parse_points(predictions[(rec.id, run)])
                a = accuracy(ps, rec.gt_mask)
            except PredictionParseError:
                a = 0.0
                unparseable += 1
            per_record.setdefault(rec.id, []).append(a)
            accs.append(a)
        run_means.append(float(np.mean(accs)))
    mean = float(np.mean(run_means))
    std = float(np.sqrt(np.mean((np.asarray(run_means) - mean) ** 2)))
    return EvalReport(
        runs=runs,
        run_means=run_means,
        mean=mean,
        std=std,
        per_record=per_record,
        unparseable=unparseable,
    )


# ---------------------------------------------------------------------------
# benchmark directory layout: images/, masks/ (binary), instructions.jsonl


def load_benchmark(bench_dir: str | Path) -> list[BenchmarkRecord]:
    bench_dir = Path(bench_dir)
    index = bench_dir / "instructions.jsonl"
    if not index.exists():
        raise DataError(f"no instructions.jsonl in {bench_dir}")
    records = []
    with open(index, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            mask = load_mask_png(bench_dir / doc["mask"])
            img_path = bench_dir / doc["image"]
            if img_path.exists():
                with Image.open(img_path) as im:
                    if im.size != (mask.width, mask.height):
                        raise DataError(f"mask/image size mismatch for record {doc['id']!r}")
            records.append(
                BenchmarkRecord(
                    id=str(doc["id"]),
                    image=doc["image"],
                    instruction=doc["instruction"],
                    gt_mask=mask,
                )
            )
    if not records:
        raise DataError("benchmark is empty")
    return records


def load_predictions(path: str | Path) -> dict[tuple[str, int], str]:
    """JSONL of {"id": record id, "run": run index, "text": raw prediction}."""
    out: dict[tuple[str, int], str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            out[(str(doc["id"]), int(doc["run"]))] = doc["text"]
    if not out:
        raise DataError("predictions file is empty")
    return out
