"""Four-source instruction-tuning mix: object/space reference, VQA, detection.

External VQA and detection sources are user-supplied JSON files; everything
is normalized into single-turn (query, answer) samples and assembled into one
globally shuffled JSONL with a manifest of realized counts.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .affordance import InstructionSample
from .errors import DataError
from .points import coord_str

log = logging.getLogger(__name__)

MIX_KINDS = ("object_ref", "space_ref", "vqa", "detection")

#: published mix quantities the default ratios reproduce
DEFAULT_QUANTITIES = {
    "object_ref": 347_000,
    "space_ref": 320_000,
    "vqa": 665_000,
    "detection": 100_000,
}


@dataclass
class MixSpec:
    counts: dict[str, int] | None = None  # explicit per-kind counts
    scale: float | None = None  # applied to the default ratios instead
    shuffle_seed: int = 0
    ratios: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_QUANTITIES))

    def resolve_counts(self) -> dict[str, int]:
        if self.counts is not None:
            counts = {k: int(self.counts.get(k, 0)) for k in MIX_KINDS}
        else:
            s = 1.0 if self.scale is None else self.scale
            counts = {k: int(round(self.ratios[k] * s)) for k in MIX_KINDS}
        if any(v < 0 for v in counts.values()):
            raise DataError("mix counts must be non-negative")
        if all(v == 0 for v in counts.values()):
            raise DataError("mix spec requests zero samples")
        return counts

    def to_json(self) -> dict:
        return {
            "counts": self.counts,
            "scale": self.scale,
            "shuffle_seed": self.shuffle_seed,
            "ratios": self.ratios,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MixSpec":
        return cls(
            counts=doc.get("counts"),
            scale=doc.get("scale"),
            shuffle_seed=doc.get("shuffle_seed", 0),
            ratios=doc.get("ratios", dict(DEFAULT_QUANTITIES)),
        )


def convert_detection(records: list[dict]) -> list[InstructionSample]:
    """Category detection records to "Find all instances of X." samples.

    Each record: {image, width, height, category, boxes: [[x, y, w, h], ...]}
    with pixel boxes. Answers list normalized (cx, cy, w, h) tuples; zero
    boxes produce an empty-list answer.
    """
    samples = []
    for rec in records:
        width, height = rec["width"], rec["height"]
        boxes = rec.get("boxes", [])
        norm = []
        for x, y, w, h in boxes:
            if x < 0 or y < 0 or w < 0 or h < 0 or x + w > width or y + h > height:
                raise DataError(f"box outside image bounds in record for {rec.get('image')!r}")
            norm.append(((x + w / 2) / width, (y + h / 2) / height, w / width, h / height))
        answer = (
            "[" + ", ".join(f"({coord_str(cx)}, {coord_str(cy)}, {coord_str(w)}, {coord_str(h)})" for cx, cy, w, h in norm) + "]"
            if norm
            else "[]"
        )
        samples.append(
            InstructionSample(
                image=rec["image"],
                query=f"Find all instances of {rec['category']}.",
                answer=answer,
                kind="detection",
            )
        )
    return samples


def passthrough_vqa(records: list[dict]) -> list[InstructionSample]:
    """Copy VQA records verbatim; records missing a field are skipped (the
    caller can report len(records) - len(result))."""
    samples = []
    skipped = 0
    for rec in records:
        if not all(rec.get(k) for k in ("image", "question", "answer")):
            skipped += 1
            continue
        samples.append(
            InstructionSample(
                image=rec["image"], query=rec["question"], answer=rec["answer"], kind="vqa"
            )
        )
    if skipped:
        log.info("vqa passthrough skipped %d malformed records", skipped)
    return samples


def assemble_mix(
    sources: dict[str, list[InstructionSample]],
    spec: MixSpec,
    out_path: str | Path,
    config_hash: str | None = None,
) -> dict:
    """Assemble and shuffle the mix into one JSONL file; returns the manifest.

    Sources shorter than their requested count are taken whole and the
    shortfall recorded.
    """
    counts = spec.resolve_counts()
    if not any(sources.get(k) for k in MIX_KINDS):
        raise DataError("all mix sources are empty")

    taken: list[InstructionSample] = []
    realized: dict[str, int] = {}
    shortfall: dict[str, int] = {}
    for kind in MIX_KINDS:
        want = counts[kind]
        have = sources.get(kind, [])
        picked = have[:want]
        for s in picked:
            if s.kind != kind:
                raise DataError(f"sample of kind {s.kind!r} offered under source {kind!r}")
        realized[kind] = len(picked)
        if len(picked) < want:
            shortfall[kind] = want - len(picked)
            log.warning("mix source %s short by %d samples", kind, want - len(picked))
        taken.extend(picked)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.shuffle_seed)))
    order = rng.permutation(len(taken))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for i in order:
            fh.write(json.dumps(taken[int(i)].to_json(), sort_keys=True) + "\n")

    manifest = {
        "version": 1,
        "requested": counts,
        "realized": realized,
        "shortfall": shortfall,
        "total": len(taken),
        "shuffle_seed": spec.shuffle_seed,
    }
    if config_hash is not None:
        manifest["config_hash"] = config_hash
    return manifest
