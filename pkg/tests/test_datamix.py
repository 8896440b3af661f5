import ast
import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affordgen.affordance import InstructionSample
from affordgen.datamix import (
    DEFAULT_QUANTITIES,
    MixSpec,
    assemble_mix,
    convert_detection,
    passthrough_vqa,
)
from affordgen.errors import DataError


def make_samples(kind, n):
    return [
        InstructionSample(image=f"img_{kind}_{i}.png", query=f"q{i}", answer="[(0.50, 0.50)]", kind=kind)
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# detection conversion


def test_full_image_box():
    recs = [{"image": "a.png", "width": 640, "height": 480, "category": "tables", "boxes": [[0, 0, 640, 480]]}]
    out = convert_detection(recs)
    assert out[0].answer == "[(0.50, 0.50, 1.00, 1.00)]"
    assert out[0].query == "Find all instances of tables."
    assert out[0].kind == "detection"


def test_published_cushion_row_format():
    recs = [
        {
            "image": "lvis.png",
            "width": 640,
            "height": 480,
            "category": "cushions",
            "boxes": [[288.0, 168.0, 51.2, 28.8], [316.8, 189.6, 44.8, 24.0]],
        }
    ]
    out = convert_detection(recs)
    assert out[0].query == "Find all instances of cushions."
    assert out[0].answer == "[(0.49, 0.38, 0.08, 0.06), (0.53, 0.42, 0.07, 0.05)]"


def test_zero_instances_empty_answer():
    out = convert_detection([{"image": "a.png", "width": 100, "height": 100, "category": "cats", "boxes": []}])
    assert out[0].answer == "[]"


def test_out_of_bounds_box_rejected():
    with pytest.raises(DataError):
        convert_detection(
            [{"image": "a.png", "width": 100, "height": 100, "category": "x", "boxes": [[90, 0, 20, 10]]}]
        )


@given(seed=st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_detection_roundtrip(seed):
    import numpy as np

    rng = np.random.default_rng(seed)
    w, h = int(rng.integers(64, 1920)), int(rng.integers(64, 1080))
    boxes = []
    for _ in range(int(rng.integers(1, 6))):
        bw, bh = rng.uniform(1, w / 2), rng.uniform(1, h / 2)
        x, y = rng.uniform(0, w - bw), rng.uniform(0, h - bh)
        boxes.append([x, y, bw, bh])
    out = convert_detection([{"image": "i.png", "width": w, "height": h, "category": "c", "boxes": boxes}])
    parsed = ast.literal_eval(out[0].answer)
    assert len(parsed) == len(boxes)
    for (cx, cy, bw_n, bh_n), (x, y, bw, bh) in zip(parsed, boxes):
        assert cx == pytest.approx((x + bw / 2) / w, abs=0.005 + 1e-12)
        assert cy == pytest.approx((y + bh / 2) / h, abs=0.005 + 1e-12)
        assert bw_n == pytest.approx(bw / w, abs=0.005 + 1e-12)
        assert bh_n == pytest.approx(bh / h, abs=0.005 + 1e-12)


# ---------------------------------------------------------------------------
# vqa passthrough


def test_vqa_empty_input():
    assert passthrough_vqa([]) == []


def test_vqa_passes_published_row_verbatim():
    rec = {
        "image": "coco.png",
        "question": "What is the person feeding the cat?",
        "answer": "The person is feeding an apple to the cat.",
    }
    out = passthrough_vqa([rec])
    assert len(out) == 1
    assert out[0].query == rec["question"]
    assert out[0].answer == rec["answer"]
    assert out[0].kind == "vqa"


def test_vqa_skips_malformed_records():
    recs = [
        {"image": "a.png", "question": "q", "answer": "a"},
        {"image": "b.png", "question": "q"},  # missing answer
        {"question": "q", "answer": "a"},  # missing image
    ]
    out = passthrough_vqa(recs)
    assert len(out) == 1


# ---------------------------------------------------------------------------
# mix assembly


def kind_counts(path):
    with open(path, "r", encoding="utf-8") as fh:
        return Counter(json.loads(ln)["kind"] for ln in fh if ln.strip())


def test_assemble_counts(tmp_path):
    sources = {k: make_samples(k, 10) for k in ("object_ref", "space_ref", "vqa", "detection")}
    spec = MixSpec(counts={"object_ref": 2, "space_ref": 2, "vqa": 0, "detection": 0}, shuffle_seed=5)
    manifest = assemble_mix(sources, spec, tmp_path / "mix.jsonl")
    assert manifest["total"] == 4
    assert kind_counts(tmp_path / "mix.jsonl") == {"object_ref": 2, "space_ref": 2}


def test_assemble_deterministic(tmp_path):
    sources = {k: make_samples(k, 25) for k in ("object_ref", "space_ref", "vqa", "detection")}
    spec = MixSpec(counts={"object_ref": 20, "space_ref": 10, "vqa": 15, "detection": 5}, shuffle_seed=3)
    assemble_mix(sources, spec, tmp_path / "a.jsonl")
    assemble_mix(sources, spec, tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_shuffle_is_permutation(tmp_path):
    sources = {k: make_samples(k, 30) for k in ("object_ref", "space_ref", "vqa", "detection")}
    spec_a = MixSpec(counts={"object_ref": 30, "space_ref": 30, "vqa": 30, "detection": 30}, shuffle_seed=1)
    spec_b = MixSpec(counts={"object_ref": 30, "space_ref": 30, "vqa": 30, "detection": 30}, shuffle_seed=2)
    assemble_mix(sources, spec_a, tmp_path / "a.jsonl")
    assemble_mix(sources, spec_b, tmp_path / "b.jsonl")
    lines_a = sorted((tmp_path / "a.jsonl").read_text().splitlines())
    lines_b = sorted((tmp_path / "b.jsonl").read_text().splitlines())
    assert lines_a == lines_b
    assert (tmp_path / "a.jsonl").read_bytes() != (tmp_path / "b.jsonl").read_bytes()


def test_shortfall_reported(tmp_path):
    sources = {"object_ref": make_samples("object_ref", 3)}
    spec = MixSpec(counts={"object_ref": 10, "space_ref": 0, "vqa": 0, "detection": 0})
    manifest = assemble_mix(sources, spec, tmp_path / "m.jsonl")
    assert manifest["realized"]["object_ref"] == 3
    assert manifest["shortfall"]["object_ref"] == 7


def test_all_sources_empty_errors(tmp_path):
    with pytest.raises(DataError):
        assemble_mix({}, MixSpec(counts={"object_ref": 5}), tmp_path / "m.jsonl")


def test_default_ratio_scaling_exact():
    spec = MixSpec(scale=0.01)
    assert spec.resolve_counts() == {
        "object_ref": 3470,
        "space_ref": 3200,
        "vqa": 6650,
        "detection": 1000,
    }
    assert MixSpec().resolve_counts() == DEFAULT_QUANTITIES


def test_negative_counts_rejected():
    with pytest.raises(DataError):
        MixSpec(counts={"object_ref": -1}).resolve_counts()
    with pytest.raises(DataError):
        MixSpec(counts={}).resolve_counts()


def test_mixspec_json_roundtrip():
    spec = MixSpec(counts={"object_ref": 5, "vqa": 2}, shuffle_seed=9)
    back = MixSpec.from_json(spec.to_json())
    assert back.to_json() == spec.to_json()


def test_line_count_matches_manifest(tmp_path):
    sources = {
        "object_ref": make_samples("object_ref", 7),
        "vqa": make_samples("vqa", 4),
    }
    spec = MixSpec(counts={"object_ref": 5, "space_ref": 2, "vqa": 4, "detection": 0})
    manifest = assemble_mix(sources, spec, tmp_path / "m.jsonl")
    n_lines = len((tmp_path / "m.jsonl").read_text().splitlines())
    assert n_lines == manifest["total"] == sum(manifest["realized"].values())
    assert kind_counts(tmp_path / "m.jsonl") == {"object_ref": 5, "vqa": 4}
