#!/usr/bin/env python3
"""Regenerates the offline fixtures under fixtures/.

The outputs are committed; rerunning this script must reproduce them byte
for byte. Run from the repository root: python3 fixtures/make_fixtures.py
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent
STAMP = "2026-01-15T09:00:00.000Z"


def dump(obj):
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(dump(r) + "\n" for r in rows), encoding="utf-8")


def header(benchmark_id, task_type, orientation, provenance):
    return {
        "kind": "benchmark",
        "benchmark_id": benchmark_id,
        "task_type": task_type,
        "metric_orientation": orientation,
        "provenance": provenance,
    }


# ---------------------------------------------------------------------------
# yes/no quality fixture: 40 samples, 5 models, original/retest/parallel
# ---------------------------------------------------------------------------

OBJECTS = [
    "dog", "cat", "car", "bicycle", "umbrella", "apple", "chair", "bench", "clock", "kite",
    "horse", "boat", "laptop", "cup", "bottle", "tree", "bus", "train", "sheep", "pizza",
]


def quality_fixture():
    out = ROOT / "quality"
    samples = []
    for i in range(40):
        obj = OBJECTS[i % len(OBJECTS)]
        art = "an" if obj[0] in "aeiou" else "a"
        answer = (i % 5) in (0, 1, 3)  # 24 yes, 16 no
        samples.append({
            "sample_id": f"q{i + 1:02d}",
            "image_ref": f"images/q{i + 1:02d}.jpg",
            "instruction": f"Is there {art} {obj} in the image?",
            "ground_truth": {"type": "yes_no", "answer": answer},
        })
    write_jsonl(out / "benchmark.jsonl",
                [header("pope-fixture", "yes_no", "higher_better", "synthetic yes/no fixture")] + samples)

    def reply(yes, i):
        if yes:
            return ["Yes.", "Yes, there is.", "Yes, it is visible in the image."][i % 3]
        return ["No.", "No, there is not.", "There is no such object here."][i % 3]

    # Each model maps (index, truth) -> answer text or None for an evasive reply.
    models = {
        "acq-7b": lambda i, t, par: True,
        "dis-7b": lambda i, t, par: False,
        "good-13b": lambda i, t, par: t if i % 10 != 3 else not t,
        "mid-7b": lambda i, t, par: (t if i % 4 != 0 else not t) if not par else (t if i % 5 != 0 else not t),
        "weak-3b": lambda i, t, par: (None if i == 7 else (t if i % 3 != 0 else not t)) if not par else (True if i % 2 else t),
    }

    def responses(model, par, seed, run_id):
        rows = []
        for i, s in enumerate(samples):
            truth = s["ground_truth"]["answer"]
            if par:
                truth = not truth
            ans = models[model](i, truth, par)
            text = "I cannot tell from this picture." if ans is None else reply(ans, i)
            rows.append({
                "sample_id": s["sample_id"] + ("_p" if par else ""),
                "model_id": model,
                "run_id": run_id,
                "seed": seed,
                "text": text,
                "created_at": STAMP,
            })
        return rows

    crit = []
    for model in models:
        orig = responses(model, False, 0, "file")
        write_jsonl(out / "responses" / f"{model}.original.jsonl", orig)
        write_jsonl(out / "responses" / f"{model}.retest.jsonl", responses(model, False, 1, "file"))
        write_jsonl(out / "responses" / f"{model}.parallel.jsonl", responses(model, True, 0, "file"))
        for i, (s, r) in enumerate(zip(samples, orig)):
            ans = models[model](i, s["ground_truth"]["answer"], False)
            wrong = ans is None or ans != s["ground_truth"]["answer"]
            crit.append({
                "annotation_id": f"cr-{len(crit) + 1:04d}",
                "annotator_id": "rater-1",
                "queue": "criterion",
                "target": {"sample_id": s["sample_id"], "model_id": model, "run_id": "quality-fixture/original"},
                "label": "hallucinated" if wrong else "clean",
                "created_at": STAMP,
            })
    write_jsonl(out / "annotations" / "criterion.jsonl", crit)

    content = []
    for i, s in enumerate(samples):
        content.append({
            "annotation_id": f"cv-{i + 1:04d}",
            "annotator_id": "rater-1",
            "queue": "content_validity",
            "target": {"sample_id": s["sample_id"]},
            "label": "invalid" if i in (4, 16, 33) else "valid",
            "created_at": STAMP,
        })
    write_jsonl(out / "annotations" / "content.jsonl", content)

    lines = [
        "# Offline quality fixture: file sources, mock judge, fixed seeds.",
        "[run]",
        "run_id = quality-fixture",
        "benchmark = benchmark.jsonl",
        "workspace = workspace",
        "seed = 0",
        "subset_seed = 7",
        "subset_size = 20",
        "paraphraser = template",
        "concurrency = 2",
        "",
        "[judge]",
        "backend = mock",
        "",
        "[annotations]",
        "content = annotations/content.jsonl",
        "criterion = annotations/criterion.jsonl",
    ]
    for model in models:
        lines += [
            "",
            f"[model.{model}]",
            "source = file",
            f"path = responses/{model}.original.jsonl",
            f"retest_path = responses/{model}.retest.jsonl",
            f"parallel_path = responses/{model}.parallel.jsonl",
        ]
    (out / "manifest.ini").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# 100-annotation content-validity fixture, 84 valid
# ---------------------------------------------------------------------------

def content_validity_fixture():
    rng = random.Random(3)
    invalid = set(rng.sample(range(100), 16))
    rows = []
    for i in range(100):
        rows.append({
            "annotation_id": f"cv-{i + 1:04d}",
            "annotator_id": f"rater-{i % 3 + 1}",
            "queue": "content_validity",
            "target": {"sample_id": f"s{i + 1:03d}"},
            "label": "invalid" if i in invalid else "valid",
            "created_at": STAMP,
        })
    write_jsonl(ROOT / "content_validity" / "annotations.jsonl", rows)


# ---------------------------------------------------------------------------
# 12-sample free-form fixture for Main/Extra/Overall
# ---------------------------------------------------------------------------

HQH = [
    # id, dimension, facts, instruction, gt, response
    ("h01", "existence", "Objects: dog on the grass; red frisbee.", "What animal is on the grass?", "dog",
     "It is a cat. A purple elephant stands behind it."),
    ("h02", "count", "Objects: three apples on a wooden table.", "How many apples are on the table?", "three",
     "There are five apples."),
    ("h03", "color", "Objects: blue car parked on the street.", "What color is the car?", "blue",
     "The car is green."),
    ("h04", "action", "Objects: man running in the park; trees.", "What is the man doing?", "running",
     "The man is running. He wears a yellow hat. A bicycle is lying on the path."),
    ("h05", "spatial_relation", "Objects: cup on the table; laptop beside the cup.",
     "Where is the cup located?", "on the table",
     "The cup is on the table. Two cats sleep under it. The window is open."),
    ("h06", "comparison_relation", "Objects: large bus; small car on the road.",
     "Which is larger, the bus or the car?", "the bus",
     "The bus is larger. A pilot waves from the roof."),
    ("h07", "environment", "Regions: a sunny beach with blue water.", "What kind of place is shown?", "beach",
     "It is a beach. The water is blue."),
    ("h08", "text", "Objects: red sign reading \"STOP\".", "What does the sign say?", "stop",
     "The sign says STOP."),
    ("h09", "existence", "Objects: bird on a fence.", "What is on the fence?", "bird", "A bird."),
    ("h10", "count", "Objects: two dogs.", "How many dogs are there?", "two", "I can see 2 dogs."),
    ("h11", "color", "Objects: white cat on a sofa.", "What color is the cat?", "white",
     "The cat is white. It is on a sofa."),
    ("h12", "action", "Objects: girl eating an apple.", "What is the girl doing?", "eating",
     "The girl is eating an apple."),
]

LEVEL = {"existence": "object", "count": "object", "color": "attribute", "action": "attribute"}


def hqh_fixture():
    out = ROOT / "hqh"
    samples, responses = [], []
    for sid, dim, facts, instr, gt, resp in HQH:
        samples.append({
            "sample_id": sid,
            "image_ref": f"images/{sid}.jpg",
            "image_facts": facts,
            "instruction": instr,
            "ground_truth": {"type": "free_form", "answer": gt},
            "dimension": dim,
            "level": LEVEL.get(dim, "scene"),
        })
        responses.append({
            "sample_id": sid,
            "model_id": "fixture-model",
            "run_id": "hqh-fixture/original",
            "seed": 0,
            "text": resp,
            "created_at": STAMP,
        })
    write_jsonl(out / "benchmark.jsonl",
                [header("hqh-fixture", "free_form", "lower_better", "hand-built 12-sample fixture")] + samples)
    write_jsonl(out / "responses.jsonl", responses)


# ---------------------------------------------------------------------------
# CHAIR fixture
# ---------------------------------------------------------------------------

def chair_fixture():
    out = ROOT / "chair"
    out.mkdir(parents=True, exist_ok=True)
    lexicon = {
        "dog": "dog", "puppy": "dog", "cat": "cat", "kitten": "cat", "frisbee": "frisbee",
        "man": "person", "woman": "person", "person": "person", "people": "person",
        "bench": "bench", "car": "car", "tree": "tree", "dining table": "dining table", "table": "dining table",
        "hot dog": "hot dog",
    }
    (out / "lexicon.json").write_text(json.dumps(lexicon, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    samples = [
        ("c1", ["dog", "frisbee", "person"], "A man throws a frisbee to a dog near a bench."),
        ("c2", ["cat", "dining table"], "A kitten sits on the dining table."),
        ("c3", ["tree"], "A bright and sunny afternoon."),
    ]
    rows = [header("chair-fixture", "captioning", "lower_better", "hand-built captions")]
    caps = []
    for sid, objs, cap in samples:
        rows.append({
            "sample_id": sid,
            "image_ref": f"images/{sid}.jpg",
            "instruction": "Describe this image in detail.",
            "ground_truth": {"type": "captioning", "gt_objects": sorted(objs)},
        })
        caps.append({"sample_id": sid, "model_id": "captioner", "run_id": "chair", "seed": 0, "text": cap,
                     "created_at": STAMP})
    write_jsonl(out / "benchmark.jsonl", rows)
    write_jsonl(out / "responses.jsonl", caps)


# ---------------------------------------------------------------------------
# 20-image scene-graph fixture
# ---------------------------------------------------------------------------

NOUNS = ["dog", "cat", "man", "woman", "car", "bench", "tree", "umbrella", "bicycle", "table", "cup", "sign",
         "boat", "kite", "horse", "bus", "clock", "chair", "lamp", "bird"]
COLORS = ["red", "blue", "green", "white", "black", "yellow", "brown", "orange"]
ANIMATE = {"dog", "cat", "man", "woman", "horse", "bird"}
ACTIONS = ["running", "sitting", "sleeping", "standing", "eating", "flying", "walking"]
SPATIAL = ["on", "next to", "behind", "under", "in front of", "beside", "near", "above"]
REGIONS = [
    "a sunny beach with soft sand", "a busy city street at night", "a quiet park in the morning",
    "a cozy kitchen indoors", "a foggy harbor at dawn", "a snowy mountain road", "an office with desks indoors",
    "a rainy market at dusk", "a green field on a cloudy day", "a garden at sunset",
]
TEXTS = ["STOP", "OPEN", "EXIT", "SALE", "CAFE", "BUS 12"]


def scene_graph_fixture():
    rng = random.Random(20)
    graphs = []
    for k in range(20):
        width, height = 600, 450
        names = rng.sample(NOUNS, 4)
        # one duplicated name per image for counting and same-name comparison
        names.append(names[0])
        objects = []
        for j, name in enumerate(names):
            w = rng.choice([40, 60, 90, 140, 200])
            h = rng.choice([40, 60, 90, 120])
            cell = (j * 2 + k) % 9 if j < 4 else (k + 4) % 9
            cx = (cell % 3) * 200 + 100
            cy = (cell // 3) * 150 + 75
            attrs = []
            if rng.random() < 0.6:
                attrs.append(rng.choice(COLORS))
            if name in ANIMATE and rng.random() < 0.6:
                attrs.append(rng.choice(ACTIONS))
            if name == "sign" or (name in ("bus", "boat") and rng.random() < 0.7):
                attrs.append('reads "' + rng.choice(TEXTS) + '"')
            objects.append({"name": name, "x": max(0, cx - w // 2), "y": max(0, cy - h // 2), "w": w, "h": h,
                            "attributes": attrs})
        rels = []
        for _ in range(3):
            a, b = rng.sample(range(4), 2)
            pred = rng.choice(SPATIAL + (["holding", "looking at", "riding"] if names[a] in ANIMATE else []))
            rels.append({"subject": a, "predicate": pred, "object": b})
        regions = [{"x": 0, "y": 0, "w": width, "h": height, "description": REGIONS[k % len(REGIONS)]}]
        graphs.append({
            "image_id": f"vg{k + 1:03d}",
            "image_ref": f"images/vg{k + 1:03d}.jpg",
            "width": width,
            "height": height,
            "objects": objects,
            "relationships": rels,
            "regions": regions,
        })
    out = ROOT / "scene_graphs.json"
    out.write_text(json.dumps(graphs, indent=1) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# report: score tables for the leaderboard golden files
# ---------------------------------------------------------------------------

def report_fixture():
    pope = {"MiniGPT4-Llama2": 0.548, "Otter": 0.661, "MiniGPT4-Vicuna-7B": 0.548, "Qwen-VL-7B": 0.791}
    pope_p = {"MiniGPT4-Llama2": 0.463, "Otter": 0.461, "MiniGPT4-Vicuna-7B": 0.497, "Qwen-VL-7B": 0.5}
    hqh = {
        "benchmark_id": "hqh-demo", "run_id": "demo/original", "metric_name": "overall_hal_pct",
        "orientation": "lower_better",
        "scores": {"model-a": 0.25, "model-b": 0.5, "model-c": 0.1},
        "per_dimension": {
            "color": {"model-a": 0.5, "model-b": 0.75, "model-c": 0.0},
            "existence": {"model-a": 0.0, "model-b": 0.25, "model-c": 0.2},
            "attribute": {"model-a": 0.5, "model-b": 0.75, "model-c": 0.0},
            "object": {"model-a": 0.0, "model-b": 0.25, "model-c": 0.2},
        },
    }
    rows = [
        {"benchmark_id": "pope", "run_id": "pope/original", "metric_name": "accuracy",
         "orientation": "higher_better", "scores": pope},
        {"benchmark_id": "pope-p", "run_id": "pope/parallel", "metric_name": "accuracy",
         "orientation": "higher_better", "scores": pope_p},
        hqh,
    ]
    write_jsonl(ROOT / "report" / "tables.jsonl", rows)


if __name__ == "__main__":
    quality_fixture()
    content_validity_fixture()
    hqh_fixture()
    chair_fixture()
    scene_graph_fixture()
    report_fixture()
