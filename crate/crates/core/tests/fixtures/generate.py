"""Regenerates the test fixtures in this directory.

complementarity/: 200 scripted mock items in which diffusion noise and
downsampling each rectify a disjoint block of 30 errors.

table/: a complete 8-sample record file plus the accuracy table computed by
the reference implementation below (plain Python, independent of the crate).
"""

import json
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
TAGS = ["pope-random", "pope-popular", "pope-adversarial", "mme-existence"]
QUESTIONS = ["Is there a car in the image?", "Is there a dog in the image?", "Is there a chair in the image?"]


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r, separators=(",", ":")) + "\n" for r in rows))


def complementarity():
    out = HERE / "complementarity"
    out.mkdir(exist_ok=True)
    items, scripts = [], {}
    for i in range(200):
        gold = "yes" if i % 2 == 0 else "no"
        s = 1.0 if gold == "yes" else -1.0
        slot = i % 20
        if slot < 12:
            margin, v = 2.0, {f: 1.0 for f in ("diffusion_noise", "downsample", "no_image", "edited")}
        elif slot < 15:
            margin, v = -0.5, {"diffusion_noise": -3.0, "downsample": -0.5, "no_image": -0.5, "edited": -0.5}
        elif slot < 18:
            margin, v = -0.5, {"diffusion_noise": -0.5, "downsample": -3.0, "no_image": -0.5, "edited": -0.5}
        else:
            margin, v = -0.5, {f: -0.5 for f in ("diffusion_noise", "downsample", "no_image", "edited")}
        sid = f"c{i:03d}"
        items.append({
            "sample_id": sid,
            "question": QUESTIONS[i % 3],
            "gold": gold,
            "task_tag": TAGS[i // 50],
        })
        scripts[sid] = {"margin": s * margin, "variants": {k: s * x for k, x in v.items()}}
    write_jsonl(out / "dataset.jsonl", items)
    knob = lambda raise_, jitter: {"entropy_raise": raise_, "margin_shift": 0.0, "jitter": jitter}
    config = {
        "vocab_size": 32,
        "yes_token": 0,
        "no_token": 1,
        "seed": 2024,
        "filler_mean": -4.0,
        "filler_spread": 0.5,
        "margin_scale": 3.0,
        "truth_bias": 0.0,
        "knobs": {
            "diffusion_noise": knob(2.5, 0.3),
            "downsample": knob(2.0, 0.3),
            "no_image": knob(1.0, 0.3),
            "edited": knob(1.0, 0.3),
        },
        "scripts": scripts,
    }
    (out / "mock.json").write_text(json.dumps(config, indent=2) + "\n")


# reference implementation for the table fixture

def softmax(x, mask=None):
    live = [v for i, v in enumerate(x) if (mask is None or mask[i]) and v != -math.inf]
    m = max(live)
    e = [0.0 if (mask is not None and not mask[i]) or v == -math.inf else math.exp(v - m) for i, v in enumerate(x)]
    z = sum(e)
    return [v / z for v in e]


def entropy(p):
    return -sum(v * math.log(v) for v in p if v > 0)


def hellinger(p, q):
    return math.sqrt(sum((math.sqrt(a) - math.sqrt(b)) ** 2 for a, b in zip(p, q)) / 2)


def calibrated(orig, variants, mode):
    if mode == "original":
        return softmax(orig)
    if mode == "naive":
        return plausible(orig, [(1 + 1.0) * o - 1.0 * sum(v[t] for v in variants) for t, o in enumerate(orig)])
    if mode == "entropy":
        w = [entropy(softmax(v)) for v in variants]
    elif mode == "pdd":
        w = [hellinger(softmax(orig), softmax(v)) for v in variants]
    else:
        w = [1.0]
    fused = [o + sum(wi * (o - v[t]) for wi, v in zip(w, variants)) for t, o in enumerate(orig)]
    return plausible(orig, fused)


def plausible(orig, fused):
    p = softmax(orig)
    top = max(p)
    mask = [x >= 0.2 * top for x in p]
    return softmax(fused, mask)


def argmax(p):
    best = 0
    for i, v in enumerate(p):
        if v > p[best]:
            best = i
    return best


def table():
    out = HERE / "table"
    out.mkdir(exist_ok=True)
    rng = random.Random(7)
    vocab = 6
    kinds = [
        ("original", None),
        ("diffusion_noise", {"steps": 500, "schedule": "linear"}),
        ("downsample", {"ratio": 32}),
        ("no_image", None),
        ("edited", {"cfg_text": 20.0}),
    ]
    items, records, logits = [], [{"v": 1, "header": {"vocab_size": vocab, "answer_tokens": {"yes": [0], "no": [1]}, "model": "fixture"}}], {}
    for i in range(8):
        sid = f"t{i}"
        gold = "yes" if i % 2 == 0 else "no"
        items.append({"sample_id": sid, "question": QUESTIONS[i % 3], "gold": gold, "task_tag": TAGS[i // 2]})
        for kind, params in kinds:
            vals = [round(rng.uniform(-2.0, 2.0) + (1.5 if t < 2 else 0.0), 3) for t in range(vocab)]
            logits[(sid, kind)] = vals
            variant = {"kind": kind}
            if params is not None:
                variant["params"] = params
            records.append({"v": 1, "sample_id": sid, "variant": variant, "logits": {"dense": vals}})
    write_jsonl(out / "dataset.jsonl", items)
    write_jsonl(out / "records.jsonl", records)

    methods = [
        ("Original", "original", []),
        ("diffusion noise", "single", ["diffusion_noise"]),
        ("no image", "single", ["no_image"]),
        ("downsample", "single", ["downsample"]),
        ("image editing", "single", ["edited"]),
        ("naive fusion", "naive", ["diffusion_noise", "downsample", "no_image", "edited"]),
        ("entropy-weighted fusion", "entropy", ["diffusion_noise", "downsample", "no_image", "edited"]),
        ("PDD-weighted fusion", "pdd", ["diffusion_noise", "downsample", "no_image", "edited"]),
    ]
    cols = ["P-R", "P-P", "P-A", "MME"]
    lines = ["method," + ",".join(cols) + ",All"]
    for label, mode, fams in methods:
        acc = []
        for c, tag in enumerate(TAGS):
            sel = [it for it in items if it["task_tag"] == tag]
            ok = 0
            for it in sel:
                p = calibrated(logits[(it["sample_id"], "original")], [logits[(it["sample_id"], f)] for f in fams], mode)
                a = argmax(p)
                ans = "yes" if a == 0 else "no" if a == 1 else "other"
                ok += ans == it["gold"]
            acc.append(ok / len(sel))
        lines.append(label + "," + ",".join(f"{a:.3f}" for a in acc) + f",{sum(acc) / len(acc):.3f}")
    (out / "accuracy.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    complementarity()
    table()
