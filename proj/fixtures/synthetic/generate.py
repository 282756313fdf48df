#!/usr/bin/env python3
"""Regenerates the synthetic corpus and correlation fixtures in this directory.

Deterministic (fixed seed); rerunning rewrites byte-identical files.
"""
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
CATEGORIES = ["existence", "action", "material", "spatial", "number",
              "shape", "color", "camera", "physics", "other"]
# Per-source category weights: every source leans on a few dimensions.
SOURCES = {
    "general":         (880, [30, 14, 4, 10, 3, 2, 8, 6, 2, 6]),
    "compositional":   (300, [30, 8, 6, 20, 8, 6, 14, 1, 1, 2]),
    "human_motion":    (510, [28, 30, 2, 8, 2, 1, 6, 3, 2, 2]),
    "physics":         (160, [28, 14, 8, 6, 2, 2, 3, 1, 24, 2]),
    "temporal":        (100, [26, 16, 4, 4, 2, 4, 12, 6, 6, 8]),
    "hyper_realistic": (50,  [26, 8, 10, 8, 4, 6, 10, 4, 4, 14]),
}
NOUNS = ["cat", "robot", "river", "lantern", "violinist", "glacier", "kite", "tram",
         "fox", "teapot", "dancer", "volcano", "owl", "sailboat", "cloud", "city"]


def dump(path, rows):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n")


def corpus(rng):
    prompts, questions = [], []
    n = 0
    for source, (count, weights) in SOURCES.items():
        for _ in range(count):
            n += 1
            pid = "syn%04d" % n
            a, b = rng.sample(NOUNS, 2)
            prompts.append({"prompt_id": pid, "source": source,
                            "text": "A %s next to a %s (%s #%d)." % (a, b, source, n)})
            k = rng.randint(3, 9)  # mean 6 questions per prompt
            cats = ["existence"] + rng.choices(CATEGORIES, weights=weights, k=k - 1)
            for i, c in enumerate(cats, 1):
                questions.append({"question_id": "%s_q%02d" % (pid, i), "prompt_id": pid,
                                  "category": c, "source_node_id": "",
                                  "text": "Is there a %s question %d?" % (c, i)})
    return prompts, questions


def correlation_set(rng, videos=24):
    """Engine reports plus five annotators per video; human Likert rises with the engine score."""
    os.makedirs(os.path.join(HERE, "correlation", "reports"), exist_ok=True)
    annotations = []
    for v in range(videos):
        vid = "vid%02d" % v
        den = 8
        num = v % (den + 1) if v < den + 1 else (v * 5) % (den + 1)
        qids = ["p%02d_q%02d" % (v, i + 1) for i in range(den)]
        verdicts = {q: (1 if i < num else 0) for i, q in enumerate(qids)}
        report = {
            "video_id": vid, "prompt_id": "p%02d" % v, "model": "model_%s" % "abc"[v % 3],
            "score": {"num": num, "den": den}, "display": "",
            "verdicts": verdicts,
            "categories": {"existence": {"num": num, "den": den}},
            "answered": den, "unanswered": 0,
        }
        with open(os.path.join(HERE, "correlation", "reports", vid + ".json"), "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
        base = 1 + 4 * num / den
        for a in range(5):
            likert = min(5, max(1, round(base + rng.choice([-0.4, 0, 0, 0.4]))))
            answers = {q: ("Yes" if (verdicts[q] == 1) != (rng.random() < 0.1) else "No") for q in qids}
            annotations.append({"video_id": vid, "annotator_id": "ann%d" % a,
                                "likert": likert, "answers": answers})
    dump(os.path.join(HERE, "correlation", "annotations.jsonl"), annotations)


def main():
    rng = random.Random(20250101)
    prompts, questions = corpus(rng)
    dump(os.path.join(HERE, "prompts_2k.jsonl"), prompts)
    dump(os.path.join(HERE, "questions_2k.jsonl"), questions)
    correlation_set(random.Random(7))


if __name__ == "__main__":
    main()
