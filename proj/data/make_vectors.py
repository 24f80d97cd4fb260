#!/usr/bin/env python3
# Copyright 2026 The proknow Authors.
# SPDX-License-Identifier: Apache-2.0
"""Writes data/vectors.txt: small topic-clustered word vectors.

Every word in a topic cluster is its cluster centre plus seeded noise, so
cosine is high within a topic and near zero across topics. Remaining corpus
words get an independent random vector. Stopwords get no vector.
"""

import json
import pathlib
import re

import numpy as np

DIM = 24
SEED = 20260101
NOISE = 0.35

CLUSTERS = {
    "anxiety": "anxiety anxious nervous nervousness edge worry worrying worried fear panic panicky tense tension "
               "restless restlessness dread jitters fretful scared afraid calm relaxation breathing petrified "
               "terrified shaken edgy antsy troubled",
    "sleep": "sleep sleeping asleep insomnia awake nights night nightmares waking routine",
    "energy": "tired fatigue energy exhausted exhaustion weakness",
    "mood": "interest pleasure hobbies activities enjoy mood sadness hopelessness depressed dejection melancholy "
            "blue spirit irritable annoyed",
    "appetite": "appetite overeating overeat meals meal eating weight nausea",
    "cognition": "concentration concentrating distortions cognitive",
    "neurochemistry": "dopamine serotonin cortisol melatonin thyroid ghrelin levels hormone hormones neurotransmitters "
                      "brain chemistry supplements boost imbalance",
    "care": "remedies medication exercise exercises techniques symptoms",
    "slang": "stuff weird kinda vibes junk whatever meh funky wiped munchies tricks random chill crash nonstop "
             "spin snap power fix nerve head bedtime hobby battery",
}

TOKEN = re.compile(r"[a-z0-9]+(?:['-][a-z0-9]+)*")


def tokens(text):
    return TOKEN.findall(text.lower())


def corpus_words(root):
    words = set()
    for path in [root / "table2.jsonl", root / "synthetic" / "corpus.jsonl"]:
        for line in path.read_text().splitlines():
            rec = json.loads(line)
            for e in rec.get("elaborations", []):
                words.update(tokens(e["text"]))
            words.update(tokens(rec.get("item_text", "")))
    for path in [root / "synthetic" / "lexicon.json", root / "table3_lexicon.json"]:
        for phrases in json.loads(path.read_text())["categories"].values():
            for p in phrases:
                words.update(tokens(p))
    for c in json.loads((root / "synthetic" / "kb.json").read_text())["concepts"]:
        words.update(tokens(c))
    return words


def main():
    root = pathlib.Path(__file__).resolve().parent
    stop = set((root / "stopwords.txt").read_text().split())
    rng = np.random.default_rng(SEED)
    vectors = {}
    for name in sorted(CLUSTERS):
        centre = rng.standard_normal(DIM)
        centre /= np.linalg.norm(centre)
        for w in CLUSTERS[name].split():
            v = centre + NOISE * rng.standard_normal(DIM) / np.sqrt(DIM)
            vectors[w] = v / np.linalg.norm(v)
    for w in sorted(corpus_words(root) - stop - set(vectors)):
        v = rng.standard_normal(DIM)
        vectors[w] = v / np.linalg.norm(v)
    with open(root / "vectors.txt", "w") as out:
        out.write(f"{len(vectors)} {DIM}\n")
        for w in sorted(vectors):
            out.write(w + " " + " ".join(f"{x:.6f}" for x in vectors[w]) + "\n")


if __name__ == "__main__":
    main()
