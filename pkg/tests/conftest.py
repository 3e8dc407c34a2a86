from __future__ import annotations

import json
import os
import random
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
SAMPLES = os.path.join(os.path.dirname(os.path.dirname(__file__)), "samples")

_VOCAB = (
    "river stone maple harbor lantern meadow copper saddle barley crow "
    "mill tide cart bell fern moss ridge vale loom kiln wren oak elm ash "
    "garden window letter winter summer morning market bridge tower"
).split()


def synthetic_sentence(rng: random.Random, words: int) -> str:
    toks = [rng.choice(_VOCAB) for _ in range(words)]
    toks[0] = toks[0].capitalize()
    return " ".join(toks) + "."


def synthetic_prose_record(rng: random.Random, rec_id: str, sentences: int) -> dict:
    sents = [synthetic_sentence(rng, rng.randint(4, 9)) for _ in range(sentences)]
    return {"id": rec_id, "kind": "prose", "text": " ".join(sents)}


def write_jsonl(path, objs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@pytest.fixture(scope="session")
def walkthrough_fixture_path() -> str:
    return os.path.join(FIXTURES, "walkthrough_backend.json")


@pytest.fixture(scope="session")
def synthetic_corpus_10k(tmp_path_factory) -> str:
    """10k small prose records; shared by grammar/determinism tests."""
    rng = random.Random(20260816)
    path = tmp_path_factory.mktemp("corpus") / "synthetic_10k.jsonl"
    write_jsonl(
        path,
        (synthetic_prose_record(rng, f"doc{i:05d}", rng.randint(3, 6))
         for i in range(10_000)),
    )
    return str(path)
