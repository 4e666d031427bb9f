"""The published format documents must agree with the code."""

import re
from pathlib import Path

import pytest

from stratmark.vectors import golden_vectors

DOCS = Path(__file__).resolve().parent.parent / "docs"
PARTITION_DOC = (DOCS / "PARTITION-FORMAT.md").read_text()


def table_rows(heading):
    """Cells of the markdown table under ``### heading``."""
    # the golden-vector tables come last; an earlier section may share a heading
    section = PARTITION_DOC.rsplit(f"### {heading}\n", 1)[1].split("\n#", 1)[0]
    rows = [l for l in section.splitlines() if l.startswith("|")][2:]
    return [[c.strip().strip("`") for c in r.strip("|").split("|")] for r in rows]


@pytest.fixture(scope="module")
def vectors():
    return golden_vectors(b"")


def test_fnv_table(vectors):
    doc = {("" if inp == "(empty)" else inp): h for inp, h in table_rows("FNV-1a 64")}
    code = {bytes.fromhex(v["input_hex"]).decode(): v["hash"] for v in vectors["fnv1a64"]}
    assert doc == code


def test_splitmix_table(vectors):
    doc = {int(seed): re.findall(r"[0-9a-f]{16}", outs) for seed, outs in table_rows("SplitMix64, first three outputs")}
    assert doc == {v["seed"]: v["outputs"] for v in vectors["splitmix64"]}


def test_seed_table(vectors):
    doc = {(obs, "" if key == "(empty)" else key): seed for obs, key, seed in table_rows("Seeds")}
    code = {(bytes.fromhex(v["obs_hex"]).decode(), bytes.fromhex(v["key_hex"]).decode()): v["seed"]
            for v in vectors["seed"]}
    assert doc == code


def test_green_size_table(vectors):
    doc = {(int(n), float(g)): int(k) for n, g, k in table_rows("Green sizes")}
    assert doc == {(v["n"], v["gamma"]): v["green"] for v in vectors["green_size"]}


def test_partition_table(vectors):
    rows = table_rows("Partitions")
    assert len(rows) == len(vectors["partition"])
    for (obs, key, gamma, _, green), v in zip(rows, vectors["partition"]):
        assert obs == bytes.fromhex(v["obs_hex"]).decode()
        assert ("" if key == "(empty)" else key) == bytes.fromhex(v["key_hex"]).decode()
        assert float(gamma) == v["gamma"]
        if green.startswith("all but "):
            missing = set(green[len("all but "):].split())
            assert set(v["green"]) == set(v["actions"]) - missing
        else:
            assert green.split() == v["green"]


def test_chess_table(vectors):
    rows = table_rows("Chess (empty key, gamma 0.25)")
    assert len(rows) == len(vectors["chess"])
    for (_, obs, count, green), v in zip(rows, vectors["chess"]):
        assert obs == v["observation"]
        assert int(count) == v["legal_count"]
        assert green.split() == v["green"]


def test_worked_example(vectors):
    assert "Green list: `[c]`" in PARTITION_DOC
    assert vectors["partition"][0]["green"] == ["c"]
