"""Golden test vectors for the partition format."""

from __future__ import annotations

import json

from .chessrules import Position, apply_move, legal_ucis, parse_fen
from .watermark import (SplitMix64, WatermarkParams, fnv1a64, green_size, partition_for,
                        seed_from_observation)

PARTITION_CASES = [
    # (observation, key, actions, gamma)
    (b"x", b"", ["a", "b", "c", "d"], 0.25),
    (b"x", b"k", ["a", "b", "c", "d"], 0.25),
    (b"x", b"", ["a", "b", "c", "d"], 0.5),
    (b"node-17", b"secret", [f"a{i:02d}" for i in range(10)], 0.25),
    (b"node-17", b"secret", [f"a{i:02d}" for i in range(10)], 0.9),
    (b"/", b"", ["0", "1", "2", "3", "4", "5", "6", "7", "8"], 0.25),
]

CHESS_CASES = [
    ("startpos", Position.start().fen(), []),
    ("after 1.e4", Position.start().fen(), ["e2e4"]),
    ("after 1.e4 e5 2.Nf3", Position.start().fen(), ["e2e4", "e7e5", "g1f3"]),
    ("kiwipete", "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1", []),
]


def golden_vectors(key: bytes = b"") -> dict:
    out: dict = {"fnv1a64": [], "splitmix64": [], "seed": [], "green_size": [], "partition": [], "chess": []}
    for s in (b"", b"a", b"abc", b"foobar"):
        out["fnv1a64"].append({"input_hex": s.hex(), "hash": f"{fnv1a64(s):016x}"})
    for seed in (0, 1234567):
        rng = SplitMix64(seed)
        out["splitmix64"].append({"seed": seed, "outputs": [f"{rng.next():016x}" for _ in range(3)]})
    for obs, k in ((b"x", b""), (b"x", b"k"), (b"abc", b"")):
        out["seed"].append({"obs_hex": obs.hex(), "key_hex": k.hex(),
                            "seed": f"{seed_from_observation(obs, k):016x}"})
    for n, g in ((2, 0.25), (4, 0.25), (9, 0.25), (10, 0.25), (6, 0.25), (20, 0.9), (3, 0.5)):
        out["green_size"].append({"n": n, "gamma": g, "green": green_size(n, g)})
    for obs, k, actions, g in PARTITION_CASES:
        part = partition_for(obs, actions, WatermarkParams(gamma=g, key=k))
        out["partition"].append({
            "obs_hex": obs.hex(), "key_hex": k.hex(), "gamma": g, "actions": actions,
            "seed": f"{part.seed:016x}", "green": list(part.green),
        })
    for name, fen, moves in CHESS_CASES:
        pos = parse_fen(fen)
        for m in moves:
            pos = apply_move(pos, m)
        legal = legal_ucis(pos)
        part = partition_for(pos.observation(), legal, WatermarkParams(gamma=0.25, key=key))
        out["chess"].append({
            "name": name, "fen": pos.fen(), "observation": pos.observation().decode("ascii"),
            "legal_count": len(legal), "key_hex": key.hex(), "gamma": 0.25,
            "seed": f"{part.seed:016x}", "green": list(part.green),
        })
    return out


def dumps(key: bytes = b"") -> str:
    return json.dumps(golden_vectors(key), indent=2) + "\n"
