"""Independent partition oracle written from docs/PARTITION-FORMAT.md.

It shares no code with the package so that it can catch errors in it.
"""

import math


def oracle_fnv(data: bytes) -> int:
    h = 14695981039346656037
    for b in data:
        h = ((h ^ b) * 1099511628211) % 2**64
    return h


def oracle_splitmix(seed):
    s = seed
    while True:
        s = (s + 0x9E3779B97F4A7C15) % 2**64
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % 2**64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % 2**64
        yield z ^ (z >> 31)


def oracle_green(obs: bytes, key: bytes, actions, gamma):
    acts = sorted(actions, key=lambda a: a.encode())
    n = len(acts)
    g = min(max(int(math.floor(gamma * n + 0.5)), 1), n - 1)
    gen = oracle_splitmix(oracle_fnv(key + b"\x1f" + obs))
    for i in range(n - 1, 0, -1):
        m = i + 1
        limit = 2**64 - (2**64 % m)
        r = next(gen)
        while r >= limit:
            r = next(gen)
        j = r % m
        acts[i], acts[j] = acts[j], acts[i]
    return sorted(acts[:g], key=lambda a: a.encode())


def oracle_membership(obs: bytes, key: bytes, legal, action, gamma, min_branching=2):
    """'green', 'red' or 'skipped' for one recorded decision."""
    if len(legal) < max(2, min_branching):
        return "skipped"
    return "green" if action in oracle_green(obs, key, legal, gamma) else "red"
