import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratmark.watermark import (ContractError, SplitMix64, WatermarkParams, adjust_values, adjustment,
                                 argmax_green_first, canonical_order, check_canonical, fisher_yates,
                                 fnv1a64, green_size, next_action, partition_actions, partition_for,
                                 prefix_adjustment, seed_from_observation)

from partition_oracle import oracle_fnv, oracle_green


@pytest.mark.parametrize("data,expected", [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
])
def test_fnv_published_vectors(data, expected):
    assert fnv1a64(data) == expected
    assert oracle_fnv(data) == expected


def test_splitmix_published_vectors():
    rng = SplitMix64(0)
    assert [rng.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_seed_uses_separator():
    assert seed_from_observation(b"x", b"k") == fnv1a64(b"k\x1fx")
    assert seed_from_observation(b"x") == 0x087A4E07B528C302
    # moving a byte between key and observation changes the seed
    assert seed_from_observation(b"bc", b"a") != seed_from_observation(b"c", b"ab")


def test_empty_observation_rejected():
    with pytest.raises(ContractError):
        seed_from_observation(b"", b"k")


def test_below_rejects_biased_draws():
    # a generator whose first output lands above the rejection limit for bound 3
    class Fixed(SplitMix64):
        def __init__(self, values):
            self.values = list(values)

        def next(self):
            return self.values.pop(0)

    limit = 2**64 - (2**64 % 3)
    assert Fixed([limit, 7]).below(3) == 1
    assert Fixed([limit - 1]).below(3) == (limit - 1) % 3
    with pytest.raises(ContractError):
        SplitMix64(1).below(0)


def test_below_range():
    rng = SplitMix64(42)
    draws = [rng.below(5) for _ in range(2000)]
    assert set(draws) == set(range(5))


@pytest.mark.parametrize("n,gamma,g", [
    (2, 0.25, 1), (3, 0.5, 2), (4, 0.25, 1), (6, 0.25, 2), (9, 0.25, 2), (10, 0.25, 3),
    (20, 0.9, 18), (2, 0.99, 1), (100, 0.001, 1),
])
def test_green_size(n, gamma, g):
    assert green_size(n, gamma) == g


def test_worked_example():
    part = partition_for(b"x", ["a", "b", "c", "d"], WatermarkParams(gamma=0.25))
    assert part.green == ("c",)
    assert part.red == ("a", "b", "d")
    rng = SplitMix64(part.seed)
    assert fisher_yates(["a", "b", "c", "d"], rng) == ["c", "a", "d", "b"]


def test_key_changes_partition():
    acts = [f"a{i:02d}" for i in range(20)]
    parts = {partition_for(b"obs", acts, WatermarkParams(key=k)).green for k in (b"", b"k1", b"k2", b"k3")}
    assert len(parts) == 4


def test_str_key_is_utf8():
    assert WatermarkParams(key="clé").key == "clé".encode()


action_lists = st.lists(st.text(min_size=1, max_size=4), min_size=2, max_size=30, unique=True)


@settings(max_examples=200, deadline=None)
@given(actions=action_lists, obs=st.binary(min_size=1, max_size=20), key=st.binary(max_size=8),
       gamma=st.floats(0.01, 0.99))
def test_partition_matches_oracle(actions, obs, key, gamma):
    acts = canonical_order(actions)
    part = partition_actions(acts, seed_from_observation(obs, key), gamma)
    assert list(part.green) == oracle_green(obs, key, acts, gamma)
    assert set(part.green) | set(part.red) == set(acts)
    assert not set(part.green) & set(part.red)
    assert len(part.green) == green_size(len(acts), gamma)
    assert list(part.red) == [a for a in acts if a in part.red]


def test_canonical_order_is_bytewise():
    # 'Z' < 'a' < 'é' bytewise; a prefix sorts first
    assert canonical_order(["é", "a", "Z", "ab"]) == ["Z", "a", "ab", "é"]
    with pytest.raises(ContractError):
        check_canonical(["b", "a"])
    with pytest.raises(ContractError):
        check_canonical(["a", "a"])
    with pytest.raises(ContractError):
        partition_actions(["b", "a"], 1, 0.5)


def test_single_action_is_pass_through():
    assert partition_actions(["a"], 1, 0.25) is None
    assert partition_for(b"x", ["a", "b", "c"], WatermarkParams(min_branching=4)) is None


@pytest.mark.parametrize("kwargs", [
    dict(gamma=0.0), dict(gamma=1.0), dict(gamma=float("nan")), dict(delta=-0.1),
    dict(delta=float("inf")), dict(min_branching=1),
])
def test_params_validation(kwargs):
    with pytest.raises((ContractError, ValueError)):
        WatermarkParams(**kwargs)


def test_adjustments_and_cap():
    p = WatermarkParams(gamma=0.25, delta=0.6)
    assert adjustment(True, p) == pytest.approx(0.6)
    assert adjustment(False, p) == pytest.approx(-0.2)
    assert p.regret_cap == pytest.approx(0.8)
    # expected adjustment of a uniformly random action is zero when g/n = gamma
    part = partition_actions(["a", "b", "c", "d"], 5, 0.25)
    assert sum(adjust_values([0, 0, 0, 0], ["a", "b", "c", "d"], part, p)) == pytest.approx(0.0)


def test_argmax_prefers_green_then_canonical():
    acts = ["a", "b", "c", "d"]
    part = partition_actions(acts, seed_from_observation(b"x"), 0.25)  # green = c
    assert argmax_green_first([1.0, 1.0, 1.0, 0.0], acts, part) == 2
    assert argmax_green_first([1.0, 1.0, 0.0, 0.0], acts, part) == 0
    assert argmax_green_first([1.0, 1.0, 0.0, 0.0], acts, None) == 0


def test_next_action():
    acts = ["a", "b", "c", "d"]
    p = WatermarkParams(gamma=0.25, delta=0.5)
    d = next_action(b"x", acts, [1.0, 0.9, 0.7, 0.0], p)
    # c is green: 0.7 + 0.5 = 1.2 beats a at 1.0 - 1/6
    assert d.action == "c" and d.green and d.watermarked
    d = next_action(b"x", acts, [2.0, 0.9, 0.7, 0.0], p)
    assert d.action == "a" and not d.green
    d = next_action(b"x", ["only"], [3.0], p)
    assert d.action == "only" and not d.watermarked and d.green is None
    with pytest.raises(ContractError):
        next_action(b"x", acts, [1.0, 2.0], p)


def test_delta_zero_is_plain_argmax():
    acts = [f"m{i}" for i in range(8)]
    p = WatermarkParams(gamma=0.25, delta=0.0)
    vals = [0.1, 0.9, 0.3, 0.5, 0.2, 0.8, 0.0, 0.4]
    assert next_action(b"o", acts, vals, p).action == "m1"


def test_prefix_adjustment_sums_steps():
    p = WatermarkParams(gamma=0.25, delta=0.5)
    acts = ["a", "b", "c", "d"]
    steps = [(b"x", acts, "c"), (b"x", acts, "a"), (b"y", ["only"], "only")]
    assert prefix_adjustment(steps, p) == pytest.approx(0.5 - 0.5 / 3)


def test_observation_bytes_are_exact():
    # a trailing byte is a different observation
    base = struct.pack(">I", 7)
    assert seed_from_observation(base) != seed_from_observation(base + b"\x00")
