from eonbench.rng import Xoshiro256, splitmix64


def _with_state(words):
    rng = Xoshiro256.__new__(Xoshiro256)
    rng.s = list(words)
    return rng


def test_xoshiro256ss_reference_vector():
    rng = _with_state([1, 2, 3, 4])
    assert [rng.next_u64() for _ in range(4)] == [11520, 0, 1509978240, 1215971899390074240]


def test_splitmix64_reference_vector():
    state, first = splitmix64(0)
    _, second = splitmix64(state)
    assert first == 0xE220A8397B1DCDAF
    assert second == 0x6E789E6AA1B965F4


def test_seeding_uses_four_splitmix_outputs():
    state, words = 42, []
    for _ in range(4):
        state, out = splitmix64(state)
        words.append(out)
    assert Xoshiro256(42).s == words


def test_below_is_in_range_and_deterministic():
    a, b = Xoshiro256(7), Xoshiro256(7)
    draws = [a.below(6) for _ in range(500)]
    assert draws == [b.below(6) for _ in range(500)]
    assert set(draws) == set(range(6))


def test_shuffle_is_a_permutation():
    items = list(range(20))
    Xoshiro256(3).shuffle(items)
    assert sorted(items) == list(range(20))
    assert items != list(range(20))
