import torch

from spindle_bounds import seeding


def test_generator_replays():
    a = seeding.gaussian(seeding.generator(7, 1, seeding.Stream.GAUSSIAN), 5)
    b = seeding.gaussian(seeding.generator(7, 1, seeding.Stream.GAUSSIAN), 5)
    assert torch.equal(a, b)
    assert a.dtype == torch.float64


def test_streams_differ():
    a = seeding.gaussian(seeding.generator(7, 1, seeding.Stream.GAUSSIAN), 5)
    b = seeding.gaussian(seeding.generator(7, 1, seeding.Stream.INIT), 5)
    c = seeding.gaussian(seeding.generator(8, 1, seeding.Stream.GAUSSIAN), 5)
    assert not torch.equal(a, b)
    assert not torch.equal(a, c)


def test_spawn_seeds():
    seeds = seeding.spawn_seeds(3, 10)
    assert seeds == seeding.spawn_seeds(3, 10)
    assert len(set(seeds)) == 10
    assert seeding.spawn_seeds(3, 0) == []


def test_signs_and_permutation():
    s = seeding.signs(seeding.generator(1, seeding.Stream.SIGNS), 1000)
    assert set(s.tolist()) == {-1.0, 1.0}
    perm = seeding.permutation(seeding.generator(1, seeding.Stream.PERMUTATION), 50)
    assert sorted(perm.tolist()) == list(range(50))
