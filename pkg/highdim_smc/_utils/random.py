import numpy as np


def as_generator(seed_or_rng=None):
    """
    Return a ``numpy.random.Generator`` from a seed, a ``SeedSequence`` or an existing generator.

    Args:
        seed_or_rng: ``None``, an integer seed, a ``SeedSequence`` or a ``Generator``.

    Returns:
        numpy.random.Generator: The generator to draw from.
    """
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def spawn_seeds(master_seed, count):
    """
    Derive ``count`` independent child seed sequences from a master seed.

    Child ``r`` depends only on ``(master_seed, r)``, so replicate results do not depend on the
    order in which a worker pool schedules them.

    Args:
        master_seed (int | tuple[int, ...]): Entropy of the master seed sequence.
        count (int): Number of child sequences.

    Returns:
        list[numpy.random.SeedSequence]: One child per replicate index.
    """
    return np.random.SeedSequence(master_seed).spawn(count)


def spawn_generators(master_seed, count):
    """
    Derive ``count`` independent generators from a master seed, one per replicate index.

    Args:
        master_seed (int | tuple[int, ...]): Entropy of the master seed sequence.
        count (int): Number of generators.

    Returns:
        list[numpy.random.Generator]: Philox-backed generators.
    """
    return [np.random.Generator(np.random.Philox(child)) for child in spawn_seeds(master_seed, count)]
