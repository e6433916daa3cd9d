import numpy as np
import pytest

from modwhittle import (
    ar_model,
    bernoulli_mask,
    car1_model,
    frequency_modulator,
    ma_model,
    periodic_missing_mask,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def random_model(rng, families=("ar", "ma", "car1")):
    kind = rng.choice(families)
    if kind == "ar":
        return ar_model([rng.uniform(-0.9, 0.9)], rng.uniform(0.5, 2.0))
    if kind == "ma":
        return ma_model(rng.uniform(-1.0, 1.0, size=2), rng.uniform(0.5, 2.0))
    return car1_model(rng.uniform(0.0, 0.95), rng.uniform(0.5, 2.0))


def random_modulator(rng, n, kinds=("constant", "periodic", "bernoulli", "frequency")):
    kind = rng.choice(kinds)
    if kind == "constant":
        from modwhittle import constant_modulator
        return constant_modulator(n, rng.uniform(0.5, 2.0))
    if kind == "periodic":
        return periodic_missing_mask(int(rng.integers(1, 5)), int(rng.integers(0, 3)), n)
    if kind == "bernoulli":
        mod = bernoulli_mask(rng.uniform(0.4, 1.0), seed=int(rng.integers(1 << 31)), n=n)
        if mod.g.sum() == 0:
            return periodic_missing_mask(1, 1, n)
        return mod
    return frequency_modulator(rng.uniform(-0.8, 0.8, size=n - 1))
