import dataclasses

import numpy as np
import pytest

from skylands.config import RenderConfig
from skylands.decoder import DecoderWeights, HeightfieldOracle
from skylands.grid import GeneratorStack, LayerSpec
from skylands.world import NeuralWorld, OracleWorld, ProjectionP


def tiny_generator(seed: int = 0) -> GeneratorStack:
    """Small pyramid (32-cell tiles) for fast structural tests."""
    return GeneratorStack(
        latent_dim=16,
        style_dim=16,
        const_res=8,
        const_ch=16,
        layers=(
            LayerSpec(1, 16, 16),
            LayerSpec(2, 16, 16),
            LayerSpec(2, 16, 8),
        ),
        output_channels=8,
        weight_seed=seed,
    )


def fast_world(seed: int = 0, **config_kw) -> NeuralWorld:
    """Neural world with a tiny generator and a narrow decoder."""
    config = RenderConfig(lr_resolution=8, samples_per_ray=32,
                          cell_width=0.15, **config_kw)
    stack = tiny_generator(seed)
    decoder = DecoderWeights(feature_dim=8, hidden=32, color_dim=16,
                             weight_seed=seed + 1)
    projection = ProjectionP.from_seed(seed + 2, channels=16)
    return NeuralWorld(seed, config=config, stack=stack, decoder=decoder,
                       projection=projection)


@pytest.fixture(scope="session")
def tiny_stack():
    return tiny_generator(3)


@pytest.fixture(scope="session")
def world_small():
    return fast_world(11)


@pytest.fixture(scope="session")
def flat_oracle_world():
    """Flat terrain at height 0.5, sharply bounded, with smooth texture."""
    oracle = HeightfieldOracle(base_height=0.5, sigma_solid=50.0,
                               texture_amplitude=0.5, texture_scale=3.0)
    config = RenderConfig()
    return OracleWorld(oracle=oracle, config=config, noise_seed=5)


@pytest.fixture(scope="session")
def full_world():
    """Full-size neural world shared across integration tests."""
    return NeuralWorld(7)
