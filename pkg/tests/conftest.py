"""Pytest configuration and fixtures"""

from collections.abc import Callable

import numpy as np
import pytest

from tylershape.schemas.datasets import DataSet, EllipticalModel, ULaw, XiMode
from tylershape.schemas.experiments import ExperimentConfig, ExperimentKind
from tylershape.services.datagen import ar_shape, sample_elliptical
from tylershape.utils.rng import realization_stream

MASTER_SEED = 20190


@pytest.fixture
def rng() -> np.random.Generator:
    """A fresh, fixed stream for each test"""
    return realization_stream(MASTER_SEED, 0)


@pytest.fixture
def four_point_data() -> DataSet:
    """{e1, e2, (e1 + e2)/sqrt 2, (e1 - e2)/sqrt 2}: both solvers return the identity"""
    s = 1.0 / np.sqrt(2.0)
    samples = np.array([[1.0, 0.0], [0.0, 1.0], [s, s], [s, -s]])
    return DataSet(samples=samples)


@pytest.fixture
def ar_data() -> Callable[..., DataSet]:
    """Factory for AR(rho) elliptical datasets on their own realization stream"""

    def _make(
        n: int,
        p: int,
        seed: int = 0,
        rho: float = 0.7,
        u_law: ULaw = ULaw.CONSTANT,
        xi_mode: XiMode = XiMode.STANDARD_GAUSSIAN,
    ) -> DataSet:
        model = EllipticalModel(shape=ar_shape(p, rho), xi_mode=xi_mode, u_law=u_law)
        return sample_elliptical(model, n, realization_stream(MASTER_SEED, seed))

    return _make


@pytest.fixture
def small_config(tmp_path) -> Callable[..., ExperimentConfig]:
    """Factory for quick experiment configs writing under tmp_path"""

    def _make(experiment: ExperimentKind, **overrides) -> ExperimentConfig:
        data = {
            "experiment": experiment,
            "n_values": [24],
            "p_over_n": [0.5],
            "realizations": 2,
            "output_dir": str(tmp_path / "results"),
        }
        data.update(overrides)
        return ExperimentConfig.model_validate(data)

    return _make
