"""共享测试夹具."""

import numpy as np
import pytest

from src.core.model import BathSet, SystemParams


@pytest.fixture
def reference_params() -> SystemParams:
    """图 2 参数集: E1=4, E2=40, E3=44, g=3, γ=0.04."""
    return SystemParams.reference_defaults()


@pytest.fixture
def reference_baths() -> BathSet:
    """T_L=2, T_M=2, T_R=0.2."""
    return BathSet.of(2.0, 2.0, 0.2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def random_regime_draw(rng: np.random.Generator):
    """在推导区间附近随机抽取一组参数与温度."""
    e1 = rng.uniform(3.0, 5.0)
    e2 = rng.uniform(30.0, 50.0)
    g = rng.uniform(0.4, 0.8) * e1
    gammas = rng.uniform(0.01, 0.05, size=3)
    params = SystemParams(
        e1=e1, e2=e2, e3=e1 + e2, g=g,
        gamma={"L": gammas[0], "M": gammas[1], "R": gammas[2]},
    )
    t_l, t_m, t_r = rng.uniform(0.5, 3.0, size=3)
    return params, BathSet.of(t_l, t_m, t_r)


@pytest.fixture
def regime_draws(rng):
    """20 组随机参数与温度."""
    return [random_regime_draw(rng) for _ in range(20)]
