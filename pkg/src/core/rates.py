"""速率模块：热占据数、通道速率系数与布居速率生成元.

生成元 W 作用于布居向量 |ρ⟩ = [ρ11 … ρ66]ᵀ, dρ/dt = W ρ。
对通道 (i 上能级, j 下能级, 权重 w, 热库 μ)：
    W_μ[j, i] += 2·w·A,   W_μ[i, i] -= 2·w·A
    W_μ[i, j] += 2·w·B,   W_μ[j, j] -= 2·w·B
其中 A = γ_μ(n+1)、B = γ_μ n。因子 2 来自耗散子 2VρV† − {V†V, ρ} 的写法。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np

from src.core.exceptions import (
    IncompleteChannels,
    NonPositiveFrequency,
    ParameterError,
)
from src.core.model import (
    BATHS,
    CHANNEL_COUNT,
    LEVEL_COUNT,
    Bath,
    BathKey,
    BathSet,
    SystemParams,
    TransitionChannel,
    eigenoperator_channels,
)

logger = logging.getLogger(__name__)

# ω/T 低于此值时改用经典极限, 截断误差低于双精度舍入
CLASSICAL_LIMIT_RATIO = 1e-9


def bose_occupation(omega: float, t: float) -> float:
    """玻色-爱因斯坦占据数 n = 1/(exp(ω/T) − 1).

    用 expm1 计算, ω/T ≪ 1 时无相消误差, ω/T ≫ 1 时干净地下溢到 0。
    ω/T 极小（含下溢为 0）时取经典极限 T/ω − 1/2。

    Raises:
        NonPositiveFrequency: ω ≤ 0
        ParameterError: T < 0
    """
    if not omega > 0:
        raise NonPositiveFrequency(f"跃迁频率必须为正, 实际为 {omega}")
    if t < 0:
        raise ParameterError(f"温度不能为负, 实际为 {t}")
    if t == 0:
        return 0.0
    x = omega / t
    if x < CLASSICAL_LIMIT_RATIO:
        # n = T/ω − 1/2 + O(ω/T), 超出浮点范围时为 inf
        return t / omega - 0.5
    with np.errstate(over="ignore"):
        return float(1.0 / np.expm1(x))


@dataclass(frozen=True)
class RatePair:
    """单通道的发射系数 a = γ(n+1) 与吸收系数 b = γn."""

    a: float
    b: float

    @property
    def detailed_balance_ratio(self) -> float:
        """b/a, 有限温度下等于 exp(−ω/T)."""
        return self.b / self.a


def rate_pair(channel: TransitionChannel, baths: BathSet, params: SystemParams) -> RatePair:
    """计算通道在其热库温度下的速率系数."""
    gamma = params.gamma_of(channel.bath)
    n = bose_occupation(channel.omega, baths.temperature(channel.bath))
    return RatePair(a=gamma * (n + 1.0), b=gamma * n)


ChannelKey = Tuple[Bath, int, int]


def channel_key(channel: TransitionChannel) -> ChannelKey:
    return channel.bath, channel.upper, channel.lower


@dataclass(frozen=True, eq=False)
class PopulationGenerator:
    """布居速率生成元 W = Σ_μ W_μ 及其构造所用的通道与速率."""

    matrix: np.ndarray
    per_bath: Dict[Bath, np.ndarray]
    channels: Tuple[TransitionChannel, ...] = field(repr=False)
    rates: Tuple[RatePair, ...] = field(repr=False)

    def bath_matrix(self, bath: BathKey) -> np.ndarray:
        return self.per_bath[Bath(bath)]

    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def scale(self) -> float:
        """‖W‖_max."""
        return float(np.max(np.abs(self.matrix)))

    def with_flipped_entry(self, bath: BathKey, row: int, col: int) -> "PopulationGenerator":
        """翻转 W_μ 中一个元素的符号（能级下标从 1 开始）, 仅用于验证套件的故障注入."""
        bath = Bath(bath)
        per_bath = {key: value.copy() for key, value in self.per_bath.items()}
        per_bath[bath][row - 1, col - 1] *= -1.0
        logger.debug(f"故障注入: W_{bath.value}[{row},{col}] 取反")
        return _freeze(per_bath, self.channels, self.rates)


def _freeze(
    per_bath: Dict[Bath, np.ndarray],
    channels: Tuple[TransitionChannel, ...],
    rates: Tuple[RatePair, ...],
) -> PopulationGenerator:
    matrix = per_bath[Bath.L] + per_bath[Bath.M] + per_bath[Bath.R]
    for value in (matrix, *per_bath.values()):
        value.setflags(write=False)
    return PopulationGenerator(matrix=matrix, per_bath=per_bath, channels=channels, rates=rates)


def _require_canonical(channels: List[TransitionChannel], params: SystemParams) -> None:
    canonical = {
        (c.bath, c.upper, c.lower, c.weight) for c in eigenoperator_channels(params)
    }
    supplied = [(c.bath, c.upper, c.lower, c.weight) for c in channels]
    if len(supplied) != CHANNEL_COUNT or set(supplied) != canonical:
        missing = sorted(canonical - set(supplied), key=str)
        raise IncompleteChannels(
            f"需要标准的 {CHANNEL_COUNT} 条通道, 实际 {len(supplied)} 条; 缺少: {missing}"
        )


def assemble_generator(
    channels: Iterable[TransitionChannel],
    baths: BathSet,
    params: SystemParams,
) -> PopulationGenerator:
    """由通道列表组装布居速率生成元.

    Args:
        channels: eigenoperator_channels 给出的 11 条通道
        baths: 热库温度
        params: 系统参数

    Returns:
        PopulationGenerator, 每列之和为零

    Raises:
        IncompleteChannels: 通道列表不是标准的 11 条
    """
    channels = list(channels)
    _require_canonical(channels, params)

    per_bath = {bath: np.zeros((LEVEL_COUNT, LEVEL_COUNT)) for bath in BATHS}
    pairs = []
    for channel in channels:
        pair = rate_pair(channel, baths, params)
        pairs.append(pair)
        i, j = channel.upper - 1, channel.lower - 1
        w = per_bath[channel.bath]
        emission = 2.0 * channel.weight * pair.a
        absorption = 2.0 * channel.weight * pair.b
        w[j, i] += emission
        w[i, i] -= emission
        w[i, j] += absorption
        w[j, j] -= absorption

    generator = _freeze(per_bath, tuple(channels), tuple(pairs))
    logger.debug(
        f"生成元组装完成: T = {[baths.temperature(b) for b in BATHS]}, ‖W‖_max = {generator.scale():.3e}"
    )
    return generator


# 分块形式的逐项转写: (能级 i, 能级 m, 本征算符, 系数)
# L3 块放在 (4, 3) 上, R3 块带因子 2。
_BLOCK_TABLE: Dict[Bath, Tuple[Tuple[int, int, str, float], ...]] = {
    Bath.L: (
        (2, 3, "L1", 1.0),
        (5, 6, "L2", 2.0),
        (4, 3, "L3", 1.0),
    ),
    Bath.M: (
        (3, 6, "M1", 2.0),
        (1, 4, "M2", 1.0),
        (2, 5, "M2", 1.0),
        (1, 2, "M3", 1.0),
        (4, 5, "M3", 1.0),
    ),
    Bath.R: (
        (2, 6, "R1", 1.0),
        (4, 6, "R2", 1.0),
        (1, 3, "R3", 2.0),
    ),
}


def _block_frequency(label: str, params: SystemParams) -> float:
    e1, e2, e3, g = params.e1, params.e2, params.e3, params.g
    return {
        "L1": e2 - g, "L2": e2, "L3": e2 + g,
        "M1": e1, "M2": e1 - g, "M3": e1 + g,
        "R1": e3 - g, "R2": e3 + g, "R3": e3,
    }[label]


def _selector(i: int, m: int) -> np.ndarray:
    """C_{i,1;m,2}: 把 2×2 速率块放到布居对 (i, m) 上."""
    c = np.zeros((LEVEL_COUNT, 2))
    c[i - 1, 0] = 1.0
    c[m - 1, 1] = 1.0
    return c


def _rate_block(a: float, b: float) -> np.ndarray:
    """J = [[−A, B], [A, −B]]."""
    return np.array([[-a, b], [a, -b]])


def assemble_block_generator(bath: BathKey, baths: BathSet, params: SystemParams) -> np.ndarray:
    """按分块形式 Σ C J Cᵀ 独立构造 M_μ, 仅用于与 assemble_generator 交叉核对."""
    bath = Bath(bath)
    gamma = params.gamma_of(bath)
    t = baths.temperature(bath)

    m_matrix = np.zeros((LEVEL_COUNT, LEVEL_COUNT))
    for i, m, label, coefficient in _BLOCK_TABLE[bath]:
        n = bose_occupation(_block_frequency(label, params), t)
        c = _selector(i, m)
        m_matrix += coefficient * (c @ _rate_block(gamma * (n + 1.0), gamma * n) @ c.T)

    return m_matrix


def relative_mismatch(bath: BathKey, generator: PopulationGenerator, baths: BathSet,
                      params: SystemParams) -> float:
    """‖W_μ − M_μ‖_max / ‖M_μ‖_max."""
    reference = assemble_block_generator(bath, baths, params)
    scale = float(np.max(np.abs(reference)))
    diff = float(np.max(np.abs(generator.bath_matrix(bath) - reference)))
    return diff / scale if scale > 0 else (0.0 if diff == 0 else math.inf)
