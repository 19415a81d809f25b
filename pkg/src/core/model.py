"""物理模型模块：参数类型、缀饰本征系统与热库驱动的跃迁通道.

裸基矢顺序固定为 (|00⟩, |01⟩, |02⟩, |10⟩, |11⟩, |12⟩)，即 |q⟩⊗|t⟩ 的下标为
3·q + t，量子比特 q ∈ {0, 1}，三能级 t ∈ {0, 1, 2} 按能量递增编号。原始推导中
三能级列向量的写法（|1⟩₂=[0,1,0]ᵀ, |2⟩₂=[1,0,0]ᵀ）只是另一种排列，
所有物理量都在缀饰基下给出，与裸基顺序无关。

缀饰能级编号 1…6 对外使用从 1 开始的下标（与 λ1…λ6 一致），
数组内部使用 level - 1。
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from src.core.exceptions import (
    DegenerateFrequency,
    ParameterError,
    ResonanceViolation,
)

logger = logging.getLogger(__name__)

LEVEL_COUNT = 6
RESONANCE_TOLERANCE = 1e-12


class Bath(str, Enum):
    """三个热库标签."""

    L = "L"
    M = "M"
    R = "R"


BATHS: Tuple[Bath, ...] = (Bath.L, Bath.M, Bath.R)

BathKey = Union[Bath, str]


def _as_bath_map(values: Mapping[BathKey, float], what: str) -> Dict[Bath, float]:
    """把 {"L": x, ...} 之类的映射规范化为以 Bath 为键的字典."""
    try:
        normalized = {Bath(key): float(value) for key, value in values.items()}
    except ValueError as e:
        raise ParameterError(f"{what} 含有未知热库标签: {list(values)}") from e
    if set(normalized) != set(BATHS):
        raise ParameterError(f"{what} 必须恰好包含 L, M, R 三个热库, 实际为 {sorted(normalized)}")
    return normalized


@dataclass(frozen=True)
class SystemParams:
    """系统参数（以参考能量 E 为单位，ħ = k_B = 1）."""

    e1: float  # 量子比特激发能 E1
    e2: float  # 三能级第一激发能 E2
    e3: float  # 三能级第二激发能 E3
    g: float   # 内部耦合强度
    gamma: Dict[Bath, float] = field(default_factory=dict)  # 各热库衰减率 γ_μ

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", _as_bath_map(self.gamma, "gamma"))
        for name in ("e1", "e2", "e3", "g"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} 必须为有限正数, 实际为 {value}")
        for bath, rate in self.gamma.items():
            if not math.isfinite(rate) or rate <= 0:
                raise ParameterError(f"gamma_{bath.value.lower()} 必须为有限正数, 实际为 {rate}")
        require_resonance(self)

    @classmethod
    def reference_defaults(cls) -> "SystemParams":
        """图 2 使用的参数集：E1=4, E2=40, E3=44, g=0.75·E1, γ=0.01·E1."""
        return cls.uniform(e1=4.0, e2=40.0, g=3.0, gamma=0.04)

    @classmethod
    def uniform(cls, e1: float, e2: float, g: float, gamma: float) -> "SystemParams":
        """以共振条件 E3 = E1 + E2 构造、三个热库同一衰减率的参数."""
        return cls(e1=e1, e2=e2, e3=e1 + e2, g=g, gamma={bath: gamma for bath in BATHS})

    def gamma_of(self, bath: BathKey) -> float:
        return self.gamma[Bath(bath)]

    def with_gamma(self, **rates: float) -> "SystemParams":
        """替换部分热库的衰减率, 例如 with_gamma(M=1e-9)."""
        updated = dict(self.gamma)
        for key, value in rates.items():
            updated[Bath(key)] = value
        return SystemParams(e1=self.e1, e2=self.e2, e3=self.e3, g=self.g, gamma=updated)

    def with_coupling(self, g: float) -> "SystemParams":
        return SystemParams(e1=self.e1, e2=self.e2, e3=self.e3, g=g, gamma=dict(self.gamma))

    def scaled_gamma(self, factor: float) -> "SystemParams":
        return SystemParams(
            e1=self.e1, e2=self.e2, e3=self.e3, g=self.g,
            gamma={bath: rate * factor for bath, rate in self.gamma.items()},
        )


@dataclass(frozen=True)
class BathSet:
    """三个热库的温度（T = 0 允许, 此时占据数严格为 0）."""

    temperatures: Dict[Bath, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "temperatures", _as_bath_map(self.temperatures, "temperatures"))
        for bath, t in self.temperatures.items():
            if not math.isfinite(t) or t < 0:
                raise ParameterError(f"t_{bath.value.lower()} 必须为非负有限数, 实际为 {t}")

    @classmethod
    def of(cls, t_l: float, t_m: float, t_r: float) -> "BathSet":
        return cls({Bath.L: t_l, Bath.M: t_m, Bath.R: t_r})

    @classmethod
    def equilibrium(cls, t: float) -> "BathSet":
        return cls.of(t, t, t)

    def temperature(self, bath: BathKey) -> float:
        return self.temperatures[Bath(bath)]

    def with_temperature(self, bath: BathKey, t: float) -> "BathSet":
        updated = dict(self.temperatures)
        updated[Bath(bath)] = t
        return BathSet(updated)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """H_S 的解析本征系统.

    Attributes:
        eigenvalues: λ1…λ6 = [E1+E3, E3−g, E1, E3+g, E2, 0]
        eigenvectors: 6×6 正交矩阵, 第 k 列为 |λ_{k+1}⟩ 在裸基下的分量
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """V diag(λ) Vᵀ."""
        return self.eigenvectors @ np.diag(self.eigenvalues) @ self.eigenvectors.T

    def energy(self, level: int) -> float:
        return float(self.eigenvalues[level - 1])

    def to_dressed(self, operator: np.ndarray) -> np.ndarray:
        """把裸基下的算符变换到缀饰基: Vᵀ X V."""
        return self.eigenvectors.T @ operator @ self.eigenvectors


@dataclass(frozen=True)
class TransitionChannel:
    """单个热库驱动的缀饰态跃迁 upper → lower.

    weight 为 |⟨λ_lower|V_{μl}|λ_upper⟩|², label 是所属本征算符 V_{μl} 的名称。
    """

    bath: Bath
    omega: float
    upper: int
    lower: int
    weight: float
    label: str


@dataclass(frozen=True)
class SecularWarning:
    """久期近似条件的一次违背."""

    bath: Bath
    omega_a: float
    omega_b: float
    gap: float
    ratio: float


@dataclass(frozen=True)
class SecularReport:
    """久期近似检查结果（仅供参考, 不阻断计算）."""

    warnings: Tuple[SecularWarning, ...]
    max_ratio: float
    threshold: float

    @property
    def ok(self) -> bool:
        return not self.warnings


# 本征算符表: (热库, 标签, upper, lower, 权重)；频率一律取本征值之差
_CHANNEL_TABLE: Tuple[Tuple[Bath, str, int, int, float], ...] = (
    (Bath.L, "L1", 2, 3, 0.5),
    (Bath.L, "L2", 5, 6, 1.0),
    (Bath.L, "L3", 4, 3, 0.5),
    (Bath.M, "M1", 3, 6, 1.0),
    (Bath.M, "M2", 2, 5, 0.5),
    (Bath.M, "M2", 1, 4, 0.5),
    (Bath.M, "M3", 4, 5, 0.5),
    (Bath.M, "M3", 1, 2, 0.5),
    (Bath.R, "R1", 2, 6, 0.5),
    (Bath.R, "R2", 4, 6, 0.5),
    (Bath.R, "R3", 1, 3, 1.0),
)

CHANNEL_COUNT = len(_CHANNEL_TABLE)


def require_resonance(params: SystemParams) -> None:
    """检查共振条件 E3 = E1 + E2."""
    mismatch = abs(params.e3 - params.e1 - params.e2)
    if mismatch > RESONANCE_TOLERANCE * params.e3:
        raise ResonanceViolation(
            f"共振条件不满足 (resonance violation): |e3 - e1 - e2| = {mismatch:.3e}, "
            f"e1={params.e1}, e2={params.e2}, e3={params.e3}"
        )


def _basis_index(qubit: int, qutrit: int) -> int:
    return 3 * qubit + qutrit


def system_hamiltonian(params: SystemParams) -> np.ndarray:
    """裸基下的 H_S = E1|1⟩⟨1|⊗I + I⊗diag(0, E2, E3) + g(|11⟩⟨02| + h.c.)."""
    qubit_number = np.diag([0.0, 1.0])
    qutrit_levels = np.diag([0.0, params.e2, params.e3])
    hamiltonian = params.e1 * np.kron(qubit_number, np.eye(3)) + np.kron(np.eye(2), qutrit_levels)
    a, b = _basis_index(1, 1), _basis_index(0, 2)
    hamiltonian[a, b] += params.g
    hamiltonian[b, a] += params.g
    return hamiltonian


def bare_lowering_operator(bath: BathKey) -> np.ndarray:
    """各热库耦合的裸降算符.

    L 耦合三能级 |0⟩↔|1⟩, R 耦合三能级 |0⟩↔|2⟩, M 耦合量子比特。
    """
    bath = Bath(bath)
    if bath is Bath.M:
        sigma_minus = np.array([[0.0, 1.0], [0.0, 0.0]])
        return np.kron(sigma_minus, np.eye(3))
    qutrit_lowering = np.zeros((3, 3))
    qutrit_lowering[0, 1 if bath is Bath.L else 2] = 1.0
    return np.kron(np.eye(2), qutrit_lowering)


def diagonalize(params: SystemParams) -> EigenSystem:
    """返回 H_S 的解析本征系统（无需迭代求解器）.

    Args:
        params: 系统参数

    Returns:
        EigenSystem, 本征值顺序为 [E1+E3, E3−g, E1, E3+g, E2, 0]

    Raises:
        ResonanceViolation: 共振条件不满足
    """
    require_resonance(params)

    eigenvalues = np.array([
        params.e1 + params.e3,
        params.e3 - params.g,
        params.e1,
        params.e3 + params.g,
        params.e2,
        0.0,
    ])

    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    vectors = np.zeros((LEVEL_COUNT, LEVEL_COUNT))
    vectors[_basis_index(1, 2), 0] = 1.0                 # |λ1⟩ = |12⟩
    vectors[_basis_index(1, 1), 1] = inv_sqrt2           # |λ2⟩ = (|11⟩ − |02⟩)/√2
    vectors[_basis_index(0, 2), 1] = -inv_sqrt2
    vectors[_basis_index(1, 0), 2] = 1.0                 # |λ3⟩ = |10⟩
    vectors[_basis_index(1, 1), 3] = inv_sqrt2           # |λ4⟩ = (|11⟩ + |02⟩)/√2
    vectors[_basis_index(0, 2), 3] = inv_sqrt2
    vectors[_basis_index(0, 1), 4] = 1.0                 # |λ5⟩ = |01⟩
    vectors[_basis_index(0, 0), 5] = 1.0                 # |λ6⟩ = |00⟩

    eigenvalues.setflags(write=False)
    vectors.setflags(write=False)
    return EigenSystem(eigenvalues=eigenvalues, eigenvectors=vectors)


def eigenoperator_channels(params: SystemParams) -> List[TransitionChannel]:
    """列出 11 条布居耦合跃迁通道, 按 (热库, 频率, upper) 排序.

    Raises:
        ResonanceViolation: 共振条件不满足
        DegenerateFrequency: 任一通道频率 ≤ 0
    """
    eigensystem = diagonalize(params)
    channels = []
    for bath, label, upper, lower, weight in _CHANNEL_TABLE:
        omega = eigensystem.energy(upper) - eigensystem.energy(lower)
        if omega <= 0:
            raise DegenerateFrequency(
                f"通道 {label} ({upper}→{lower}) 的频率 ω = {omega} ≤ 0, 需要 g < E1 且 g < E2"
            )
        channels.append(TransitionChannel(
            bath=bath, omega=omega, upper=upper, lower=lower, weight=weight, label=label,
        ))
    bath_order = {bath: k for k, bath in enumerate(BATHS)}
    channels.sort(key=lambda c: (bath_order[c.bath], c.omega, c.upper))
    return channels


def operator_frequencies(channels: List[TransitionChannel]) -> Dict[Bath, Dict[str, float]]:
    """每个热库的本征算符频率（拆分算符 M2/M3 取其第一个分量）."""
    frequencies: Dict[Bath, Dict[str, float]] = {bath: {} for bath in BATHS}
    for channel in channels:
        frequencies[channel.bath].setdefault(channel.label, channel.omega)
    return frequencies


def validate_secular(params: SystemParams, threshold: Optional[float] = None) -> SecularReport:
    """检查久期近似 γ_μ ≪ min{|ω − ω'|, |ω − ω' ± 2g|, g}.

    "≪" 以比值 < threshold（默认 0.1）判定；每一对同热库频率给出一个比值,
    超限时记录一条警告。
    """
    if threshold is None:
        from src.utils.config import get_settings
        threshold = get_settings().secular_ratio_threshold

    warnings: List[SecularWarning] = []
    max_ratio = 0.0
    for bath, by_label in operator_frequencies(eigenoperator_channels(params)).items():
        gamma = params.gamma[bath]
        for omega_a, omega_b in combinations(sorted(by_label.values()), 2):
            delta = omega_a - omega_b
            candidates = [abs(delta), abs(delta + 2 * params.g), abs(delta - 2 * params.g), params.g]
            gap = min(c for c in candidates if c > 0)
            ratio = gamma / gap
            max_ratio = max(max_ratio, ratio)
            if ratio >= threshold:
                warnings.append(SecularWarning(bath, omega_a, omega_b, gap, ratio))
                logger.warning(
                    f"久期近似可能失效: 热库 {bath.value}, 频率 {omega_a:g}/{omega_b:g}, "
                    f"γ/间隙 = {ratio:.3g} ≥ {threshold}"
                )

    return SecularReport(warnings=tuple(warnings), max_ratio=max_ratio, threshold=threshold)
