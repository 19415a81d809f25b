"""稳态求解模块.

提供四条相互独立的求解路线:
- NUMERICAL: 速率生成元的零空间（GTH 状态约化, 高精度算术）
- APPROXIMATE: 忽略 λ1、λ4 后的四能级解析公式
- ODE_ORACLE: dρ/dt = Wρ 的长时间积分
- FULL_LIOUVILLIAN_ORACLE: 36 维刘维尔超算符的零空间
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from mpmath.ctx_mp import MPContext
from scipy.integrate import solve_ivp
from scipy.linalg import null_space
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from src.core.exceptions import (
    DegenerateNullSpace,
    NonDiagonalSteadyState,
    ParameterError,
    SolverError,
    StiffnessFailure,
)
from src.core.model import (
    BATHS,
    LEVEL_COUNT,
    Bath,
    BathSet,
    SystemParams,
    bare_lowering_operator,
    diagonalize,
    eigenoperator_channels,
)
from src.core.rates import (
    PopulationGenerator,
    assemble_generator,
    channel_key,
    rate_pair,
)
from src.utils.config import get_settings

logger = logging.getLogger(__name__)

CLAMP_TOLERANCE = 1e-14
NORMALIZATION_TOLERANCE = 1e-12
ODE_SUM_TOLERANCE = 1e-9
OFF_DIAGONAL_TOLERANCE = 1e-10
RELAXATION_TIMES = 100.0


class SolveMethod(str, Enum):
    """稳态求解方法."""

    NUMERICAL = "numerical"
    APPROXIMATE = "approximate"
    ODE_ORACLE = "ode_oracle"
    FULL_LIOUVILLIAN_ORACLE = "full_liouvillian_oracle"


@dataclass(frozen=True, eq=False)
class SteadyState:
    """稳态布居（缀饰基, ρ11 … ρ66）.

    high_precision 保存高精度路线得到的布居, 供热流与差分计算使用;
    populations 是它的双精度舍入。
    """

    populations: np.ndarray
    method: SolveMethod
    residual: float
    high_precision: Optional[Tuple] = field(default=None, repr=False)

    def population(self, level: int) -> float:
        return float(self.populations[level - 1])


@lru_cache(maxsize=8)
def working_context(digits: int) -> MPContext:
    """返回指定十进制位数的私有 mpmath 上下文（不改动全局 mp 精度）."""
    ctx = MPContext()
    ctx.dps = digits
    return ctx


def _resolve_digits(digits: Optional[int]) -> int:
    return digits if digits is not None else get_settings().working_digits


def _finalize(populations: np.ndarray) -> np.ndarray:
    """截断 (−1e-14, 0) 内的舍入负值并重新归一化."""
    if np.any(populations < -CLAMP_TOLERANCE):
        raise SolverError(f"布居出现显著负值: {populations}")
    populations = np.clip(populations, 0.0, None)
    populations = populations / populations.sum()
    populations.setflags(write=False)
    return populations


def _residual(generator: PopulationGenerator, populations: np.ndarray) -> float:
    return float(np.max(np.abs(generator.matrix @ populations)))


def count_closed_classes(matrix: np.ndarray) -> int:
    """速率图中闭合连通类的个数, 等于生成元零空间的维数."""
    adjacency = matrix.T > 0
    np.fill_diagonal(adjacency, False)
    n_components, labels = connected_components(
        csr_matrix(adjacency), directed=True, connection="strong"
    )
    closed = 0
    for component in range(n_components):
        members = labels == component
        if not adjacency[np.ix_(members, ~members)].any():
            closed += 1
    return closed


def _gth_stationary(ctx: MPContext, rates: Sequence[Sequence]) -> list:
    """GTH 状态约化求平稳分布.

    rates[i][j] 为 i → j 的跃迁速率（i ≠ j）; 全程只做加、乘、除,
    没有减法, 因此不会出现相消误差。
    """
    n = len(rates)
    a = [list(row) for row in rates]
    size = n

    for k in range(n - 1):
        scale = ctx.fsum(a[k][j] for j in range(k + 1, n))
        if scale <= 0:
            size = k + 1
            break
        for i in range(k + 1, n):
            a[i][k] /= scale
        for i in range(k + 1, n):
            if not a[i][k]:
                continue
            for j in range(k + 1, n):
                if j != i:
                    a[i][j] += a[i][k] * a[k][j]

    x = [ctx.zero] * n
    x[size - 1] = ctx.one
    for k in range(size - 2, -1, -1):
        x[k] = ctx.fsum(x[i] * a[i][k] for i in range(k + 1, size))

    total = ctx.fsum(x)
    return [value / total for value in x]


def solve_numerical(generator: PopulationGenerator, digits: Optional[int] = None) -> SteadyState:
    """求生成元的归一化零空间向量.

    Args:
        generator: 布居速率生成元
        digits: 高精度算术的十进制位数, 默认取 settings.working_digits

    Raises:
        DegenerateNullSpace: 零空间维数不为 1
    """
    closed = count_closed_classes(generator.matrix)
    if closed != 1:
        raise DegenerateNullSpace(f"速率图有 {closed} 个闭合类, 零空间维数不为 1")

    ctx = working_context(_resolve_digits(digits))
    w = generator.matrix
    rates = [
        [ctx.mpf(float(w[j, i])) if i != j else ctx.zero for j in range(LEVEL_COUNT)]
        for i in range(LEVEL_COUNT)
    ]
    precise = tuple(_gth_stationary(ctx, rates))

    populations = _finalize(np.array([float(p) for p in precise]))
    residual = _residual(generator, populations)
    logger.debug(f"数值稳态求解完成, 残差 {residual:.3e}")
    return SteadyState(
        populations=populations,
        method=SolveMethod.NUMERICAL,
        residual=residual,
        high_precision=precise,
    )


def _reduced_rates(params: SystemParams, baths: BathSet) -> dict:
    """四能级约化模型用到的六个速率对, 以 L1, L2, M1, M2, R1 等命名."""
    wanted = {
        (Bath.L, 2, 3): "L1",
        (Bath.L, 5, 6): "L2",
        (Bath.M, 3, 6): "M1",
        (Bath.M, 2, 5): "M2",
        (Bath.R, 2, 6): "R1",
    }
    pairs = {}
    for channel in eigenoperator_channels(params):
        name = wanted.get(channel_key(channel))
        if name:
            pairs[name] = rate_pair(channel, baths, params)
    return pairs


def approximate_weights(ctx: MPContext, pairs: dict) -> Tuple:
    """四能级约化模型的 D2, D3, D5, D6（全部为正项之和）."""
    def a(name: str):
        return ctx.mpf(pairs[name].a)

    def b(name: str):
        return ctx.mpf(pairs[name].b)

    a_l1, b_l1 = a("L1"), b("L1")
    a_l2, b_l2 = a("L2"), b("L2")
    a_m1, b_m1 = a("M1"), b("M1")
    a_m2, b_m2 = a("M2"), b("M2")
    a_r1, b_r1 = a("R1"), b("R1")

    d2 = (2 * a_l2 * (2 * b_m1 * b_l1 + b_r1 * (2 * a_m1 + b_l1))
          + b_m2 * (2 * b_m1 * b_l1 + (2 * a_m1 + b_l1) * (2 * b_l2 + b_r1)))
    d3 = (2 * b_m1 * (2 * a_m2 * a_l2 + a_r1 * (2 * a_l2 + b_m2))
          + a_l1 * (2 * a_l2 * (2 * b_m1 + b_r1) + b_m2 * (2 * b_m1 + 2 * b_l2 + b_r1)))
    d5 = (2 * b_l2 * (a_r1 * b_l1 + 2 * a_m1 * (a_l1 + a_r1))
          + a_m2 * (2 * b_m1 * b_l1 + (2 * a_m1 + b_l1) * (2 * b_l2 + b_r1)))
    d6 = (b_l1 * (2 * a_m2 * a_l2 + a_r1 * (2 * a_l2 + b_m2))
          + 2 * a_m1 * (2 * a_m2 * a_l2 + (a_l1 + a_r1) * (2 * a_l2 + b_m2)))
    return d2, d3, d5, d6


def solve_approximate(
    params: SystemParams,
    baths: BathSet,
    digits: Optional[int] = None,
) -> SteadyState:
    """忽略 λ1、λ4 的近似解析稳态: (0, D2/D, D3/D, 0, D5/D, D6/D).

    在推导区间之外（例如 T_M > T_L）同样给出结果, 只是偏差更大。
    """
    ctx = working_context(_resolve_digits(digits))
    d2, d3, d5, d6 = approximate_weights(ctx, _reduced_rates(params, baths))
    total = d2 + d3 + d5 + d6
    precise = (ctx.zero, d2 / total, d3 / total, ctx.zero, d5 / total, d6 / total)

    populations = np.array([float(p) for p in precise])
    populations.setflags(write=False)
    generator = assemble_generator(eigenoperator_channels(params), baths, params)
    return SteadyState(
        populations=populations,
        method=SolveMethod.APPROXIMATE,
        residual=_residual(generator, populations),
        high_precision=precise,
    )


def relaxation_horizon(generator: PopulationGenerator) -> float:
    """100 倍最慢弛豫时间: 100 / min|Re λ|, λ 取 W 的非零本征值."""
    decay = np.sort(np.abs(np.real(np.linalg.eigvals(generator.matrix))))
    slowest = decay[1]
    if slowest <= 0:
        raise DegenerateNullSpace("生成元有多个零本征值, 弛豫时间无定义")
    return RELAXATION_TIMES / slowest


def evolve_ode(
    generator: PopulationGenerator,
    initial: Sequence[float],
    t_final: Optional[float] = None,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
) -> SteadyState:
    """积分 dρ/dt = Wρ 到 t_final（默认 100 倍弛豫时间）.

    Raises:
        ParameterError: 初态不是概率向量或 t_final < 0
        StiffnessFailure: 积分器未达到容差, 或布居和漂移超过 1e-9
    """
    y0 = np.asarray(initial, dtype=float)
    if y0.shape != (LEVEL_COUNT,) or np.any(y0 < 0) or abs(y0.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise ParameterError(f"初态必须是和为 1 的 6 维非负向量: {initial}")

    if t_final is None:
        t_final = relaxation_horizon(generator)
    if t_final < 0:
        raise ParameterError(f"t_final 不能为负: {t_final}")

    if t_final == 0:
        populations = y0.copy()
        populations.setflags(write=False)
        return SteadyState(populations, SolveMethod.ODE_ORACLE, _residual(generator, populations))

    settings = get_settings()
    rtol = rtol if rtol is not None else settings.ode_rtol
    atol = atol if atol is not None else settings.ode_atol
    w = np.array(generator.matrix)

    solution = solve_ivp(
        lambda _t, y: w @ y,
        (0.0, t_final),
        y0,
        method="Radau",
        jac=w,
        rtol=rtol,
        atol=atol,
        t_eval=[t_final],
    )
    if not solution.success:
        raise StiffnessFailure(f"ODE 积分失败: {solution.message}")

    final = solution.y[:, -1]
    drift = abs(final.sum() - 1.0)
    if drift > ODE_SUM_TOLERANCE:
        raise StiffnessFailure(f"布居和漂移 {drift:.3e} 超过 {ODE_SUM_TOLERANCE}")

    # 积分器的绝对误差量级为 atol, 在这一尺度内的负值视为舍入
    if np.any(final < -10 * atol):
        raise StiffnessFailure(f"ODE 结果出现显著负布居: {final}")
    populations = np.clip(final, 0.0, None)
    populations = populations / populations.sum()
    populations.setflags(write=False)

    logger.debug(f"ODE 积分到 t = {t_final:.3e}, 步数 {solution.nfev}")
    return SteadyState(populations, SolveMethod.ODE_ORACLE, _residual(generator, populations))


def _superoperator(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """行优先向量化下 ρ ↦ left·ρ·right 对应的矩阵 left ⊗ rightᵀ."""
    return np.kron(left, right.T)


def _dissipator(jump: np.ndarray, rate: float) -> np.ndarray:
    """rate·(2 J ρ J† − {J†J, ρ})."""
    identity = np.eye(jump.shape[0])
    jump_dag = jump.conj().T
    number = jump_dag @ jump
    return rate * (
        2.0 * _superoperator(jump, jump_dag)
        - _superoperator(number, identity)
        - _superoperator(identity, number)
    )


def build_liouvillian(params: SystemParams, baths: BathSet) -> np.ndarray:
    """缀饰基下完整的 36×36 刘维尔超算符（含本征算符内部的相干交叉项）."""
    eigensystem = diagonalize(params)
    hamiltonian = np.diag(eigensystem.eigenvalues).astype(complex)
    identity = np.eye(LEVEL_COUNT)
    liouvillian = -1j * (_superoperator(hamiltonian, identity) - _superoperator(identity, hamiltonian))

    channels = eigenoperator_channels(params)
    for bath in BATHS:
        coupling = eigensystem.to_dressed(bare_lowering_operator(bath))
        operators = {}
        for channel in (c for c in channels if c.bath is bath):
            jump, pair = operators.setdefault(
                channel.label,
                (np.zeros((LEVEL_COUNT, LEVEL_COUNT), dtype=complex), rate_pair(channel, baths, params)),
            )
            element = coupling[channel.lower - 1, channel.upper - 1]
            if not np.isclose(abs(element) ** 2, channel.weight):
                logger.warning(
                    f"通道 {channel.label} ({channel.upper}→{channel.lower}) 矩阵元 {element:.6f} "
                    f"与权重 {channel.weight} 不一致"
                )
            jump[channel.lower - 1, channel.upper - 1] = element

        for jump, pair in operators.values():
            liouvillian = liouvillian + _dissipator(jump, pair.a) + _dissipator(jump.conj().T, pair.b)

    return liouvillian


def liouvillian_steady_density(params: SystemParams, baths: BathSet) -> np.ndarray:
    """刘维尔超算符零空间对应的稳态密度矩阵（迹归一）.

    Raises:
        DegenerateNullSpace: 零空间维数不为 1
    """
    liouvillian = build_liouvillian(params, baths)
    kernel = null_space(liouvillian)
    if kernel.shape[1] != 1:
        raise DegenerateNullSpace(f"刘维尔超算符零空间维数为 {kernel.shape[1]}")
    rho = kernel[:, 0].reshape(LEVEL_COUNT, LEVEL_COUNT)
    return rho / np.trace(rho)


def solve_full_liouvillian(params: SystemParams, baths: BathSet) -> SteadyState:
    """由完整刘维尔超算符求稳态并检查其在缀饰基下为对角.

    Raises:
        NonDiagonalSteadyState: 最大非对角元 ≥ 1e-10
    """
    rho = liouvillian_steady_density(params, baths)
    off_diagonal = float(np.max(np.abs(rho - np.diag(np.diag(rho)))))
    if off_diagonal >= OFF_DIAGONAL_TOLERANCE:
        raise NonDiagonalSteadyState(f"稳态非对角元 {off_diagonal:.3e} 超过 {OFF_DIAGONAL_TOLERANCE}")

    populations = _finalize(np.real(np.diag(rho)).copy())
    liouvillian = build_liouvillian(params, baths)
    residual = float(np.max(np.abs(liouvillian @ rho.reshape(-1))))
    logger.debug(f"刘维尔稳态: 非对角元 {off_diagonal:.3e}, 残差 {residual:.3e}")
    return SteadyState(populations, SolveMethod.FULL_LIOUVILLIAN_ORACLE, residual)


def gibbs_populations(params: SystemParams, t: float) -> np.ndarray:
    """缀饰能级上的吉布斯分布 e^{−λ_i/T}/Z."""
    energies = diagonalize(params).eigenvalues
    weights = np.exp(-(energies - energies.min()) / t)
    return weights / weights.sum()
