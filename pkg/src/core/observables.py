"""可观测量模块：净衰减率、热流、能量守恒残差与放大系数.

热流符号约定: Q̇_μ > 0 表示热量从第 μ 个热库流出。
所有差值都在工作精度下先算完再舍入到双精度。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

from src.core.exceptions import (
    ParameterError,
    UnknownChannel,
    VanishingModulationSensitivity,
    WrongStateMethod,
)
from src.core.model import (
    BATHS,
    LEVEL_COUNT,
    Bath,
    BathKey,
    BathSet,
    EigenSystem,
    SystemParams,
    diagonalize,
    eigenoperator_channels,
)
from src.core.rates import (
    ChannelKey,
    PopulationGenerator,
    RatePair,
    assemble_generator,
    channel_key,
    rate_pair,
)
from src.core.steadystate import (
    SolveMethod,
    SteadyState,
    solve_approximate,
    solve_numerical,
    working_context,
)
from src.utils.config import get_settings

logger = logging.getLogger(__name__)

VANISHING_RATIO = 1e-14


def _precise(state: SteadyState, ctx) -> Tuple:
    if state.high_precision is not None:
        return tuple(ctx.mpf(value) for value in state.high_precision)
    return tuple(ctx.mpf(float(p)) for p in state.populations)


def _ctx():
    return working_context(get_settings().working_digits)


def _gamma_net(ctx, pair: RatePair, rho_upper, rho_lower):
    """Γ = A ρ_ii − B ρ_jj."""
    return ctx.mpf(pair.a) * rho_upper - ctx.mpf(pair.b) * rho_lower


def net_decay_rate(
    upper: int,
    lower: int,
    bath: BathKey,
    state: SteadyState,
    params: SystemParams,
    baths: BathSet,
) -> float:
    """热库 μ 驱动的跃迁 upper → lower 的净衰减率.

    Γ^μ_ij = γ_μ[(n+1)ρ_ii − n ρ_jj]

    Raises:
        UnknownChannel: 该能级对不由该热库驱动
    """
    bath = Bath(bath)
    for channel in eigenoperator_channels(params):
        if channel_key(channel) == (bath, upper, lower):
            ctx = _ctx()
            rho = _precise(state, ctx)
            pair = rate_pair(channel, baths, params)
            return float(_gamma_net(ctx, pair, rho[upper - 1], rho[lower - 1]))
    raise UnknownChannel(f"能级对 ({upper}, {lower}) 不由热库 {bath.value} 驱动")


def _trace_current(ctx, bath: Bath, rho: Tuple, generator: PopulationGenerator,
                   eigensystem: EigenSystem, levels: Optional[Iterable[int]] = None):
    w = generator.bath_matrix(bath)
    energies = [ctx.mpf(float(value)) for value in eigensystem.eigenvalues]
    allowed = set(range(LEVEL_COUNT)) if levels is None else {level - 1 for level in levels}
    terms = []
    for i in allowed:
        for j in allowed:
            if i != j and w[i, j] != 0:
                terms.append((energies[i] - energies[j]) * ctx.mpf(float(w[i, j])) * rho[j])
    return ctx.fsum(terms)


def heat_current_trace(
    bath: BathKey,
    state: SteadyState,
    generator: PopulationGenerator,
    eigensystem: EigenSystem,
    levels: Optional[Iterable[int]] = None,
) -> float:
    """Q̇_μ = Σ_i λ_i (W_μ ρ)_i.

    以等价的流形式 Σ_{i≠j} (λ_i − λ_j) W_μ[i, j] ρ_j 在工作精度下求和;
    levels 给出时只统计该能级子集内部的跃迁。
    """
    ctx = _ctx()
    return float(_trace_current(ctx, Bath(bath), _precise(state, ctx), generator, eigensystem, levels))


def _closed_form_currents(ctx, rho: Tuple, params: SystemParams, baths: BathSet) -> Dict[Bath, object]:
    pairs: Dict[ChannelKey, RatePair] = {}
    omegas: Dict[ChannelKey, float] = {}
    for channel in eigenoperator_channels(params):
        pairs[channel_key(channel)] = rate_pair(channel, baths, params)
        omegas[channel_key(channel)] = channel.omega

    def flow(bath: Bath, upper: int, lower: int):
        key = (bath, upper, lower)
        return ctx.mpf(omegas[key]) * _gamma_net(ctx, pairs[key], rho[upper - 1], rho[lower - 1])

    return {
        Bath.L: -flow(Bath.L, 2, 3) - 2 * flow(Bath.L, 5, 6),
        Bath.M: -2 * flow(Bath.M, 3, 6) - flow(Bath.M, 2, 5),
        Bath.R: -flow(Bath.R, 2, 6),
    }


def heat_current_closed_form(bath: BathKey, state: SteadyState, params: SystemParams, baths: BathSet) -> float:
    """近似稳态下的闭式热流.

    Q̇_L = −ω_L1 Γ^L_23 − 2ω_L2 Γ^L_56
    Q̇_M = −2ω_M1 Γ^M_36 − ω_M2 Γ^M_25
    Q̇_R = −ω_R1 Γ^R_26

    Raises:
        WrongStateMethod: 稳态不是 APPROXIMATE 方法得到的
    """
    if state.method is not SolveMethod.APPROXIMATE:
        raise WrongStateMethod(f"闭式热流只适用于近似稳态, 实际方法为 {state.method.value}")
    ctx = _ctx()
    return float(_closed_form_currents(ctx, _precise(state, ctx), params, baths)[Bath(bath)])


@dataclass(frozen=True)
class TransportReport:
    """单个工作点的输运结果."""

    q_l: float
    q_m: float
    q_r: float
    conservation_residual: float
    method: SolveMethod
    net_decay_rates: Dict[ChannelKey, float] = field(default_factory=dict, compare=False)

    def current(self, bath: BathKey) -> float:
        return {Bath.L: self.q_l, Bath.M: self.q_m, Bath.R: self.q_r}[Bath(bath)]

    @property
    def scale(self) -> float:
        return max(abs(self.q_l), abs(self.q_m), abs(self.q_r))

    def conservation_tolerance(self, max_gamma: float) -> float:
        """max(相对容差 · max|Q̇|, 绝对下限 · max γ)."""
        settings = get_settings()
        return max(
            settings.conservation_relative_tolerance * self.scale,
            settings.conservation_floor * max_gamma,
        )

    def is_conserved(self, max_gamma: float) -> bool:
        return abs(self.conservation_residual) <= self.conservation_tolerance(max_gamma)


def _report(ctx, currents: Dict[Bath, object], rho: Tuple, method: SolveMethod,
            generator: PopulationGenerator) -> TransportReport:
    decay = {
        channel_key(channel): float(_gamma_net(ctx, pair, rho[channel.upper - 1], rho[channel.lower - 1]))
        for channel, pair in zip(generator.channels, generator.rates)
    }
    return TransportReport(
        q_l=float(currents[Bath.L]),
        q_m=float(currents[Bath.M]),
        q_r=float(currents[Bath.R]),
        conservation_residual=float(currents[Bath.L] + currents[Bath.M] + currents[Bath.R]),
        method=method,
        net_decay_rates=decay,
    )


def transport_report(
    state: SteadyState,
    generator: PopulationGenerator,
    eigensystem: EigenSystem,
) -> TransportReport:
    """用迹公式计算三个热流、守恒残差及全部 11 条通道的净衰减率."""
    ctx = _ctx()
    rho = _precise(state, ctx)
    currents = {bath: _trace_current(ctx, bath, rho, generator, eigensystem) for bath in BATHS}
    return _report(ctx, currents, rho, state.method, generator)


def closed_form_report(state: SteadyState, params: SystemParams, baths: BathSet) -> TransportReport:
    """用闭式热流给出近似稳态的输运结果."""
    if state.method is not SolveMethod.APPROXIMATE:
        raise WrongStateMethod(f"闭式热流只适用于近似稳态, 实际方法为 {state.method.value}")
    ctx = _ctx()
    rho = _precise(state, ctx)
    generator = assemble_generator(eigenoperator_channels(params), baths, params)
    return _report(ctx, _closed_form_currents(ctx, rho, params, baths), rho, state.method, generator)


def solve_transport(params: SystemParams, baths: BathSet,
                    method: SolveMethod = SolveMethod.NUMERICAL) -> Tuple[SteadyState, TransportReport]:
    """按指定方法求稳态并计算输运（数值方法用迹公式, 近似方法用闭式）."""
    if method is SolveMethod.NUMERICAL:
        generator = assemble_generator(eigenoperator_channels(params), baths, params)
        state = solve_numerical(generator)
        return state, transport_report(state, generator, diagonalize(params))
    if method is SolveMethod.APPROXIMATE:
        state = solve_approximate(params, baths)
        return state, closed_form_report(state, params, baths)
    raise ParameterError(f"输运计算只支持 numerical 与 approximate, 实际为 {method.value}")


def _precise_currents(params: SystemParams, baths: BathSet, method: SolveMethod, ctx) -> Dict[Bath, object]:
    if method is SolveMethod.NUMERICAL:
        generator = assemble_generator(eigenoperator_channels(params), baths, params)
        state = solve_numerical(generator)
        rho = _precise(state, ctx)
        eigensystem = diagonalize(params)
        return {bath: _trace_current(ctx, bath, rho, generator, eigensystem) for bath in BATHS}
    if method is SolveMethod.APPROXIMATE:
        state = solve_approximate(params, baths)
        return _closed_form_currents(ctx, _precise(state, ctx), params, baths)
    raise ParameterError(f"放大系数只支持 numerical 与 approximate, 实际为 {method.value}")


@dataclass(frozen=True)
class AmplificationResult:
    """T_M 处的动态放大系数 α_{L,R} = ∂Q̇_{L,R}/∂Q̇_M."""

    alpha_l: float
    alpha_r: float
    t_m: float
    dq_m_dt: float
    h: float
    method: SolveMethod
    richardson_alpha_l: float = math.nan
    richardson_alpha_r: float = math.nan
    step_sensitivity: float = math.nan


def _central_quotients(params: SystemParams, baths: BathSet, t_m: float, h: float,
                       method: SolveMethod, ctx) -> Tuple:
    upper = _precise_currents(params, baths.with_temperature(Bath.M, t_m + h), method, ctx)
    lower = _precise_currents(params, baths.with_temperature(Bath.M, t_m - h), method, ctx)
    delta = {bath: upper[bath] - lower[bath] for bath in BATHS}
    scale = max(abs(value) for value in (*upper.values(), *lower.values()))

    if scale == 0 or abs(delta[Bath.M]) < VANISHING_RATIO * scale:
        raise VanishingModulationSensitivity(
            f"T_M = {t_m}, h = {h}: |ΔQ̇_M| = {float(abs(delta[Bath.M])):.3e} 相对于 {float(scale):.3e} 可忽略"
        )

    return (
        delta[Bath.L] / delta[Bath.M],
        delta[Bath.R] / delta[Bath.M],
        delta[Bath.M] / (2 * h),
    )


def amplification_factors(
    params: SystemParams,
    baths: BathSet,
    t_m: float,
    h: Optional[float] = None,
    method: SolveMethod = SolveMethod.NUMERICAL,
) -> AmplificationResult:
    """以 T_M 为中介的中心差分放大系数, 并在 h/2 处做一步 Richardson 外推检查.

    α_X = [Q̇_X(T_M+h) − Q̇_X(T_M−h)] / [Q̇_M(T_M+h) − Q̇_M(T_M−h)]

    Args:
        params: 系统参数
        baths: 热库温度（其中 T_M 被 t_m 替换）
        t_m: 求值点
        h: 温度步长, 默认取 settings.amplification_step
        method: 同一结果中的所有差分都使用这一种方法

    Raises:
        ParameterError: t_m − h ≤ 0
        VanishingModulationSensitivity: ΔQ̇_M 可忽略, 商无定义
    """
    settings = get_settings()
    h = settings.amplification_step if h is None else h
    if h <= 0 or t_m - h <= 0:
        raise ParameterError(f"需要 h > 0 且 t_m − h > 0, 实际 t_m = {t_m}, h = {h}")

    ctx = _ctx()
    alpha_l, alpha_r, dq_m_dt = _central_quotients(params, baths, t_m, h, method, ctx)
    half_l, half_r, _ = _central_quotients(params, baths, t_m, h / 2, method, ctx)

    richardson_l = (4 * half_l - alpha_l) / 3
    richardson_r = (4 * half_r - alpha_r) / 3
    sensitivity = float(abs(half_l - alpha_l) / abs(half_l)) if half_l != 0 else math.inf

    if sensitivity > settings.richardson_tolerance:
        logger.warning(
            f"放大系数未收敛: T_M = {t_m}, h = {h}, α_L(h) = {float(alpha_l):.6g}, "
            f"α_L(h/2) = {float(half_l):.6g}, 相对变化 {sensitivity:.3e}"
        )

    result = AmplificationResult(
        alpha_l=float(alpha_l),
        alpha_r=float(alpha_r),
        t_m=t_m,
        dq_m_dt=float(dq_m_dt),
        h=h,
        method=method,
        richardson_alpha_l=float(richardson_l),
        richardson_alpha_r=float(richardson_r),
        step_sensitivity=sensitivity,
    )
    logger.debug(f"放大系数 T_M = {t_m}: α_L = {result.alpha_l:.6g}, α_R = {result.alpha_r:.6g}")
    return result


def max_gamma(params: SystemParams) -> float:
    return max(params.gamma.values())
