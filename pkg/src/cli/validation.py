"""不变量验证套件（validate 子命令）."""

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from rich.console import Console
from rich.table import Table

from src.cli.run_config import RunConfig
from src.core.exceptions import TransistorSimulationError, VanishingModulationSensitivity
from src.core.model import BATHS, Bath, BathSet, validate_secular, diagonalize, eigenoperator_channels
from src.core.observables import amplification_factors, max_gamma, transport_report
from src.core.rates import assemble_generator, relative_mismatch
from src.core.steadystate import (
    evolve_ode,
    gibbs_populations,
    solve_full_liouvillian,
    solve_numerical,
)

logger = logging.getLogger(__name__)

GIBBS_TOLERANCE = 1e-10
ORACLE_TOLERANCE = 1e-8
ALPHA_IDENTITY_TOLERANCE = 1e-6
BLOCK_MATRIX_TOLERANCE = 1e-12
COLUMN_SUM_TOLERANCE = 1e-13

# 故障注入: 仅在热流计算所用的生成元中翻转 W_R[λ6, λ2] 的符号
FAULT_ENTRY = (Bath.R, 6, 2)


@dataclass(frozen=True)
class ValidationCheck:
    """单项检查结果."""

    name: str
    passed: bool
    detail: str


def _check_conservation(config: RunConfig, inject_fault: bool) -> ValidationCheck:
    params, baths = config.to_params(), config.to_baths()
    generator = assemble_generator(eigenoperator_channels(params), baths, params)
    state = solve_numerical(generator)
    evaluated = generator.with_flipped_entry(*FAULT_ENTRY) if inject_fault else generator
    report = transport_report(state, evaluated, diagonalize(params))
    tolerance = report.conservation_tolerance(max_gamma(params))
    return ValidationCheck(
        name="conservation",
        passed=abs(report.conservation_residual) <= tolerance,
        detail=f"|ΣQ̇| = {abs(report.conservation_residual):.3e}, 容差 {tolerance:.3e}",
    )


def _check_column_sums(config: RunConfig, inject_fault: bool) -> ValidationCheck:
    params, baths = config.to_params(), config.to_baths()
    generator = assemble_generator(eigenoperator_channels(params), baths, params)
    worst = float(np.max(np.abs(generator.column_sums())))
    bound = COLUMN_SUM_TOLERANCE * generator.scale()
    return ValidationCheck("column_sums", worst < bound, f"max|1ᵀW| = {worst:.3e}, 上限 {bound:.3e}")


def _check_gibbs(config: RunConfig, inject_fault: bool) -> ValidationCheck:
    params = config.to_params()
    t = config.t_l if config.t_l > 0 else 1.0
    baths = BathSet.equilibrium(t)
    generator = assemble_generator(eigenoperator_channels(params), baths, params)
    populations = solve_numerical(generator).populations
    expected = gibbs_populations(params, t)
    mask = expected > 1e-12
    worst = float(np.max(np.abs(populations[mask] - expected[mask]) / expected[mask]))
    return ValidationCheck("gibbs", worst < GIBBS_TOLERANCE, f"T = {t}, 最大相对偏差 {worst:.3e}")


def _check_oracles(config: RunConfig, inject_fault: bool) -> ValidationCheck:
    params, baths = config.to_params(), config.to_baths()
    generator = assemble_generator(eigenoperator_channels(params), baths, params)
    numerical = solve_numerical(generator).populations
    ode = evolve_ode(generator, np.full(6, 1.0 / 6.0)).populations
    liouvillian = solve_full_liouvillian(params, baths).populations
    worst = max(
        float(np.max(np.abs(numerical - ode))),
        float(np.max(np.abs(numerical - liouvillian))),
        float(np.max(np.abs(ode - liouvillian))),
    )
    return ValidationCheck("oracle_triangle", worst < ORACLE_TOLERANCE, f"两两最大偏差 {worst:.3e}")


def _check_alpha_identity(config: RunConfig, inject_fault: bool) -> ValidationCheck:
    params, baths = config.to_params(), config.to_baths()
    try:
        result = amplification_factors(params, baths, config.t_m)
    except VanishingModulationSensitivity as e:
        return ValidationCheck("alpha_identity", True, f"跳过: {e}")
    deviation = abs(result.alpha_l + result.alpha_r + 1.0)
    return ValidationCheck(
        "alpha_identity",
        deviation < ALPHA_IDENTITY_TOLERANCE,
        f"α_L = {result.alpha_l:.6g}, α_R = {result.alpha_r:.6g}, |α_L+α_R+1| = {deviation:.3e}",
    )


def _check_block_matrices(config: RunConfig, inject_fault: bool) -> ValidationCheck:
    params, baths = config.to_params(), config.to_baths()
    generator = assemble_generator(eigenoperator_channels(params), baths, params)
    mismatch = {bath: relative_mismatch(bath, generator, baths, params) for bath in BATHS}
    worst = max(mismatch.values())
    detail = ", ".join(f"{bath.value}: {value:.1e}" for bath, value in mismatch.items())
    return ValidationCheck("block_matrices", worst < BLOCK_MATRIX_TOLERANCE, detail)


CHECKS: List[Callable[[RunConfig, bool], ValidationCheck]] = [
    _check_conservation,
    _check_column_sums,
    _check_gibbs,
    _check_oracles,
    _check_alpha_identity,
    _check_block_matrices,
]


def run_validation_battery(config: RunConfig, inject_fault: bool = False) -> List[ValidationCheck]:
    """依次运行全部不变量检查; 单项抛出的求解异常记为该项失败."""
    results = []
    for check in CHECKS:
        name = check.__name__.replace("_check_", "")
        try:
            results.append(check(config, inject_fault))
        except TransistorSimulationError as e:
            results.append(ValidationCheck(name, False, f"{type(e).__name__}: {e}"))
        if not results[-1].passed:
            logger.warning(f"验证未通过: {results[-1].name} ({results[-1].detail})")
    return results


def render_validation(results: List[ValidationCheck], config: RunConfig, console: Console) -> None:
    """以表格形式输出检查结果, 附带久期近似提示."""
    table = Table(title="不变量验证")
    table.add_column("检查项", style="bold")
    table.add_column("结果")
    table.add_column("详情")
    for check in results:
        table.add_row(check.name, "PASS" if check.passed else "FAIL", check.detail)
    console.print(table)

    secular = validate_secular(config.to_params())
    if secular.warnings:
        console.print(
            f"久期近似提示: {len(secular.warnings)} 对频率不满足 γ/间隙 < {secular.threshold}"
            f"（最大比值 {secular.max_ratio:.3g}）, 仅供参考"
        )
