"""子命令实现：steady / sweep / reproduce / validate / --dump-config."""

from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from src.cli.output import (
    figure_columns,
    format_value,
    sweep_columns,
    write_csv,
    write_gnuplot_script,
    write_meta,
    write_sweep_csv,
)
from src.cli.run_config import RunConfig
from src.cli.validation import render_validation, run_validation_battery
from src.core.exceptions import ConfigurationError
from src.core.model import BATHS, Bath, validate_secular
from src.core.observables import max_gamma, solve_transport
from src.core.steadystate import SolveMethod
from src.core.sweeps import FigureId, SweepSpec, figure_preset, run_sweep
from src.utils.config import get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1


def _methods(names: Iterable[str]) -> frozenset:
    try:
        return frozenset(SolveMethod(name) for name in names)
    except ValueError as e:
        raise ConfigurationError(f"未知求解方法: {list(names)}", key="methods") from e


def cmd_steady(config: RunConfig, console: Console, output: Optional[Path] = None) -> int:
    """单点求解: 两种方法的布居、热流、守恒残差与久期近似提示."""
    params, baths = config.to_params(), config.to_baths()
    secular = validate_secular(params)

    results = {method: solve_transport(params, baths, method)
               for method in (SolveMethod.NUMERICAL, SolveMethod.APPROXIMATE)}
    _, numerical_report = results[SolveMethod.NUMERICAL]
    logger.info("steady_solved", t_l=config.t_l, t_m=config.t_m, t_r=config.t_r,
                residual=numerical_report.conservation_residual)

    populations = Table(title="稳态布居（缀饰基）")
    populations.add_column("能级")
    for method in results:
        populations.add_column(method.value)
    for level in range(1, 7):
        populations.add_row(f"ρ{level}{level}", *(format_value(results[m][0].population(level)) for m in results))
    console.print(populations)

    currents = Table(title="热流（Q̇ > 0: 热量流出热库）")
    currents.add_column("量")
    for method in results:
        currents.add_column(method.value)
    for bath in BATHS:
        currents.add_row(f"Q̇_{bath.value}", *(format_value(results[m][1].current(bath)) for m in results))
    currents.add_row("ΣQ̇", *(format_value(results[m][1].conservation_residual) for m in results))
    console.print(currents)

    decay = Table(title="净衰减率 Γ（数值稳态）")
    decay.add_column("热库")
    decay.add_column("跃迁")
    decay.add_column("Γ")
    for (bath, upper, lower), value in numerical_report.net_decay_rates.items():
        decay.add_row(bath.value, f"{upper}→{lower}", format_value(value))
    console.print(decay)

    if not numerical_report.is_conserved(max_gamma(params)):
        logger.warning("conservation_violated", residual=numerical_report.conservation_residual)
    for warning in secular.warnings:
        console.print(
            f"久期近似提示: 热库 {warning.bath.value}, ω = {warning.omega_a:g}/{warning.omega_b:g}, "
            f"γ/间隙 = {warning.ratio:.3g}"
        )

    if output is not None:
        columns = ["t_l", "t_m", "t_r"]
        values = {"t_l": config.t_l, "t_m": config.t_m, "t_r": config.t_r}
        for method, tag in ((SolveMethod.NUMERICAL, "num"), (SolveMethod.APPROXIMATE, "apx")):
            state, report = results[method]
            for level in range(1, 7):
                values[f"rho{level}{level}_{tag}"] = state.population(level)
            for bath in BATHS:
                values[f"q{bath.value.lower()}_{tag}"] = report.current(bath)
        columns += [f"rho{k}{k}_num" for k in range(1, 7)] + [f"rho{k}{k}_apx" for k in range(1, 7)]
        columns += ["ql_num", "qm_num", "qr_num", "ql_apx", "qm_apx", "qr_apx"]
        columns += ["conservation_residual", "secular_warnings"]
        values["conservation_residual"] = numerical_report.conservation_residual
        values["secular_warnings"] = str(len(secular.warnings))
        write_csv(output, columns, [values])
        logger.info("steady_written", path=str(output))

    return EXIT_OK


def _write_artifacts(spec: SweepSpec, rows, columns, output_dir: Path, stem: str, console: Console) -> None:
    csv_path = output_dir / f"{stem}.csv"
    write_sweep_csv(csv_path, columns, rows)
    write_meta(output_dir / f"{stem}.meta", spec, validate_secular(spec.params), rows)
    write_gnuplot_script(output_dir / f"{stem}.gp", csv_path.name, columns)
    failed = sum(1 for row in rows if row.error)
    console.print(f"已写出 {csv_path} ({len(rows)} 行, 失败 {failed} 行)")
    logger.info("artifacts_written", path=str(csv_path), rows=len(rows), failed=failed)


def cmd_sweep(
    config: RunConfig,
    console: Console,
    variable: str,
    start: float,
    stop: float,
    points: Optional[int] = None,
    methods: Iterable[str] = ("numerical", "approximate"),
    amplification: bool = False,
    private_step: bool = False,
    output_dir: Optional[Path] = None,
    workers: Optional[int] = None,
) -> int:
    """对 T_L/T_M/T_R 之一做均匀网格扫描, 其余温度取自配置."""
    settings = get_settings()
    try:
        bath = Bath(variable.upper().replace("T_", ""))
    except ValueError as e:
        raise ConfigurationError(f"未知扫描变量: {variable}", key="variable") from e
    temperatures = {Bath.L: config.t_l, Bath.M: config.t_m, Bath.R: config.t_r}
    spec = SweepSpec(
        variable=bath,
        grid=np.linspace(start, stop, points or settings.sweep_points),
        fixed={b: t for b, t in temperatures.items() if b is not bath},
        params=config.to_params(),
        methods=_methods(methods),
        amplification=amplification or private_step,
        private_step=private_step,
    )
    rows = run_sweep(spec, workers=workers)
    _write_artifacts(spec, rows, sweep_columns(spec), Path(output_dir or settings.output_dir),
                     f"sweep_{spec.column}", console)
    return EXIT_OK


def cmd_reproduce(
    figure_id: str,
    console: Console,
    output_dir: Optional[Path] = None,
    workers: Optional[int] = None,
    points: Optional[int] = None,
) -> int:
    """按图形预设扫描并写出 <id>.csv / <id>.meta / <id>.gp."""
    try:
        figure = FigureId(figure_id)
    except ValueError as e:
        known = ", ".join(f.value for f in FigureId)
        raise ConfigurationError(f"未知图形编号 {figure_id!r}, 可选: {known}", key="figure") from e

    spec = figure_preset(figure, points=points)
    rows = run_sweep(spec, workers=workers)
    _write_artifacts(spec, rows, figure_columns(figure), Path(output_dir or get_settings().output_dir),
                     figure.value, console)
    return EXIT_OK


def cmd_validate(config: RunConfig, console: Console, inject_fault: bool = False) -> int:
    """运行不变量套件; 全部通过返回 0, 否则返回 1."""
    results = run_validation_battery(config, inject_fault=inject_fault)
    render_validation(results, config, console)
    failed = [check.name for check in results if not check.passed]
    if failed:
        logger.error("validation_failed", checks=failed)
        return EXIT_VALIDATION_FAILED
    logger.info("validation_passed", checks=len(results))
    return EXIT_OK


def cmd_dump_config(config: RunConfig, console: Console, path: Optional[Path] = None) -> int:
    """输出可被重新解析为同一 RunConfig 的配置文本."""
    text = config.dump()
    if path is None:
        console.print(text, end="", markup=False, highlight=False, soft_wrap=True)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info("config_dumped", path=str(path))
    return EXIT_OK
