"""结果文件输出：CSV、.meta 参数记录与 gnuplot 脚本.

CSV 约定: UTF-8, 逗号分隔, 带表头, 浮点数 17 位有效数字。
"""

import csv
from pathlib import Path
from typing import Dict, List, Sequence

from src import __version__
from src.core.model import SecularReport, SystemParams
from src.core.sweeps import FigureId, SweepRow, SweepSpec
from src.core.steadystate import SolveMethod

NUM = SolveMethod.NUMERICAL
APX = SolveMethod.APPROXIMATE

POPULATION_COLUMNS = [f"rho{k}{k}_num" for k in range(1, 7)] + [f"rho{k}{k}_apx" for k in range(1, 7)]
CURRENT_COLUMNS = ["ql_num", "qm_num", "qr_num", "ql_apx", "qm_apx", "qr_apx", "conservation_residual"]
ALPHA_COLUMNS = ["alpha_l_num", "alpha_r_num", "alpha_l_apx", "alpha_r_apx"]


def format_value(value: float) -> str:
    return format(float(value), ".17g")


def figure_columns(figure_id: FigureId) -> List[str]:
    """各图固定的列名与顺序."""
    if figure_id is FigureId.FIG2:
        return ["t_m", *POPULATION_COLUMNS, "rho22_over_rho44_num"]
    columns = ["t_var", *CURRENT_COLUMNS]
    if figure_id is FigureId.FIG4:
        columns += ALPHA_COLUMNS
    return columns


def sweep_columns(spec: SweepSpec) -> List[str]:
    """通用扫描的列: 温度、各方法的布居与热流、守恒残差, 以及可选的 α 列."""
    columns = [spec.column]
    for method, tag in ((NUM, "num"), (APX, "apx")):
        if method in spec.methods:
            columns += [f"rho{k}{k}_{tag}" for k in range(1, 7)]
            columns += [f"ql_{tag}", f"qm_{tag}", f"qr_{tag}"]
    columns.append("conservation_residual")
    if spec.amplification:
        for method, tag in ((NUM, "num"), (APX, "apx")):
            if method in spec.methods:
                columns += [f"alpha_l_{tag}", f"alpha_r_{tag}"]
    columns.append("error")
    return columns


def row_values(row: SweepRow) -> Dict[str, object]:
    """把一行扫描结果展开为所有可能用到的列."""
    values: Dict[str, object] = {"error": row.error or ""}
    for method, tag in ((NUM, "num"), (APX, "apx")):
        for k in range(1, 7):
            values[f"rho{k}{k}_{tag}"] = row.population(k, method)
        values[f"ql_{tag}"] = row.q("L", method)
        values[f"qm_{tag}"] = row.q("M", method)
        values[f"qr_{tag}"] = row.q("R", method)
        values[f"alpha_l_{tag}"] = row.alpha_l.get(method, float("nan"))
        values[f"alpha_r_{tag}"] = row.alpha_r.get(method, float("nan"))
    values["conservation_residual"] = row.conservation_residual.get(NUM, float("nan"))
    values["rho22_over_rho44_num"] = _ratio(row.population(2, NUM), row.population(4, NUM))
    return values


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else float("inf")


def _cell(value: object) -> str:
    if isinstance(value, str):
        return value
    return format_value(value)


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[Dict[str, object]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for values in rows:
            writer.writerow([_cell(values[column]) for column in columns])


def write_sweep_csv(path: Path, columns: Sequence[str], rows: Sequence[SweepRow]) -> None:
    table = []
    for row in rows:
        values = row_values(row)
        values[columns[0]] = row.t
        table.append(values)
    write_csv(path, columns, table)


def write_meta(path: Path, spec: SweepSpec, secular: SecularReport, rows: Sequence[SweepRow]) -> None:
    """记录完整参数集、工具版本与单位."""
    params: SystemParams = spec.params
    lines = [
        f"tool = qutrit-thermal-transistor {__version__}",
        f"figure = {spec.figure_id.value if spec.figure_id else 'custom'}",
        f"e1 = {params.e1!r}",
        f"e2 = {params.e2!r}",
        f"e3 = {params.e3!r}",
        f"g = {params.g!r}",
    ]
    lines += [f"gamma_{bath.value.lower()} = {rate!r}" for bath, rate in params.gamma.items()]
    lines += [f"t_{bath.value.lower()} = {t!r}" for bath, t in spec.fixed.items()]
    lines += [
        f"variable = {spec.column}",
        f"grid = linspace({spec.grid[0]!r}, {spec.grid[-1]!r}, {spec.grid.size})",
        f"methods = {','.join(sorted(m.value for m in spec.methods))}",
        f"amplification = {'private_step' if spec.private_step else 'stencil' if spec.amplification else 'off'}",
        f"secular_max_ratio = {secular.max_ratio!r}",
        f"secular_warnings = {len(secular.warnings)}",
        f"failed_rows = {sum(1 for row in rows if row.error)}",
        "units.energy = E",
        "units.temperature = E (k_B = 1)",
        "units.current = E^2 (hbar = 1)",
        "units.population = 1",
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_gnuplot_script(path: Path, csv_name: str, columns: Sequence[str]) -> None:
    """生成绘制 CSV 中所有数值列随第一列变化的 gnuplot 脚本."""
    plotted = [(index, name) for index, name in enumerate(columns, start=1)
               if index > 1 and name not in ("error", "conservation_residual")]
    series = ", \\\n     ".join(
        f"'{csv_name}' every ::1 using 1:{index} with lines title '{name}'" for index, name in plotted
    )
    lines = [
        "set datafile separator ','",
        "set key outside",
        f"set xlabel '{columns[0]} / E'",
        "set grid",
        "set terminal pngcairo size 1000,700",
        f"set output '{Path(csv_name).stem}.png'",
        f"plot {series}",
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
