"""参数扫描模块：单温度扫描、图形预设、开关阈值与稳定平台检测.

每个网格点独立求解; 多进程模式按网格顺序合并结果, 与串行模式逐行一致。
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import (
    EmptyPlateau,
    NeverExceeds,
    ParameterError,
    TransistorSimulationError,
)
from src.core.model import BATHS, Bath, BathKey, BathSet, SystemParams, validate_secular
from src.core.observables import (
    VANISHING_RATIO,
    amplification_factors,
    max_gamma,
    solve_transport,
)
from src.core.steadystate import SolveMethod
from src.utils.config import get_settings

logger = logging.getLogger(__name__)

SWEEP_METHODS = frozenset({SolveMethod.NUMERICAL, SolveMethod.APPROXIMATE})
GAIN_NOISE_FLOOR = 1e-8


class FigureId(str, Enum):
    """可复现的图形预设."""

    FIG2 = "fig2"
    FIG3 = "fig3"
    FIG4 = "fig4"
    FIG5 = "fig5"
    FIG_B6 = "figB6"
    FIG_B7 = "figB7"
    FIG_B8 = "figB8"


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """单变量温度扫描的描述."""

    variable: Bath
    grid: np.ndarray
    fixed: Dict[Bath, float]
    params: SystemParams
    methods: FrozenSet[SolveMethod] = SWEEP_METHODS
    amplification: bool = False
    private_step: bool = False
    figure_id: Optional[FigureId] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variable", Bath(self.variable))
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ParameterError("扫描网格至少需要 2 个点")
        if np.any(np.diff(grid) <= 0):
            raise ParameterError("扫描网格必须严格递增")
        if np.any(grid < 0) or not np.all(np.isfinite(grid)):
            raise ParameterError("扫描温度必须为非负有限数")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

        fixed = {Bath(key): float(value) for key, value in self.fixed.items()}
        expected = set(BATHS) - {self.variable}
        if set(fixed) != expected:
            raise ParameterError(f"固定温度必须恰好给出 {sorted(b.value for b in expected)}")
        object.__setattr__(self, "fixed", fixed)

        methods = frozenset(SolveMethod(m) for m in self.methods)
        if not methods or not methods <= SWEEP_METHODS:
            raise ParameterError(f"扫描方法只能是 numerical/approximate, 实际为 {sorted(m.value for m in methods)}")
        object.__setattr__(self, "methods", methods)

        if self.amplification and self.variable is not Bath.M:
            raise ParameterError("放大系数列只在扫描 T_M 时有定义")

    def baths_at(self, t: float) -> BathSet:
        temperatures = dict(self.fixed)
        temperatures[self.variable] = t
        return BathSet(temperatures)

    @property
    def column(self) -> str:
        return f"t_{self.variable.value.lower()}"


@dataclass
class SweepRow:
    """扫描表中的一行; 出错的网格点保留 error, 数值字段为 NaN."""

    t: float
    populations: Dict[SolveMethod, np.ndarray] = field(default_factory=dict)
    currents: Dict[SolveMethod, Tuple[float, float, float]] = field(default_factory=dict)
    conservation_residual: Dict[SolveMethod, float] = field(default_factory=dict)
    alpha_l: Dict[SolveMethod, float] = field(default_factory=dict)
    alpha_r: Dict[SolveMethod, float] = field(default_factory=dict)
    conserved: bool = True
    secular_warnings: int = 0
    error: Optional[str] = None

    def q(self, bath: BathKey, method: SolveMethod = SolveMethod.NUMERICAL) -> float:
        index = BATHS.index(Bath(bath))
        return self.currents.get(method, (math.nan,) * 3)[index]

    def population(self, level: int, method: SolveMethod = SolveMethod.NUMERICAL) -> float:
        values = self.populations.get(method)
        return math.nan if values is None else float(values[level - 1])


def _evaluate_point(spec: SweepSpec, secular_warnings: int, t: float) -> SweepRow:
    row = SweepRow(t=float(t), secular_warnings=secular_warnings)
    try:
        baths = spec.baths_at(float(t))
        for method in sorted(spec.methods, key=lambda m: m.value, reverse=True):
            state, report = solve_transport(spec.params, baths, method)
            row.populations[method] = np.array(state.populations)
            row.currents[method] = (report.q_l, report.q_m, report.q_r)
            row.conservation_residual[method] = report.conservation_residual
            row.conserved = row.conserved and report.is_conserved(max_gamma(spec.params))
    except TransistorSimulationError as e:
        row.error = f"{type(e).__name__}: {e}"
        row.populations.clear()
        row.currents.clear()
        row.conservation_residual.clear()
        logger.warning(f"扫描点 {spec.column} = {t} 求解失败: {row.error}")
    return row


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> List[SweepRow]:
    """逐点求解扫描网格.

    Args:
        spec: 扫描描述
        workers: 进程数, 默认取 settings.sweep_workers; 1 为串行参考模式

    Returns:
        与网格同序的 SweepRow 列表; 单点失败记录在该行, 不中断扫描
    """
    workers = workers if workers is not None else get_settings().sweep_workers
    secular = validate_secular(spec.params)
    task = partial(_evaluate_point, spec, len(secular.warnings))

    logger.info(f"开始扫描 {spec.column}: {spec.grid.size} 个点, 方法 {sorted(m.value for m in spec.methods)}, 进程数 {workers}")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(task, spec.grid, chunksize=max(1, spec.grid.size // (4 * workers))))
    else:
        rows = [task(t) for t in spec.grid]

    if spec.amplification:
        for method in sorted(spec.methods, key=lambda m: m.value, reverse=True):
            if spec.private_step:
                _attach_private_amplification(spec, rows, method)
            else:
                _attach_stencil_amplification(rows, method)

    failed = sum(1 for row in rows if row.error)
    logger.info(f"扫描完成: {len(rows)} 行, 失败 {failed} 行")
    return rows


def _attach_stencil_amplification(rows: List[SweepRow], method: SolveMethod) -> None:
    """由相邻扫描行的三点差分计算 α 列（两端为单侧二阶差分）."""
    t = np.array([row.t for row in rows])
    q = np.array([[row.q(bath, method) for bath in BATHS] for row in rows])
    edge_order = 2 if len(rows) >= 3 else 1
    derivative = np.gradient(q, t, axis=0, edge_order=edge_order)
    spacing = np.gradient(t, edge_order=1)

    for k, row in enumerate(rows):
        d_l, d_m, d_r = derivative[k]
        scale = np.max(np.abs(q[k]))
        delta_m = abs(d_m) * 2 * spacing[k]
        if not np.isfinite(d_m) or scale == 0 or delta_m < VANISHING_RATIO * scale:
            row.alpha_l[method] = math.nan
            row.alpha_r[method] = math.nan
        else:
            row.alpha_l[method] = float(d_l / d_m)
            row.alpha_r[method] = float(d_r / d_m)


def _attach_private_amplification(spec: SweepSpec, rows: List[SweepRow], method: SolveMethod) -> None:
    for row in rows:
        try:
            result = amplification_factors(spec.params, spec.baths_at(row.t), row.t, method=method)
            row.alpha_l[method] = result.alpha_l
            row.alpha_r[method] = result.alpha_r
        except TransistorSimulationError as e:
            logger.warning(f"T_M = {row.t} 处放大系数无定义: {e}")
            row.alpha_l[method] = math.nan
            row.alpha_r[method] = math.nan


def figure_preset(figure_id, points: Optional[int] = None) -> SweepSpec:
    """图形预设: 参数取 E1=4, E2=40, E3=44, g=3, γ=0.04（单位 E）.

    T_M/T_R 扫描网格为 [0.01, 2], 附录中的 T_L 扫描为 [0.01, 6]。
    """
    figure_id = FigureId(figure_id)
    points = points if points is not None else get_settings().sweep_points
    params = SystemParams.reference_defaults()
    low_range = np.linspace(0.01, 2.0, points)
    wide_range = np.linspace(0.01, 6.0, points)

    presets = {
        FigureId.FIG2: (Bath.M, low_range, {Bath.L: 2.0, Bath.R: 0.2}),
        FigureId.FIG3: (Bath.M, low_range, {Bath.L: 2.0, Bath.R: 0.2}),
        FigureId.FIG4: (Bath.M, low_range, {Bath.L: 2.0, Bath.R: 0.2}),
        FigureId.FIG5: (Bath.R, low_range, {Bath.L: 2.0, Bath.M: 1.5}),
        FigureId.FIG_B6: (Bath.L, wide_range, {Bath.M: 4.0, Bath.R: 2.0}),
        FigureId.FIG_B7: (Bath.R, low_range, {Bath.M: 4.0, Bath.L: 2.0}),
        FigureId.FIG_B8: (Bath.L, wide_range, {Bath.M: 1.5, Bath.R: 2.0}),
    }
    variable, grid, fixed = presets[figure_id]
    return SweepSpec(
        variable=variable,
        grid=grid,
        fixed=fixed,
        params=params,
        amplification=figure_id is FigureId.FIG4,
        figure_id=figure_id,
    )


def _valid_rows(rows: Sequence[SweepRow]) -> List[SweepRow]:
    return [row for row in rows if row.error is None]


def detect_switch_threshold(rows: Sequence[SweepRow], cutoff: float,
                            method: SolveMethod = SolveMethod.NUMERICAL) -> float:
    """|Q̇_R| 首次超过 cutoff 的温度（在相邻两行之间线性插值）.

    Raises:
        ParameterError: cutoff ≤ 0
        NeverExceeds: 整个网格上 |Q̇_R| 都未超过 cutoff
    """
    if not cutoff > 0:
        raise ParameterError(f"cutoff 必须为正, 实际为 {cutoff}")

    valid = _valid_rows(rows)
    for k, row in enumerate(valid):
        current = abs(row.q(Bath.R, method))
        if current > cutoff:
            if k == 0:
                return row.t
            previous = valid[k - 1]
            before = abs(previous.q(Bath.R, method))
            return previous.t + (cutoff - before) / (current - before) * (row.t - previous.t)

    raise NeverExceeds(f"|Q̇_R| 在整个网格上都未超过 {cutoff:.3e}")


def _plateau_end(values: np.ndarray, rel_tol: float) -> int:
    """满足 (max − min) ≤ rel_tol · mean|Q| 的最长前缀的末尾下标."""
    end = 0
    for k in range(1, len(values)):
        prefix = values[: k + 1]
        if np.ptp(prefix) > rel_tol * np.mean(np.abs(prefix)):
            break
        end = k
    return end


def detect_stability_plateau(
    rows: Sequence[SweepRow],
    rel_tol: float,
    currents: Iterable[BathKey] = (Bath.L, Bath.R),
    method: SolveMethod = SolveMethod.NUMERICAL,
) -> Tuple[float, float]:
    """各受监测热流都保持"水平"的最长前缀区间 [网格起点, T*] 的交集.

    Raises:
        EmptyPlateau: 前两个点就已超出容差
    """
    valid = _valid_rows(rows)
    if len(valid) < 2:
        raise EmptyPlateau("有效扫描点不足 2 个")

    end = len(valid) - 1
    for bath in currents:
        values = np.array([row.q(bath, method) for row in valid])
        end = min(end, _plateau_end(values, rel_tol))
    if end == 0:
        raise EmptyPlateau(f"前两个点的热流变化已超过 rel_tol = {rel_tol}")

    return valid[0].t, valid[end].t


def transfer_gains(
    rows: Sequence[SweepRow],
    output: BathKey,
    modulation: BathKey,
    method: SolveMethod = SolveMethod.NUMERICAL,
) -> np.ndarray:
    """相邻两行之间的有限差分增益 ΔQ̇_output / ΔQ̇_modulation.

    |ΔQ̇_modulation| 低于局部热流量级的 1e-8 时记为 NaN。
    """
    gains = np.full(max(len(rows) - 1, 0), math.nan)
    for k in range(len(rows) - 1):
        first, second = rows[k], rows[k + 1]
        if first.error or second.error:
            continue
        delta_mod = second.q(modulation, method) - first.q(modulation, method)
        local = max(abs(first.q(modulation, method)), abs(second.q(modulation, method)))
        if local == 0 or abs(delta_mod) <= GAIN_NOISE_FLOOR * local:
            continue
        gains[k] = (second.q(output, method) - first.q(output, method)) / delta_mod
    return gains


def has_transistor_gain(
    rows: Sequence[SweepRow],
    output: BathKey,
    modulation: BathKey,
    method: SolveMethod = SolveMethod.NUMERICAL,
) -> bool:
    """是否存在 |ΔQ̇_output/ΔQ̇_modulation| > 1 的网格段."""
    gains = transfer_gains(rows, output, modulation, method)
    finite = gains[np.isfinite(gains)]
    return bool(finite.size and np.max(np.abs(finite)) > 1.0)


@dataclass(frozen=True)
class AmplificationRegion:
    """放大系数的稳定区或敏感区."""

    label: str
    t_start: float
    t_end: float


def classify_amplification_regions(
    rows: Sequence[SweepRow],
    slope_threshold: float = 1.0,
    method: SolveMethod = SolveMethod.NUMERICAL,
) -> List[AmplificationRegion]:
    """按 |d ln|α_L| / dT_M| 把 T_M 扫描划分为 stable / sensitive 区间."""
    t = np.array([row.t for row in rows])
    alpha = np.array([abs(row.alpha_l.get(method, math.nan)) for row in rows])
    valid = np.isfinite(alpha) & (alpha > 0)
    log_alpha = np.where(valid, np.log(np.where(valid, alpha, 1.0)), math.nan)

    labels: List[Optional[str]] = [None] * len(rows)
    for k in range(len(rows)):
        if not valid[k]:
            continue
        left = k - 1 if k > 0 and valid[k - 1] else k
        right = k + 1 if k + 1 < len(rows) and valid[k + 1] else k
        if left == right:
            continue
        slope = abs(log_alpha[right] - log_alpha[left]) / (t[right] - t[left])
        labels[k] = "stable" if slope <= slope_threshold else "sensitive"

    regions: List[AmplificationRegion] = []
    start = None
    for k, label in enumerate(labels):
        if label is not None and start is None:
            start = k
        closing = start is not None and (k + 1 == len(labels) or labels[k + 1] != label)
        if closing:
            regions.append(AmplificationRegion(label=label, t_start=float(t[start]), t_end=float(t[k])))
            start = None
    return regions
