"""量子热晶体管核心模块包.

该包包含了模拟器的核心算法和组件：
- 物理模型：参数、缀饰本征系统、跃迁通道与久期近似检查
- 速率：热占据数、速率系数与布居速率生成元
- 稳态：数值、近似解析与两条校验路线
- 可观测量：净衰减率、热流与放大系数
- 扫描：温度扫描、图形预设与开关/稳定平台检测
"""

from .model import (
    Bath,
    BathSet,
    EigenSystem,
    SecularReport,
    SystemParams,
    TransitionChannel,
    diagonalize,
    eigenoperator_channels,
    validate_secular,
)
from .rates import PopulationGenerator, RatePair, assemble_generator, assemble_block_generator, bose_occupation, rate_pair
from .steadystate import (
    SolveMethod,
    SteadyState,
    evolve_ode,
    solve_approximate,
    solve_full_liouvillian,
    solve_numerical,
)
from .observables import (
    AmplificationResult,
    TransportReport,
    amplification_factors,
    heat_current_closed_form,
    heat_current_trace,
    net_decay_rate,
    transport_report,
)
from .sweeps import (
    FigureId,
    SweepRow,
    SweepSpec,
    detect_stability_plateau,
    detect_switch_threshold,
    figure_preset,
    run_sweep,
)

__all__ = [
    # 物理模型
    'Bath',
    'BathSet',
    'EigenSystem',
    'SecularReport',
    'SystemParams',
    'TransitionChannel',
    'diagonalize',
    'eigenoperator_channels',
    'validate_secular',

    # 速率
    'PopulationGenerator',
    'RatePair',
    'assemble_generator',
    'assemble_block_generator',
    'bose_occupation',
    'rate_pair',

    # 稳态
    'SolveMethod',
    'SteadyState',
    'evolve_ode',
    'solve_approximate',
    'solve_full_liouvillian',
    'solve_numerical',

    # 可观测量
    'AmplificationResult',
    'TransportReport',
    'amplification_factors',
    'heat_current_closed_form',
    'heat_current_trace',
    'net_decay_rate',
    'transport_report',

    # 扫描
    'FigureId',
    'SweepRow',
    'SweepSpec',
    'detect_stability_plateau',
    'detect_switch_threshold',
    'figure_preset',
    'run_sweep',
]
