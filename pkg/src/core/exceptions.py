"""量子热晶体管模拟器异常模块

定义系统中使用的所有自定义异常类。
"""

from typing import Optional


class TransistorSimulationError(Exception):
    """模拟器基础异常"""
    pass


class ParameterError(TransistorSimulationError):
    """参数/输入类异常（命令行退出码 2）"""
    pass


class ResonanceViolation(ParameterError):
    """共振条件 E3 = E1 + E2 不成立"""
    pass


class NonPositiveFrequency(ParameterError):
    """跃迁频率必须为正"""
    pass


class DegenerateFrequency(ParameterError):
    """缀饰态跃迁频率退化（ω ≤ 0）"""
    pass


class IncompleteChannels(ParameterError):
    """跃迁通道列表不是标准的 11 条"""
    pass


class UnknownChannel(ParameterError):
    """指定的能级对不由该热库驱动"""
    pass


class WrongStateMethod(ParameterError):
    """稳态求解方法与所请求的公式不匹配"""
    pass


class ConfigurationError(ParameterError):
    """配置错误异常，携带出错的配置键"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class SolverError(TransistorSimulationError):
    """求解器异常（命令行退出码 3）"""
    pass


class DegenerateNullSpace(SolverError):
    """速率生成元的零空间维数不为 1"""
    pass


class StiffnessFailure(SolverError):
    """ODE 积分器无法满足容差"""
    pass


class NonDiagonalSteadyState(SolverError):
    """完整刘维尔稳态在缀饰基下不是对角的"""
    pass


class VanishingModulationSensitivity(SolverError):
    """调制电流差分趋于零，放大系数无定义"""
    pass


class SweepAnalysisError(TransistorSimulationError):
    """扫描结果分析异常"""
    pass


class NeverExceeds(SweepAnalysisError):
    """|Q̇_R| 在整个网格上都未超过阈值"""
    pass


class EmptyPlateau(SweepAnalysisError):
    """前两个网格点就已超出稳定容差"""
    pass
