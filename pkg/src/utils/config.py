"""配置管理模块."""

from functools import lru_cache
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
import logging

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """应用程序设置.

    只包含工具层面的开关（日志、精度、容差、并行度、输出目录），
    物理参数由命令行的 RunConfig 单独提供。
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="QTT_",
        case_sensitive=False,
        extra="ignore",
    )

    # 日志配置
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="console")
    log_file: Optional[str] = Field(default=None, description="为空时不写日志文件")

    # 数值精度
    working_digits: int = Field(default=60, ge=30, description="高精度稳态求解的十进制位数")

    # 扫描配置
    sweep_points: int = Field(default=200, ge=2)
    sweep_workers: int = Field(default=1, ge=1, description="1 表示串行参考模式")

    # 放大系数
    amplification_step: float = Field(default=1e-3, gt=0)
    richardson_tolerance: float = Field(default=1e-3, gt=0)

    # 容差
    secular_ratio_threshold: float = Field(default=0.1, gt=0)
    conservation_relative_tolerance: float = Field(default=1e-10, gt=0)
    conservation_floor: float = Field(default=1e-18, gt=0, description="以 γE 为单位的绝对下限")
    ode_rtol: float = Field(default=1e-10, gt=0)
    ode_atol: float = Field(default=1e-13, gt=0)

    # 文件输出
    output_dir: str = Field(default="data/figures")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """验证日志级别."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"无效的日志级别: {v}. 必须是: {valid_levels}")
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """验证日志格式."""
        if v not in ("console", "json"):
            raise ValueError(f"无效的日志格式: {v}. 必须是 console 或 json")
        return v


@lru_cache()
def get_settings() -> Settings:
    """获取应用程序设置（带缓存）."""
    settings = Settings()

    logger.debug("配置加载完成")
    logger.debug(f"工作精度: {settings.working_digits} 位, 扫描点数: {settings.sweep_points}")

    return settings


# 全局设置实例
settings = get_settings()
