"""运行配置：扁平 key = value 文本格式的物理参数.

支持的键（单位均为参考能量 E）:
    e1 e2 e3 g gamma_l gamma_m gamma_r t_l t_m t_r
以 # 开头的行为注释, 空行忽略, 缺省键取图 2 参数集（t_m = 2.0）。
"""

from pathlib import Path
from typing import Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.core.exceptions import ConfigurationError
from src.core.model import RESONANCE_TOLERANCE, Bath, BathSet, SystemParams

CONFIG_KEYS = ("e1", "e2", "e3", "g", "gamma_l", "gamma_m", "gamma_r", "t_l", "t_m", "t_r")


class RunConfig(BaseModel):
    """一次计算的完整物理输入."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    e1: float = Field(default=4.0, gt=0, allow_inf_nan=False, description="量子比特激发能 E1")
    e2: float = Field(default=40.0, gt=0, allow_inf_nan=False, description="三能级第一激发能 E2")
    e3: float = Field(default=44.0, gt=0, allow_inf_nan=False, description="三能级第二激发能 E3")
    g: float = Field(default=3.0, gt=0, allow_inf_nan=False, description="耦合强度")
    gamma_l: float = Field(default=0.04, gt=0, allow_inf_nan=False)
    gamma_m: float = Field(default=0.04, gt=0, allow_inf_nan=False)
    gamma_r: float = Field(default=0.04, gt=0, allow_inf_nan=False)
    t_l: float = Field(default=2.0, ge=0, allow_inf_nan=False)
    t_m: float = Field(default=2.0, ge=0, allow_inf_nan=False)
    t_r: float = Field(default=0.2, ge=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def validate_resonance(self) -> "RunConfig":
        """验证共振条件 e3 = e1 + e2."""
        if abs(self.e3 - self.e1 - self.e2) > RESONANCE_TOLERANCE * self.e3:
            raise ValueError(
                f"resonance violation: e3 = {self.e3} != e1 + e2 = {self.e1 + self.e2}"
            )
        return self

    def to_params(self) -> SystemParams:
        return SystemParams(
            e1=self.e1, e2=self.e2, e3=self.e3, g=self.g,
            gamma={Bath.L: self.gamma_l, Bath.M: self.gamma_m, Bath.R: self.gamma_r},
        )

    def to_baths(self) -> BathSet:
        return BathSet.of(self.t_l, self.t_m, self.t_r)

    def dump(self) -> str:
        """序列化为可重新解析的文本（repr(float) 保证往返一致）."""
        lines = ["# qtt run configuration (units of E)"]
        lines.extend(f"{key} = {getattr(self, key)!r}" for key in CONFIG_KEYS)
        return "\n".join(lines) + "\n"


def _to_configuration_error(error: ValidationError) -> ConfigurationError:
    first = error.errors()[0]
    location = first.get("loc") or ()
    key = str(location[0]) if location else None
    message = first.get("msg", str(error))
    if key is None and "resonance violation" in message:
        key = "e3"
    return ConfigurationError(f"{key or 'config'}: {message}", key=key)


def build_run_config(values: Dict[str, object]) -> RunConfig:
    """由键值字典构造并验证 RunConfig, 错误统一转换为 ConfigurationError."""
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise _to_configuration_error(e) from e


def parse_run_config(text: str) -> RunConfig:
    """解析 key = value 文本.

    Raises:
        ConfigurationError: 语法错误、未知键、重复键或取值不合法（携带出错的键）
    """
    values: Dict[str, object] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"第 {number} 行缺少 '=': {raw!r}", key=line.split()[0].lower())
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"未知配置键: {key}", key=key)
        if key in values:
            raise ConfigurationError(f"配置键重复: {key}", key=key)
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigurationError(f"{key}: 不是数值: {value!r}", key=key)
    return build_run_config(values)


def load_run_config(path: Optional[Union[str, Path]]) -> RunConfig:
    """读取配置文件; path 为空时返回默认配置."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"无法读取配置文件 {path}: {e}", key="config") from e
    return parse_run_config(text)
