"""工具模块导出."""

from src.utils.config import Settings, get_settings, settings
from src.utils.logger import get_logger, setup_logging

__all__ = [
    "Settings",
    "get_settings",
    "get_logger",
    "settings",
    "setup_logging",
]
