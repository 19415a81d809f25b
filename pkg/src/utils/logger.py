"""日志系统配置."""

import logging
import logging.handlers
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Any, Optional

import structlog
from structlog.stdlib import BoundLogger

from .config import settings


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> None:
    """设置结构化日志.

    控制台输出走 stderr，stdout 留给命令行的数据输出。
    """

    # 清除现有的处理器
    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    level = getattr(logging, log_level.upper())

    # 配置控制台处理器
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # 配置文件处理器（可选）
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=5,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    root_logger.setLevel(level)

    # 配置structlog
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            _add_timestamp,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            _get_renderer(),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    logger = logging.getLogger(__name__)
    logger.debug(f"日志系统初始化完成, 级别: {log_level}, 文件输出: {log_file or '关闭'}")


def _add_timestamp(_, __, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """添加时间戳到日志."""
    event_dict["timestamp"] = datetime.now(timezone.utc).isoformat()
    return event_dict


def _get_renderer():
    """获取日志渲染器."""
    try:
        if settings.log_format == "json":
            # 使用支持中文的JSON渲染器
            return structlog.processors.JSONRenderer(ensure_ascii=False)
        else:
            return structlog.dev.ConsoleRenderer(colors=False)
    except Exception:
        # 如果配置未加载，使用控制台渲染器
        return structlog.dev.ConsoleRenderer(colors=False)


def get_logger(name: str) -> BoundLogger:
    """获取结构化日志器."""
    return structlog.get_logger(name)


# 确保日志系统初始化
try:
    setup_logging(settings.log_level, settings.log_file)
except Exception:
    # 如果设置未加载，使用默认配置
    setup_logging("INFO")

# 导出默认logger实例
logger = get_logger(__name__)
