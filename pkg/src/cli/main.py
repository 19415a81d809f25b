"""命令行入口.

退出码: 0 成功, 1 验证失败, 2 配置/参数错误, 3 求解器错误, 4 文件读写错误。
失败时在标准错误输出一行机器可读信息:
    error code=<n> type=<异常名> key=<配置键或 -> message=<说明>
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from rich.console import Console

from src import __version__
from src.cli.commands import (
    cmd_dump_config,
    cmd_reproduce,
    cmd_steady,
    cmd_sweep,
    cmd_validate,
)
from src.cli.run_config import load_run_config
from src.core.exceptions import ParameterError, SolverError, TransistorSimulationError
from src.core.sweeps import FigureId
from src.utils.logger import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_ERROR = 3
EXIT_IO_ERROR = 4

_DUMP_TO_STDOUT = "-"


def build_parser() -> argparse.ArgumentParser:
    """构建参数解析器."""
    parser = argparse.ArgumentParser(
        prog="qtt",
        description="qubit-qutrit 量子热晶体管: 稳态布居、热流与放大系数",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="key = value 格式的参数文件, 缺省为图 2 参数集")
    parser.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], help="覆盖 QTT_LOG_LEVEL",
    )
    parser.add_argument(
        "--dump-config", nargs="?", const=_DUMP_TO_STDOUT, metavar="PATH",
        help="输出当前配置（缺省输出到标准输出）后退出",
    )

    subparsers = parser.add_subparsers(dest="command")

    steady = subparsers.add_parser("steady", help="单点稳态求解")
    steady.add_argument("--output", type=Path, help="写出单行 CSV 报告")

    sweep = subparsers.add_parser("sweep", help="单个热库温度的扫描")
    sweep.add_argument("--variable", required=True, choices=["T_L", "T_M", "T_R"], help="扫描的温度")
    sweep.add_argument("--start", type=float, required=True)
    sweep.add_argument("--stop", type=float, required=True)
    sweep.add_argument("--points", type=int, help="网格点数, 缺省取 QTT_SWEEP_POINTS")
    sweep.add_argument(
        "--methods", nargs="+", default=["numerical", "approximate"],
        choices=["numerical", "approximate"],
    )
    sweep.add_argument("--amplification", action="store_true", help="附加 α 列（仅 T_M 扫描）")
    sweep.add_argument("--private-step", action="store_true", help="逐点用独立步长计算 α")
    sweep.add_argument("--output-dir", type=Path)
    sweep.add_argument("--workers", type=int)

    reproduce = subparsers.add_parser("reproduce", help="按图形预设生成数据文件")
    reproduce.add_argument("figure_id", metavar="FIGURE", help=", ".join(f.value for f in FigureId))
    reproduce.add_argument("--output-dir", type=Path)
    reproduce.add_argument("--points", type=int)
    reproduce.add_argument("--workers", type=int)

    validate = subparsers.add_parser("validate", help="运行不变量验证套件")
    validate.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    return parser


def _report_failure(code: int, error: BaseException) -> int:
    key = getattr(error, "key", None) or "-"
    message = " ".join(str(error).split())
    print(
        f"error code={code} type={type(error).__name__} key={key} message={message}",
        file=sys.stderr,
    )
    return code


def _dispatch(args: argparse.Namespace, console: Console) -> int:
    config = load_run_config(args.config)

    if args.dump_config is not None:
        path = None if args.dump_config == _DUMP_TO_STDOUT else Path(args.dump_config)
        return cmd_dump_config(config, console, path)

    if args.command == "steady":
        return cmd_steady(config, console, output=args.output)
    if args.command == "sweep":
        return cmd_sweep(
            config, console,
            variable=args.variable,
            start=args.start,
            stop=args.stop,
            points=args.points,
            methods=args.methods,
            amplification=args.amplification,
            private_step=args.private_step,
            output_dir=args.output_dir,
            workers=args.workers,
        )
    if args.command == "reproduce":
        return cmd_reproduce(
            args.figure_id, console,
            output_dir=args.output_dir,
            workers=args.workers,
            points=args.points,
        )
    return cmd_validate(config, console, inject_fault=args.inject_fault)


def main(argv: Optional[List[str]] = None) -> int:
    """命令行主函数, 返回退出码."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.log_level:
        setup_logging(args.log_level)

    if args.command is None and args.dump_config is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG_ERROR

    console = Console()
    try:
        return _dispatch(args, console)
    except ParameterError as e:
        return _report_failure(EXIT_CONFIG_ERROR, e)
    except (SolverError, TransistorSimulationError) as e:
        return _report_failure(EXIT_SOLVER_ERROR, e)
    except OSError as e:
        logger.error("io_failed", error=str(e))
        return _report_failure(EXIT_IO_ERROR, e)


if __name__ == "__main__":
    sys.exit(main())
