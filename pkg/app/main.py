"""命令行主入口

构建参数解析器、注册各功能的子命令，并将异常统一转换为退出码
"""

import argparse
import sys
from pathlib import Path
from typing import NoReturn, Optional, Sequence

from loguru import logger

from app.core.config import APP_NAME, APP_VERSION
from app.core.exceptions import EXIT_FAILURE, SimulatorError, UsageError
from app.core.logging import configure_logging
from app.features.detector.router import register as register_detector
from app.features.sim.router import register as register_sim
from app.shared.schemas import CommandResult


class CommandParser(argparse.ArgumentParser):
    """用法错误抛出 UsageError，而不是直接退出进程"""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> CommandParser:
    """构建带 run、batch、sweep、dump 子命令的解析器"""
    common = CommandParser(add_help=False)
    common.add_argument("--scenario", type=Path, required=True, help="场景TOML文件")
    common.add_argument("--out", type=Path, default=Path("out"), help="输出目录")
    common.add_argument("--seed", type=int, default=None, help="覆盖随机种子")
    common.add_argument("--log-level", default="INFO", help="日志级别")
    common.add_argument("--log-dir", type=Path, default=None, help="JSON日志目录")

    parser = CommandParser(prog=APP_NAME, description="雷达感知与速度障碍避障闭环仿真")
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)
    register_sim(subparsers, common)
    register_detector(subparsers, common)
    return parser


def _emit(result: CommandResult) -> None:
    print(result.model_dump_json(indent=2))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """执行命令并返回退出码

    Args:
        argv: 命令行参数，默认取 sys.argv

    Returns:
        int: 0 成功/到达，2 碰撞，3 超时，64 用法或场景错误，1 其他错误
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        logger.warning(f"用法错误: {exc.detail}")
        _emit(CommandResult(success=False, message=exc.detail, code=exc.exit_code, error_type="UsageError"))
        return exc.exit_code

    configure_logging(args.log_level, args.log_dir)
    try:
        result: CommandResult = args.handler(args)
    except SimulatorError as exc:
        logger.warning(f"{type(exc).__name__}: {exc.detail}")
        _emit(
            CommandResult(
                success=False,
                message=exc.detail,
                code=exc.exit_code,
                error_type=type(exc).__name__,
            )
        )
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"未处理的异常: {exc}")
        _emit(
            CommandResult(
                success=False,
                message="内部错误",
                code=EXIT_FAILURE,
                error_type=type(exc).__name__,
            )
        )
        return EXIT_FAILURE

    _emit(result)
    return result.code


def run() -> None:
    """控制台脚本入口"""
    sys.exit(main())


if __name__ == "__main__":
    run()
