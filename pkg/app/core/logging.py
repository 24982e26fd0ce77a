"""日志配置模块"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger


LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} | {message}"


def configure_logging(level: str = "INFO", log_dir: Optional[Path] = None) -> None:
    """配置loguru输出

    标准错误输出人类可读日志；指定目录时额外写入按天轮转的JSON日志。
    标准输出保留给命令结果

    Args:
        level: 日志级别
        log_dir: 日志目录，None 表示不写文件
    """
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_dir / "sim_{time:YYYY-MM-DD}.log",
            level="DEBUG",
            rotation="1 day",
            retention="30 days",
            serialize=True,
            enqueue=True,
        )
