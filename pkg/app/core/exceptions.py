"""异常定义模块

定义仿真器的领域异常，每个异常携带命令行退出码，
由 main.py 中的全局异常处理器统一转换
"""

from typing import Optional


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_COLLISION = 2
EXIT_TIMEOUT = 3
EXIT_USAGE = 64


class SimulatorError(Exception):
    """仿真器异常基类

    Attributes:
        detail: 错误描述
        exit_code: 命令行退出码
    """

    exit_code: int = EXIT_FAILURE

    def __init__(self, detail: str, exit_code: Optional[int] = None) -> None:
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class UsageError(SimulatorError):
    """命令行用法错误（未知子命令、未知阶段、参数非法）"""

    exit_code = EXIT_USAGE


class ScenarioError(SimulatorError):
    """场景文件缺失或校验失败"""

    exit_code = EXIT_USAGE


class ConfigMismatchError(SimulatorError, ValueError):
    """帧数据与雷达配置不一致，或配置无法用于合成"""


class AlreadyInCollisionError(SimulatorError):
    """相对距离已小于组合半径，碰撞锥无定义，调用方必须紧急停止"""

    def __init__(self, distance: float, combined_radius: float) -> None:
        super().__init__(
            f"已处于碰撞状态: |p|={distance:.3f} m <= r_c={combined_radius:.3f} m"
        )
        self.distance = distance
        self.combined_radius = combined_radius
