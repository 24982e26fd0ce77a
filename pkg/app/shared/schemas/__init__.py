"""共享数据模式

定义命令统一结果格式与各命令输出到标准输出的JSON摘要
"""

from typing import Generic, Optional, TypeVar

from pydantic import BaseModel, Field


T = TypeVar("T")


class CommandResult(BaseModel, Generic[T]):
    """统一命令结果格式

    code 即进程退出码
    """

    success: bool = Field(description="命令是否成功")
    data: Optional[T] = Field(default=None, description="结果数据")
    message: str = Field(description="结果消息")
    code: int = Field(description="退出码")
    error_type: Optional[str] = Field(default=None, description="错误类型")


class TrialSummary(BaseModel):
    """单次试验摘要"""

    trial_id: str = Field(description="试验编号")
    outcome: str = Field(description="结果: reached_goal, collision, timeout")
    min_clearance: Optional[float] = Field(default=None, description="最小间隙（m）")
    frames: int = Field(description="帧数")
    duration: float = Field(description="仿真时长（s）")
    seed: int = Field(description="随机种子")
    files: list[str] = Field(default_factory=list, description="输出文件")


class BatchSummary(BaseModel):
    """批量试验汇总"""

    n_trials: int
    reached_goal: int
    collisions: int
    timeouts: int
    margin_respected: int = Field(description="最小间隙不低于安全余量的试验数")
    min_clearance: Optional[float] = Field(default=None, description="全部试验的最小间隙（m）")
    trials: list[TrialSummary] = Field(default_factory=list)


class LinearFit(BaseModel):
    slope: float
    intercept: float
    r_squared: float


class SweepReport(BaseModel):
    """误差-角度扫描报告，斜率单位为每度"""

    csv_path: str
    n_bearings: int
    range_fit: LinearFit
    bearing_fit: LinearFit


class DumpReport(BaseModel):
    """流水线阶段导出报告"""

    stage: str
    path: str
    shape: list[int] = Field(default_factory=list)
