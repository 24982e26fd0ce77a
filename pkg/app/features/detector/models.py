"""检测器数据模型

定义检测器配置、距离-多普勒图、峰值与检测结果
"""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


WindowName = Literal["hann", "hamming", "blackman", "boxcar"]


class DetectorConfig(BaseModel):
    """检测器配置

    固定幅度门限（不使用CFAR），快时间默认Hann窗，慢时间默认矩形窗
    """

    model_config = ConfigDict(extra="forbid")

    threshold: float = Field(default=200.0, gt=0.0, description="二维图幅度门限")
    range_zero_pad: int = Field(default=4, ge=1, description="距离FFT补零倍数")
    doppler_zero_pad: int = Field(default=1, ge=1, description="多普勒FFT补零倍数")
    range_window: WindowName = Field(default="hann", description="快时间窗函数")
    doppler_window: WindowName = Field(default="boxcar", description="慢时间窗函数")
    max_peaks_per_range_bin: int = Field(
        default=2, ge=1, description="同一距离单元最多保留的峰值数（两接收天线限制）"
    )


class RangeDopplerMap(BaseModel):
    """距离-多普勒图

    cells 的行是居中的多普勒单元，列是距离单元（只保留正频率半轴）
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    cells: np.ndarray = Field(description="形状 (M·zp_d, N·zp_r/2) 的复数或幅度值")
    range_bin_width: float = Field(gt=0.0, description="每个距离单元的宽度（m）")
    velocity_bin_width: float = Field(gt=0.0, description="每个多普勒单元的宽度（m/s）")
    min_range: float = Field(default=0.0, description="有效距离下限（m）")
    max_range: float = Field(default=float("inf"), description="有效距离上限（m）")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.cells)

    @property
    def num_doppler_bins(self) -> int:
        return int(self.cells.shape[0])

    @property
    def num_range_bins(self) -> int:
        return int(self.cells.shape[1])

    def bin_to_range(self, range_bin: float) -> float:
        return float(range_bin) * self.range_bin_width

    def range_to_bin(self, range_m: float) -> int:
        return int(round(range_m / self.range_bin_width))

    def doppler_bin_to_velocity(self, doppler_bin: float) -> float:
        """多普勒行号转径向速度，中心行为零速"""
        return (float(doppler_bin) - self.num_doppler_bins // 2) * self.velocity_bin_width

    def velocity_to_doppler_bin(self, velocity: float) -> int:
        return int(round(velocity / self.velocity_bin_width)) + self.num_doppler_bins // 2


class Peak(BaseModel):
    """二维图中超过门限的局部极大值"""

    range_bin: int
    doppler_bin: int
    magnitude: float


class Detection(BaseModel):
    """单个已分辨目标"""

    model_config = ConfigDict(frozen=True)

    range: float = Field(description="距离（m）")
    bearing: float = Field(description="方位（rad，左正）")
    radial_velocity: float = Field(description="径向速度（m/s，远离为正）")
    magnitude: float = Field(default=0.0, description="峰值幅度")
    timestamp: float = Field(default=0.0, description="时间戳（s）")
