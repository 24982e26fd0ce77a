"""雷达模型数据类型

定义FMCW雷达波形配置、噪声模型、点目标以及I/Q帧
"""

import math
from typing import Optional

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    computed_field,
    field_validator,
    model_validator,
)


SPEED_OF_LIGHT = 299_792_458.0
NUM_RX_ANTENNAS = 2

Vector2 = tuple[float, float]


class HaltNoiseBurst(BaseModel):
    """悬停噪声突增

    机体速度首次降到阈值以下后，在 duration_s 秒内放大全部噪声项
    """

    model_config = ConfigDict(extra="forbid")

    duration_s: float = Field(default=1.0, ge=0.0, description="突增持续时间（秒）")
    multiplier: float = Field(default=3.0, ge=0.0, description="噪声放大倍数")
    speed_threshold: float = Field(
        default=0.05, ge=0.0, description="判定为悬停的速度阈值（m/s）"
    )


class NoiseModel(BaseModel):
    """传感器噪声模型

    距离/方位误差的标准差随偏离视轴角度线性增长：
    std(θ) = base + slope·|θ|
    """

    model_config = ConfigDict(extra="forbid")

    iq_noise_std: float = Field(default=0.05, ge=0.0, description="每个I/Q采样的复高斯噪声标准差")
    range_error_base: float = Field(default=0.05, ge=0.0, description="视轴处距离误差标准差（m）")
    range_error_slope: float = Field(default=0.15, ge=0.0, description="距离误差随角度的斜率（m/rad）")
    bearing_error_base: float = Field(
        default=math.radians(2.0), ge=0.0, description="视轴处方位误差标准差（rad）"
    )
    bearing_error_slope: float = Field(
        default=6.0 / 65.0, ge=0.0, description="方位误差随角度的斜率（rad/rad）"
    )
    clutter_rate: float = Field(default=0.0, ge=0.0, description="每帧杂波检测的期望个数")
    halt_noise_burst: Optional[HaltNoiseBurst] = Field(
        default=None, description="悬停噪声突增（默认关闭）"
    )

    @classmethod
    def noise_free(cls) -> "NoiseModel":
        """全部噪声项为零的模型"""
        return cls(
            iq_noise_std=0.0,
            range_error_base=0.0,
            range_error_slope=0.0,
            bearing_error_base=0.0,
            bearing_error_slope=0.0,
            clutter_rate=0.0,
        )

    def range_error_std(self, bearing: float) -> float:
        return self.range_error_base + self.range_error_slope * abs(bearing)

    def bearing_error_std(self, bearing: float) -> float:
        return self.bearing_error_base + self.bearing_error_slope * abs(bearing)


class RadarConfig(BaseModel):
    """FMCW雷达配置

    波形默认值（Tc=300µs, N=256, M=16）为实现默认值，
    载频、带宽与视场对应24GHz两接收天线传感器
    """

    model_config = ConfigDict(extra="forbid")

    carrier_frequency: float = Field(default=24e9, gt=0.0, description="载波频率（Hz）")
    bandwidth: float = Field(default=200e6, gt=0.0, description="扫频带宽 B（Hz）")
    chirp_duration: float = Field(default=300e-6, gt=0.0, description="单个chirp时长 Tc（s）")
    samples_per_chirp: int = Field(default=256, ge=1, description="每个chirp的采样数 N")
    chirps_per_frame: int = Field(default=16, ge=1, description="每帧chirp数 M")
    antenna_spacing: Optional[float] = Field(
        default=None, gt=0.0, description="接收天线间距 d（m），默认 λ/2"
    )
    fov_half_angle: float = Field(
        default=math.radians(38.0), gt=0.0, le=math.pi / 2, description="视场半角（rad）"
    )
    min_range: float = Field(default=1.0, ge=0.0, description="最小探测距离（m）")
    max_range: float = Field(default=12.0, gt=0.0, description="最大探测距离（m）")
    range_decay: bool = Field(default=False, description="是否启用 1/R² 幅度衰减")
    noise: NoiseModel = Field(default_factory=NoiseModel, description="噪声模型")

    @model_validator(mode="after")
    def check_geometry(self) -> "RadarConfig":
        if self.min_range >= self.max_range:
            raise ValueError("min_range 必须小于 max_range")
        if self.antenna_spacing is None:
            self.antenna_spacing = self.wavelength / 2.0
        return self

    @computed_field
    @property
    def wavelength(self) -> float:
        """载波波长 λ = c / f"""
        return SPEED_OF_LIGHT / self.carrier_frequency

    @computed_field
    @property
    def slope(self) -> float:
        """调频斜率 S = B / Tc"""
        return self.bandwidth / self.chirp_duration

    @computed_field
    @property
    def sample_rate(self) -> float:
        """采样率 N / Tc"""
        return self.samples_per_chirp / self.chirp_duration

    @computed_field
    @property
    def range_resolution(self) -> float:
        """距离分辨率 c / 2B"""
        return SPEED_OF_LIGHT / (2.0 * self.bandwidth)

    @computed_field
    @property
    def max_unambiguous_velocity(self) -> float:
        """无模糊多普勒速度 λ / (4·Tc)"""
        return self.wavelength / (4.0 * self.chirp_duration)

    @property
    def spacing_ratio(self) -> float:
        """天线间距与波长之比 d/λ"""
        assert self.antenna_spacing is not None
        return self.antenna_spacing / self.wavelength

    def in_field_of_view(self, range_m: float, bearing: float) -> bool:
        return (
            self.min_range <= range_m <= self.max_range
            and abs(bearing) <= self.fov_half_angle
        )


class PointTarget(BaseModel):
    """世界坐标系中的点反射体"""

    model_config = ConfigDict(extra="forbid")

    position: Vector2 = Field(description="位置（m）")
    velocity: Vector2 = Field(default=(0.0, 0.0), description="速度（m/s）")
    amplitude: float = Field(default=1.0, gt=0.0, description="反射强度")


class EgoState(BaseModel):
    """机体位姿与速度，航向即雷达视轴方向"""

    position: Vector2 = Field(description="位置（m）")
    heading: float = Field(default=0.0, description="航向（rad，逆时针为正）")
    velocity: Vector2 = Field(default=(0.0, 0.0), description="速度（m/s）")


class TargetEcho(BaseModel):
    """传感器坐标系下的单个回波参数"""

    range: float = Field(ge=0.0, description="距离（m）")
    bearing: float = Field(description="方位（rad，左正）")
    radial_velocity: float = Field(default=0.0, description="径向速度（m/s，远离为正）")
    amplitude: float = Field(default=1.0, gt=0.0, description="幅度")


class IQFrame(BaseModel):
    """一帧复基带采样，维度 [天线][chirp][采样]"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    samples: np.ndarray = Field(description="复数采样数组，形状 (2, M, N)")
    timestamp: float = Field(default=0.0, description="帧时间戳（s）")

    @field_validator("samples")
    @classmethod
    def check_shape(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 3 or value.shape[0] != NUM_RX_ANTENNAS:
            raise ValueError(f"I/Q帧形状必须为 (2, M, N)，实际为 {value.shape}")
        return value

    @property
    def chirps(self) -> int:
        return int(self.samples.shape[1])

    @property
    def samples_per_chirp(self) -> int:
        return int(self.samples.shape[2])
