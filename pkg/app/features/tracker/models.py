"""跟踪器数据模型

极坐标常加速度状态、航迹、代价矩阵与跟踪器配置
"""

import math
from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.features.detector.models import Detection


STATE_DIM = 6
MEASUREMENT_DIM = 3

# 状态顺序 (r, θ, ṙ, θ̇, r̈, θ̈)
RANGE, BEARING, RANGE_RATE, BEARING_RATE = 0, 1, 2, 3


class TrackStatus(str, Enum):
    """航迹状态"""

    CANDIDATE = "candidate"
    CONFIRMED = "confirmed"


class TrackerConfig(BaseModel):
    """跟踪器配置

    协方差得分为 P 的位置块 (r, θ) 的迹
    """

    model_config = ConfigDict(extra="forbid")

    detection_probability: float = Field(default=0.9, gt=0.0, lt=1.0, description="检测概率 P_D")
    gate_threshold: float = Field(default=4.0, gt=0.0, description="马氏距离门限")
    tau_birth: float = Field(default=0.011, gt=0.0, description="确认阈值")
    tau_death: float = Field(default=0.2, gt=0.0, description="删除阈值")
    q_range: float = Field(default=10.0, ge=0.0, description="距离方向加加速度噪声强度（m²/s⁵）")
    q_bearing: float = Field(default=1.0, ge=0.0, description="方位方向加加速度噪声强度（rad²/s⁵）")
    range_std: float = Field(default=0.15, gt=0.0, description="距离量测标准差（m）")
    bearing_std: float = Field(default=math.radians(2.0), gt=0.0, description="方位量测标准差（rad）")
    # 多普勒按单元中心取值，量化误差约为 ±1 个速度单元（默认约 1.3 m/s）
    radial_velocity_std: float = Field(default=0.75, gt=0.0, description="径向速度量测标准差（m/s）")
    init_bearing_rate_var: float = Field(default=1.0, gt=0.0, description="新航迹方位角速度先验方差")
    init_range_accel_var: float = Field(default=4.0, gt=0.0, description="新航迹距离加速度先验方差")
    init_bearing_accel_var: float = Field(default=1.0, gt=0.0, description="新航迹方位角加速度先验方差")
    singular_inflation: float = Field(default=2.0, ge=1.0, description="S 奇异时协方差放大倍数")
    birth_exclusion: bool = Field(
        default=True, description="紧邻本帧已关联检测的未关联检测不生成新航迹"
    )
    birth_exclusion_radius: float = Field(
        default=0.3, ge=0.0, description="出生抑制半径（m，传感器系笛卡尔距离）"
    )

    @model_validator(mode="after")
    def check_thresholds(self) -> "TrackerConfig":
        if self.tau_birth >= self.tau_death:
            raise ValueError("tau_birth 必须小于 tau_death")
        return self

    @property
    def measurement_covariance(self) -> np.ndarray:
        """量测噪声协方差 R"""
        return np.diag(
            [self.range_std**2, self.bearing_std**2, self.radial_velocity_std**2]
        )

    @property
    def initial_covariance(self) -> np.ndarray:
        return np.diag(
            [
                self.range_std**2,
                self.bearing_std**2,
                self.radial_velocity_std**2,
                self.init_bearing_rate_var,
                self.init_range_accel_var,
                self.init_bearing_accel_var,
            ]
        )

    @property
    def misdetection_cost(self) -> float:
        """-log(1 - P_D)"""
        return -math.log(1.0 - self.detection_probability)


class Measurement(BaseModel):
    """量测 z = (r, θ, ṙ)"""

    model_config = ConfigDict(frozen=True)

    range: float
    bearing: float
    radial_velocity: float
    timestamp: float = 0.0

    @classmethod
    def from_detection(cls, detection: Detection) -> "Measurement":
        return cls(
            range=detection.range,
            bearing=detection.bearing,
            radial_velocity=detection.radial_velocity,
            timestamp=detection.timestamp,
        )

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.range, self.bearing, self.radial_velocity])


class TrackState(BaseModel):
    """状态向量与协方差"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray = Field(description="状态 (r, θ, ṙ, θ̇, r̈, θ̈)")
    P: np.ndarray = Field(description="6×6 协方差")

    @property
    def position_score(self) -> float:
        """位置块的迹"""
        return float(np.trace(self.P[:2, :2]))

    @property
    def position_std(self) -> float:
        """笛卡尔位置标准差 sqrt(P_rr + r²·P_θθ)"""
        r = max(float(self.x[RANGE]), 0.0)
        return math.sqrt(max(float(self.P[0, 0] + r * r * self.P[1, 1]), 0.0))


class Track(BaseModel):
    """航迹"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    id: int
    state: TrackState
    status: TrackStatus = TrackStatus.CANDIDATE
    last_update: float = 0.0
    hits: int = 1
    consecutive_misses: int = 0
    assigned_detection: Optional[int] = Field(
        default=None, description="本帧关联的检测索引，未关联为 None"
    )

    @property
    def is_confirmed(self) -> bool:
        return self.status is TrackStatus.CONFIRMED


class CostMatrix(BaseModel):
    """n × (m + n) 代价矩阵

    左块为关联代价 ½·rᵀS⁻¹r，右块对角为漏检代价 -log(1-P_D)，其余为 +∞
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    costs: np.ndarray
    n_tracks: int
    n_detections: int
    singular_rows: list[int] = Field(default_factory=list, description="S 奇异的航迹行")

    @property
    def association(self) -> np.ndarray:
        return self.costs[:, : self.n_detections]

    @property
    def misdetection(self) -> np.ndarray:
        return self.costs[:, self.n_detections :]


class Assignment(BaseModel):
    """分配结果"""

    track_to_detection: list[Optional[int]] = Field(
        description="每条航迹对应的检测索引，漏检为 None"
    )
    unassigned_detections: list[int] = Field(default_factory=list)
    total_cost: float = 0.0


TrackEventKind = Literal["birth", "confirm", "death", "singular"]


class TrackEvent(BaseModel):
    """航迹生命周期或数值诊断事件"""

    kind: TrackEventKind
    track_id: int
    time: float
    detail: str = ""


class TrackerStepResult(BaseModel):
    """一次跟踪步的输出"""

    tracks: list[Track]
    events: list[TrackEvent] = Field(default_factory=list)
    assignment: Optional[Assignment] = None
