"""仿真数据模型

世界配置、流水线配置、逐帧记录与试验日志
"""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.features.avoidance.models import AvoidanceConfig
from app.features.detector.models import DetectorConfig
from app.features.radar.models import RadarConfig, Vector2
from app.features.tracker.models import TrackerConfig
from app.features.tracker.service import MultiTargetTracker
from app.shared.schemas import LinearFit


Outcome = Literal["reached_goal", "collision", "timeout"]


class Obstacle(BaseModel):
    """圆柱障碍物（平面圆盘），可做匀速运动"""

    model_config = ConfigDict(extra="forbid")

    center: Vector2 = Field(description="初始圆心（m）")
    radius: float = Field(default=0.25, gt=0.0, description="半径（m），默认直径0.5m")
    velocity: Vector2 = Field(default=(0.0, 0.0), description="速度（m/s）")

    def center_at(self, time: float) -> np.ndarray:
        return np.asarray(self.center, dtype=float) + np.asarray(self.velocity) * time


class WorldConfig(BaseModel):
    """仿真世界配置"""

    model_config = ConfigDict(extra="forbid")

    arena_min: Vector2 = Field(default=(-10.0, -10.0), description="场地左下角（m）")
    arena_max: Vector2 = Field(default=(10.0, 10.0), description="场地右上角（m）")
    obstacles: list[Obstacle] = Field(default_factory=list, description="障碍物列表")
    start: Vector2 = Field(default=(0.0, 0.0), description="起点（m）")
    goal: Vector2 = Field(default=(8.0, 0.0), description="终点（m）")
    mav_radius: float = Field(default=0.15, gt=0.0, description="机体半径（m）")
    max_speed: float = Field(default=1.0, gt=0.0, description="最大速度（m/s）")
    max_accel: float = Field(default=2.0, gt=0.0, description="最大加速度（m/s²）")
    control_time_constant: float = Field(default=0.3, gt=0.0, description="一阶速度响应时间常数（s）")
    frame_rate: float = Field(default=10.0, gt=0.0, description="雷达帧率（Hz）")
    max_duration: float = Field(default=60.0, gt=0.0, description="超时时长（s）")
    goal_tolerance: float = Field(default=0.2, gt=0.0, description="到达判定距离（m）")
    approach_time: float = Field(default=0.5, gt=0.0, description="接近终点时的减速时间尺度（s）")
    seed: int = Field(default=0, ge=0, description="随机种子")

    @model_validator(mode="after")
    def check_layout(self) -> "WorldConfig":
        low, high = np.asarray(self.arena_min), np.asarray(self.arena_max)
        if np.any(low >= high):
            raise ValueError("arena_min 必须逐分量小于 arena_max")
        for index, obstacle in enumerate(self.obstacles):
            center = np.asarray(obstacle.center)
            if np.any(center < low) or np.any(center > high):
                raise ValueError(f"障碍物 {index} 位于场地之外")
            for name, point in (("start", self.start), ("goal", self.goal)):
                gap = float(np.linalg.norm(np.asarray(point) - center))
                if gap <= self.mav_radius + obstacle.radius:
                    raise ValueError(f"{name} 与障碍物 {index} 重叠")
        return self

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def max_frames(self) -> int:
        return int(math.ceil(self.max_duration * self.frame_rate))


class PipelineConfig(BaseModel):
    """传感-跟踪-避障流水线配置"""

    model_config = ConfigDict(extra="forbid")

    radar: RadarConfig = Field(default_factory=RadarConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    tracker: TrackerConfig = Field(default_factory=TrackerConfig)
    avoidance: AvoidanceConfig = Field(default_factory=AvoidanceConfig)


class BatchSettings(BaseModel):
    """环形起点批量试验设置"""

    model_config = ConfigDict(extra="forbid")

    ring_center: Vector2 = Field(default=(0.0, 0.0), description="环心（m）")
    ring_radius: float = Field(default=5.0, gt=0.0, description="环半径（m）")
    n_trials: int = Field(default=26, ge=0, description="试验数量")
    angle_offset: float = Field(default=0.0, description="首个起点的方位角（rad）")
    parallelism: int = Field(default=1, ge=1, description="并行进程数")


class SweepSettings(BaseModel):
    """误差-角度扫描设置"""

    model_config = ConfigDict(extra="forbid")

    target_range: float = Field(default=5.0, gt=0.0, description="目标距离（m）")
    max_bearing_deg: float = Field(default=38.0, ge=0.0, le=90.0, description="最大方位（度）")
    n_bearings: int = Field(default=20, ge=2, description="方位采样点数")
    seeds_per_bearing: int = Field(default=50, ge=1, description="每个方位的随机种子数")
    seed: int = Field(default=0, ge=0, description="扫描种子")


class TruthRecord(BaseModel):
    frame: int
    time: float
    x: float
    y: float
    heading: float
    vx: float
    vy: float
    clearance: float = Field(description="本帧最小间隙（m），无障碍物时为 inf")


class DetectionRecord(BaseModel):
    frame: int
    time: float
    index: int
    range: float
    bearing: float
    radial_velocity: float
    magnitude: float
    clutter: bool = False


class TrackRecord(BaseModel):
    frame: int
    time: float
    track_id: int
    status: str
    r: float
    theta: float
    r_dot: float
    theta_dot: float
    trace_p_pos: float
    assigned_detection_index: int = Field(default=-1, description="-1 表示本帧未关联")


class CommandRecord(BaseModel):
    time: float
    mode: str
    obstacle_id: int = Field(default=-1, description="-1 表示无障碍物")
    in_cone: bool
    v_a_x: float
    v_a_y: float
    v_cmd_x: float
    v_cmd_y: float
    cone_half_angle: float = Field(default=float("nan"), description="无碰撞锥时为 NaN")


SimEventKind = Literal[
    "birth",
    "confirm",
    "death",
    "singular",
    "cone_entry",
    "side_step",
    "emergency",
    "collision",
    "outcome",
]


class SimEvent(BaseModel):
    time: float
    kind: SimEventKind
    track_id: int = -1
    detail: str = ""


class FrameLog(BaseModel):
    """单帧产生的全部记录"""

    truth: Optional[TruthRecord] = None
    detections: list[DetectionRecord] = Field(default_factory=list)
    tracks: list[TrackRecord] = Field(default_factory=list)
    command: Optional[CommandRecord] = None
    events: list[SimEvent] = Field(default_factory=list)


class TrialLog(BaseModel):
    """一次试验的完整记录"""

    trial_id: str = "trial"
    seed: int = 0
    truth: list[TruthRecord] = Field(default_factory=list)
    detections: list[DetectionRecord] = Field(default_factory=list)
    tracks: list[TrackRecord] = Field(default_factory=list)
    commands: list[CommandRecord] = Field(default_factory=list)
    events: list[SimEvent] = Field(default_factory=list)
    outcome: Outcome = "timeout"
    min_clearance: Optional[float] = Field(default=None, description="无障碍物时为 None")
    frames: int = 0
    duration: float = 0.0

    def extend(self, frame_log: FrameLog) -> None:
        if frame_log.truth is not None:
            self.truth.append(frame_log.truth)
        self.detections.extend(frame_log.detections)
        self.tracks.extend(frame_log.tracks)
        if frame_log.command is not None:
            self.commands.append(frame_log.command)
        self.events.extend(frame_log.events)


class RememberedObstacle(BaseModel):
    """世界系障碍物记忆

    center / velocity 由时间窗内的世界系观测拟合得到，center 对应 last_seen 时刻
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    track_id: int
    center: np.ndarray
    velocity: np.ndarray = Field(default_factory=lambda: np.zeros(2))
    position_std: float
    last_seen: float
    samples: list[tuple[float, float, float]] = Field(
        default_factory=list, description="观测 (t, x, y)"
    )
    missed_frames: int = Field(default=0, description="应当可见却未被观测到的连续帧数")

    def center_at(self, time: float) -> np.ndarray:
        return self.center + self.velocity * (time - self.last_seen)


class SimState(BaseModel):
    """仿真状态，由单个试验循环独占"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    frame: int = 0
    time: float = 0.0
    position: np.ndarray
    heading: float = 0.0
    velocity: np.ndarray = Field(default_factory=lambda: np.zeros(2))
    tracker: MultiTargetTracker
    command: np.ndarray = Field(default_factory=lambda: np.zeros(2))
    memory: dict[int, RememberedObstacle] = Field(default_factory=dict)
    waypoint: Optional[np.ndarray] = None
    in_cone: bool = False
    has_moved: bool = False
    burst_until: Optional[float] = None
    min_clearance: Optional[float] = None
    collided: bool = False
    last_frame: FrameLog = Field(default_factory=FrameLog)


class SweepRow(BaseModel):
    bearing_deg: float
    range_error: float = Field(description="距离平均绝对误差（m）")
    bearing_error_deg: float = Field(description="方位平均绝对误差（度）")
    detection_rate: float


class SweepResult(BaseModel):
    rows: list[SweepRow]
    range_fit: LinearFit
    bearing_fit: LinearFit
