"""避障数据模型"""

from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.shared.geometry import rotate


class AvoidanceMode(str, Enum):
    """避障模式"""

    VELOCITY_OBSTACLE = "velocity_obstacle"
    SIDE_STEP = "side_step"
    DISABLED = "disabled"


class AvoidanceConfig(BaseModel):
    """避障配置

    组合半径 r_c = mav_radius + obstacle_radius + safety_margin + uncertainty_factor·σ_pos
    """

    model_config = ConfigDict(extra="forbid")

    mode: AvoidanceMode = Field(default=AvoidanceMode.VELOCITY_OBSTACLE, description="避障模式")
    mav_radius: float = Field(default=0.15, gt=0.0, description="机体半径 r_A（m）")
    obstacle_radius: float = Field(default=0.25, gt=0.0, description="假定的障碍物半径 r_B（m）")
    safety_margin: float = Field(default=0.2, ge=0.0, description="安全余量（m）")
    uncertainty_factor: float = Field(default=1.0, ge=0.0, description="位置标准差放大系数")
    max_speed: float = Field(default=1.0, gt=0.0, description="最大速度（m/s）")
    max_turn_rate: float = Field(default=2.0, gt=0.0, description="最大转向角速度（rad/s）")
    side_step_distance: float = Field(default=1.0, gt=0.0, description="侧移距离（m）")
    static_speed_threshold: float = Field(
        default=0.3, ge=0.0, description="低于该速度的障碍物视为静止（m/s）"
    )
    obstacle_memory_s: float = Field(default=3.0, ge=0.0, description="障碍物记忆时长（s）")
    memory_window_s: float = Field(
        default=1.5, gt=0.0, description="记忆中用于拟合位置与速度的观测时间窗（s）"
    )
    memory_miss_frames: int = Field(
        default=3, ge=1, description="应当可见却连续未被观测到的帧数，达到后删除记忆"
    )
    memory_merge_radius: float = Field(
        default=0.5, gt=0.0, description="新航迹与已有记忆合并的距离（m）"
    )


class ObstacleEstimate(BaseModel):
    """障碍物估计（与世界系对齐的相对量）"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    relative_position: np.ndarray = Field(description="p：B 相对 A 的位置（m）")
    relative_velocity: np.ndarray = Field(description="V_AB = V_A - V_B（m/s）")
    obstacle_velocity: np.ndarray = Field(
        default_factory=lambda: np.zeros(2), description="V_B（m/s）"
    )
    radius: float = Field(default=0.25, gt=0.0, description="r_B（m）")
    position_std: float = Field(default=0.0, ge=0.0, description="位置标准差（m）")
    obstacle_id: Optional[int] = Field(default=None, description="来源航迹编号")

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.relative_position))


class CollisionCone(BaseModel):
    """速度空间中的碰撞锥，顶点在原点"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    axis: np.ndarray = Field(description="轴向单位向量 p/|p|")
    half_angle: float = Field(ge=0.0, description="半顶角 α（rad）")
    distance: float = Field(gt=0.0, description="|p|（m）")
    combined_radius: float = Field(ge=0.0, description="r_c（m）")

    @property
    def left_edge(self) -> np.ndarray:
        return rotate(self.axis, self.half_angle)

    @property
    def right_edge(self) -> np.ndarray:
        return rotate(self.axis, -self.half_angle)


class AvoidanceCommand(BaseModel):
    """避障输出"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    velocity: np.ndarray = Field(description="速度指令 V̂_A（m/s）")
    in_cone: bool = Field(default=False, description="原始 V_AB 是否在碰撞锥内")
    edge: Optional[Literal["left", "right"]] = Field(default=None, description="投影所用锥边")
    cone_half_angle: Optional[float] = Field(default=None, description="碰撞锥半顶角（rad）")
    unsafe: bool = Field(default=False, description="可达速度中不存在安全解")


class Pose(BaseModel):
    """平面位姿"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    position: np.ndarray
    heading: float = 0.0
