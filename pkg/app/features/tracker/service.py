"""多目标跟踪服务

全局最近邻关联 + 常加速度卡尔曼滤波 + 协方差阈值航迹起始/删除。
状态在传感器极坐标系中，量测模型 H 为线性选择矩阵
"""

import itertools
import math
from typing import Iterator, Optional, Sequence

import numpy as np
from loguru import logger
from scipy.optimize import linear_sum_assignment

from app.shared.geometry import rotate, wrap_angle

from .models import (
    BEARING,
    MEASUREMENT_DIM,
    RANGE,
    STATE_DIM,
    Assignment,
    CostMatrix,
    Measurement,
    Track,
    TrackerConfig,
    TrackerStepResult,
    TrackEvent,
    TrackState,
    TrackStatus,
)


H = np.eye(MEASUREMENT_DIM, STATE_DIM)

# S 的条件数超过该值视为奇异
_SINGULAR_CONDITION = 1e12


def transition_matrix(dt: float) -> np.ndarray:
    """常加速度转移矩阵，按 (值, 一阶, 二阶) 三元组对两轴交错排列"""
    block = np.array([[1.0, dt, 0.5 * dt * dt], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    return np.kron(block, np.eye(2))


def process_noise(dt: float, config: TrackerConfig) -> np.ndarray:
    """白噪声加加速度过程噪声"""
    block = np.array(
        [
            [dt**5 / 20.0, dt**4 / 8.0, dt**3 / 6.0],
            [dt**4 / 8.0, dt**3 / 3.0, dt**2 / 2.0],
            [dt**3 / 6.0, dt**2 / 2.0, dt],
        ]
    )
    return np.kron(block, np.diag([config.q_range, config.q_bearing]))


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def _inverse(matrix: np.ndarray) -> Optional[np.ndarray]:
    """求逆，病态或奇异时返回 None"""
    if not np.all(np.isfinite(matrix)) or np.linalg.cond(matrix) > _SINGULAR_CONDITION:
        return None
    try:
        return np.linalg.inv(matrix)
    except np.linalg.LinAlgError:
        return None


def predict(track: Track, dt: float, config: TrackerConfig) -> Track:
    """时间更新 x ← F·x, P ← F·P·Fᵀ + Q

    Args:
        track: 航迹
        dt: 时间步长（s），必须为正
        config: 跟踪器配置

    Returns:
        Track: 预测后的新航迹
    """
    if dt <= 0.0:
        raise ValueError(f"预测步长必须为正，当前 dt={dt}")

    F = transition_matrix(dt)
    x = F @ track.state.x
    x[BEARING] = wrap_angle(float(x[BEARING]))
    P = _symmetrize(F @ track.state.P @ F.T + process_noise(dt, config))
    return track.model_copy(update={"state": TrackState(x=x, P=P)})


def innovation(
    track: Track, z: Measurement, config: TrackerConfig
) -> tuple[np.ndarray, np.ndarray]:
    """新息与新息协方差

    Returns:
        tuple[np.ndarray, np.ndarray]: (残差 3 维, S 3×3)，方位残差已归一化到 (-π, π]
    """
    residual = z.vector - H @ track.state.x
    residual[1] = wrap_angle(float(residual[1]))
    S = H @ track.state.P @ H.T + config.measurement_covariance
    return residual, _symmetrize(S)


def build_cost_matrix(
    tracks: Sequence[Track],
    measurements: Sequence[Measurement],
    config: TrackerConfig,
) -> CostMatrix:
    """构造 n × (m + n) 代价矩阵

    Args:
        tracks: 已预测到量测时刻的航迹
        measurements: 量测
        config: 跟踪器配置

    Returns:
        CostMatrix: 关联代价 ½·d²，门限外与 S 奇异的配对为 +∞
    """
    n, m = len(tracks), len(measurements)
    costs = np.full((n, m + n), np.inf)
    singular_rows: list[int] = []
    gate_squared = config.gate_threshold**2

    for i, track in enumerate(tracks):
        costs[i, m + i] = config.misdetection_cost
        if m == 0:
            continue
        # S 与量测值无关，每条航迹只求一次逆
        S = _symmetrize(H @ track.state.P @ H.T + config.measurement_covariance)
        S_inv = _inverse(S)
        if S_inv is None:
            singular_rows.append(i)
            continue
        for j, z in enumerate(measurements):
            residual, _ = innovation(track, z, config)
            distance_squared = float(residual @ S_inv @ residual)
            if distance_squared <= gate_squared:
                costs[i, j] = 0.5 * distance_squared

    return CostMatrix(costs=costs, n_tracks=n, n_detections=m, singular_rows=singular_rows)


def solve_assignment(cost: CostMatrix) -> Assignment:
    """最小总代价分配（scipy linear_sum_assignment，+∞ 为禁止配对）"""
    n, m = cost.n_tracks, cost.n_detections
    if n == 0:
        return Assignment(track_to_detection=[], unassigned_detections=list(range(m)))

    rows, cols = linear_sum_assignment(cost.costs)
    track_to_detection: list[Optional[int]] = [None] * n
    for row, col in zip(rows, cols):
        if col < m:
            track_to_detection[row] = int(col)

    assigned = {j for j in track_to_detection if j is not None}
    return Assignment(
        track_to_detection=track_to_detection,
        unassigned_detections=[j for j in range(m) if j not in assigned],
        total_cost=float(cost.costs[rows, cols].sum()),
    )


def update(
    track: Track, z: Measurement, config: TrackerConfig
) -> tuple[Track, Optional[TrackEvent]]:
    """卡尔曼量测更新（Joseph形式）

    S 奇异时跳过更新，协方差乘以 singular_inflation，并返回诊断事件

    Returns:
        tuple[Track, Optional[TrackEvent]]: (更新后的航迹, 诊断事件)
    """
    residual, S = innovation(track, z, config)
    S_inv = _inverse(S)
    if S_inv is None:
        logger.warning(f"航迹 {track.id} 新息协方差奇异，跳过更新并放大协方差")
        inflated = track.state.model_copy(
            update={"P": track.state.P * config.singular_inflation}
        )
        event = TrackEvent(
            kind="singular", track_id=track.id, time=z.timestamp, detail="新息协方差奇异"
        )
        return track.model_copy(update={"state": inflated}), event

    P = track.state.P
    K = P @ H.T @ S_inv
    x = track.state.x + K @ residual
    x[BEARING] = wrap_angle(float(x[BEARING]))
    x[RANGE] = max(float(x[RANGE]), 0.0)

    I_KH = np.eye(STATE_DIM) - K @ H
    P = _symmetrize(I_KH @ P @ I_KH.T + K @ config.measurement_covariance @ K.T)

    updated = track.model_copy(
        update={
            "state": TrackState(x=x, P=P),
            "last_update": z.timestamp,
            "hits": track.hits + 1,
            "consecutive_misses": 0,
        }
    )
    return updated, None


def initiate_track(track_id: int, z: Measurement, config: TrackerConfig) -> Track:
    """由量测初始化候选航迹：角速度与加速度为零，先验协方差取配置值"""
    x = np.zeros(STATE_DIM)
    x[:MEASUREMENT_DIM] = z.vector
    return Track(
        id=track_id,
        state=TrackState(x=x, P=config.initial_covariance.copy()),
        status=TrackStatus.CANDIDATE,
        last_update=z.timestamp,
    )


def manage_lifecycle(
    tracks: Sequence[Track],
    unassigned: Sequence[Measurement],
    config: TrackerConfig,
    id_counter: Iterator[int],
    time: float = 0.0,
) -> tuple[list[Track], list[TrackEvent]]:
    """航迹删除、确认与起始

    得分超过 tau_death 的航迹删除；得分低于 tau_birth 的候选航迹确认；
    每个未关联量测生成一条候选航迹

    Args:
        tracks: 当前航迹
        unassigned: 用于起始的未关联量测
        config: 跟踪器配置
        id_counter: 航迹编号发生器
        time: 当前时刻

    Returns:
        tuple[list[Track], list[TrackEvent]]: (新航迹列表, 事件)
    """
    survivors: list[Track] = []
    events: list[TrackEvent] = []

    for track in tracks:
        score = track.state.position_score
        if score > config.tau_death:
            logger.info(f"航迹 {track.id} 删除: 得分 {score:.4f} > {config.tau_death}")
            events.append(TrackEvent(kind="death", track_id=track.id, time=time))
            continue
        if track.status is TrackStatus.CANDIDATE and score < config.tau_birth:
            track = track.model_copy(update={"status": TrackStatus.CONFIRMED})
            logger.info(f"航迹 {track.id} 确认: 得分 {score:.4f}")
            events.append(TrackEvent(kind="confirm", track_id=track.id, time=time))
        survivors.append(track)

    for z in unassigned:
        track = initiate_track(next(id_counter), z, config)
        logger.debug(f"候选航迹 {track.id} 起始: r={z.range:.2f} m")
        events.append(TrackEvent(kind="birth", track_id=track.id, time=time))
        survivors.append(track)

    return survivors, events


def step(
    tracks: Sequence[Track],
    measurements: Sequence[Measurement],
    dt: float,
    config: TrackerConfig,
    id_counter: Iterator[int],
    time: float = 0.0,
) -> TrackerStepResult:
    """一次完整跟踪步：预测 → 代价矩阵 → 分配 → 更新/漏检 → 生命周期

    dt 为零时跳过预测（首帧）。启用 birth_exclusion 时，与本帧某个已关联量测
    相距不超过 birth_exclusion_radius 的未关联量测视为同一目标的重复峰值，不起始新航迹
    """
    if dt > 0.0:
        predicted = [predict(track, dt, config) for track in tracks]
    else:
        predicted = list(tracks)

    cost = build_cost_matrix(predicted, measurements, config)
    assignment = solve_assignment(cost)

    events: list[TrackEvent] = [
        TrackEvent(
            kind="singular", track_id=predicted[row].id, time=time, detail="关联时新息协方差奇异"
        )
        for row in cost.singular_rows
    ]
    for row in cost.singular_rows:
        logger.warning(f"航迹 {predicted[row].id} 新息协方差奇异，本帧视为门限外")

    updated: list[Track] = []
    for track, detection_index in zip(predicted, assignment.track_to_detection):
        if detection_index is None:
            updated.append(
                track.model_copy(
                    update={
                        "consecutive_misses": track.consecutive_misses + 1,
                        "assigned_detection": None,
                    }
                )
            )
            continue
        track, event = update(track, measurements[detection_index], config)
        if event is not None:
            events.append(event)
        updated.append(track.model_copy(update={"assigned_detection": detection_index}))

    births = assignment.unassigned_detections
    if config.birth_exclusion:
        assigned = [measurements[j] for j in assignment.track_to_detection if j is not None]
        births = [
            j
            for j in births
            if not _near_any(measurements[j], assigned, config.birth_exclusion_radius)
        ]

    tracks_out, lifecycle_events = manage_lifecycle(
        updated, [measurements[j] for j in births], config, id_counter, time
    )
    # 起始事件与 births 顺序一致
    born = dict(
        zip((e.track_id for e in lifecycle_events if e.kind == "birth"), births)
    )
    tracks_out = [
        track.model_copy(update={"assigned_detection": born[track.id]})
        if track.id in born
        else track
        for track in tracks_out
    ]

    return TrackerStepResult(
        tracks=tracks_out, events=events + lifecycle_events, assignment=assignment
    )


def _near_any(z: Measurement, others: Sequence[Measurement], radius: float) -> bool:
    """z 与任一量测的笛卡尔距离不超过 radius（同一目标的重复峰值）"""
    return any(
        math.sqrt(
            max(
                z.range**2
                + other.range**2
                - 2.0 * z.range * other.range * math.cos(z.bearing - other.bearing),
                0.0,
            )
        )
        <= radius
        for other in others
    )


def track_to_obstacle(track: Track) -> tuple[np.ndarray, np.ndarray]:
    """极坐标航迹转为传感器系笛卡尔相对位置与相对速度

    速度为 (ṙ, r·θ̇) 旋转 θ，即障碍物相对机体的速度

    Returns:
        tuple[np.ndarray, np.ndarray]: (位置 m, 速度 m/s)
    """
    r, theta, r_dot, theta_dot = (float(v) for v in track.state.x[:4])
    position = np.array([r * math.cos(theta), r * math.sin(theta)])
    velocity = rotate(np.array([r_dot, r * theta_dot]), theta)
    return position, velocity


class MultiTargetTracker:
    """持有航迹集合与编号发生器的有状态跟踪器

    每个仿真循环独占一个实例
    """

    def __init__(self, config: Optional[TrackerConfig] = None) -> None:
        self.config = config or TrackerConfig()
        self.tracks: list[Track] = []
        self.time: Optional[float] = None
        self._ids = itertools.count(1)

    @property
    def confirmed(self) -> list[Track]:
        return [track for track in self.tracks if track.is_confirmed]

    def step(self, measurements: Sequence[Measurement], timestamp: float) -> TrackerStepResult:
        dt = 0.0 if self.time is None else timestamp - self.time
        result = step(self.tracks, measurements, dt, self.config, self._ids, timestamp)
        self.tracks = result.tracks
        self.time = timestamp
        return result
