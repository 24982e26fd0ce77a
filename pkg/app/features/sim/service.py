"""闭环仿真服务

每帧：视场内障碍物 → I/Q合成 → 检测 → 跟踪 → 障碍物记忆 → 避障 → 一阶速度响应 → 记录。
单次试验独占全部可变状态，批量试验通过进程池并行
"""

import asyncio
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from scipy import stats

from app.core.exceptions import AlreadyInCollisionError
from app.features.avoidance.models import (
    AvoidanceCommand,
    AvoidanceConfig,
    AvoidanceMode,
    ObstacleEstimate,
    Pose,
)
from app.features.avoidance.service import (
    avoid,
    collision_cone,
    combined_radius,
    in_cone,
    select_nearest,
    select_threats,
    side_step,
)
from app.features.detector.models import Detection
from app.features.detector.service import inject_clutter, process_frame
from app.features.radar.models import EgoState, IQFrame, PointTarget, TargetEcho
from app.features.radar.service import perturb_echo, relative_kinematics, synthesize_frame
from app.features.tracker.models import Measurement, TrackStatus
from app.features.tracker.service import MultiTargetTracker
from app.shared.geometry import body_to_world, polar_to_cartesian, unit, wrap_angle
from app.shared.schemas import LinearFit

from .models import (
    BatchSettings,
    CommandRecord,
    DetectionRecord,
    FrameLog,
    PipelineConfig,
    RememberedObstacle,
    SimEvent,
    SimState,
    SweepResult,
    SweepRow,
    SweepSettings,
    TrackRecord,
    TrialLog,
    TruthRecord,
    WorldConfig,
)


# 紧急后退速度占最大速度的比例
EMERGENCY_SPEED_FRACTION = 0.3
# 实际速度低于该比例时以期望速度作为避障参考
REFERENCE_SPEED_FRACTION = 0.1
WAYPOINT_TOLERANCE = 0.1
SEED_SPACE = 2**32
# 记忆拟合速度所需的最少观测数与最短时间跨度（s）
MIN_MOTION_SAMPLES = 5
MIN_MOTION_SPAN_S = 0.5
# 判定记忆应当可见时对探测窗口的收缩量
VISIBILITY_RANGE_MARGIN = 0.3
VISIBILITY_ANGLE_MARGIN = math.radians(5.0)


def initial_state(world: WorldConfig, pipeline: PipelineConfig) -> SimState:
    """起点静止，航向指向终点"""
    start = np.asarray(world.start, dtype=float)
    to_goal = np.asarray(world.goal, dtype=float) - start
    heading = math.atan2(to_goal[1], to_goal[0]) if np.any(to_goal) else 0.0
    state = SimState(
        position=start,
        heading=heading,
        tracker=MultiTargetTracker(pipeline.tracker),
    )
    state.min_clearance = _clearance(state.position, world, 0.0)
    return state


def _clearance(position: np.ndarray, world: WorldConfig, time: float) -> Optional[float]:
    if not world.obstacles:
        return None
    return min(
        float(np.linalg.norm(position - obstacle.center_at(time)))
        - (world.mav_radius + obstacle.radius)
        for obstacle in world.obstacles
    )


def _noise_multiplier(state: SimState, pipeline: PipelineConfig) -> float:
    """悬停噪声突增：机体运动后首次悬停时开始计时"""
    burst = pipeline.radar.noise.halt_noise_burst
    if burst is None:
        return 1.0
    speed = float(np.linalg.norm(state.velocity))
    if speed >= burst.speed_threshold:
        state.has_moved = True
    elif state.has_moved and state.burst_until is None:
        state.burst_until = state.time + burst.duration_s
        logger.info(f"悬停噪声突增开始: t={state.time:.2f}s")
    if state.burst_until is not None and state.time < state.burst_until:
        return burst.multiplier
    return 1.0


def sense(
    state: SimState,
    world: WorldConfig,
    pipeline: PipelineConfig,
    rng: np.random.Generator,
    multiplier: float = 1.0,
) -> tuple[list[TargetEcho], IQFrame]:
    """视场内障碍物最近表面点作为点反射体，扰动后合成一帧

    Returns:
        tuple[list[TargetEcho], IQFrame]: (扰动后的回波, I/Q帧)
    """
    radar = pipeline.radar
    ego = EgoState(
        position=tuple(state.position),
        heading=state.heading,
        velocity=tuple(state.velocity),
    )

    echoes: list[TargetEcho] = []
    for obstacle in world.obstacles:
        center = obstacle.center_at(state.time)
        offset = center - state.position
        distance = float(np.linalg.norm(offset))
        if distance <= obstacle.radius:
            continue
        surface = center - obstacle.radius * offset / distance
        target = PointTarget(position=tuple(surface), velocity=obstacle.velocity)
        range_m, bearing, radial_velocity = relative_kinematics(ego, target)
        if not radar.in_field_of_view(range_m, bearing):
            continue
        echo = TargetEcho(
            range=range_m,
            bearing=bearing,
            radial_velocity=radial_velocity,
            amplitude=target.amplitude,
        )
        echoes.append(perturb_echo(echo, radar.noise, rng, multiplier))

    if multiplier != 1.0:
        noise = radar.noise.model_copy(
            update={"iq_noise_std": radar.noise.iq_noise_std * multiplier}
        )
        radar = radar.model_copy(update={"noise": noise})

    frame = synthesize_frame(radar, echoes, int(rng.integers(SEED_SPACE)), state.time)
    return echoes, frame


def first_frame(world: WorldConfig, pipeline: PipelineConfig) -> IQFrame:
    """场景第0帧的I/Q数据，与 step 中的随机数序列一致"""
    state = initial_state(world, pipeline)
    rng = np.random.default_rng([world.seed, 0])
    _, frame = sense(state, world, pipeline, rng, _noise_multiplier(state, pipeline))
    return frame


def observe_obstacle(
    remembered: RememberedObstacle,
    time: float,
    center: np.ndarray,
    position_std: float,
    cfg: AvoidanceConfig,
) -> RememberedObstacle:
    """加入一次世界系观测并重新拟合位置与速度

    时间窗内观测足够多时按时间做直线拟合；拟合速度低于静止阈值的障碍物
    视为静止，位置取窗口内观测均值

    Args:
        remembered: 已有记忆
        time: 观测时刻（s）
        center: 观测得到的障碍物中心（世界系，m）
        position_std: 来源航迹的位置标准差（m）
        cfg: 避障配置

    Returns:
        RememberedObstacle: 刷新后的记忆
    """
    samples = [s for s in remembered.samples if s[0] >= time - cfg.memory_window_s]
    samples.append((time, float(center[0]), float(center[1])))
    data = np.asarray(samples)
    offsets, points = data[:, 0] - time, data[:, 1:]

    fitted, velocity = points.mean(axis=0), np.zeros(2)
    if len(samples) >= MIN_MOTION_SAMPLES and np.ptp(offsets) >= MIN_MOTION_SPAN_S:
        slope, intercept = np.polyfit(offsets, points, 1)
        if float(np.linalg.norm(slope)) >= cfg.static_speed_threshold:
            fitted, velocity = intercept, slope

    return remembered.model_copy(
        update={
            "center": fitted,
            "velocity": velocity,
            "position_std": position_std,
            "last_seen": time,
            "samples": samples,
            "missed_frames": 0,
        }
    )


def _visible(remembered: RememberedObstacle, state: SimState, pipeline: PipelineConfig) -> bool:
    """记忆中的障碍物本帧是否应当落在探测窗口内"""
    radar = pipeline.radar
    offset = remembered.center_at(state.time) - state.position
    surface_range = float(np.linalg.norm(offset)) - pipeline.avoidance.obstacle_radius
    bearing = wrap_angle(math.atan2(offset[1], offset[0]) - state.heading)
    return (
        radar.min_range + VISIBILITY_RANGE_MARGIN
        <= surface_range
        <= radar.max_range - VISIBILITY_RANGE_MARGIN
        and abs(bearing) <= radar.fov_half_angle - VISIBILITY_ANGLE_MARGIN
    )


def _merge_target(
    state: SimState, center: np.ndarray, radius: float, refreshed: set[int]
) -> Optional[int]:
    candidates = [
        (float(np.linalg.norm(remembered.center_at(state.time) - center)), track_id)
        for track_id, remembered in state.memory.items()
        if track_id not in refreshed
    ]
    candidates = [c for c in candidates if c[0] <= radius]
    return min(candidates)[1] if candidates else None


def _refresh_memory(
    state: SimState,
    world: WorldConfig,
    pipeline: PipelineConfig,
    measurements: Sequence[Measurement],
) -> None:
    """用本帧关联到检测的航迹刷新世界系障碍物记忆

    观测取航迹所关联检测的位置。确认航迹建立或刷新记忆；其余航迹只接管
    合并半径内已有的记忆（航迹中断后重新起始）。应当可见却连续
    memory_miss_frames 帧没有观测、过期或已越过的记忆被删除；
    落在盲区或视场外的记忆保留到过期，供近距离绕行使用
    """
    cfg = pipeline.avoidance
    refreshed: set[int] = set()
    ordered = sorted(
        (track for track in state.tracker.tracks if track.assigned_detection is not None),
        key=lambda track: (
            track.id not in state.memory,
            track.status is not TrackStatus.CONFIRMED,
        ),
    )
    for track in ordered:
        z = measurements[track.assigned_detection]
        direction = body_to_world(polar_to_cartesian(1.0, z.bearing), state.heading)
        center = state.position + (z.range + cfg.obstacle_radius) * direction

        key = track.id if track.id in state.memory else None
        if key is None:
            key = _merge_target(state, center, cfg.memory_merge_radius, refreshed)
        if key is not None:
            remembered = state.memory.pop(key).model_copy(update={"track_id": track.id})
            if key != track.id:
                logger.debug(f"航迹 {track.id} 接管障碍物记忆 {key}")
        elif track.status is TrackStatus.CONFIRMED:
            remembered = RememberedObstacle(
                track_id=track.id,
                center=center,
                position_std=track.state.position_std,
                last_seen=state.time,
            )
        else:
            continue
        state.memory[track.id] = observe_obstacle(
            remembered, state.time, center, track.state.position_std, cfg
        )
        refreshed.add(track.id)

    goal_direction = unit(np.asarray(world.goal, dtype=float) - state.position)
    for track_id, remembered in list(state.memory.items()):
        if track_id not in refreshed and _visible(remembered, state, pipeline):
            remembered.missed_frames += 1
        lost = remembered.missed_frames >= cfg.memory_miss_frames
        expired = state.time - remembered.last_seen > cfg.obstacle_memory_s
        r_c = (
            cfg.mav_radius
            + cfg.obstacle_radius
            + cfg.safety_margin
            + cfg.uncertainty_factor * remembered.position_std
        )
        along = float((remembered.center_at(state.time) - state.position) @ goal_direction)
        if lost or expired or along < -r_c:
            if lost:
                logger.debug(f"障碍物记忆 {track_id} 应当可见但连续未观测到，删除")
            del state.memory[track_id]


def _obstacle_estimates(state: SimState, pipeline: PipelineConfig) -> list[ObstacleEstimate]:
    return [
        ObstacleEstimate(
            relative_position=remembered.center_at(state.time) - state.position,
            relative_velocity=state.velocity - remembered.velocity,
            obstacle_velocity=remembered.velocity,
            radius=pipeline.avoidance.obstacle_radius,
            position_std=remembered.position_std,
            obstacle_id=remembered.track_id,
        )
        for remembered in state.memory.values()
    ]


def preferred_velocity(state: SimState, world: WorldConfig) -> np.ndarray:
    """指向终点的期望速度，接近终点时按 dist/approach_time 减速"""
    to_goal = np.asarray(world.goal, dtype=float) - state.position
    distance = float(np.linalg.norm(to_goal))
    speed = min(world.max_speed, distance / world.approach_time)
    return unit(to_goal) * speed


def _velocity_obstacle_policy(
    state: SimState,
    world: WorldConfig,
    pipeline: PipelineConfig,
    nearest: ObstacleEstimate,
    preferred: np.ndarray,
    events: list[SimEvent],
) -> AvoidanceCommand:
    cfg = pipeline.avoidance
    try:
        cone = collision_cone(nearest.relative_position, combined_radius(nearest, cfg))
    except AlreadyInCollisionError as exc:
        logger.warning(f"紧急后退: {exc.detail}")
        events.append(
            SimEvent(
                time=state.time,
                kind="emergency",
                track_id=nearest.obstacle_id or -1,
                detail=exc.detail,
            )
        )
        back_off = -unit(nearest.relative_position) * EMERGENCY_SPEED_FRACTION * cfg.max_speed
        return AvoidanceCommand(velocity=back_off, in_cone=True)

    if not in_cone(preferred - nearest.obstacle_velocity, cone):
        return AvoidanceCommand(
            velocity=preferred, in_cone=False, cone_half_angle=cone.half_angle
        )

    speed = float(np.linalg.norm(state.velocity))
    if speed >= REFERENCE_SPEED_FRACTION * cfg.max_speed:
        reference = unit(state.velocity) * float(np.linalg.norm(preferred))
    else:
        reference = preferred
    command = avoid(reference, nearest, cfg, world.dt)
    # 期望速度在锥内，记录为锥内
    return command.model_copy(
        update={"in_cone": True, "cone_half_angle": cone.half_angle}
    )


def _side_step_policy(
    state: SimState,
    world: WorldConfig,
    pipeline: PipelineConfig,
    nearest: Optional[ObstacleEstimate],
    preferred: np.ndarray,
    events: list[SimEvent],
) -> AvoidanceCommand:
    cfg = pipeline.avoidance
    if state.waypoint is None and nearest is not None:
        pose = Pose(position=state.position, heading=state.heading)
        offset = side_step(pose, nearest, cfg)
        if np.any(offset):
            state.waypoint = state.position + offset
            events.append(
                SimEvent(
                    time=state.time,
                    kind="side_step",
                    track_id=nearest.obstacle_id or -1,
                    detail=f"偏移 ({offset[0]:.2f}, {offset[1]:.2f})",
                )
            )

    if state.waypoint is not None:
        to_waypoint = state.waypoint - state.position
        if float(np.linalg.norm(to_waypoint)) < WAYPOINT_TOLERANCE:
            state.waypoint = None
        else:
            return AvoidanceCommand(velocity=unit(to_waypoint) * cfg.max_speed, in_cone=True)
    return AvoidanceCommand(velocity=preferred, in_cone=False)


def _decide(
    state: SimState,
    world: WorldConfig,
    pipeline: PipelineConfig,
    events: list[SimEvent],
) -> tuple[AvoidanceCommand, Optional[ObstacleEstimate]]:
    preferred = preferred_velocity(state, world)
    mode = pipeline.avoidance.mode
    if mode is AvoidanceMode.DISABLED:
        return AvoidanceCommand(velocity=preferred), None

    estimates = _obstacle_estimates(state, pipeline)
    if mode is AvoidanceMode.SIDE_STEP:
        nearest = select_nearest(estimates)
        return _side_step_policy(state, world, pipeline, nearest, preferred, events), nearest
    # 只对构成威胁的障碍物中最近者避让；无威胁时仍记录最近障碍物的锥
    threats = select_threats(estimates, preferred, pipeline.avoidance)
    nearest = select_nearest(threats)
    if nearest is None:
        nearest = select_nearest(estimates)
    if nearest is None:
        return AvoidanceCommand(velocity=preferred), None
    command = _velocity_obstacle_policy(state, world, pipeline, nearest, preferred, events)
    return command, nearest


def _apply_dynamics(state: SimState, world: WorldConfig, command: np.ndarray) -> None:
    """一阶速度滞后，加速度与速度限幅"""
    dt = world.dt
    alpha = 1.0 - math.exp(-dt / world.control_time_constant)
    delta = alpha * (command - state.velocity)
    max_delta = world.max_accel * dt
    delta_norm = float(np.linalg.norm(delta))
    if delta_norm > max_delta:
        delta *= max_delta / delta_norm
    velocity = state.velocity + delta
    speed = float(np.linalg.norm(velocity))
    if speed > world.max_speed:
        velocity *= world.max_speed / speed
    state.velocity = velocity
    state.position = state.position + velocity * dt

    to_goal = np.asarray(world.goal, dtype=float) - state.position
    if float(np.linalg.norm(to_goal)) > 1e-9:
        state.heading = math.atan2(to_goal[1], to_goal[0])


def step(state: SimState, world: WorldConfig, pipeline: PipelineConfig) -> SimState:
    """推进一帧（原地修改并返回状态），本帧记录写入 state.last_frame

    Args:
        state: 仿真状态
        world: 世界配置
        pipeline: 流水线配置

    Returns:
        SimState: 推进后的状态
    """
    frame_index, time = state.frame, state.time
    rng = np.random.default_rng([world.seed, frame_index])
    multiplier = _noise_multiplier(state, pipeline)

    _, frame = sense(state, world, pipeline, rng, multiplier)
    detections = process_frame(pipeline.radar, frame, detector=pipeline.detector)
    n_true = len(detections)
    detections = detections + inject_clutter(pipeline.radar, rng, time)

    measurements = [Measurement.from_detection(d) for d in detections]
    result = state.tracker.step(measurements, time)
    events = [
        SimEvent(time=time, kind=event.kind, track_id=event.track_id, detail=event.detail)
        for event in result.events
    ]

    _refresh_memory(state, world, pipeline, measurements)
    avoidance, nearest = _decide(state, world, pipeline, events)
    if avoidance.in_cone and not state.in_cone:
        logger.info(f"t={time:.2f}s 进入碰撞锥")
        events.append(
            SimEvent(
                time=time,
                kind="cone_entry",
                track_id=nearest.obstacle_id if nearest and nearest.obstacle_id else -1,
            )
        )
    state.in_cone = avoidance.in_cone
    state.command = avoidance.velocity

    command_record = CommandRecord(
        time=time,
        mode=pipeline.avoidance.mode.value,
        obstacle_id=nearest.obstacle_id if nearest and nearest.obstacle_id else -1,
        in_cone=avoidance.in_cone,
        v_a_x=float(state.velocity[0]),
        v_a_y=float(state.velocity[1]),
        v_cmd_x=float(avoidance.velocity[0]),
        v_cmd_y=float(avoidance.velocity[1]),
        cone_half_angle=(
            avoidance.cone_half_angle if avoidance.cone_half_angle is not None else math.nan
        ),
    )

    _apply_dynamics(state, world, avoidance.velocity)
    state.frame = frame_index + 1
    state.time = state.frame / world.frame_rate

    clearance = _clearance(state.position, world, state.time)
    if clearance is not None:
        state.min_clearance = (
            clearance if state.min_clearance is None else min(state.min_clearance, clearance)
        )
        if clearance < 0.0:
            state.collided = True
            logger.info(f"t={state.time:.2f}s 发生碰撞，间隙 {clearance:.3f} m")
            events.append(
                SimEvent(time=state.time, kind="collision", detail=f"间隙 {clearance:.3f} m")
            )

    state.last_frame = FrameLog(
        truth=TruthRecord(
            frame=state.frame,
            time=state.time,
            x=float(state.position[0]),
            y=float(state.position[1]),
            heading=state.heading,
            vx=float(state.velocity[0]),
            vy=float(state.velocity[1]),
            clearance=math.inf if clearance is None else clearance,
        ),
        detections=[
            _detection_record(frame_index, index, detection, index >= n_true)
            for index, detection in enumerate(detections)
        ],
        tracks=[
            TrackRecord(
                frame=frame_index,
                time=time,
                track_id=track.id,
                status=track.status.value,
                r=float(track.state.x[0]),
                theta=float(track.state.x[1]),
                r_dot=float(track.state.x[2]),
                theta_dot=float(track.state.x[3]),
                trace_p_pos=track.state.position_score,
                assigned_detection_index=(
                    -1 if track.assigned_detection is None else track.assigned_detection
                ),
            )
            for track in result.tracks
        ],
        command=command_record,
        events=events,
    )
    return state


def _detection_record(
    frame_index: int, index: int, detection: Detection, clutter: bool
) -> DetectionRecord:
    return DetectionRecord(
        frame=frame_index,
        time=detection.timestamp,
        index=index,
        range=detection.range,
        bearing=detection.bearing,
        radial_velocity=detection.radial_velocity,
        magnitude=detection.magnitude,
        clutter=clutter,
    )


def run_trial(
    world: WorldConfig,
    pipeline: Optional[PipelineConfig] = None,
    trial_id: str = "trial",
) -> TrialLog:
    """运行一次试验直到到达、碰撞或超时

    Args:
        world: 世界配置
        pipeline: 流水线配置
        trial_id: 试验编号，用于输出文件命名

    Returns:
        TrialLog: 试验记录，给定种子时完全确定
    """
    pipeline = pipeline or PipelineConfig()
    state = initial_state(world, pipeline)
    log = TrialLog(trial_id=trial_id, seed=world.seed)
    goal = np.asarray(world.goal, dtype=float)

    def reached() -> bool:
        return float(np.linalg.norm(goal - state.position)) < world.goal_tolerance

    outcome = "timeout"
    if reached():
        outcome = "reached_goal"
    else:
        while state.frame < world.max_frames:
            state = step(state, world, pipeline)
            log.extend(state.last_frame)
            if state.collided:
                outcome = "collision"
                break
            if reached():
                outcome = "reached_goal"
                break

    log.outcome = outcome  # type: ignore[assignment]
    log.min_clearance = state.min_clearance
    log.frames = state.frame
    log.duration = state.time
    log.events.append(SimEvent(time=state.time, kind="outcome", detail=outcome))
    logger.info(
        f"试验 {trial_id} 结束: {outcome}, 帧数={state.frame}, 最小间隙={state.min_clearance}"
    )
    return log


async def run_batch_async(
    worlds: Sequence[WorldConfig],
    pipeline: Optional[PipelineConfig] = None,
    parallelism: int = 1,
    trial_ids: Optional[Sequence[str]] = None,
) -> list[TrialLog]:
    """批量运行试验，结果按输入顺序返回，与并行度无关"""
    pipeline = pipeline or PipelineConfig()
    ids = list(trial_ids) if trial_ids is not None else trial_names(len(worlds))

    if parallelism <= 1 or len(worlds) <= 1:
        return [run_trial(world, pipeline, trial_id) for world, trial_id in zip(worlds, ids)]

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=parallelism) as executor:
        futures = [
            loop.run_in_executor(executor, partial(run_trial, world, pipeline, trial_id))
            for world, trial_id in zip(worlds, ids)
        ]
        return list(await asyncio.gather(*futures))


def run_batch(
    worlds: Sequence[WorldConfig],
    pipeline: Optional[PipelineConfig] = None,
    parallelism: int = 1,
    trial_ids: Optional[Sequence[str]] = None,
) -> list[TrialLog]:
    """run_batch_async 的同步包装"""
    return asyncio.run(run_batch_async(worlds, pipeline, parallelism, trial_ids))


def trial_names(count: int) -> list[str]:
    return [f"trial_{index:03d}" for index in range(count)]


def ring_worlds(base: WorldConfig, batch: BatchSettings) -> list[WorldConfig]:
    """环上均布起点，终点取对径点，种子依次递增"""
    center = np.asarray(batch.ring_center, dtype=float)
    worlds = []
    for index in range(batch.n_trials):
        angle = batch.angle_offset + 2.0 * math.pi * index / batch.n_trials
        radial = batch.ring_radius * np.array([math.cos(angle), math.sin(angle)])
        worlds.append(
            base.model_copy(
                update={
                    "start": tuple(center + radial),
                    "goal": tuple(center - radial),
                    "seed": base.seed + index,
                }
            )
        )
    return worlds


def _fit(x: np.ndarray, y: np.ndarray) -> LinearFit:
    if len(y) < 2 or np.ptp(y) == 0.0:
        intercept = float(y[0]) if len(y) else math.nan
        return LinearFit(slope=0.0, intercept=intercept, r_squared=0.0)
    result = stats.linregress(x, y)
    return LinearFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=float(result.rvalue**2),
    )


def error_sweep(
    pipeline: PipelineConfig, settings: Optional[SweepSettings] = None
) -> SweepResult:
    """误差-角度扫描

    固定距离的静止目标遍历 0 至 max_bearing_deg，每个方位使用同一组种子，
    取幅度最大的检测计算平均绝对误差，并做最小二乘直线拟合

    Args:
        pipeline: 流水线配置（使用 radar 与 detector）
        settings: 扫描设置

    Returns:
        SweepResult: 每个方位的误差与拟合结果
    """
    settings = settings or SweepSettings()
    radar = pipeline.radar
    bearings = np.linspace(0.0, settings.max_bearing_deg, settings.n_bearings)

    rows: list[SweepRow] = []
    for bearing_deg in bearings:
        truth = TargetEcho(range=settings.target_range, bearing=math.radians(bearing_deg))
        range_errors: list[float] = []
        bearing_errors: list[float] = []
        for seed_index in range(settings.seeds_per_bearing):
            rng = np.random.default_rng([settings.seed, seed_index])
            echo = perturb_echo(truth, radar.noise, rng)
            frame = synthesize_frame(radar, [echo], int(rng.integers(SEED_SPACE)))
            detections = process_frame(radar, frame, detector=pipeline.detector)
            if not detections:
                continue
            best = max(detections, key=lambda detection: detection.magnitude)
            range_errors.append(abs(best.range - truth.range))
            bearing_errors.append(abs(wrap_angle(best.bearing - truth.bearing)))

        detected = len(range_errors)
        rows.append(
            SweepRow(
                bearing_deg=float(bearing_deg),
                range_error=float(np.mean(range_errors)) if detected else math.nan,
                bearing_error_deg=(
                    math.degrees(float(np.mean(bearing_errors))) if detected else math.nan
                ),
                detection_rate=detected / settings.seeds_per_bearing,
            )
        )

    valid = [row for row in rows if row.detection_rate > 0.0]
    x = np.array([row.bearing_deg for row in valid])
    result = SweepResult(
        rows=rows,
        range_fit=_fit(x, np.array([row.range_error for row in valid])),
        bearing_fit=_fit(x, np.array([row.bearing_error_deg for row in valid])),
    )
    logger.info(
        f"误差扫描完成: 距离斜率={result.range_fit.slope:.5f} m/度, "
        f"方位斜率={result.bearing_fit.slope:.5f} 度/度"
    )
    return result
