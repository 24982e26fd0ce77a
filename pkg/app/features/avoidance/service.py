"""速度障碍避障服务

碰撞锥构造、锥内判定、锥边投影指令与侧移机动
"""

import math
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from app.core.exceptions import AlreadyInCollisionError
from app.shared.geometry import angle_between, rotate, unit, world_to_body

from .models import (
    AvoidanceCommand,
    AvoidanceConfig,
    CollisionCone,
    ObstacleEstimate,
    Pose,
)


# 投影目标锥边向外偏移的角度，使输出严格位于锥外
EDGE_EPSILON = 1e-9

FALLBACK_HEADINGS = 9
FALLBACK_SPEEDS = 6


def combined_radius(obstacle: ObstacleEstimate, cfg: AvoidanceConfig) -> float:
    """r_c = r_A + r_B + safety_margin + uncertainty_factor·σ_pos"""
    return (
        cfg.mav_radius
        + obstacle.radius
        + cfg.safety_margin
        + cfg.uncertainty_factor * obstacle.position_std
    )


def collision_cone(p: np.ndarray, r_c: float) -> CollisionCone:
    """构造碰撞锥

    Args:
        p: 障碍物相对位置（m）
        r_c: 组合半径（m）

    Returns:
        CollisionCone: 轴向 p/|p|，半顶角 arcsin(r_c/|p|)

    Raises:
        AlreadyInCollisionError: |p| <= r_c
    """
    distance = float(np.linalg.norm(p))
    if distance <= r_c:
        raise AlreadyInCollisionError(distance, r_c)
    return CollisionCone(
        axis=np.asarray(p, dtype=float) / distance,
        half_angle=math.asin(r_c / distance),
        distance=distance,
        combined_radius=r_c,
    )


def in_cone(v_ab: np.ndarray, cone: CollisionCone) -> bool:
    """V_AB 非零且与锥轴夹角严格小于 α 时为真，锥边界视为安全"""
    if not np.any(v_ab):
        return False
    return angle_between(v_ab, cone.axis) < cone.half_angle


def _signed_angle(reference: np.ndarray, vector: np.ndarray) -> float:
    cross = reference[0] * vector[1] - reference[1] * vector[0]
    return math.atan2(cross, float(reference @ vector))


def _limit_turn(command: np.ndarray, ego_velocity: np.ndarray, max_turn: float) -> np.ndarray:
    """将指令方向相对当前速度方向的偏转限制在 max_turn 以内"""
    speed = float(np.linalg.norm(command))
    if speed == 0.0 or not np.any(ego_velocity):
        return command
    turn = _signed_angle(ego_velocity, command)
    if abs(turn) <= max_turn:
        return command
    return rotate(unit(ego_velocity), math.copysign(max_turn, turn)) * speed


def _clip_speed(command: np.ndarray, max_speed: float) -> np.ndarray:
    speed = float(np.linalg.norm(command))
    if speed > max_speed:
        return command * (max_speed / speed)
    return command


def _penetration(v_ab: np.ndarray, cone: CollisionCone) -> float:
    if not in_cone(v_ab, cone):
        return 0.0
    return cone.half_angle - angle_between(v_ab, cone.axis)


def _reachable_fallback(
    desired: np.ndarray,
    ego_velocity: np.ndarray,
    obstacle_velocity: np.ndarray,
    cone: CollisionCone,
    cfg: AvoidanceConfig,
    max_turn: float,
) -> tuple[np.ndarray, bool]:
    """在可达速度网格中寻找最接近 desired 的安全速度

    Returns:
        tuple[np.ndarray, bool]: (速度指令, 是否不安全)
    """
    if np.any(ego_velocity):
        base = math.atan2(ego_velocity[1], ego_velocity[0])
        headings = base + np.linspace(-max_turn, max_turn, FALLBACK_HEADINGS)
    else:
        headings = np.linspace(-math.pi, math.pi, 2 * FALLBACK_HEADINGS, endpoint=False)
    speeds = np.linspace(cfg.max_speed / FALLBACK_SPEEDS, cfg.max_speed, FALLBACK_SPEEDS)

    candidates = [np.zeros(2)] + [
        speed * np.array([math.cos(heading), math.sin(heading)])
        for heading in headings
        for speed in speeds
    ]
    safe = [c for c in candidates if not in_cone(c - obstacle_velocity, cone)]
    if safe:
        return min(safe, key=lambda c: float(np.linalg.norm(c - desired))), False

    logger.warning("可达速度集合内没有安全速度，返回锥内穿透最小的指令")
    least = min(candidates, key=lambda c: _penetration(c - obstacle_velocity, cone))
    return least, True


def avoid(
    ego_velocity: np.ndarray,
    obstacle: ObstacleEstimate,
    cfg: AvoidanceConfig,
    dt: float = 0.1,
) -> AvoidanceCommand:
    """速度障碍避障指令

    V_AB 不在锥内时原样返回 V_A；否则将 V_AB 投影到偏转最小的锥边
    （相等时取右边），加回 V_B，再做限速与转向速率限制

    Args:
        ego_velocity: 当前速度 V_A（m/s）
        obstacle: 障碍物估计
        cfg: 避障配置
        dt: 控制周期（s），决定单步最大转角

    Returns:
        AvoidanceCommand: 速度指令

    Raises:
        AlreadyInCollisionError: 已处于碰撞状态
    """
    v_a = np.asarray(ego_velocity, dtype=float)
    v_b = np.asarray(obstacle.obstacle_velocity, dtype=float)
    v_ab = v_a - v_b
    cone = collision_cone(obstacle.relative_position, combined_radius(obstacle, cfg))

    if not in_cone(v_ab, cone):
        return AvoidanceCommand(velocity=v_a, in_cone=False, cone_half_angle=cone.half_angle)

    offset = cone.half_angle + EDGE_EPSILON
    if _signed_angle(cone.axis, v_ab) > 0.0:
        edge_name = "left"
        edge = rotate(cone.axis, offset)
    else:
        edge_name = "right"
        edge = rotate(cone.axis, -offset)

    desired = max(float(v_ab @ edge), 0.0) * edge + v_b
    max_turn = cfg.max_turn_rate * dt
    command = _limit_turn(_clip_speed(desired, cfg.max_speed), v_a, max_turn)

    unsafe = False
    if in_cone(command - v_b, cone):
        command, unsafe = _reachable_fallback(desired, v_a, v_b, cone, cfg, max_turn)

    logger.debug(
        f"碰撞锥内: α={math.degrees(cone.half_angle):.2f}°, 锥边={edge_name}, "
        f"指令=({command[0]:.3f}, {command[1]:.3f})"
    )
    return AvoidanceCommand(
        velocity=command,
        in_cone=True,
        edge=edge_name,
        cone_half_angle=cone.half_angle,
        unsafe=unsafe,
    )


def select_nearest(obstacles: Sequence[ObstacleEstimate]) -> Optional[ObstacleEstimate]:
    """距离最近的障碍物，距离相等时取列表中靠前者"""
    if not obstacles:
        return None
    return min(obstacles, key=lambda obstacle: obstacle.distance)


def select_threats(
    obstacles: Sequence[ObstacleEstimate],
    preferred: np.ndarray,
    cfg: AvoidanceConfig,
) -> list[ObstacleEstimate]:
    """期望速度落入碰撞锥、或已进入组合半径的障碍物，保持输入顺序

    已越过或偏在一侧的障碍物不构成威胁，避免它挡住前方更远的障碍物
    """
    preferred = np.asarray(preferred, dtype=float)
    threats = []
    for obstacle in obstacles:
        r_c = combined_radius(obstacle, cfg)
        if obstacle.distance <= r_c:
            threats.append(obstacle)
            continue
        cone = collision_cone(obstacle.relative_position, r_c)
        if in_cone(preferred - obstacle.obstacle_velocity, cone):
            threats.append(obstacle)
    return threats


def side_step(
    ego_pose: Pose,
    obstacle: ObstacleEstimate,
    cfg: AvoidanceConfig,
) -> np.ndarray:
    """侧移机动的世界系航点偏移

    障碍物在左（方位 >= 0）时向右移，否则向左；未预测到碰撞时返回零偏移

    Returns:
        np.ndarray: 世界系偏移（m）
    """
    r_c = combined_radius(obstacle, cfg)
    p = np.asarray(obstacle.relative_position, dtype=float)
    if float(np.linalg.norm(p)) > r_c:
        v_ab = np.asarray(obstacle.relative_velocity, dtype=float)
        if not in_cone(v_ab, collision_cone(p, r_c)):
            return np.zeros(2)

    p_body = world_to_body(p, ego_pose.heading)
    bearing = math.atan2(p_body[1], p_body[0])
    lateral = -cfg.side_step_distance if bearing >= 0.0 else cfg.side_step_distance
    offset = rotate(np.array([0.0, lateral]), ego_pose.heading)
    logger.info(f"侧移机动: 障碍物方位 {math.degrees(bearing):.1f}°, 偏移 {lateral:+.2f} m")
    return offset
