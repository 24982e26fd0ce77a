"""雷达信号合成服务

根据平面场景中的点目标生成两天线FMCW中频I/Q帧：
每个目标在快时间上表现为拍频 f_b = 2SR/c 的复正弦，
chirp间相位递增 Δω = 4πV·Tc/λ，两天线相位差 Δω_d = 2πd·sinθ/λ
"""

import math
from typing import Sequence

import numpy as np
from loguru import logger

from app.core.exceptions import ConfigMismatchError
from app.shared.geometry import wrap_angle

from .models import (
    NUM_RX_ANTENNAS,
    SPEED_OF_LIGHT,
    EgoState,
    IQFrame,
    NoiseModel,
    PointTarget,
    RadarConfig,
    TargetEcho,
)


def relative_kinematics(ego: EgoState, target: PointTarget) -> tuple[float, float, float]:
    """计算目标相对机体的距离、方位与径向速度

    方位从视轴起算，左正；径向速度为距离的时间导数，远离为正

    Args:
        ego: 机体位姿与速度
        target: 点目标

    Returns:
        tuple[float, float, float]: (距离 m, 方位 rad, 径向速度 m/s)
    """
    offset = np.asarray(target.position, dtype=float) - np.asarray(ego.position, dtype=float)
    distance = float(np.hypot(offset[0], offset[1]))
    if distance == 0.0:
        return 0.0, 0.0, 0.0

    bearing = wrap_angle(math.atan2(offset[1], offset[0]) - ego.heading)
    relative_velocity = np.asarray(target.velocity, dtype=float) - np.asarray(
        ego.velocity, dtype=float
    )
    radial_velocity = float(offset @ relative_velocity) / distance
    return distance, bearing, radial_velocity


def beat_frequency(config: RadarConfig, range_m: float) -> float:
    """拍频 f_b = 2·S·R / c"""
    return 2.0 * config.slope * range_m / SPEED_OF_LIGHT


def doppler_phase_step(config: RadarConfig, radial_velocity: float) -> float:
    """chirp间相位增量 Δω = 4π·V·Tc / λ"""
    return 4.0 * math.pi * radial_velocity * config.chirp_duration / config.wavelength


def antenna_phase_offset(config: RadarConfig, bearing: float) -> float:
    """第二根天线相对第一根的相位差 Δω_d = 2π·d·sinθ / λ"""
    return 2.0 * math.pi * config.spacing_ratio * math.sin(bearing)


def perturb_echo(
    echo: TargetEcho,
    noise: NoiseModel,
    rng: np.random.Generator,
    multiplier: float = 1.0,
) -> TargetEcho:
    """在合成前注入随角度增长的距离/方位高斯误差

    Args:
        echo: 真实回波参数
        noise: 噪声模型
        rng: 随机数发生器
        multiplier: 噪声放大倍数（悬停突增时大于1）

    Returns:
        TargetEcho: 扰动后的回波参数
    """
    range_std = noise.range_error_std(echo.bearing) * multiplier
    bearing_std = noise.bearing_error_std(echo.bearing) * multiplier
    range_error, bearing_error = rng.standard_normal(2)
    perturbed_bearing = float(
        np.clip(echo.bearing + bearing_std * bearing_error, -math.pi / 2, math.pi / 2)
    )
    return echo.model_copy(
        update={
            "range": max(0.0, echo.range + range_std * float(range_error)),
            "bearing": perturbed_bearing,
        }
    )


def synthesize_frame(
    config: RadarConfig,
    targets: Sequence[TargetEcho],
    seed: int,
    timestamp: float = 0.0,
) -> IQFrame:
    """合成一帧两天线I/Q数据

    调用方负责剔除视场外目标。给定 (config, targets, seed) 输出逐位确定。

    Args:
        config: 雷达配置
        targets: 回波列表
        seed: 噪声随机种子
        timestamp: 帧时间戳（s）

    Returns:
        IQFrame: 形状 (2, M, N) 的复数帧

    Raises:
        ConfigMismatchError: M < 2 或 N < 2
    """
    chirps = config.chirps_per_frame
    samples = config.samples_per_chirp
    if chirps < 2:
        raise ConfigMismatchError(f"多普勒处理至少需要2个chirp，当前 M={chirps}")
    if samples < 2:
        raise ConfigMismatchError(f"每个chirp至少需要2个采样，当前 N={samples}")

    fast_time = np.arange(samples) / config.sample_rate
    chirp_index = np.arange(chirps)
    antenna_index = np.arange(NUM_RX_ANTENNAS)

    data = np.zeros((NUM_RX_ANTENNAS, chirps, samples), dtype=np.complex128)
    for echo in targets:
        amplitude = echo.amplitude
        if config.range_decay and echo.range > 0.0:
            amplitude = amplitude / echo.range**2

        fast_phase = 2.0 * math.pi * beat_frequency(config, echo.range) * fast_time
        slow_phase = doppler_phase_step(config, echo.radial_velocity) * chirp_index
        spatial_phase = antenna_phase_offset(config, echo.bearing) * antenna_index
        phase = (
            spatial_phase[:, None, None]
            + slow_phase[None, :, None]
            + fast_phase[None, None, :]
        )
        data += amplitude * np.exp(1j * phase)

    sigma = config.noise.iq_noise_std
    if sigma > 0.0:
        rng = np.random.default_rng(seed)
        draws = rng.standard_normal((2, NUM_RX_ANTENNAS, chirps, samples))
        data += (sigma / math.sqrt(2.0)) * (draws[0] + 1j * draws[1])

    logger.debug(f"合成I/Q帧: t={timestamp:.3f}s, 目标数={len(targets)}, seed={seed}")
    return IQFrame(samples=data, timestamp=timestamp)
