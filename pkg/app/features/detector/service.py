"""检测器服务

IQ帧 → 补零距离FFT → 多普勒FFT → 非相干求和门限 → 8邻域局部极大值
→ 两天线相位比较测角 → 物理量换算
"""

import math
from typing import Optional

import numpy as np
from loguru import logger
from scipy import ndimage, signal

from app.core.exceptions import ConfigMismatchError
from app.features.radar.models import SPEED_OF_LIGHT, IQFrame, RadarConfig

from .models import DetectorConfig, Detection, Peak, RangeDopplerMap


# 8邻域足迹，排除中心单元
_NEIGHBOURHOOD = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=bool)


def range_fft(
    frame: IQFrame,
    antenna: int,
    chirp: int,
    zero_pad_factor: int = 4,
    window: str = "hann",
) -> np.ndarray:
    """单个chirp的补零距离FFT

    Args:
        frame: I/Q帧
        antenna: 天线索引
        chirp: chirp索引
        zero_pad_factor: 补零倍数
        window: 窗函数名称（scipy.signal.get_window）

    Returns:
        np.ndarray: 长度 N·zero_pad_factor 的复数频谱
    """
    samples = frame.samples[antenna, chirp]
    taper = signal.get_window(window, samples.shape[0])
    return np.fft.fft(samples * taper, n=samples.shape[0] * zero_pad_factor)


def range_spectra(
    frame: IQFrame,
    antenna: int,
    zero_pad_factor: int = 4,
    window: str = "hann",
) -> np.ndarray:
    """一根天线全部chirp的距离频谱，只保留正频率半轴

    Returns:
        np.ndarray: 形状 (M, N·zero_pad_factor/2)
    """
    samples = frame.samples[antenna]
    n_fft = samples.shape[1] * zero_pad_factor
    taper = signal.get_window(window, samples.shape[1])
    spectra = np.fft.fft(samples * taper[None, :], n=n_fft, axis=1)
    return spectra[:, : n_fft // 2]


def doppler_fft(
    spectra: np.ndarray,
    config: RadarConfig,
    zero_pad_factor: int = 1,
    window: str = "boxcar",
    range_zero_pad: int = 4,
) -> RangeDopplerMap:
    """沿慢时间做FFT并移频，使零速位于中心行

    Args:
        spectra: 形状 (M, 距离单元数) 的距离频谱
        config: 雷达配置，用于单元尺度换算
        zero_pad_factor: 多普勒补零倍数
        window: 慢时间窗函数
        range_zero_pad: 生成 spectra 时使用的距离补零倍数

    Returns:
        RangeDopplerMap: 复数距离-多普勒图
    """
    chirps = spectra.shape[0]
    if chirps < 2:
        raise ConfigMismatchError(f"多普勒FFT至少需要2个chirp，当前 {chirps}")

    taper = signal.get_window(window, chirps)
    n_fft = chirps * zero_pad_factor
    cells = np.fft.fftshift(
        np.fft.fft(spectra * taper[:, None], n=n_fft, axis=0), axes=0
    )
    return RangeDopplerMap(
        cells=cells,
        range_bin_width=SPEED_OF_LIGHT / (2.0 * config.bandwidth * range_zero_pad),
        velocity_bin_width=config.wavelength / (2.0 * n_fft * config.chirp_duration),
        min_range=config.min_range,
        max_range=config.max_range,
    )


def noncoherent_sum(map_rx1: RangeDopplerMap, map_rx2: RangeDopplerMap) -> RangeDopplerMap:
    """两天线幅度相加，得到用于门限判决的实数图"""
    return map_rx1.model_copy(update={"cells": map_rx1.magnitude + map_rx2.magnitude})


def detect_peaks(
    rd_map: RangeDopplerMap,
    threshold: float,
    max_per_range_bin: int = 2,
) -> list[Peak]:
    """门限 + 严格8邻域局部极大值

    多普勒轴循环边界，距离轴边界外视为零。距离单元中心在
    [min_range, max_range] 外半个单元以上的峰值被丢弃。

    Args:
        rd_map: 距离-多普勒图（使用其幅度）
        threshold: 幅度门限
        max_per_range_bin: 同一距离单元最多保留的峰值数

    Returns:
        list[Peak]: 按距离单元、再按幅度降序排列
    """
    if threshold <= 0.0:
        raise ValueError("门限必须为正")

    magnitude = rd_map.magnitude
    # 非可分足迹不支持逐轴模式：先手动循环填充多普勒轴，再统一按常数边界滤波
    padded = np.pad(magnitude, ((1, 1), (0, 0)), mode="wrap")
    neighbour_max = ndimage.maximum_filter(
        padded, footprint=_NEIGHBOURHOOD, mode="constant", cval=0.0
    )[1:-1]
    candidates = (magnitude > threshold) & (magnitude > neighbour_max)

    half_bin = 0.5 * rd_map.range_bin_width
    ranges = np.arange(rd_map.num_range_bins) * rd_map.range_bin_width
    in_window = (ranges >= rd_map.min_range - half_bin) & (
        ranges <= rd_map.max_range + half_bin
    )
    candidates &= in_window[None, :]

    peaks: list[Peak] = []
    for range_bin in np.flatnonzero(candidates.any(axis=0)):
        rows = np.flatnonzero(candidates[:, range_bin])
        strongest = rows[np.argsort(-magnitude[rows, range_bin], kind="stable")]
        for doppler_bin in strongest[:max_per_range_bin]:
            peaks.append(
                Peak(
                    range_bin=int(range_bin),
                    doppler_bin=int(doppler_bin),
                    magnitude=float(magnitude[doppler_bin, range_bin]),
                )
            )
    return peaks


def estimate_bearing(
    map_rx1: RangeDopplerMap,
    map_rx2: RangeDopplerMap,
    cell: tuple[int, int],
    spacing_ratio: float = 0.5,
) -> float:
    """两天线相位比较测角 θ = arcsin(Δω_d / (2π·d/λ))

    Args:
        map_rx1: 天线1的复数图
        map_rx2: 天线2的复数图
        cell: (距离单元, 多普勒单元)
        spacing_ratio: d/λ

    Returns:
        float: 方位（rad）
    """
    range_bin, doppler_bin = cell
    # angle() 已落在 (-π, π]
    phase_difference = float(
        np.angle(
            map_rx2.cells[doppler_bin, range_bin]
            * np.conj(map_rx1.cells[doppler_bin, range_bin])
        )
    )
    sine = phase_difference / (2.0 * math.pi * spacing_ratio)
    return float(np.arcsin(np.clip(sine, -1.0, 1.0)))


def interpolate_range_bin(magnitude: np.ndarray, doppler_bin: int, range_bin: int) -> float:
    """三点抛物线插值得到亚单元距离索引"""
    if range_bin <= 0 or range_bin >= magnitude.shape[1] - 1:
        return float(range_bin)
    left, centre, right = magnitude[doppler_bin, range_bin - 1 : range_bin + 2]
    denominator = left - 2.0 * centre + right
    if denominator == 0.0:
        return float(range_bin)
    offset = 0.5 * (left - right) / denominator
    return float(range_bin) + float(np.clip(offset, -0.5, 0.5))


def compute_maps(
    config: RadarConfig,
    frame: IQFrame,
    detector: Optional[DetectorConfig] = None,
) -> tuple[RangeDopplerMap, RangeDopplerMap]:
    """计算两根天线的复数距离-多普勒图

    Raises:
        ConfigMismatchError: 帧维度与配置不一致
    """
    detector = detector or DetectorConfig()
    expected = (config.chirps_per_frame, config.samples_per_chirp)
    if (frame.chirps, frame.samples_per_chirp) != expected:
        raise ConfigMismatchError(
            f"帧维度 {frame.samples.shape} 与配置 (2, {expected[0]}, {expected[1]}) 不一致"
        )

    maps = []
    for antenna in range(frame.samples.shape[0]):
        spectra = range_spectra(
            frame, antenna, detector.range_zero_pad, detector.range_window
        )
        maps.append(
            doppler_fft(
                spectra,
                config,
                zero_pad_factor=detector.doppler_zero_pad,
                window=detector.doppler_window,
                range_zero_pad=detector.range_zero_pad,
            )
        )
    return maps[0], maps[1]


def process_frame(
    config: RadarConfig,
    frame: IQFrame,
    threshold: Optional[float] = None,
    detector: Optional[DetectorConfig] = None,
) -> list[Detection]:
    """完整检测流程

    Args:
        config: 雷达配置
        frame: I/Q帧
        threshold: 幅度门限，默认取检测器配置
        detector: 检测器配置

    Returns:
        list[Detection]: 检测结果

    Raises:
        ConfigMismatchError: 帧维度与配置不一致
    """
    detector = detector or DetectorConfig()
    threshold = detector.threshold if threshold is None else threshold

    map_rx1, map_rx2 = compute_maps(config, frame, detector)
    summed = noncoherent_sum(map_rx1, map_rx2)
    magnitude = summed.magnitude
    peaks = detect_peaks(summed, threshold, detector.max_peaks_per_range_bin)

    detections = []
    for peak in peaks:
        fractional_bin = interpolate_range_bin(magnitude, peak.doppler_bin, peak.range_bin)
        range_m = float(
            np.clip(summed.bin_to_range(fractional_bin), config.min_range, config.max_range)
        )
        detections.append(
            Detection(
                range=range_m,
                bearing=estimate_bearing(
                    map_rx1,
                    map_rx2,
                    (peak.range_bin, peak.doppler_bin),
                    config.spacing_ratio,
                ),
                radial_velocity=summed.doppler_bin_to_velocity(peak.doppler_bin),
                magnitude=peak.magnitude,
                timestamp=frame.timestamp,
            )
        )

    logger.debug(f"帧 t={frame.timestamp:.3f}s: 峰值数={len(peaks)}")
    return detections


def inject_clutter(
    config: RadarConfig,
    rng: np.random.Generator,
    timestamp: float = 0.0,
    rate_multiplier: float = 1.0,
) -> list[Detection]:
    """按泊松分布生成杂波检测，在距离窗、视场与无模糊速度范围内均匀分布"""
    rate = config.noise.clutter_rate * rate_multiplier
    if rate <= 0.0:
        return []

    count = int(rng.poisson(rate))
    v_max = config.max_unambiguous_velocity
    clutter = [
        Detection(
            range=float(rng.uniform(config.min_range, config.max_range)),
            bearing=float(rng.uniform(-config.fov_half_angle, config.fov_half_angle)),
            radial_velocity=float(rng.uniform(-v_max, v_max)),
            magnitude=0.0,
            timestamp=timestamp,
        )
        for _ in range(count)
    ]
    if clutter:
        logger.debug(f"注入杂波检测 {len(clutter)} 个")
    return clutter
