"""测试公共夹具"""

from pathlib import Path
from typing import Callable, Iterator, Sequence

import pytest
from loguru import logger

from app.features.detector.models import DetectorConfig
from app.features.radar.models import IQFrame, NoiseModel, RadarConfig, TargetEcho
from app.features.radar.service import synthesize_frame


SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def radar() -> RadarConfig:
    """无噪声的默认雷达"""
    return RadarConfig(noise=NoiseModel.noise_free())


@pytest.fixture
def detector() -> DetectorConfig:
    return DetectorConfig()


@pytest.fixture
def make_frame(radar: RadarConfig) -> Callable[[Sequence[TargetEcho]], IQFrame]:
    """用无噪声雷达合成一帧"""

    def _make(echoes: Sequence[TargetEcho], seed: int = 0) -> IQFrame:
        return synthesize_frame(radar, list(echoes), seed)

    return _make


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture(autouse=True)
def reset_logger() -> Iterator[None]:
    """命令入口会替换日志输出，测试结束后移除全部sink"""
    yield
    logger.remove()
