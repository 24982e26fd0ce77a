"""存储功能数据模型

定义试验输出文件的数据流列与I/Q二进制文件头
"""

import re
from typing import Literal

from pydantic import BaseModel, Field

from app.features.sim.models import (
    CommandRecord,
    DetectionRecord,
    TrackRecord,
    TruthRecord,
)


StreamName = Literal["truth", "detections", "tracks", "commands"]

# 各数据流CSV的固定表头，顺序即列顺序
STREAM_COLUMNS: dict[str, list[str]] = {
    "truth": list(TruthRecord.model_fields),
    "detections": list(DetectionRecord.model_fields),
    "tracks": list(TrackRecord.model_fields),
    "commands": list(CommandRecord.model_fields),
}

DumpStage = Literal["frame", "range_fft", "rdmap", "detections"]

_HEADER_PATTERN = re.compile(
    r"^IQFRAME antennas=(\d+) chirps=(\d+) samples=(\d+) timestamp=(\S+)$"
)


class FrameHeader(BaseModel):
    """I/Q二进制文件头

    头部为一行文本，其后是小端 float32 交织 I,Q，顺序为天线、chirp、采样
    """

    antennas: int = Field(ge=1, description="天线数")
    chirps: int = Field(ge=1, description="chirp数 M")
    samples: int = Field(ge=1, description="每chirp采样数 N")
    timestamp: float = Field(default=0.0, description="帧时间戳（s）")

    def to_line(self) -> bytes:
        return (
            f"IQFRAME antennas={self.antennas} chirps={self.chirps} "
            f"samples={self.samples} timestamp={self.timestamp!r}\n"
        ).encode("ascii")

    @classmethod
    def parse(cls, line: bytes) -> "FrameHeader":
        match = _HEADER_PATTERN.match(line.decode("ascii").strip())
        if match is None:
            raise ValueError(f"无法解析I/Q文件头: {line!r}")
        antennas, chirps, samples, timestamp = match.groups()
        return cls(
            antennas=int(antennas),
            chirps=int(chirps),
            samples=int(samples),
            timestamp=float(timestamp),
        )

    @property
    def count(self) -> int:
        return self.antennas * self.chirps * self.samples
