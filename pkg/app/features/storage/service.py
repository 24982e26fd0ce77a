"""存储服务模块

将试验记录、批量汇总、误差扫描与流水线阶段导出写入输出目录，
并提供对应的读取方法。CSV使用固定表头、逗号分隔、'.'小数点
"""

import json
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel

from app.features.detector.models import Detection, RangeDopplerMap
from app.features.radar.models import IQFrame
from app.features.sim.models import SweepResult, TrialLog
from app.shared.schemas import BatchSummary, TrialSummary

from .models import STREAM_COLUMNS, FrameHeader, StreamName


IQ_DTYPE = np.dtype("<f4")


class TrialStorage:
    """试验输出存储

    文件命名: <trial_id>_<stream>.csv 与 <trial_id>_summary.json
    """

    def __init__(self, output_dir: Union[str, Path]) -> None:
        """初始化存储目录

        Args:
            output_dir: 输出目录，不存在时创建
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _write_records(
        self, path: Path, records: Sequence[BaseModel], columns: list[str]
    ) -> Path:
        frame = pd.DataFrame([record.model_dump() for record in records], columns=columns)
        frame.to_csv(path, index=False)
        return path

    def stream_path(self, trial_id: str, stream: StreamName) -> Path:
        return self.output_dir / f"{trial_id}_{stream}.csv"

    def summary_path(self, trial_id: str) -> Path:
        return self.output_dir / f"{trial_id}_summary.json"

    def write_trial(self, log: TrialLog) -> TrialSummary:
        """写出试验的4个数据流CSV与摘要JSON

        Args:
            log: 试验记录

        Returns:
            TrialSummary: 摘要（含输出文件列表）
        """
        streams: dict[StreamName, Sequence[BaseModel]] = {
            "truth": log.truth,
            "detections": log.detections,
            "tracks": log.tracks,
            "commands": log.commands,
        }
        files = [
            self._write_records(self.stream_path(log.trial_id, name), records, STREAM_COLUMNS[name])
            for name, records in streams.items()
        ]

        summary = TrialSummary(
            trial_id=log.trial_id,
            outcome=log.outcome,
            min_clearance=log.min_clearance,
            frames=log.frames,
            duration=log.duration,
            seed=log.seed,
            files=[path.name for path in files],
        )
        summary_path = self.summary_path(log.trial_id)
        summary_payload = summary.model_dump()
        summary_payload["events"] = [event.model_dump() for event in log.events]
        summary_path.write_text(
            json.dumps(summary_payload, ensure_ascii=False, indent=2), encoding="utf-8"
        )
        summary.files.append(summary_path.name)

        logger.info(f"试验 {log.trial_id} 已写出 {len(summary.files)} 个文件到 {self.output_dir}")
        return summary

    def read_stream(self, trial_id: str, stream: StreamName) -> pd.DataFrame:
        """读取单个数据流CSV"""
        return pd.read_csv(self.stream_path(trial_id, stream), float_precision="round_trip")

    def read_summary(self, trial_id: str) -> dict:
        return json.loads(self.summary_path(trial_id).read_text(encoding="utf-8"))

    def write_batch(self, summary: BatchSummary) -> list[Path]:
        """写出批量汇总表 batch_summary.csv 与 batch_summary.json"""
        table = self.output_dir / "batch_summary.csv"
        rows = [
            {
                "trial_id": trial.trial_id,
                "outcome": trial.outcome,
                "min_clearance": trial.min_clearance,
                "frames": trial.frames,
                "seed": trial.seed,
            }
            for trial in summary.trials
        ]
        pd.DataFrame(
            rows, columns=["trial_id", "outcome", "min_clearance", "frames", "seed"]
        ).to_csv(table, index=False)

        aggregate = self.output_dir / "batch_summary.json"
        aggregate.write_text(
            summary.model_dump_json(indent=2, exclude={"trials": {"__all__": {"files"}}}),
            encoding="utf-8",
        )
        return [table, aggregate]

    def write_sweep(self, result: SweepResult) -> Path:
        path = self.output_dir / "error_sweep.csv"
        pd.DataFrame(
            [row.model_dump() for row in result.rows],
            columns=["bearing_deg", "range_error", "bearing_error_deg", "detection_rate"],
        ).to_csv(path, index=False)
        return path

    def write_frame(self, frame: IQFrame, name: str = "frame.iq") -> Path:
        """写出I/Q二进制帧"""
        antennas, chirps, samples = frame.samples.shape
        header = FrameHeader(
            antennas=antennas, chirps=chirps, samples=samples, timestamp=frame.timestamp
        )
        interleaved = np.empty((antennas, chirps, samples, 2), dtype=IQ_DTYPE)
        interleaved[..., 0] = frame.samples.real
        interleaved[..., 1] = frame.samples.imag

        path = self.output_dir / name
        with path.open("wb") as handle:
            handle.write(header.to_line())
            handle.write(interleaved.tobytes())
        return path

    @staticmethod
    def read_frame(path: Union[str, Path]) -> IQFrame:
        """读回I/Q二进制帧，样本为 complex64"""
        with Path(path).open("rb") as handle:
            header = FrameHeader.parse(handle.readline())
            payload = np.frombuffer(handle.read(), dtype=IQ_DTYPE)
        if payload.size != 2 * header.count:
            raise ValueError(f"I/Q数据长度 {payload.size} 与文件头不一致")
        pairs = payload.reshape(header.antennas, header.chirps, header.samples, 2)
        samples = (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex64)
        return IQFrame(samples=samples, timestamp=header.timestamp)

    def write_rdmap(self, rd_map: RangeDopplerMap, name: str = "rdmap.csv") -> Path:
        """写出幅度图，行=多普勒单元，列=距离单元"""
        path = self.output_dir / name
        magnitude = rd_map.magnitude
        pd.DataFrame(
            magnitude, columns=[f"r{index}" for index in range(magnitude.shape[1])]
        ).to_csv(path, index=False)
        return path

    @staticmethod
    def read_matrix(path: Union[str, Path]) -> np.ndarray:
        return pd.read_csv(path, float_precision="round_trip").to_numpy(dtype=float)

    def write_range_fft(self, spectra: np.ndarray, name: str = "range_fft.csv") -> Path:
        """写出各天线、各chirp的距离谱幅度（长表）"""
        antennas, chirps, bins = spectra.shape
        antenna_index, chirp_index = np.meshgrid(
            np.arange(antennas), np.arange(chirps), indexing="ij"
        )
        frame = pd.DataFrame(
            np.abs(spectra).reshape(antennas * chirps, bins),
            columns=[f"r{index}" for index in range(bins)],
        )
        frame.insert(0, "chirp", chirp_index.ravel())
        frame.insert(0, "antenna", antenna_index.ravel())
        path = self.output_dir / name
        frame.to_csv(path, index=False)
        return path

    def write_detections(
        self, detections: Sequence[Detection], name: str = "detections.csv"
    ) -> Path:
        path = self.output_dir / name
        return self._write_records(path, detections, list(Detection.model_fields))
