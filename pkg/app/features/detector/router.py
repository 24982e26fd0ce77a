"""检测器命令路由模块

提供 dump 子命令，导出流水线中间结果
"""

import argparse
from pathlib import Path
from typing import Optional, get_args

import numpy as np
from loguru import logger

from app.core.config import ScenarioFile
from app.core.exceptions import EXIT_OK, UsageError
from app.features.sim.service import first_frame
from app.features.storage.models import DumpStage
from app.features.storage.service import TrialStorage
from app.shared.schemas import CommandResult, DumpReport

from .service import compute_maps, noncoherent_sum, process_frame, range_spectra


STAGES: tuple[str, ...] = get_args(DumpStage)


def cmd_dump(
    scenario_path: Path,
    stage: str,
    output_dir: Path,
    seed: Optional[int] = None,
) -> CommandResult[DumpReport]:
    """导出场景第0帧的某个处理阶段

    Args:
        scenario_path: 场景文件路径
        stage: frame | range_fft | rdmap | detections
        output_dir: 输出目录
        seed: 覆盖随机种子

    Returns:
        CommandResult[DumpReport]: 输出文件路径与数据形状

    Raises:
        UsageError: 未知阶段
        ScenarioError: 场景文件缺失或非法
    """
    if stage not in STAGES:
        raise UsageError(f"未知阶段: {stage}，可选 {', '.join(STAGES)}")

    scenario = ScenarioFile.from_toml(scenario_path)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    pipeline = scenario.pipeline
    frame = first_frame(scenario.world, pipeline)
    storage = TrialStorage(output_dir)

    if stage == "frame":
        path = storage.write_frame(frame)
        shape = list(frame.samples.shape)
    elif stage == "range_fft":
        spectra = np.stack(
            [
                range_spectra(
                    frame,
                    antenna,
                    pipeline.detector.range_zero_pad,
                    pipeline.detector.range_window,
                )
                for antenna in range(frame.samples.shape[0])
            ]
        )
        path = storage.write_range_fft(spectra)
        shape = list(spectra.shape)
    elif stage == "rdmap":
        summed = noncoherent_sum(*compute_maps(pipeline.radar, frame, pipeline.detector))
        path = storage.write_rdmap(summed)
        shape = list(summed.cells.shape)
    else:
        detections = process_frame(pipeline.radar, frame, detector=pipeline.detector)
        path = storage.write_detections(detections)
        shape = [len(detections)]

    logger.info(f"阶段 {stage} 已导出: {path}")
    return CommandResult(
        success=True,
        data=DumpReport(stage=stage, path=str(path), shape=shape),
        message=f"阶段 {stage} 导出完成",
        code=EXIT_OK,
    )


def register(
    subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]",
    common: argparse.ArgumentParser,
) -> None:
    """注册 dump 子命令"""
    dump_parser = subparsers.add_parser("dump", parents=[common], help="导出流水线中间结果")
    dump_parser.add_argument("--stage", required=True, choices=STAGES, help="导出阶段")
    dump_parser.set_defaults(
        handler=lambda args: cmd_dump(args.scenario, args.stage, args.out, args.seed)
    )
