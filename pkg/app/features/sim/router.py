"""仿真命令路由模块

提供 run、batch、sweep 子命令
"""

import argparse
from pathlib import Path
from typing import Optional

from loguru import logger
from pydantic import ValidationError

from app.core.config import ScenarioFile
from app.core.exceptions import EXIT_COLLISION, EXIT_OK, EXIT_TIMEOUT, UsageError
from app.features.storage.service import TrialStorage
from app.shared.schemas import (
    BatchSummary,
    CommandResult,
    SweepReport,
    TrialSummary,
)

from .models import BatchSettings
from .service import error_sweep, ring_worlds, run_batch, run_trial, trial_names


OUTCOME_EXIT_CODES = {
    "reached_goal": EXIT_OK,
    "collision": EXIT_COLLISION,
    "timeout": EXIT_TIMEOUT,
}


def _load(scenario_path: Path, seed: Optional[int]) -> ScenarioFile:
    scenario = ScenarioFile.from_toml(scenario_path)
    return scenario if seed is None else scenario.with_seed(seed)


def cmd_run(
    scenario_path: Path,
    output_dir: Path,
    seed: Optional[int] = None,
) -> CommandResult[TrialSummary]:
    """运行单次试验

    写出 4 个数据流CSV与摘要JSON

    Args:
        scenario_path: 场景文件路径
        output_dir: 输出目录
        seed: 覆盖场景中的随机种子

    Returns:
        CommandResult[TrialSummary]: 退出码 0 到达、2 碰撞、3 超时

    Raises:
        ScenarioError: 场景文件缺失或非法
    """
    scenario = _load(scenario_path, seed)
    trial_id = scenario_path.stem
    logger.info(f"运行试验 {trial_id}: 模式={scenario.avoidance.mode.value}, seed={scenario.world.seed}")

    log = run_trial(scenario.world, scenario.pipeline, trial_id)
    summary = TrialStorage(output_dir).write_trial(log)
    code = OUTCOME_EXIT_CODES[log.outcome]
    return CommandResult(
        success=code == EXIT_OK,
        data=summary,
        message=f"试验结束: {log.outcome}",
        code=code,
    )


def cmd_batch(
    scenario_path: Path,
    output_dir: Path,
    n_trials: Optional[int] = None,
    parallelism: Optional[int] = None,
    seed: Optional[int] = None,
) -> CommandResult[BatchSummary]:
    """环形起点批量试验

    Args:
        scenario_path: 场景文件路径
        output_dir: 输出目录
        n_trials: 覆盖试验数量
        parallelism: 覆盖并行进程数
        seed: 覆盖基础随机种子

    Returns:
        CommandResult[BatchSummary]: 汇总表与聚合统计

    Raises:
        ScenarioError: 场景文件缺失或非法
        UsageError: 覆盖后的试验数量或并行度非法
    """
    scenario = _load(scenario_path, seed)
    overrides = {
        key: value
        for key, value in (("n_trials", n_trials), ("parallelism", parallelism))
        if value is not None
    }
    try:
        batch = BatchSettings.model_validate({**scenario.batch.model_dump(), **overrides})
    except ValidationError as exc:
        raise UsageError(f"批量参数非法: {exc.errors()[0]['msg']}") from exc

    worlds = ring_worlds(scenario.world, batch)
    logger.info(f"批量试验: {len(worlds)} 次, 并行度 {batch.parallelism}")
    logs = run_batch(worlds, scenario.pipeline, batch.parallelism, trial_names(len(worlds)))

    storage = TrialStorage(output_dir)
    trials = [storage.write_trial(log) for log in logs]
    clearances = [trial.min_clearance for trial in trials if trial.min_clearance is not None]
    margin = scenario.avoidance.safety_margin
    summary = BatchSummary(
        n_trials=len(trials),
        reached_goal=sum(trial.outcome == "reached_goal" for trial in trials),
        collisions=sum(trial.outcome == "collision" for trial in trials),
        timeouts=sum(trial.outcome == "timeout" for trial in trials),
        margin_respected=sum(
            trial.min_clearance is None or trial.min_clearance >= margin for trial in trials
        ),
        min_clearance=min(clearances) if clearances else None,
        trials=trials,
    )
    storage.write_batch(summary)
    return CommandResult(
        success=True,
        data=summary,
        message=f"批量试验完成: {summary.reached_goal}/{summary.n_trials} 到达",
        code=EXIT_OK,
    )


def cmd_sweep(
    scenario_path: Path,
    output_dir: Path,
    seed: Optional[int] = None,
) -> CommandResult[SweepReport]:
    """误差-角度扫描，写出 error_sweep.csv 并报告拟合斜率"""
    scenario = _load(scenario_path, seed)
    result = error_sweep(scenario.pipeline, scenario.sweep)
    path = TrialStorage(output_dir).write_sweep(result)
    report = SweepReport(
        csv_path=str(path),
        n_bearings=len(result.rows),
        range_fit=result.range_fit,
        bearing_fit=result.bearing_fit,
    )
    return CommandResult(success=True, data=report, message="误差扫描完成", code=EXIT_OK)


def register(
    subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]",
    common: argparse.ArgumentParser,
) -> None:
    """注册 run、batch、sweep 子命令"""
    run_parser = subparsers.add_parser("run", parents=[common], help="运行单次试验")
    run_parser.set_defaults(handler=lambda args: cmd_run(args.scenario, args.out, args.seed))

    batch_parser = subparsers.add_parser("batch", parents=[common], help="环形起点批量试验")
    batch_parser.add_argument("--trials", type=int, default=None, help="试验数量")
    batch_parser.add_argument("--parallel", type=int, default=None, help="并行进程数")
    batch_parser.set_defaults(
        handler=lambda args: cmd_batch(
            args.scenario, args.out, args.trials, args.parallel, args.seed
        )
    )

    sweep_parser = subparsers.add_parser("sweep", parents=[common], help="误差-角度扫描")
    sweep_parser.set_defaults(handler=lambda args: cmd_sweep(args.scenario, args.out, args.seed))
