"""核心配置模块

从TOML场景文件读取仿真配置，不读取环境变量
"""

from pathlib import Path
from typing import Any, Union

from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from app.core.exceptions import ScenarioError
from app.features.avoidance.models import AvoidanceConfig
from app.features.detector.models import DetectorConfig
from app.features.radar.models import NoiseModel, RadarConfig
from app.features.sim.models import (
    BatchSettings,
    PipelineConfig,
    SweepSettings,
    WorldConfig,
)
from app.features.tracker.models import TrackerConfig


APP_NAME = "radar-avoid-sim"
APP_VERSION = "0.1.0"


class ScenarioFile(BaseSettings):
    """场景配置

    每个分节一一对应一个配置模型，所有字段均有默认值，未知键报错。
    [noise] 合并进 RadarConfig.noise；avoidance 的机体半径与最大速度
    未显式给出时取 world 中的值
    """

    model_config = SettingsConfigDict(extra="forbid", case_sensitive=False)

    radar: RadarConfig = Field(default_factory=RadarConfig, description="雷达波形与视场")
    noise: NoiseModel = Field(default_factory=NoiseModel, description="传感器噪声")
    detector: DetectorConfig = Field(default_factory=DetectorConfig, description="检测器")
    tracker: TrackerConfig = Field(default_factory=TrackerConfig, description="跟踪器")
    avoidance: AvoidanceConfig = Field(default_factory=AvoidanceConfig, description="避障")
    world: WorldConfig = Field(default_factory=WorldConfig, description="仿真世界")
    batch: BatchSettings = Field(default_factory=BatchSettings, description="批量试验")
    sweep: SweepSettings = Field(default_factory=SweepSettings, description="误差扫描")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @field_validator("radar", mode="before")
    @classmethod
    def reject_nested_noise(cls, value: Any) -> Any:
        if isinstance(value, dict) and "noise" in value:
            raise ValueError("噪声参数应写在 [noise] 分节，而不是 [radar.noise]")
        return value

    @model_validator(mode="after")
    def merge_sections(self) -> "ScenarioFile":
        self.radar = self.radar.model_copy(update={"noise": self.noise})
        synced = {
            name: getattr(self.world, name)
            for name in ("mav_radius", "max_speed")
            if name not in self.avoidance.model_fields_set
        }
        if synced:
            self.avoidance = self.avoidance.model_copy(update=synced)
        return self

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "ScenarioFile":
        """读取场景文件

        Args:
            path: TOML文件路径

        Returns:
            ScenarioFile: 校验后的场景配置

        Raises:
            ScenarioError: 文件不存在、TOML语法错误或校验失败
        """
        path = Path(path)
        if not path.is_file():
            raise ScenarioError(f"场景文件不存在: {path}")
        try:
            data = TomlConfigSettingsSource(cls, toml_file=path)()
            return cls(**data)
        except ValidationError as exc:
            raise ScenarioError(f"场景文件校验失败: {path}\n{exc}") from exc
        except ValueError as exc:
            # tomllib.TOMLDecodeError 是 ValueError 的子类
            raise ScenarioError(f"场景文件解析失败: {path}: {exc}") from exc

    @property
    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            radar=self.radar,
            detector=self.detector,
            tracker=self.tracker,
            avoidance=self.avoidance,
        )

    def with_seed(self, seed: int) -> "ScenarioFile":
        """覆盖世界与扫描的随机种子"""
        return self.model_copy(
            update={
                "world": self.world.model_copy(update={"seed": seed}),
                "sweep": self.sweep.model_copy(update={"seed": seed}),
            }
        )
