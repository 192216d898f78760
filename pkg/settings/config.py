"""Campaign configuration using pydantic-settings."""

import tomllib
from contextvars import ContextVar
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    SettingsError,
    TomlConfigSettingsSource,
)
from scipy.constants import speed_of_light

from core.errors import ConfigurationError


class Scenario(StrEnum):
    """Propagation scenario of a campaign."""

    LOS_ONLY = "los"
    LOS_NLOS = "losnlos"


class MagnitudeMode(StrEnum):
    """How the wrong-fixing search space N_t is derived from eta."""

    CYCLES_TIMES_NE = "cycles_times_ne"
    CYCLES_TIMES_ETA = "cycles_times_eta"


class InitialGuess(StrEnum):
    """Initial position policy of the least-squares solver."""

    SERVING_GNB = "serving_gnb"
    CUSTOM = "custom"


class LayoutConfig(BaseModel):
    """Indoor-factory hall and node placement parameters."""

    model_config = ConfigDict(frozen=True)

    hall_length: float = Field(default=300.0, gt=0, description="Hall length (m)")
    hall_width: float = Field(default=150.0, gt=0, description="Hall width (m)")
    gnb_spacing: float = Field(default=50.0, gt=0, description="gNB grid spacing (m)")
    gnb_count: int = Field(default=18, ge=1, description="Number of gNBs")
    gnb_height_min: float = Field(
        default=3.0,
        gt=0,
        description="Lower bound of uniform gNB height (m)",
    )
    gnb_height_max: float = Field(
        default=10.0,
        gt=0,
        description="Upper bound of uniform gNB height (m)",
    )
    ceiling_height: float = Field(default=10.0, gt=0, description="Ceiling (m)")
    ue_height: float = Field(default=1.5, ge=0, description="UE height (m)")
    reference_ue_count: int = Field(
        default=4,
        ge=1,
        description="Number of reference UEs at known positions",
    )
    clock_bias_max: float = Field(
        default=1e-6,
        ge=0,
        description="Half-width of the uniform clock-bias interval (s)",
    )

    @model_validator(mode="after")
    def _check_heights(self) -> Self:
        if not self.gnb_height_min < self.gnb_height_max <= self.ceiling_height:
            msg = (
                "gNB heights must satisfy 0 < min < max <= ceiling, got "
                f"min={self.gnb_height_min}, max={self.gnb_height_max}, "
                f"ceiling={self.ceiling_height}"
            )
            raise ValueError(msg)
        if self.ue_height >= self.ceiling_height:
            msg = f"UE height {self.ue_height} must be below the ceiling"
            raise ValueError(msg)
        return self


class NoiseModel(BaseModel):
    """Per-link phase error model."""

    model_config = ConfigDict(frozen=True)

    # 90th percentile of |N(0, 2 sigma)| = 1.4 rad for a double difference
    sigma_los: float = Field(default=0.4255, ge=0, description="LOS phase std (rad)")
    # NLOS tail split between Gaussian noise and excess path; the pair is
    # refitted together with `calibrate --param nlos_scale`
    sigma_nlos: float = Field(default=0.45, ge=0, description="NLOS phase std (rad)")
    nlos_excess_mean: float = Field(
        default=0.014,
        ge=0,
        description="Mean of the exponential NLOS excess path (m)",
    )
    los_probability_k: float = Field(
        default=78.0,
        gt=0,
        description="Scale of the exponential LOS probability (m)",
    )
    nlos_enabled: bool = Field(default=True, description="Draw NLOS links")


class Wavelength(BaseModel):
    """Carrier wavelength derived from the operating frequency."""

    model_config = ConfigDict(frozen=True)

    carrier_frequency: float = Field(default=3.5e9, gt=0, description="Carrier (Hz)")

    @property
    def meters(self) -> float:
        """Wavelength lambda = c / f in meters."""
        return speed_of_light / self.carrier_frequency


class AmbiguityModel(BaseModel):
    """Wrong integer-ambiguity fixing model."""

    model_config = ConfigDict(frozen=True)

    zeta: float = Field(
        default=0.0,
        ge=0.0,
        le=1.0,
        description="Probability of wrong fixing per link",
    )
    eta: int = Field(default=3, ge=1, description="Search-space factor")
    magnitude_mode: MagnitudeMode = Field(default=MagnitudeMode.CYCLES_TIMES_NE)


class SolverConfig(BaseModel):
    """Iterative least-squares solver parameters."""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(default=1e-4, gt=0, description="Update-norm threshold (m)")
    max_iterations: int = Field(default=50, ge=1)
    initial_guess: InitialGuess = Field(default=InitialGuess.SERVING_GNB)
    custom_position: tuple[float, float, float] | None = Field(default=None)
    initial_height: float = Field(
        default=0.0,
        description="Height of the serving-gNB initial guess (m)",
    )
    condition_limit: float = Field(default=1e12, gt=1)
    divergence_factor: float = Field(default=10.0, gt=1)

    @model_validator(mode="after")
    def _check_custom(self) -> Self:
        if self.initial_guess is InitialGuess.CUSTOM and self.custom_position is None:
            msg = "custom initial guess requires custom_position"
            raise ValueError(msg)
        return self


class FilterPolicy(BaseModel):
    """Target-UE measurement filtration policy."""

    model_config = ConfigDict(frozen=True)

    los_only: bool = Field(default=False, description="Drop NLOS-flagged links")
    max_links: int = Field(default=17, ge=1, description="Neighbor links kept")


# TOML file read by the next CampaignConfig built inside load_settings
_config_file: ContextVar[Path | None] = ContextVar("campaign_config_file", default=None)


class CampaignConfig(BaseSettings):
    """Monte-Carlo campaign settings loaded from file, environment and CLI."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="CPP_",
        env_nested_delimiter="__",
        case_sensitive=False,
    )

    layout: LayoutConfig = Field(default_factory=LayoutConfig)
    noise: NoiseModel = Field(default_factory=NoiseModel)
    ambiguity: AmbiguityModel = Field(default_factory=AmbiguityModel)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    wavelength: Wavelength = Field(default_factory=Wavelength)
    filtering: FilterPolicy = Field(default_factory=FilterPolicy)

    n_drops: int = Field(default=100, ge=1, description="Monte-Carlo drops")
    ues_per_drop: int = Field(default=100, ge=1, description="Target UEs per drop")
    scenario: Scenario = Field(default=Scenario.LOS_NLOS)
    master_seed: int = Field(default=0, ge=0)

    # Execution and output; never part of the result echo
    workers: int = Field(default=1, ge=1, le=256, description="Worker processes")
    output_dir: str = Field(default="results")
    export_format: Literal["csv", "json"] = Field(default="csv")
    log_level: str = Field(default="INFO")
    log_dir: str = Field(default="log")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        """Order sources as CLI overrides, TOML file, environment, .env."""
        return (
            init_settings,
            TomlConfigSettingsSource(settings_cls, toml_file=_config_file.get()),
            env_settings,
            dotenv_settings,
            file_secret_settings,
        )

    @model_validator(mode="after")
    def _check_campaign(self) -> Self:
        if self.n_drops * self.ues_per_drop < 100:  # noqa: PLR2004
            msg = "n_drops * ues_per_drop must be at least 100 for percentiles"
            raise ValueError(msg)
        if self.scenario is Scenario.LOS_ONLY and self.noise.nlos_enabled:
            self.noise = self.noise.model_copy(update={"nlos_enabled": False})
        return self


def _deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Merge nested override mappings on top of base values."""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> CampaignConfig:
    """
    Load campaign settings from a TOML file with overrides on top.

    Args:
        config_path: Optional path to a TOML configuration file
        overrides: Nested mapping of values that win over the file

    Returns:
        Validated campaign configuration

    Raises:
        ConfigurationError: If the file cannot be read or values are invalid
    """
    path = None if config_path is None else Path(config_path)
    if path is not None and not path.is_file():
        msg = f"Cannot read config file {path}: no such file"
        raise ConfigurationError(msg)

    token = _config_file.set(path)
    try:
        return CampaignConfig(**(overrides or {}))
    except ValidationError as e:
        msg = f"Invalid campaign configuration: {e}"
        raise ConfigurationError(msg) from e
    except (OSError, tomllib.TOMLDecodeError, SettingsError) as e:
        msg = f"Malformed config file {path}: {e}"
        raise ConfigurationError(msg) from e
    finally:
        _config_file.reset(token)


def apply_overrides(
    config: CampaignConfig,
    overrides: dict[str, Any],
) -> CampaignConfig:
    """
    Return a re-validated copy of a configuration with nested overrides.

    Raises:
        ConfigurationError: If the overridden values are invalid
    """
    merged = _deep_merge(config.model_dump(), overrides)
    try:
        return CampaignConfig(**merged)
    except ValidationError as e:
        msg = f"Invalid campaign configuration: {e}"
        raise ConfigurationError(msg) from e


# Global settings instance
_settings: CampaignConfig | None = None


def get_settings() -> CampaignConfig:
    """Get default campaign settings singleton instance."""
    global _settings  # noqa: PLW0603
    if _settings is None:
        _settings = CampaignConfig()
    return _settings
