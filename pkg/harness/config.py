"""Experiment configuration: a dotenv-style key=value file mapped onto ExperimentConfig.

Lists are comma separated. Unknown keys are rejected. The full schema is in README.md.
"""
import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dotenv import dotenv_values
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from attacks import AttackMethod
from errors import ConfigError
from methods.smoothgrad_method import SmoothGradParams
from metrics.curves import DEFAULT_STEPS
from metrics.metric_registry import METRICS, CurveMetric, ScalarMetric
from nn.architectures import ARCHITECTURES
from nn.training import Optimizer

ALL_METHODS = ["gradients", "smoothgrad", "integrated_gradients", "blur_integrated_gradients", "gradcam", "uniform", "canny"]
ALL_METRICS = [m.value for m in CurveMetric] + [m.value for m in ScalarMetric]
# Fields that do not change results.
NON_SEMANTIC_FIELDS = {"output_dir", "workers"}


class DatasetKind(str, Enum):
    SHAPES = "shapes"
    IDX = "idx"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # dataset
    dataset: DatasetKind = DatasetKind.SHAPES
    dataset_seeds: List[int] = Field(default_factory=lambda: [0], description="One synthetic dataset variant per seed.")
    image_count: int = Field(1200, ge=2)
    image_size: int = Field(16, ge=8)
    shape_background: int = Field(0, ge=0, le=255, description="Synthetic background gray level.")
    shape_contrast: int = Field(3, ge=1, le=255, description="Gray levels between shape and background.")
    shape_noise: float = Field(0.4, ge=0, description="Pixel noise std in gray levels.")
    idx_images: Optional[str] = None
    idx_labels: Optional[str] = None
    train_fraction: float = Field(0.75, gt=0, lt=1)
    max_eval_images: Optional[int] = Field(None, ge=1, description="Cap on evaluated test images.")
    include_misclassified: bool = False

    # models
    architectures: List[str] = Field(default_factory=lambda: ["conv2"])
    seeds: List[int] = Field(default_factory=lambda: [0], description="Training seeds; one model per (architecture, seed).")
    epochs: int = Field(5, ge=1)
    learning_rate: float = Field(0.01, gt=0)
    batch_size: int = Field(16, ge=1)
    optimizer: Optimizer = Optimizer.ADAM

    # attribution
    methods: List[str] = Field(default_factory=lambda: list(ALL_METHODS))
    smoothgrad_samples: int = Field(25, ge=1)
    smoothgrad_sigma: float = Field(0.1, ge=0)
    ig_steps: int = Field(32, ge=1)
    blur_ig_steps: int = Field(32, ge=1)
    blur_ig_sigma_max: float = Field(8.0, gt=0)

    # evaluation
    metrics: List[str] = Field(default_factory=lambda: list(ALL_METRICS))
    steps: int = Field(DEFAULT_STEPS, ge=1, description="Chunks per score-function curve.")
    blur_sigma: float = Field(5.0, gt=0)
    attack: AttackMethod = AttackMethod.FGSM
    eps_steps: int = Field(1, ge=1, le=255)
    pgd_iterations: int = Field(10, ge=1)

    # analysis
    sweep_k: List[int] = Field(default_factory=lambda: [1, 2, 4, 8])
    noise_levels: List[float] = Field(default_factory=lambda: [0.01, 0.1, 0.25, 0.5])
    top_k: int = Field(3, ge=1)
    ablations: bool = Field(True, description="Run the epsilon sweep, noise selection and FGSM vs PGD comparison.")

    # run
    output_dir: str = "runs/default"
    workers: int = Field(1, ge=1)

    @field_validator("dataset_seeds", "architectures", "seeds", "methods", "metrics", "sweep_k", "noise_levels", mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("architectures")
    @classmethod
    def _known_architectures(cls, value: List[str]) -> List[str]:
        unknown = sorted(set(value) - set(ARCHITECTURES))
        if unknown or not value:
            raise ValueError(f"unknown architectures {unknown}, choose from {sorted(ARCHITECTURES)}")
        return value

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, value: List[str]) -> List[str]:
        unknown = sorted(set(value) - set(ALL_METHODS))
        if unknown or not value:
            raise ValueError(f"unknown methods {unknown}, choose from {ALL_METHODS}")
        return value

    @field_validator("metrics")
    @classmethod
    def _known_metrics(cls, value: List[str]) -> List[str]:
        unknown = sorted(set(value) - set(METRICS))
        if unknown or not value:
            raise ValueError(f"unknown metrics {unknown}, choose from {sorted(METRICS)}")
        return value

    @field_validator("sweep_k")
    @classmethod
    def _budgets_in_range(cls, value: List[int]) -> List[int]:
        if any(k < 1 or k > 255 for k in value):
            raise ValueError(f"sweep budgets must lie in [1, 255], got {value}")
        return value

    @field_validator("noise_levels")
    @classmethod
    def _noise_non_negative(cls, value: List[float]) -> List[float]:
        if any(sigma < 0 for sigma in value):
            raise ValueError(f"noise levels must be non-negative, got {value}")
        return value

    @model_validator(mode="after")
    def _check_dataset(self) -> "ExperimentConfig":
        if self.dataset is DatasetKind.IDX and not (self.idx_images and self.idx_labels):
            raise ValueError("dataset=idx needs idx_images and idx_labels")
        if self.shape_background + self.shape_contrast > 255:
            raise ValueError("shape_background + shape_contrast must stay within 255")
        if not self.seeds or not self.dataset_seeds:
            raise ValueError("at least one training seed and one dataset seed are required")
        return self

    def method_params(self, method: str) -> Dict[str, Any]:
        """Keyword parameters the pipeline passes to each attribution method (seeds are added per image)."""
        if method == "smoothgrad":
            return SmoothGradParams(samples=self.smoothgrad_samples, sigma=self.smoothgrad_sigma).model_dump(exclude={"seed"})
        if method == "integrated_gradients":
            return {"steps": self.ig_steps}
        if method == "blur_integrated_gradients":
            return {"steps": self.blur_ig_steps, "sigma_max": self.blur_ig_sigma_max}
        return {}


def parse_config(values: Dict[str, Optional[str]]) -> ExperimentConfig:
    missing = sorted(key for key, value in values.items() if value is None)
    if missing:
        raise ConfigError(f"config keys without a value: {missing}")
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        logger.error(f"Invalid experiment config: {e}")
        raise ConfigError(str(e)) from e


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None,
                defaults: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """defaults < config file < overrides; None-valued overrides are ignored."""
    values: Dict[str, Any] = dict(defaults or {})
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(dotenv_values(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    config = parse_config(values)
    logger.info(f"Loaded config {path or '<defaults>'} (hash {config_hash(config)[:12]})")
    return config


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON of every field that affects results."""
    payload = config.model_dump(mode="json", exclude=NON_SEMANTIC_FIELDS)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
