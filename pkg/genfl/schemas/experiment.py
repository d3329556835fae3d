"""
Validated experiment configuration and the cost-model parameters.
"""
import hashlib
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from genfl.config import DEFAULT_OUTPUT_DIR
from genfl.schemas.generator import GeneratorConfig
from genfl.schemas.model import TrainSpec
from genfl.schemas.protocol import AggregationPolicy, Mode


@dataclass(frozen=True)
class CostConfig:
    """
    Hardware and link rates used to turn a round into seconds and joules.
    None of the defaults are measured values.
    """
    client_flops_per_sec: float = 1e9
    server_flops_per_sec: float = 1e11
    uplink_bps: float = 1e6
    downlink_bps: float = 1e7
    client_power_watts: float = 5.0
    server_power_watts: float = 300.0
    gen_cost_per_sample: float = 1e9
    bytes_per_param: int = 4

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


# Default values filled in by `preset = ...` before the file's own keys apply
PRESETS: Dict[str, Dict[str, Any]] = {
    "cifar10-like": {
        "num_classes": 10,
        "feature_dim": 16,
        "rate_per_round": 10,
        "cap_per_class": 300,
    },
    "cifar100-like": {
        "num_classes": 100,
        "feature_dim": 100,
        "samples_per_class": 60,
        "rate_per_round": 10,
        "cap_per_class": 100,
    },
}


class ExperimentConfig(BaseModel):
    """All knobs of one simulation run. Keys match the config file keys."""
    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    preset: Optional[str] = None
    seed: int = Field(0, ge=0)

    # data
    num_classes: int = Field(10, ge=2)
    feature_dim: int = Field(10, ge=1)
    samples_per_class: int = Field(400, ge=1)
    cluster_spread: float = Field(1.0, gt=0)
    center_separation: float = Field(3.5, gt=0)
    test_fraction: float = Field(0.2, gt=0, lt=1)

    # model / training
    hidden_width: int = Field(10, ge=1)
    epochs: int = Field(5, ge=1)
    batch_size: int = Field(16, ge=1)
    learning_rate: float = Field(0.1, ge=0)

    # protocol
    num_clients: int = Field(20, ge=1)
    clients_per_round: int = Field(5, ge=1)
    rounds: int = Field(100, ge=0)
    alpha: float = Field(0.1, gt=0)
    mode: Mode = Mode.GENFL
    kappa1: float = Field(0.7, ge=0, le=1)
    kappa2: float = Field(0.3, ge=0, le=1)
    accuracy_threshold: float = Field(0.6, ge=0, le=1)
    plateau_window: int = Field(10, ge=1)
    client_workers: int = Field(1, ge=1)

    # generator
    rate_per_round: int = Field(60, ge=1)
    cap_per_class: int = Field(60, ge=1)
    label_noise: float = Field(0.1, ge=0, le=1)
    center_shift: float = Field(0.5, ge=0)
    spread_factor: float = Field(1.0, gt=0)

    # cost model
    client_flops_per_sec: float = Field(1e9, gt=0)
    server_flops_per_sec: float = Field(1e11, gt=0)
    uplink_bps: float = Field(1e6, gt=0)
    downlink_bps: float = Field(1e7, gt=0)
    client_power_watts: float = Field(5.0, gt=0)
    server_power_watts: float = Field(300.0, gt=0)
    gen_cost_per_sample: float = Field(1e9, gt=0)
    bytes_per_param: int = Field(4, ge=1)

    output_dir: str = DEFAULT_OUTPUT_DIR

    @field_validator("mode", mode="before")
    @classmethod
    def _parse_mode(cls, value):
        return Mode.parse(value)

    @field_validator("preset", mode="before")
    @classmethod
    def _check_preset(cls, value):
        if value in (None, ""):
            return None
        key = str(value).strip().lower()
        if key not in PRESETS:
            raise ValueError(f"unknown preset '{value}' (expected one of {', '.join(sorted(PRESETS))})")
        return key

    @model_validator(mode="before")
    @classmethod
    def _apply_presets_and_kappas(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)

        preset = str(data.get("preset") or "").strip().lower()
        if preset in PRESETS:
            for key, value in PRESETS[preset].items():
                data.setdefault(key, value)

        try:
            mode = Mode.parse(data.get("mode", Mode.GENFL))
        except ValueError:
            return data  # reported by the field validator

        has1, has2 = "kappa1" in data, "kappa2" in data
        try:
            if not has1 and not has2:
                policy = AggregationPolicy.for_mode(mode)
                data["kappa1"], data["kappa2"] = policy.kappa1, policy.kappa2
            elif has1 and not has2:
                data["kappa2"] = 1.0 - float(data["kappa1"])
            elif has2 and not has1:
                data["kappa1"] = 1.0 - float(data["kappa2"])
        except (TypeError, ValueError):
            pass  # the bad value is reported against its own key
        return data

    @model_validator(mode="after")
    def _check_cross_field(self):
        problems: List[str] = []
        if abs(self.kappa1 + self.kappa2 - 1.0) > 1e-9:
            problems.append(f"kappa1 + kappa2 must equal 1 (kappa1={self.kappa1}, kappa2={self.kappa2})")
        if self.mode is Mode.FL_ONLY and self.kappa2 != 0:
            problems.append("kappa2 must be 0 in fl-only mode")
        if self.mode is Mode.AIGC_ONLY and self.kappa1 != 0:
            problems.append("kappa1 must be 0 in aigc-only mode")
        if self.clients_per_round > self.num_clients:
            problems.append(
                f"clients_per_round ({self.clients_per_round}) exceeds num_clients ({self.num_clients})"
            )
        if self.test_per_class < 1 or self.test_per_class >= self.samples_per_class:
            problems.append(
                f"test_fraction {self.test_fraction} leaves no test or no training samples "
                f"with samples_per_class={self.samples_per_class}"
            )
        elif self.num_clients > self.train_size:
            problems.append(f"num_clients ({self.num_clients}) exceeds training samples ({self.train_size})")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def test_per_class(self) -> int:
        return int(round(self.test_fraction * self.samples_per_class))

    @property
    def train_size(self) -> int:
        return self.num_classes * (self.samples_per_class - self.test_per_class)

    def train_spec(self) -> TrainSpec:
        return TrainSpec(epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate)

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            rate_per_round=self.rate_per_round,
            cap_per_class=self.cap_per_class,
            label_noise=self.label_noise,
            center_shift=self.center_shift,
            spread_factor=self.spread_factor,
        )

    def cost_config(self) -> CostConfig:
        return CostConfig(
            client_flops_per_sec=self.client_flops_per_sec,
            server_flops_per_sec=self.server_flops_per_sec,
            uplink_bps=self.uplink_bps,
            downlink_bps=self.downlink_bps,
            client_power_watts=self.client_power_watts,
            server_power_watts=self.server_power_watts,
            gen_cost_per_sample=self.gen_cost_per_sample,
            bytes_per_param=self.bytes_per_param,
        )

    def policy(self) -> AggregationPolicy:
        return AggregationPolicy(self.kappa1, self.kappa2, self.mode)

    def layer_shapes(self):
        return [(self.feature_dim, self.hidden_width), (self.hidden_width, self.num_classes)]

    def resolved_items(self) -> List[tuple]:
        """(key, text) pairs of every field in declaration order"""
        items = []
        for name in type(self).model_fields:
            value = getattr(self, name)
            if name == "preset" and value is None:
                continue
            items.append((name, _format_value(value)))
        return items

    def to_text(self) -> str:
        return "".join(f"{key}={text}\n" for key, text in self.resolved_items())

    def config_hash(self) -> str:
        """Short content hash of the resolved config, output_dir excluded"""
        body = "".join(f"{k}={v}\n" for k, v in self.resolved_items() if k != "output_dir")
        return hashlib.sha256(body.encode("utf-8")).hexdigest()[:12]


def _format_value(value) -> str:
    if isinstance(value, Mode):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)
