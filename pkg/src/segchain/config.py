"""Simulation configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .chain import RewardSchedule


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class StrategyKind(str, enum.Enum):
    NONE = "none"
    OPTIMAL_PLACEMENT = "optimal_placement"
    CAPTURE_AND_VANISH = "capture_and_vanish"


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: StrategyKind = StrategyKind.NONE
    target_T: int | None = None


@dataclass(frozen=True)
class SimConfig:
    m: int = 8
    s0: int = 4
    P: int = 1000
    honest_power: float = 40.0
    adversary_power: float = 0.0
    adversary_strategy: StrategyKind = StrategyKind.NONE
    target_T: int = 0                  # 0 means m
    adversary_identities: int = -1     # identities the adversary tries to sustain; -1 means floor(power)
    adversary_genesis: int = -1        # genesis grid slots held by the adversary; -1 means min(target, n0 // 2)
    initial_subsidy: int = 50_000
    halving_interval: int = 210
    storage_reward_pool: int = 8_000
    iterations: int = 500
    seed: int = 1
    honest_join_rate: float = 0.5
    honest_churn: float = 0.0
    txs_per_block: int = 4
    accounts: int = 16
    pow_mode: str = "budget"
    hash_attempts_per_P: int = 4

    def __post_init__(self):
        for name in ("m", "s0", "iterations", "P", "txs_per_block", "accounts"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.honest_power < 0 or self.adversary_power < 0:
            raise ConfigError("honest_power" if self.honest_power < 0 else "adversary_power", "must be >= 0")
        if not 0 <= self.honest_churn <= 1:
            raise ConfigError("honest_churn", "must be a probability")
        if self.honest_join_rate < 0:
            raise ConfigError("honest_join_rate", "must be >= 0")
        if self.pow_mode not in ("budget", "hash"):
            raise ConfigError("pow_mode", "must be 'budget' or 'hash'")
        if self.target_T < 0 or self.target_T > self.m:
            raise ConfigError("target_T", "must lie in 0..m")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")

    @property
    def strategy(self) -> AdversaryStrategy:
        return AdversaryStrategy(self.adversary_strategy, self.target_T or self.m)

    @property
    def reward_schedule(self) -> RewardSchedule:
        return RewardSchedule(self.initial_subsidy, self.halving_interval, self.storage_reward_pool)

    @property
    def n0(self) -> int:
        return self.m * self.s0

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, enum.Enum) else v
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}


def _coerce(name: str, raw: Any) -> Any:
    kind = _FIELDS[name].type
    try:
        if kind == "int":
            if isinstance(raw, str):
                return int(raw.replace("_", ""), 0)
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError("not an integer")
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "StrategyKind":
            return StrategyKind(raw)
        return str(raw)
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {raw!r}: {exc}") from None


def make_config(values: Mapping[str, Any], base: SimConfig | None = None) -> SimConfig:
    merged = (base or SimConfig()).to_dict()
    for k, v in values.items():
        if k not in _FIELDS:
            raise ConfigError(k, "unknown setting")
        merged[k] = _coerce(k, v)
    merged["adversary_strategy"] = StrategyKind(merged["adversary_strategy"])
    return SimConfig(**merged)


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected key = value")
        k, v = (p.strip() for p in line.split("=", 1))
        values[k] = v
    return values


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> SimConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {p}: {exc.strerror}") from None
    values = parse_config_text(text)
    values.update(overrides or {})
    return make_config(values)
