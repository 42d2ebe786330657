"""
Layered run configuration.

Every section is a frozen dataclass with documented defaults; a YAML file
and ``section.key=value`` assignments are applied on top. Unknown sections or
keys are rejected.
"""

import dataclasses
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

import yaml

from cattle_clip.augmentation import AugConfig
from cattle_clip.curation.curator import CurationConfig
from cattle_clip.data.manifest import DEFAULT_CATEGORIES
from cattle_clip.data.synthetic import SynthConfig
from cattle_clip.errors import ConfigError, DataError
from cattle_clip.fewshot.plan import FewShotConfig, StageSettings
from cattle_clip.model.config import ModelConfig
from cattle_clip.model.head import ContrastiveConfig
from cattle_clip.text.config import TextConfig
from cattle_clip.training.config import TrainConfig
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.yaml"


@dataclass(frozen=True)
class DatasetConfig:
    categories: Tuple[str, ...] = DEFAULT_CATEGORIES
    split_ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    split_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "split_ratios", tuple(float(r) for r in self.split_ratios))
        if len(self.split_ratios) != 3 or abs(sum(self.split_ratios) - 1.0) > 1e-9 or min(self.split_ratios) < 0:
            raise ConfigError(f"dataset.split_ratios must be three non-negative values summing to 1, got {self.split_ratios}")
        if not self.categories or len(set(self.categories)) != len(self.categories):
            raise ConfigError("dataset.categories must be non-empty and distinct")


@dataclass(frozen=True)
class EvaluationConfig:
    threshold: float = 0.17
    seed: int = 0
    split: str = "test"
    batch_size: int = 8

    def __post_init__(self):
        if self.split not in ("train", "val", "test"):
            raise ConfigError(f"evaluation.split must be train, val or test, got {self.split!r}")
        if self.batch_size < 1:
            raise ConfigError("evaluation.batch_size must be >= 1")


def _listify(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_listify(v) for v in value]
    if isinstance(value, Mapping):
        return {k: _listify(v) for k, v in value.items()}
    return value


def _tupleify(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_tupleify(v) for v in value)
    return value


def _apply_section(default: Any, values: Mapping[str, Any], section: str) -> Any:
    if not isinstance(values, Mapping):
        raise ConfigError(f"section {section!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(default)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in section {section!r}: {unknown}")
    try:
        return replace(default, **{k: _tupleify(v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section {section!r}: {exc}") from exc


@dataclass(frozen=True)
class GlobalConfig:
    """Desk-scale defaults; ``full()`` gives the full-size setting"""

    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    curation: CurationConfig = field(default_factory=CurationConfig)
    augmentation: AugConfig = field(default_factory=AugConfig)
    text: TextConfig = field(default_factory=TextConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    model_preset: str = "desk"
    contrastive: ContrastiveConfig = field(default_factory=ContrastiveConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    fewshot: FewShotConfig = field(default_factory=lambda: FewShotConfig(base_lr=2e-3, final_lr=1e-3))
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    seed: int = 0

    def __post_init__(self):
        aug = self.augmentation
        if aug.target_size is None:
            object.__setattr__(self, "augmentation", replace(aug, target_size=self.model.image_size))
        elif tuple(aug.target_size) != self.model.image_size:
            raise ConfigError(
                f"augmentation.target_size {aug.target_size} differs from model.image_size {self.model.image_size}"
            )
        unknown = sorted(set(self.fewshot.categories) - set(self.dataset.categories))
        if unknown:
            raise ConfigError(f"fewshot.categories {unknown} are not dataset categories")

    @classmethod
    def desk(cls) -> "GlobalConfig":
        return cls()

    @classmethod
    def full(cls) -> "GlobalConfig":
        return cls(
            model=ModelConfig.preset("vitb16"),
            model_preset="vitb16",
            training=TrainConfig(base_lr=2.2e-4),
            fewshot=FewShotConfig(),
        )

    @property
    def sections(self) -> Tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(self) if f.name not in ("seed", "model_preset"))

    @classmethod
    def from_mapping(cls, data: Optional[Mapping[str, Any]], base: Optional["GlobalConfig"] = None) -> "GlobalConfig":
        """
        Apply a nested mapping on top of ``base`` (default: desk defaults).
        ``model.preset`` selects the starting architecture before the other
        model keys apply.
        """
        config = base or cls()
        data = dict(data or {})
        unknown = sorted(set(data) - set(config.sections) - {"seed"})
        if unknown:
            raise ConfigError(f"unknown config section(s): {unknown}")
        changes: Dict[str, Any] = {}
        model_values = dict(data.pop("model", {}) or {})
        if "preset" in model_values:
            preset = model_values.pop("preset")
            changes["model_preset"] = preset
            changes["model"] = _apply_section(ModelConfig.preset(preset), model_values, "model")
        elif model_values:
            changes["model"] = _apply_section(config.model, model_values, "model")
        if "model" in changes and "augmentation" not in data:
            changes["augmentation"] = replace(config.augmentation, target_size=changes["model"].image_size)
        seed = data.pop("seed", None)
        for section, values in data.items():
            changes[section] = _apply_section(getattr(config, section), values or {}, section)
        config = replace(config, **changes)
        return config.with_seed(seed) if seed is not None else config

    def with_seed(self, seed: int) -> "GlobalConfig":
        """Route one base seed into every seeded section; few-shot seeds count up from it"""
        return replace(
            self,
            seed=seed,
            dataset=replace(self.dataset, split_seed=seed),
            synth=replace(self.synth, seed=seed),
            training=replace(self.training, seed=seed),
            evaluation=replace(self.evaluation, seed=seed),
            fewshot=replace(self.fewshot, seeds=tuple(seed + i for i in range(len(self.fewshot.seeds)))),
        )

    def with_overrides(self, assignments: Iterable[str]) -> "GlobalConfig":
        nested: Dict[str, Dict[str, Any]] = {}
        for assignment in assignments:
            key, sep, raw = assignment.partition("=")
            section, dot, name = key.strip().partition(".")
            if not sep or not dot or not name:
                raise ConfigError(f"override {assignment!r} is not of the form section.key=value")
            nested.setdefault(section, {})[name] = parse_scalar(raw)
        if not nested:
            return self
        current = self.to_dict()
        for section, values in nested.items():
            if section not in current or not isinstance(current[section], dict):
                raise ConfigError(f"unknown config section {section!r}")
            current[section].update(values)
        if "image_size" in nested.get("model", {}) and "target_size" not in nested.get("augmentation", {}):
            current["augmentation"]["target_size"] = None
        updated = GlobalConfig.from_mapping({k: v for k, v in current.items() if k != "seed"})
        return replace(updated, seed=self.seed)

    def stage_settings(self) -> StageSettings:
        return StageSettings(
            model=self.model,
            contrastive=self.contrastive,
            text=self.text,
            aug=self.augmentation,
            train=self.training,
            eval_seed=self.evaluation.seed,
            threshold=self.evaluation.threshold,
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"seed": self.seed}
        for section in self.sections:
            values = dataclasses.asdict(getattr(self, section))
            if section == "model":
                values = {"preset": self.model_preset, **values}
            data[section] = _listify(values)
        return data

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def parse_scalar(raw: str) -> Any:
    """YAML scalar parsing, plus plain floats such as 1e-3 that YAML 1.1 reads as strings"""
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {raw!r}: {exc}") from exc
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> GlobalConfig:
    data: Dict[str, Any] = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: malformed YAML ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    try:
        return GlobalConfig.from_mapping(data).with_overrides(overrides)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc


async def dump_config(config: GlobalConfig, output_dir: str) -> str:
    """Echo the effective configuration into ``output_dir``"""
    target = await FileManager("", output_dir).write_text(CONFIG_FILE, config.to_yaml())
    logger.info("Effective configuration written to %s", target)
    return target
