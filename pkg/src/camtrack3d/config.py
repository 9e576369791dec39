"""Tracker configuration: per-category thresholds, models, and flags.

Defaults are the tuned values the engine ships with; every field can be
overridden from a JSON document. Validation is strict: unknown keys,
missing categories, and out-of-range values each raise with a message
naming the offending key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .categories import CATEGORIES, Category, category_from_name
from .motion import ProcessNoise


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CategoryConfig:
    """All per-category knobs."""

    score_split: float          # high/low confidence boundary
    nms_scale: float            # footprint inflation for duplicate removal
    nms_metric: str             # iou_bev | giou_bev
    nms_threshold: float
    recall_gate: float          # max cost to recall a low-score detection
    motion_gate: float          # max stage-0 cost (1 - overlap)
    appearance_gate: float      # max stage-1 cost (negated similarity)
    motion_metric: str = "giou_bev"   # stage-0 overlap: giou_bev | giou_3d
    motion_model: str = "ctra"        # ctra | bicycle
    confirm_hits: int = 2             # consecutive hits to confirm Tentative
    max_misses: int = 2               # consecutive misses before death
    process_noise: ProcessNoise = field(default_factory=ProcessNoise)


@dataclass(frozen=True)
class Flags:
    """Pipeline stage toggles; all independent."""

    geometry_filter: bool = True
    tracker_filter: bool = True
    adaptive_noise: bool = True
    second_association: bool = True
    two_step_verification: bool = True
    stage_factor: bool = True


def _cat(score_split, nms_scale, recall_gate, motion_gate, appearance_gate,
         nms_metric="iou_bev", nms_threshold=0.08, motion_model="ctra") -> CategoryConfig:
    return CategoryConfig(
        score_split=score_split,
        nms_scale=nms_scale,
        nms_metric=nms_metric,
        nms_threshold=nms_threshold,
        recall_gate=recall_gate,
        motion_gate=motion_gate,
        appearance_gate=appearance_gate,
        motion_model=motion_model,
    )


def _default_categories() -> dict[Category, CategoryConfig]:
    return {
        Category.CAR: _cat(0.2, 1.0, -1.8, 1.3, -3.3, motion_model="bicycle"),
        Category.PED: _cat(0.35, 2.3, -1.5, 1.7, -3.8, nms_metric="giou_bev", nms_threshold=0.0),
        Category.BIC: _cat(0.28, 1.9, -0.3, 1.6, -0.9),
        Category.MOTO: _cat(0.29, 1.7, -0.8, 1.5, -1.4),
        Category.BUS: _cat(0.14, 1.0, -0.3, 1.3, -3.8, motion_model="bicycle"),
        Category.TRA: _cat(0.12, 1.0, -0.8, 1.5, -3.8, motion_model="bicycle"),
        Category.TRU: _cat(0.23, 1.0, -1.5, 1.3, -3.8, motion_model="bicycle"),
    }


@dataclass(frozen=True)
class TrackerConfig:
    categories: dict[Category, CategoryConfig] = field(default_factory=_default_categories)
    flags: Flags = field(default_factory=Flags)
    dt: float = 0.5                    # keyframe period, seconds
    score_floor: float = 0.01          # detections below this are dropped
    recall_appearance: str = "iou_2d"  # image metric for the recall pass
    appearance: str = "giou_2d"        # image metric for stage-1 association
    fusion: str = "sum"                # sum | max | avg across cameras
    gate_mode: str = "post"            # gate after solving, or mask before
    fixed_noise: float = 0.25          # R multiplier when adaptive_noise off
    score_smoothing: float = 0.7       # weight on previous track score
    use_velocity: bool = True          # measure velocity when detector provides it
    flip_yaw: bool = False             # fold heading-ambiguous yaw innovations
    emit_on_miss: bool = False         # emit predicted boxes for missed actives
    rear_axle_ratio: float = 0.4       # bicycle model rear axle placement
    initial_covariance: float = 1.0    # P0 scale

    def __post_init__(self) -> None:
        missing = [c.value for c in CATEGORIES if c not in self.categories]
        if missing:
            raise ConfigError(f"missing category configuration for: {', '.join(missing)}")
        for cat, cc in self.categories.items():
            _validate_category(cat.value, cc)
        _check_range("dt", self.dt, low=0.0, low_open=True)
        _check_range("score_floor", self.score_floor, low=0.0, high=1.0)
        _check_range("score_smoothing", self.score_smoothing, low=0.0, high=1.0)
        _check_range("fixed_noise", self.fixed_noise, low=0.0)
        _check_range("rear_axle_ratio", self.rear_axle_ratio, low=0.0, high=1.0)
        _check_range("initial_covariance", self.initial_covariance, low=0.0, low_open=True)
        _check_choice("recall_appearance", self.recall_appearance, ("iou_2d", "giou_2d"))
        _check_choice("appearance", self.appearance, ("iou_2d", "giou_2d"))
        _check_choice("fusion", self.fusion, ("sum", "max", "avg"))
        _check_choice("gate_mode", self.gate_mode, ("post", "pre"))
        for name in ("use_velocity", "flip_yaw", "emit_on_miss"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be a boolean, got {getattr(self, name)!r}")

    def per_category(self, attr: str) -> dict[Category, Any]:
        """One attribute pulled across all categories, keyed by Category."""
        return {cat: getattr(cc, attr) for cat, cc in self.categories.items()}


def _check_range(name, value, low=None, high=None, low_open=False):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if low is not None and (value <= low if low_open else value < low):
        bound = "greater than" if low_open else "at least"
        raise ConfigError(f"{name} must be {bound} {low}, got {value}")
    if high is not None and value > high:
        raise ConfigError(f"{name} must be at most {high}, got {value}")


def _check_choice(name, value, choices):
    if value not in choices:
        raise ConfigError(f"{name} must be one of {choices}, got {value!r}")


def _validate_category(name: str, cc: CategoryConfig) -> None:
    _check_range(f"{name}.score_split", cc.score_split, low=0.0, high=1.0)
    _check_range(f"{name}.nms_scale", cc.nms_scale, low=1.0)
    _check_range(f"{name}.nms_threshold", cc.nms_threshold, low=-1.0, high=1.0)
    _check_choice(f"{name}.nms_metric", cc.nms_metric, ("iou_bev", "giou_bev"))
    _check_choice(f"{name}.motion_metric", cc.motion_metric, ("giou_bev", "giou_3d"))
    _check_choice(f"{name}.motion_model", cc.motion_model, ("ctra", "bicycle"))
    if not isinstance(cc.confirm_hits, int) or cc.confirm_hits < 1:
        raise ConfigError(f"{name}.confirm_hits must be an integer >= 1, got {cc.confirm_hits!r}")
    if not isinstance(cc.max_misses, int) or cc.max_misses < 1:
        raise ConfigError(f"{name}.max_misses must be an integer >= 1, got {cc.max_misses!r}")
    for f in fields(ProcessNoise):
        _check_range(f"{name}.process_noise.{f.name}", getattr(cc.process_noise, f.name), low=0.0)


_GLOBAL_KEYS = {
    "dt", "score_floor", "recall_appearance", "appearance", "fusion",
    "gate_mode", "fixed_noise", "score_smoothing", "use_velocity",
    "flip_yaw", "emit_on_miss", "rear_axle_ratio", "initial_covariance",
}
_FLAG_KEYS = {f.name for f in fields(Flags)}
_CATEGORY_KEYS = {f.name for f in fields(CategoryConfig)}
_NOISE_KEYS = {f.name for f in fields(ProcessNoise)}


def load_config(document: Mapping[str, Any] | None = None) -> TrackerConfig:
    """Overlay a key-value document on the defaults and validate.

    An empty or None document yields the defaults exactly.
    """
    doc = dict(document or {})
    unknown = set(doc) - _GLOBAL_KEYS - {"flags", "categories"}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")

    flags_doc = doc.pop("flags", {})
    if not isinstance(flags_doc, Mapping):
        raise ConfigError("flags must be a mapping of flag name to boolean")
    bad_flags = set(flags_doc) - _FLAG_KEYS
    if bad_flags:
        raise ConfigError(f"unknown flags: {', '.join(sorted(bad_flags))}")
    for k, v in flags_doc.items():
        if not isinstance(v, bool):
            raise ConfigError(f"flag {k} must be a boolean, got {v!r}")
    flags = replace(Flags(), **flags_doc)

    cats_doc = doc.pop("categories", {})
    if not isinstance(cats_doc, Mapping):
        raise ConfigError("categories must be a mapping of category name to settings")
    categories = _default_categories()
    for cat_name, overrides in cats_doc.items():
        try:
            cat = category_from_name(cat_name)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if not isinstance(overrides, Mapping):
            raise ConfigError(f"category {cat_name} settings must be a mapping")
        bad = set(overrides) - _CATEGORY_KEYS
        if bad:
            raise ConfigError(f"unknown keys for category {cat_name}: {', '.join(sorted(bad))}")
        overrides = dict(overrides)
        if "process_noise" in overrides:
            noise_doc = overrides["process_noise"]
            if not isinstance(noise_doc, Mapping):
                raise ConfigError(f"{cat_name}.process_noise must be a mapping")
            bad = set(noise_doc) - _NOISE_KEYS
            if bad:
                raise ConfigError(f"unknown process_noise keys for {cat_name}: {', '.join(sorted(bad))}")
            overrides["process_noise"] = replace(ProcessNoise(), **noise_doc)
        categories[cat] = replace(categories[cat], **overrides)

    return TrackerConfig(categories=categories, flags=flags, **doc)


def load_config_file(path: str | Path) -> TrackerConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"configuration file {path} is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"configuration file {path} must contain a JSON object")
    return load_config(doc)


def config_to_dict(cfg: TrackerConfig) -> dict[str, Any]:
    """Full round-trippable dump, including values equal to defaults."""
    out: dict[str, Any] = {k: getattr(cfg, k) for k in sorted(_GLOBAL_KEYS)}
    out["flags"] = {f.name: getattr(cfg.flags, f.name) for f in fields(Flags)}
    out["categories"] = {
        cat.value: {
            **{k: getattr(cc, k) for k in sorted(_CATEGORY_KEYS - {"process_noise"})},
            "process_noise": {k: getattr(cc.process_noise, k) for k in sorted(_NOISE_KEYS)},
        }
        for cat, cc in sorted(cfg.categories.items(), key=lambda kv: kv[0].value)
    }
    return out
