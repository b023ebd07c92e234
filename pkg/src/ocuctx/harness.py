"""Dataset discovery, deterministic splitting, batch evaluation, comparison.

Per-image evaluation is embarrassingly parallel; results are always
gathered back into manifest order, so a run with ``jobs=8`` produces the
same report, byte for byte, as a run with ``jobs=1``.  A broken mask file
is recorded as a failed row and excluded from aggregates instead of
aborting the batch.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .context import ContextConfig, pc_loss
from .errors import ConfigError, OcuctxError
from .masks import ClassSpec, LabelMask, load_mask, merge_classes, validate_pair
from .metrics import class_metrics
from .reporting import (
    EvaluationReport,
    ImageResult,
    Scenario,
    build_report,
)
from .stats import TestResult, wilcoxon

__all__ = [
    "MaskPair",
    "DatasetManifest",
    "SplitAssignment",
    "mask_ids",
    "discover",
    "split",
    "evaluate",
    "compare",
    "resolve_scenario",
    "COMPARE_METRICS",
]

MASK_SUFFIXES = (".png", ".pgm")

# CLI metric flag -> per-image overall key
COMPARE_METRICS = {"fscore": "f_score", "iou": "iou", "er": "error_rate"}

TRAIN_FRACTION = 0.4
TEST_FRACTION = 0.4


@dataclass(frozen=True)
class MaskPair:
    image_id: str
    gt_path: Path
    pred_path: Path


@dataclass(frozen=True)
class DatasetManifest:
    pairs: tuple[MaskPair, ...]
    spec: ClassSpec
    scenario: Scenario
    warnings: tuple[str, ...] = ()

    @property
    def image_ids(self) -> tuple[str, ...]:
        return tuple(pair.image_id for pair in self.pairs)


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint train/test/validation id sets plus the seed that made them."""

    train: frozenset[str]
    test: frozenset[str]
    validation: frozenset[str]
    seed: int

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "seed": self.seed,
            "train": sorted(self.train),
            "test": sorted(self.test),
            "validation": sorted(self.validation),
        }


def _mask_files(directory: Path) -> dict[str, Path]:
    files: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in MASK_SUFFIXES or not path.is_file():
            continue
        if path.stem in files:
            raise ConfigError(f"duplicate image id {path.stem!r} in {directory}")
        files[path.stem] = path
    return files


def mask_ids(directory: str | Path) -> list[str]:
    """Sorted stems of the mask files found in a directory."""
    return sorted(_mask_files(Path(directory)))


def discover(
    gt_dir: str | Path,
    pred_dir: str | Path,
    spec: ClassSpec,
    scenario: Scenario = Scenario.CUSTOM,
) -> DatasetManifest:
    """Pair ground-truth and prediction masks by identical file stem.

    Files present on only one side become warnings, not errors; an empty
    intersection is an error.
    """
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    for directory in (gt_dir, pred_dir):
        if not directory.is_dir():
            raise ConfigError(f"not a directory: {directory}")
    gt_files = _mask_files(gt_dir)
    pred_files = _mask_files(pred_dir)

    common = sorted(set(gt_files) & set(pred_files))
    warnings = tuple(
        f"no prediction for {gt_files[stem]}" for stem in sorted(set(gt_files) - set(pred_files))
    ) + tuple(
        f"no ground truth for {pred_files[stem]}" for stem in sorted(set(pred_files) - set(gt_files))
    )
    if not common:
        raise ConfigError(f"no matching mask stems between {gt_dir} and {pred_dir}")
    pairs = tuple(MaskPair(stem, gt_files[stem], pred_files[stem]) for stem in common)
    return DatasetManifest(pairs=pairs, spec=spec, scenario=scenario, warnings=warnings)


def split(
    image_ids,
    seed: int,
    group_by_prefix: bool = False,
) -> SplitAssignment:
    """Seeded-shuffle 40/40/20 split (validation absorbs the remainder).

    With ``group_by_prefix`` the shuffled units are id prefixes up to the
    first underscore, so all images of one subject land in the same subset;
    the proportions then apply to groups, not images.
    """
    if isinstance(image_ids, DatasetManifest):
        image_ids = image_ids.image_ids
    image_ids = list(image_ids)
    ids = sorted(set(image_ids))
    if len(ids) != len(image_ids):
        raise ConfigError("image ids must be unique")

    if group_by_prefix:
        groups: dict[str, list[str]] = {}
        for image_id in ids:
            groups.setdefault(image_id.split("_", 1)[0], []).append(image_id)
        units = sorted(groups)
    else:
        units = ids
    if len(units) < 5:
        kind = "groups" if group_by_prefix else "images"
        raise ConfigError(f"too few {kind} to split: {len(units)} (need at least 5)")

    shuffled = list(units)
    random.Random(seed).shuffle(shuffled)
    n_train = math.floor(TRAIN_FRACTION * len(shuffled))
    n_test = math.floor(TEST_FRACTION * len(shuffled))
    buckets = (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_test],
        shuffled[n_train + n_test :],
    )
    if group_by_prefix:
        buckets = tuple(
            [image_id for unit in bucket for image_id in groups[unit]] for bucket in buckets
        )
    train, test, validation = (frozenset(bucket) for bucket in buckets)
    return SplitAssignment(train=train, test=test, validation=validation, seed=seed)


def resolve_scenario(spec: ClassSpec, scenario: Scenario):
    """Scenario-reduced spec plus the mask transform that realizes it.

    ALL merges every foreground class into one region named "all"; IRIS and
    SCLERA merge every other foreground class into the background, scoring
    the named class alone.  CUSTOM evaluates the spec as-is.
    """
    if scenario is Scenario.CUSTOM:
        return spec, lambda mask: mask

    if scenario is Scenario.ALL:
        target = spec.foreground_labels[0]
        sources = set(spec.foreground_labels)
        merged_spec = replace(spec, classes=((target, "all"),))

        def transform(mask: LabelMask) -> LabelMask:
            merged = merge_classes(mask, sources, target)
            return LabelMask(merged.labels, merged_spec)

        return merged_spec, transform

    keep = spec.label_of(scenario.value)  # raises ConfigError when absent
    drop = set(spec.foreground_labels) - {keep}
    reduced_spec = replace(
        spec, classes=tuple(entry for entry in spec.classes if entry[0] == keep)
    )

    def transform(mask: LabelMask) -> LabelMask:
        if not drop:
            return LabelMask(mask.labels, reduced_spec)
        merged = merge_classes(mask, drop, spec.background_label)
        return LabelMask(merged.labels, reduced_spec)

    return reduced_spec, transform


def _evaluate_one(pair: MaskPair, base_spec: ClassSpec, scen_spec: ClassSpec,
                  transform, cfg: ContextConfig) -> ImageResult:
    try:
        gt = load_mask(pair.gt_path, base_spec)
        pred = load_mask(pair.pred_path, base_spec)
        validate_pair(gt, pred)
        gt, pred = transform(gt), transform(pred)
        per_class = {
            name: class_metrics(gt, pred, label) for label, name in scen_spec.classes
        }
        ctx = pc_loss(gt, pred, cfg)
        return ImageResult(pair.image_id, per_class, ctx)
    except OcuctxError as exc:
        return ImageResult(pair.image_id, None, None, error=str(exc))


def evaluate(manifest: DatasetManifest, cfg: ContextConfig, jobs: int = 1) -> EvaluationReport:
    """Score every pair in the manifest and aggregate.

    ``cfg.spec`` must match the manifest's; the scenario reduction is
    applied here, before scoring.  Rows come back in manifest order no
    matter how many workers run.
    """
    if cfg.spec != manifest.spec:
        raise ConfigError("context config and manifest disagree on the class spec")
    scen_spec, transform = resolve_scenario(manifest.spec, manifest.scenario)
    scen_cfg = ContextConfig(spec=scen_spec, punish_mode=cfg.punish_mode)

    def run(pair: MaskPair) -> ImageResult:
        return _evaluate_one(pair, manifest.spec, scen_spec, transform, scen_cfg)

    if jobs <= 1:
        rows = tuple(run(pair) for pair in manifest.pairs)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            rows = tuple(executor.map(run, manifest.pairs))
    return build_report(manifest.scenario, scen_spec, cfg.punish_mode, rows)


def compare(
    report_a: EvaluationReport,
    report_b: EvaluationReport,
    metric_name: str,
    alpha: float = 0.05,
) -> TestResult:
    """Wilcoxon signed-rank test between two reports on one metric.

    Reports must cover identical evaluated image-id sets; values are paired
    by id.
    """
    if metric_name not in COMPARE_METRICS:
        raise ConfigError(
            f"unknown metric {metric_name!r}; expected one of {sorted(COMPARE_METRICS)}"
        )
    key = COMPARE_METRICS[metric_name]
    series_a = report_a.overall_series(key)
    series_b = report_b.overall_series(key)
    if set(series_a) != set(series_b):
        only_a = sorted(set(series_a) - set(series_b))
        only_b = sorted(set(series_b) - set(series_a))
        raise ConfigError(
            f"reports cover different images: only in A {only_a}, only in B {only_b}"
        )
    ids = sorted(series_a)
    return wilcoxon([series_a[i] for i in ids], [series_b[i] for i in ids], alpha=alpha)
