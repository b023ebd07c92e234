"""Evaluation reports: aggregation, JSON schema (v1), CSV and markdown views.

Aggregation order for multi-class scenarios, echoed into every report
because it is a convention choice: per-image per-class metric, then mean
over classes within the image, then mean +/- sample standard deviation
(n-1 denominator) over images.  Failed images are recorded with their
reason and excluded from aggregates.  With fewer than two evaluated images
the std is omitted.

The JSON rendering is canonical (sorted keys, two-space indent), so a
report evaluated with any parallelism serializes to identical bytes, and
``report_from_dict`` re-derives every aggregate from the per-image rows and
refuses to load a report whose stored aggregate disagrees.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from ._version import __version__
from .context import ContextResult, DegeneracyFlag, PunishMode
from .errors import ConfigError
from .masks import ClassSpec
from .metrics import ClassMetrics

__all__ = [
    "Scenario",
    "ImageResult",
    "EvaluationReport",
    "OVERALL_KEYS",
    "CLASS_METRIC_KEYS",
    "build_report",
    "report_to_dict",
    "report_from_dict",
    "render",
    "save_report",
    "load_report",
]

CLASS_METRIC_KEYS = ("f_score", "error_rate", "iou", "theta")
CONTEXT_KEYS = ("pc_loss", "lambda", "rho")
OVERALL_KEYS = CLASS_METRIC_KEYS + CONTEXT_KEYS

SCHEMA_VERSION = 1


class Scenario(str, Enum):
    ALL = "all"
    IRIS = "iris"
    SCLERA = "sclera"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ImageResult:
    """Outcome for one image pair; either metrics or a failure reason."""

    image_id: str
    class_metrics: dict[str, ClassMetrics] | None
    context: ContextResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def overall(self) -> dict[str, float]:
        """Class-mean of each score plus the context scalars."""
        if not self.ok:
            raise ConfigError(f"image {self.image_id} failed: {self.error}")
        out: dict[str, float] = {}
        for key in CLASS_METRIC_KEYS:
            values = [getattr(m, key) for m in self.class_metrics.values()]
            out[key] = float(np.mean(values))
        out["pc_loss"] = self.context.pc_loss
        out["lambda"] = self.context.lambda_
        out["rho"] = self.context.rho
        return out


@dataclass(frozen=True)
class EvaluationReport:
    scenario: Scenario
    spec: ClassSpec
    punish_mode: PunishMode
    per_image: tuple[ImageResult, ...]
    aggregate: dict
    tool_version: str = __version__

    @property
    def evaluated_ids(self) -> tuple[str, ...]:
        return tuple(row.image_id for row in self.per_image if row.ok)

    def overall_series(self, key: str) -> dict[str, float]:
        """Per-image overall value of one metric, keyed by image id."""
        if key not in OVERALL_KEYS:
            raise ConfigError(f"unknown metric {key!r}; expected one of {OVERALL_KEYS}")
        return {row.image_id: row.overall()[key] for row in self.per_image if row.ok}


def _mean_std(values: list[float]) -> dict[str, float]:
    cell = {"mean": float(np.mean(values))}
    if len(values) >= 2:
        cell["std"] = float(np.std(values, ddof=1))
    return cell


def compute_aggregate(rows: tuple[ImageResult, ...], class_names: tuple[str, ...]) -> dict:
    ok_rows = [row for row in rows if row.ok]
    aggregate: dict = {
        "n_images": len(ok_rows),
        "n_failed": len(rows) - len(ok_rows),
        "per_class": {},
        "overall": {},
    }
    if not ok_rows:
        return aggregate
    for name in class_names:
        aggregate["per_class"][name] = {
            key: _mean_std([getattr(row.class_metrics[name], key) for row in ok_rows])
            for key in CLASS_METRIC_KEYS
        }
    overalls = [row.overall() for row in ok_rows]
    for key in OVERALL_KEYS:
        aggregate["overall"][key] = _mean_std([o[key] for o in overalls])
    return aggregate


def build_report(
    scenario: Scenario,
    spec: ClassSpec,
    punish_mode: PunishMode,
    rows: tuple[ImageResult, ...],
) -> EvaluationReport:
    class_names = tuple(name for _, name in spec.classes)
    return EvaluationReport(
        scenario=scenario,
        spec=spec,
        punish_mode=punish_mode,
        per_image=rows,
        aggregate=compute_aggregate(rows, class_names),
    )


def _context_to_dict(ctx: ContextResult) -> dict:
    return {
        "thetas": dict(ctx.thetas),
        "lambda": ctx.lambda_,
        "rho": ctx.rho,
        "delta_gt": ctx.delta_gt,
        "delta_pred": ctx.delta_pred,
        "pc_loss": ctx.pc_loss,
        "flags": sorted(flag.value for flag in ctx.degenerate),
    }


def _context_from_dict(d: dict) -> ContextResult:
    return ContextResult(
        thetas=dict(d["thetas"]),
        lambda_=d["lambda"],
        rho=d["rho"],
        delta_gt=d["delta_gt"],
        delta_pred=d["delta_pred"],
        pc_loss=d["pc_loss"],
        degenerate=frozenset(DegeneracyFlag(flag) for flag in d["flags"]),
    )


def _row_to_dict(row: ImageResult) -> dict:
    if not row.ok:
        return {"id": row.image_id, "error": row.error, "classes": None,
                "overall": None, "context": None}
    return {
        "id": row.image_id,
        "error": None,
        "classes": {
            name: {key: getattr(m, key) for key in CLASS_METRIC_KEYS}
            for name, m in row.class_metrics.items()
        },
        "overall": row.overall(),
        "context": _context_to_dict(row.context),
    }


def _row_from_dict(d: dict) -> ImageResult:
    if d.get("error") is not None:
        return ImageResult(d["id"], None, None, d["error"])
    classes = {name: ClassMetrics(**values) for name, values in d["classes"].items()}
    row = ImageResult(d["id"], classes, _context_from_dict(d["context"]))
    if d.get("overall") != row.overall():
        raise ConfigError(f"report row {d['id']}: stored overall disagrees with its metrics")
    return row


def report_to_dict(report: EvaluationReport) -> dict:
    spec = report.spec
    return {
        "schema": SCHEMA_VERSION,
        "tool_version": report.tool_version,
        "scenario": report.scenario.value,
        "config": {
            "classes": {str(label): name for label, name in spec.classes},
            "background": spec.background_label,
            "include_background_in_context": spec.include_background_in_context,
            "epsilon_delta": spec.epsilon_delta,
            "punish_mode": report.punish_mode.value,
            "aggregation": "per-image per-class metric, mean over classes within "
                           "an image, then mean/std (ddof=1) over images",
        },
        "per_image": [_row_to_dict(row) for row in report.per_image],
        "aggregate": report.aggregate,
    }


def report_from_dict(doc: dict) -> EvaluationReport:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported report schema {doc.get('schema')!r}")
    config = doc["config"]
    spec = ClassSpec(
        classes=tuple(sorted((int(k), v) for k, v in config["classes"].items())),
        background_label=config["background"],
        include_background_in_context=config["include_background_in_context"],
        epsilon_delta=config["epsilon_delta"],
    )
    rows = tuple(_row_from_dict(d) for d in doc["per_image"])
    report = build_report(
        scenario=Scenario(doc["scenario"]),
        spec=spec,
        punish_mode=PunishMode(config["punish_mode"]),
        rows=rows,
    )
    if report.aggregate != doc["aggregate"]:
        raise ConfigError("report aggregate disagrees with its per-image rows")
    if doc["tool_version"] != report.tool_version:
        report = EvaluationReport(
            scenario=report.scenario,
            spec=report.spec,
            punish_mode=report.punish_mode,
            per_image=report.per_image,
            aggregate=report.aggregate,
            tool_version=doc["tool_version"],
        )
    return report


def _render_json(report: EvaluationReport) -> bytes:
    return (json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n").encode()


def _render_csv(report: EvaluationReport) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["id", "class", "f_score", "error_rate", "iou", "theta",
         "pc_loss", "lambda", "rho", "delta_gt", "delta_pred", "flags", "error"]
    )
    for row in report.per_image:
        if not row.ok:
            writer.writerow([row.image_id] + [""] * 11 + [row.error])
            continue
        ctx = row.context
        flags = "|".join(sorted(flag.value for flag in ctx.degenerate))
        for name, m in row.class_metrics.items():
            writer.writerow(
                [row.image_id, name, repr(m.f_score), repr(m.error_rate),
                 repr(m.iou), repr(m.theta), repr(ctx.pc_loss), repr(ctx.lambda_),
                 repr(ctx.rho), repr(ctx.delta_gt), repr(ctx.delta_pred), flags, ""]
            )
    return buf.getvalue().encode()


def _pct_cell(cell: dict[str, float]) -> str:
    if "std" in cell:
        return f"{100 * cell['mean']:.2f} ± {100 * cell['std']:.2f}"
    return f"{100 * cell['mean']:.2f}"


def _raw_cell(cell: dict[str, float]) -> str:
    if "std" in cell:
        return f"{cell['mean']:.4f} ± {cell['std']:.4f}"
    return f"{cell['mean']:.4f}"


def _render_markdown(report: EvaluationReport) -> bytes:
    agg = report.aggregate
    lines = [
        f"# Evaluation report — scenario {report.scenario.value}",
        "",
        f"{agg['n_images']} image(s) evaluated, {agg['n_failed']} failed. "
        f"Scores are percentages, mean ± std over images.",
        "",
        "| Region | F-Score | ER | IoU |",
        "| --- | --- | --- | --- |",
    ]
    for name, cells in agg["per_class"].items():
        lines.append(
            f"| {name} | {_pct_cell(cells['f_score'])} | "
            f"{_pct_cell(cells['error_rate'])} | {_pct_cell(cells['iou'])} |"
        )
    overall = agg.get("overall", {})
    if overall:
        lines.append(
            f"| *overall* | {_pct_cell(overall['f_score'])} | "
            f"{_pct_cell(overall['error_rate'])} | {_pct_cell(overall['iou'])} |"
        )
        lines.append("")
        lines.append(
            f"Context: pc_loss {_raw_cell(overall['pc_loss'])}, "
            f"lambda {_raw_cell(overall['lambda'])}, rho {_raw_cell(overall['rho'])}"
        )
    lines.append("")
    return "\n".join(lines).encode()


def render(report: EvaluationReport, fmt: str = "json") -> bytes:
    """Serialize a report as json (lossless), csv (per-image) or markdown (summary)."""
    if fmt == "json":
        return _render_json(report)
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "markdown":
        return _render_markdown(report)
    raise ConfigError(f"unknown report format {fmt!r}")


def save_report(report: EvaluationReport, path: str | Path, fmt: str = "json") -> None:
    Path(path).write_bytes(render(report, fmt))


def load_report(path: str | Path) -> EvaluationReport:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc
    return report_from_dict(doc)
