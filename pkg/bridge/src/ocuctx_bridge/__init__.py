"""Array-level binding of the punish-context loss for training loops.

A deliberately thin layer over the ocuctx core: plain contiguous integer
arrays in, plain floats out, with the same JSON class-config file the CLI
reads.  Conversion is zero-copy for C-contiguous uint8 input and a single
validated copy otherwise.

Scalar only: the context quantities are defined on hard (argmax) label
grids, so nothing here is differentiable and no gradient flows through the
returned values.  Calls hold no global state and are safe to issue from
multiple threads.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ocuctx import (
    ClassSpec,
    ContextConfig,
    LabelMask,
    PunishMode,
    load_class_config,
    validate_pair,
)
from ocuctx import pc_loss as _core_pc_loss
from ocuctx import punish as _core_punish

__all__ = ["PcLossResult", "pc_loss_scalar", "punish_batch", "load_class_config"]

__version__ = "0.1.0"

_MODES = {
    "mult": PunishMode.MULTIPLICATIVE,
    "multiplicative": PunishMode.MULTIPLICATIVE,
    "add": PunishMode.ADDITIVE,
    "additive": PunishMode.ADDITIVE,
}


class PcLossResult(NamedTuple):
    pc_loss: float
    lambda_: float
    rho: float
    flags: tuple[str, ...]


def _as_spec(class_config: ClassSpec | str | Path) -> ClassSpec:
    if isinstance(class_config, ClassSpec):
        return class_config
    return load_class_config(class_config)


def _as_mask(array, spec: ClassSpec) -> LabelMask:
    return LabelMask(np.asarray(array), spec)


def pc_loss_scalar(gt, pred, class_config: ClassSpec | str | Path) -> PcLossResult:
    """Punish-context loss of one prediction against its ground truth.

    ``gt`` and ``pred`` are (H, W) integer arrays (anything numpy can view
    as one).  Validation matches the core library exactly: undeclared label
    values and shape mismatches raise.
    """
    spec = _as_spec(class_config)
    gt_mask = _as_mask(gt, spec)
    pred_mask = _as_mask(pred, spec)
    validate_pair(gt_mask, pred_mask)
    result = _core_pc_loss(gt_mask, pred_mask, ContextConfig(spec=spec))
    return PcLossResult(
        pc_loss=result.pc_loss,
        lambda_=result.lambda_,
        rho=result.rho,
        flags=tuple(sorted(flag.value for flag in result.degenerate)),
    )


def punish_batch(
    base_losses: Sequence[float],
    gts: Iterable,
    preds: Iterable,
    class_config: ClassSpec | str | Path,
    mode: str = "multiplicative",
) -> list[float]:
    """Apply the context punishment to a batch of loss values, elementwise.

    Inputs are index-aligned; order is preserved in the output.
    """
    if mode not in _MODES:
        raise ValueError(f"unknown punish mode {mode!r}; expected one of {sorted(_MODES)}")
    spec = _as_spec(class_config)
    cfg = ContextConfig(spec=spec, punish_mode=_MODES[mode])
    gts = list(gts)
    preds = list(preds)
    if not (len(base_losses) == len(gts) == len(preds)):
        raise ValueError(
            f"misaligned batch: {len(base_losses)} losses, {len(gts)} ground truths, "
            f"{len(preds)} predictions"
        )
    punished = []
    for base, gt, pred in zip(base_losses, gts, preds):
        gt_mask = _as_mask(gt, spec)
        pred_mask = _as_mask(pred, spec)
        validate_pair(gt_mask, pred_mask)
        ctx = _core_pc_loss(gt_mask, pred_mask, cfg)
        punished.append(_core_punish(float(base), ctx, cfg))
    return punished
