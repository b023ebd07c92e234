"""Masks, per-class scores, and the class-merging behind the ALL scenario.

Run:  python demos/02_masks_and_metrics.py
"""

import tempfile
from pathlib import Path

import numpy as np

from ocuctx import (
    ClassSpec,
    LabelMask,
    class_metrics,
    load_mask,
    merge_classes,
    save_mask,
)

spec = ClassSpec(classes=((1, "iris"), (2, "sclera")))

gt = np.zeros((10, 12), dtype=np.uint8)
gt[2:6, 2:6] = 1
gt[6:9, 7:11] = 2
pred = np.zeros((10, 12), dtype=np.uint8)
pred[2:6, 3:7] = 1          # iris shifted one column
pred[6:9, 7:11] = 2         # sclera perfect

gt_mask = LabelMask(gt, spec)
pred_mask = LabelMask(pred, spec)

print("-- masks round-trip through 8-bit grayscale files --")
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "gt.png"
    save_mask(gt_mask, path)
    again = load_mask(path, spec)
    print(f"wrote {path.name}, {again.width}x{again.height},",
          "grid identical:", bool(np.array_equal(again.labels, gt_mask.labels)))

print("\n-- per-class scores (one-vs-rest) --")
for label, name in spec.classes:
    m = class_metrics(gt_mask, pred_mask, label)
    print(f"{name:>8}: F-score {m.f_score:.4f}  ER {m.error_rate:.4f}"
          f"  IoU {m.iou:.4f}  theta {m.theta:.4f}")

print("\n-- ALL scenario: iris and sclera merged into one region --")
merged_gt = merge_classes(gt_mask, {1, 2}, 1)
merged_pred = merge_classes(pred_mask, {1, 2}, 1)
m = class_metrics(merged_gt, merged_pred, 1)
print(f"merged region: F-score {m.f_score:.4f}  ER {m.error_rate:.4f}  IoU {m.iou:.4f}")
print("merged spec foreground labels:", merged_gt.spec.foreground_labels)
