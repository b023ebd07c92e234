"""Walk through the context coefficients on a small two-class example.

Builds an 8x8 ground truth with an iris block and a sclera block, nudges
the sclera in the prediction, and prints every intermediate quantity on
the way to the punish-context loss.

Run:  python demos/01_context_loss_walkthrough.py
"""

import numpy as np

from ocuctx import (
    ClassSpec,
    ContextConfig,
    LabelMask,
    PunishMode,
    binarize,
    centroid,
    pc_loss,
    punish,
    scale_coefficient,
    spatial_coefficient,
    spatial_ratio,
)

spec = ClassSpec(classes=((1, "iris"), (2, "sclera")))
cfg = ContextConfig(spec=spec)

gt = np.zeros((8, 8), dtype=np.uint8)
gt[1:4, 1:4] = 1       # iris block
gt[5:8, 5:8] = 2       # sclera block

pred = gt.copy()
pred[5:8, 5:8] = 0     # the prediction drags the sclera up one row
pred[4:7, 5:8] = 2

gt_mask = LabelMask(gt, spec)
pred_mask = LabelMask(pred, spec)

print("ground truth:\n", gt)
print("prediction:\n", pred)

print("\n-- class centroids (row, col) --")
for label in spec.context_labels:
    name = spec.name_of(label)
    c_gt = centroid(binarize(gt_mask, label))
    c_pred = centroid(binarize(pred_mask, label))
    print(f"{name:>10}: gt ({c_gt.row:.3f}, {c_gt.col:.3f})"
          f"   pred ({c_pred.row:.3f}, {c_pred.col:.3f})")

print("\n-- scale side: how unevenly are the classes mis-segmented? --")
lam, thetas = scale_coefficient(gt_mask, pred_mask, cfg)
for name, value in thetas.items():
    print(f"jaccard distance of {name}: {value:.6f}")
print(f"scale coefficient lambda = mean pairwise |difference| = {lam:.6f}")

print("\n-- spatial side: is the class layout preserved? --")
delta_gt, _ = spatial_coefficient(gt_mask, cfg)
delta_pred, _ = spatial_coefficient(pred_mask, cfg)
ratio = spatial_ratio(gt_mask, pred_mask, cfg)
print(f"centroid spread delta(gt)   = {delta_gt:.6f} px")
print(f"centroid spread delta(pred) = {delta_pred:.6f} px")
print(f"spatial ratio rho = delta(pred)/delta(gt) = {ratio.rho:.6f}")

print("\n-- the blend --")
result = pc_loss(gt_mask, pred_mask, cfg)
print(f"pc_loss = (lambda + rho) / 2 = {result.pc_loss:.6f}")
print("note the fixed point: a perfect prediction scores lambda=0, rho=1,")
print("so its pc_loss is 0.5, not 0:")
perfect = pc_loss(gt_mask, gt_mask, cfg)
print(f"pc_loss(gt, gt) = {perfect.pc_loss}")

print("\n-- punishing a training loss --")
base = 0.8231
print(f"multiplicative: {base} * (1 + pc) = {punish(base, result, cfg):.6f}")
add_cfg = ContextConfig(spec=spec, punish_mode=PunishMode.ADDITIVE)
print(f"additive:       {base} + pc       = {punish(base, result, add_cfg):.6f}")
