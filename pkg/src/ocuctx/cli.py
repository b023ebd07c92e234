"""Batch command-line interface.

Exit codes: 0 success, 1 domain error, 2 usage error (argparse), 3 some
images failed during evaluate, 4 every image failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._version import __version__
from .context import ContextConfig, PunishMode, pc_loss
from .errors import OcuctxError
from .harness import COMPARE_METRICS, compare, discover, evaluate, mask_ids, split
from .masks import load_class_config, load_mask, validate_pair
from .reporting import Scenario, load_report, render

PUNISH_MODES = {"mult": PunishMode.MULTIPLICATIVE, "add": PunishMode.ADDITIVE}

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 3
EXIT_TOTAL = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocuctx",
        description="Context-aware scoring of multi-class segmentation masks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score a directory of mask pairs")
    p_eval.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p_eval.add_argument("--pred", required=True, help="directory of predicted masks")
    p_eval.add_argument("--scenario", required=True,
                        choices=[s.value for s in Scenario])
    p_eval.add_argument("--classes", required=True, help="class-config JSON file")
    p_eval.add_argument("--punish", choices=sorted(PUNISH_MODES), default="mult")
    p_eval.add_argument("--out", required=True, help="output report path")
    p_eval.add_argument("--format", choices=["json", "csv", "markdown"], default="json")
    p_eval.add_argument("--jobs", type=int, default=1)

    p_pc = sub.add_parser("pcloss", help="context coefficients for one mask pair")
    p_pc.add_argument("--gt", required=True)
    p_pc.add_argument("--pred", required=True)
    p_pc.add_argument("--classes", required=True)

    p_split = sub.add_parser("split", help="deterministic 40/40/20 dataset split")
    p_split.add_argument("--manifest", required=True, help="directory of mask files")
    p_split.add_argument("--seed", type=int, required=True)
    p_split.add_argument("--out", required=True)
    p_split.add_argument("--group-by-prefix", action="store_true",
                         help="keep ids sharing a prefix (before '_') in one subset")

    p_cmp = sub.add_parser("compare", help="Wilcoxon signed-rank test between two reports")
    p_cmp.add_argument("report_a")
    p_cmp.add_argument("report_b")
    p_cmp.add_argument("--metric", required=True, choices=sorted(COMPARE_METRICS))
    p_cmp.add_argument("--alpha", type=float, default=0.05)
    return parser


def _cmd_evaluate(args) -> int:
    spec = load_class_config(args.classes)
    manifest = discover(args.gt, args.pred, spec, Scenario(args.scenario))
    for warning in manifest.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    cfg = ContextConfig(spec=spec, punish_mode=PUNISH_MODES[args.punish])
    report = evaluate(manifest, cfg, jobs=args.jobs)
    Path(args.out).write_bytes(render(report, args.format))
    n_failed = report.aggregate["n_failed"]
    n_ok = report.aggregate["n_images"]
    print(f"evaluated {n_ok} image(s), {n_failed} failed -> {args.out}")
    if n_failed and n_ok == 0:
        return EXIT_TOTAL
    if n_failed:
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_pcloss(args) -> int:
    spec = load_class_config(args.classes)
    gt = load_mask(args.gt, spec)
    pred = load_mask(args.pred, spec)
    validate_pair(gt, pred)
    result = pc_loss(gt, pred, ContextConfig(spec=spec))
    print(f"pc_loss: {result.pc_loss!r}")
    print(f"lambda: {result.lambda_!r}")
    print(f"rho: {result.rho!r}")
    print(f"delta_gt: {result.delta_gt!r}")
    print(f"delta_pred: {result.delta_pred!r}")
    for name, value in result.thetas.items():
        print(f"theta[{name}]: {value!r}")
    flags = ",".join(sorted(flag.value for flag in result.degenerate))
    print(f"flags: {flags if flags else 'none'}")
    return EXIT_OK


def _cmd_split(args) -> int:
    ids = mask_ids(args.manifest)
    assignment = split(ids, seed=args.seed, group_by_prefix=args.group_by_prefix)
    Path(args.out).write_text(json.dumps(assignment.to_dict(), indent=2) + "\n")
    print(
        f"split {len(ids)} image(s) into {len(assignment.train)}/"
        f"{len(assignment.test)}/{len(assignment.validation)} "
        f"(train/test/validation) -> {args.out}"
    )
    return EXIT_OK


def _cmd_compare(args) -> int:
    report_a = load_report(args.report_a)
    report_b = load_report(args.report_b)
    result = compare(report_a, report_b, args.metric, alpha=args.alpha)
    print(f"metric: {args.metric}")
    print(f"n_effective: {result.n_effective}")
    print(f"w_plus: {result.w_plus!r}")
    print(f"method: {result.method.value}")
    print(f"p_two_sided: {result.p_two_sided!r}")
    print(f"significant at alpha={args.alpha:g}: {'yes' if result.significant else 'no'}")
    return EXIT_OK


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "pcloss": _cmd_pcloss,
    "split": _cmd_split,
    "compare": _cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except OcuctxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
