"""Command-line interface.

Subcommands: gen (fixture contours), build (tree construction + dumps),
detect (scene detection to CSV), bench (method comparison), oracle
(brute-force validation), animate (per-frame records).  Exit codes: 0 on
success / oracle pass, 1 on oracle mismatch, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .boxtree import FitMethod, build_tree, tree_to_dict
from .contour import load_contour, save_contour
from .detect import EPS_CONTACT, EPS_SEP
from .multires import build_pyramid


def _eps_defaults() -> tuple[float, float]:
    # OBB2D_EPS overrides both the separating-gap and the contact slack.
    raw = os.environ.get("OBB2D_EPS")
    if raw is None:
        return EPS_SEP, EPS_CONTACT
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValueError(f"OBB2D_EPS must be a number, got {raw!r}") from exc
    return value, value


def _add_method(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--method",
        choices=[m.value for m in FitMethod],
        default=FitMethod.ELEMENTARY.value,
        help="how internal box axes are fitted",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obb2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a fixture contour file")
    gen.add_argument("--kind", choices=harness.FIXTURE_KINDS, default="blob")
    gen.add_argument("--m", type=int, default=512, help="segment count (power of two)")
    gen.add_argument("--roughness", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--out", required=True)

    build = sub.add_parser("build", help="build a box tree for one contour")
    build.add_argument("--contour", required=True)
    _add_method(build)
    build.add_argument("--r", type=int, default=5, help="orientation sample count")
    build.add_argument(
        "--sampling", choices=("parameter", "arclength"), default="parameter"
    )
    build.add_argument("--dump-tree", metavar="FILE", help="write per-node JSON")
    build.add_argument("--dump-pyramid", metavar="FILE", help="write one polygon per level")

    detect = sub.add_parser("detect", help="run detection on a scene")
    detect.add_argument("--scene", required=True)
    _add_method(detect)
    detect.add_argument("--r", type=int, default=5)
    detect.add_argument("--out", required=True, help="CSV output path")

    bench = sub.add_parser("bench", help="compare both methods on a scene")
    bench.add_argument("--scene", required=True)
    bench.add_argument("--repeat", type=int, default=5)
    bench.add_argument("--r", type=int, default=5)
    bench.add_argument("--out", help="optional CSV output path")

    oracle = sub.add_parser("oracle", help="validate detection against the brute-force oracle")
    oracle.add_argument("--scene", required=True)
    _add_method(oracle)
    oracle.add_argument("--r", type=int, default=5)

    animate = sub.add_parser("animate", help="run detection over animation frames")
    animate.add_argument("--scene", required=True)
    _add_method(animate)
    animate.add_argument("--r", type=int, default=5)
    animate.add_argument("--out", required=True, help="CSV output path")

    return parser


def _cmd_gen(args) -> int:
    contour = harness.generate_fixture(args.kind, args.m, args.roughness, args.seed)
    save_contour(contour, args.out)
    print(f"wrote {args.kind} contour with {contour.segment_count} segments to {args.out}")
    return 0


def _cmd_build(args) -> int:
    contour = load_contour(args.contour)
    method = FitMethod(args.method)
    pyramid = build_pyramid(contour) if method is FitMethod.MULTIRESOLUTION else None
    tree = build_tree(
        contour, pyramid=pyramid, method=method, r=args.r, sampling=args.sampling
    )
    print(
        f"built {method.value} tree: {tree.node_count} boxes over "
        f"{tree.leaf_count} segments"
    )
    if args.dump_tree:
        Path(args.dump_tree).write_text(
            json.dumps(tree_to_dict(tree), indent=2) + "\n", encoding="utf-8"
        )
        print(f"tree dump written to {args.dump_tree}")
    if args.dump_pyramid:
        if pyramid is None:
            pyramid = build_pyramid(contour)
        Path(args.dump_pyramid).write_text(
            json.dumps(pyramid.to_polygon_list(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"pyramid dump written to {args.dump_pyramid}")
    return 0


def _cmd_detect(args) -> int:
    eps_sep, eps_contact = _eps_defaults()
    scene = harness.load_scene(args.scene)
    record = harness.run_experiment(
        scene, method=args.method, r=args.r, eps_sep=eps_sep, eps_contact=eps_contact
    )
    harness.write_records_csv([record], args.out)
    print(
        f"{scene.name}: {record.boxes_tested} boxes tested, "
        f"{record.contacts} contacts; results in {args.out}"
    )
    return 0


def _cmd_bench(args) -> int:
    eps_sep, eps_contact = _eps_defaults()
    scene = harness.load_scene(args.scene)
    records = []
    for method in FitMethod:
        record = harness.run_experiment(
            scene,
            method=method,
            r=args.r,
            repeats=args.repeat,
            eps_sep=eps_sep,
            eps_contact=eps_contact,
        )
        records.append(record)
        print(
            f"{method.value:>12}: boxes_total={record.boxes_total} "
            f"boxes_tested={record.boxes_tested} contacts={record.contacts} "
            f"min_time={record.wall_time_s:.6f}s"
        )
    if args.out:
        harness.write_records_csv(records, args.out)
        print(f"records written to {args.out}")
    return 0


def _cmd_oracle(args) -> int:
    eps_sep, eps_contact = _eps_defaults()
    scene = harness.load_scene(args.scene)
    result = harness.run_oracle_check(
        scene, method=args.method, r=args.r, eps_sep=eps_sep, eps_contact=eps_contact
    )
    total = sum(len(v) for v in result.oracle_contacts.values())
    if result.passed:
        print(f"oracle pass: all {total} contacts found by detection")
        return 0
    print(f"oracle MISMATCH: {len(result.missing)} contact(s) missed:")
    for (pair, segments) in result.missing:
        print(f"  objects {pair}: segments {segments}")
    return 1


def _cmd_animate(args) -> int:
    eps_sep, eps_contact = _eps_defaults()
    scene = harness.load_scene(args.scene)
    records = list(
        harness.animate(
            scene, method=args.method, r=args.r, eps_sep=eps_sep, eps_contact=eps_contact
        )
    )
    harness.write_records_csv(records, args.out)
    print(f"{len(records)} frame records written to {args.out}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "build": _cmd_build,
    "detect": _cmd_detect,
    "bench": _cmd_bench,
    "oracle": _cmd_oracle,
    "animate": _cmd_animate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
