"""Command-line surface: extract, match, eval-synthetic, bench, selfcheck.

Exit codes: 0 ok, 2 input error, 3 format error, 4 numeric failure,
5 selfcheck failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as cfg
from .bench import DEFAULT_N_KEYPOINTS, run_bench, write_bench_csv
from .describe import DEFAULT_BLOCK, describe_fused, describe_naive, predict_offsets
from .detect import nms_topk
from .errors import (
    CldError,
    ConfigurationError,
    EstimationError,
    FormatError,
    InputError,
    NumericError,
    ShapeError,
)
from .featio import load_features, save_features, save_matches
from .images import procedural_image, read_image
from .losses import procrustes_solve
from .matching import MatchSet, dual_softmax_match, mutual_nn_match
from .pipeline import DEFAULT_BORDER, extract_features
from .synthetic import run_synthetic_eval, write_eval_csv
from .weights import WeightStore, init_weights, load_weights

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4
EXIT_SELFCHECK = 5


def _load_store(args) -> WeightStore:
    if args.weights:
        store = load_weights(args.weights)
        if args.config and store.config.name != args.config:
            raise ConfigurationError(
                f"weight file is {store.config.name}, --config says {args.config}"
            )
        return store
    if args.config is None:
        raise InputError("either --weights or --config with --random-seed is required")
    return init_weights(cfg.get_config(args.config), args.random_seed)


def cmd_extract(args) -> int:
    store = _load_store(args)
    image = read_image(args.image)
    feats = extract_features(
        image,
        store,
        top_k=args.top_k,
        nms_radius=args.nms_radius,
        path="naive" if args.naive else "fused",
        block=args.block,
        border=args.border,
    )
    save_features(feats, args.out)
    print(f"extracted {len(feats)} keypoints ({store.config.name}) -> {args.out}")
    return EXIT_OK


def cmd_match(args) -> int:
    fa = load_features(args.file_a)
    fb = load_features(args.file_b)
    if fa.descriptors.shape[1] != fb.descriptors.shape[1]:
        raise InputError(
            f"descriptor dims differ: {fa.descriptors.shape[1]} vs {fb.descriptors.shape[1]}"
        )
    if len(fa) == 0 or len(fb) == 0:
        matches = MatchSet(
            pairs=np.zeros((0, 2), dtype=np.int32),
            confidences=np.zeros(0, dtype=np.float32),
            method=args.method,
        )
    elif args.method == "dualsoftmax":
        matches = dual_softmax_match(fa.descriptors, fb.descriptors, threshold=args.threshold)
    else:
        matches = mutual_nn_match(fa.descriptors, fb.descriptors)
    save_matches(matches, args.out)
    print(f"{len(matches)} matches ({args.method}) -> {args.out}")
    return EXIT_OK


def cmd_eval_synthetic(args) -> int:
    store = _load_store(args)
    if args.procedural:
        images = [
            (f"procedural{i}", procedural_image(args.seed * 1000 + i))
            for i in range(args.procedural)
        ]
    elif args.images:
        import os

        names = sorted(
            n for n in os.listdir(args.images) if n.endswith((".ppm", ".pgm"))
        )
        if not names:
            raise InputError(f"no .ppm/.pgm images in {args.images}")
        images = [(n, read_image(os.path.join(args.images, n))) for n in names]
    else:
        raise InputError("provide --images DIR or --procedural N")
    rows, report = run_synthetic_eval(
        images,
        args.seed,
        store,
        workers=args.workers,
        top_k=args.top_k,
        nms_radius=args.nms_radius,
        max_jitter=args.jitter,
        ransac_iters=args.ransac_iters,
    )
    write_eval_csv(args.out, rows, report)
    print(
        f"{report.n_pairs} pairs ({report.n_failed} failed) "
        f"MHA@1={report.mha[1]:.2f}% @3={report.mha[3]:.2f}% @5={report.mha[5]:.2f}% "
        f"-> {args.out}"
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    records = run_bench(
        args.configs,
        n_keypoints=tuple(args.n_keypoints),
        paths=("naive", "fused") if args.paths == "both" else (args.paths,),
        blocks=tuple(args.block),
        repeats=args.repeats,
        seed=args.seed,
    )
    write_bench_csv(args.out, records)
    print(f"{len(records)} bench rows -> {args.out}")
    return EXIT_OK


def _check_param_table() -> tuple[bool, list[str]]:
    lines = []
    ok = True
    for name in cfg.PRESET_ORDER:
        config = cfg.get_config(name)
        counts = cfg.param_count(config)
        match = cfg.budgets_match(config)
        ok &= match
        lines.append(
            f"  {name:<5} backbone {counts.backbone:>8} detect {counts.detect:>6} "
            f"desc {counts.desc:>8} total {counts.total:>8} "
            f"{'ok' if match else 'MISMATCH'}"
        )
    a48 = cfg.param_count(cfg.get_config("A48"))
    lines.append(f"  A48 total {a48.total}")
    ok &= a48.total == 4252
    return ok, lines


def _check_fused_vs_naive() -> bool:
    from .backbone import backbone_forward

    config = cfg.get_config("A48")
    store = init_weights(config, 7)
    rng = np.random.default_rng(7)
    image = rng.random((96, 128, 3)).astype(np.float32)
    pyramid = backbone_forward(image, store, config)
    xy = np.stack(
        [rng.uniform(0, 127, size=256), rng.uniform(0, 95, size=256)], axis=1
    )
    offs = predict_offsets(pyramid, xy, store, config)
    naive = describe_naive(pyramid, xy, offs, store, config)
    fused = describe_fused(pyramid, xy, store, config, block=31)
    return bool(np.abs(naive - fused).max() <= 1e-4)


def _check_nms_oracle() -> bool:
    rng = np.random.default_rng(11)
    for radius in (0, 1, 2, 3):
        hm = rng.random((48, 48, 1)).astype(np.float32)
        got = nms_topk(hm, radius=radius, k=10_000)
        expect = set()
        v = hm[:, :, 0]
        for y in range(48):
            for x in range(48):
                neighborhood = v[
                    max(0, y - radius):y + radius + 1, max(0, x - radius):x + radius + 1
                ]
                if (v[y, x] > neighborhood).sum() == neighborhood.size - 1:
                    expect.add((x, y))
        if expect != {tuple(p) for p in got.xy.tolist()}:
            return False
    return True


def _check_procrustes() -> bool:
    rng = np.random.default_rng(13)
    for _ in range(10):
        d_a = rng.standard_normal((24, 4))
        d_l = rng.standard_normal((24, 4))
        omega = procrustes_solve(d_a, d_l)
        best = np.trace(d_a.T @ d_l @ omega)
        for _ in range(200):
            q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
            if np.trace(d_a.T @ d_l @ q) > best + 1e-9:
                return False
    return True


def cmd_selfcheck(_args) -> int:
    checks = []
    table_ok, table_lines = _check_param_table()
    checks.append(("parameter table", table_ok, table_lines))
    checks.append(("fused vs naive descriptors", _check_fused_vs_naive(), []))
    checks.append(("suppression oracle", _check_nms_oracle(), []))
    checks.append(("procrustes optimality", _check_procrustes(), []))
    all_ok = True
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
        for line in detail:
            print(line)
        all_ok &= ok
    return EXIT_OK if all_ok else EXIT_SELFCHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cldfeat", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_model_args(sp):
        sp.add_argument("--config", choices=cfg.PRESET_ORDER, default=None)
        sp.add_argument("--weights", default=None, help="CLDW weight file")
        sp.add_argument("--random-seed", type=int, default=0,
                        help="seeded random init when no weight file is given")

    pe = sub.add_parser("extract", help="extract keypoints and descriptors")
    pe.add_argument("image", help="P6 PPM or P5 PGM, 8-bit")
    pe.add_argument("out", help="output CLDF feature file")
    add_model_args(pe)
    pe.add_argument("--top-k", type=int, default=4096)
    pe.add_argument("--nms-radius", type=int, default=2)
    group = pe.add_mutually_exclusive_group()
    group.add_argument("--fused", action="store_true", default=True)
    group.add_argument("--naive", action="store_true")
    pe.add_argument("--block", type=int, default=DEFAULT_BLOCK)
    pe.add_argument("--border", type=int, default=DEFAULT_BORDER,
                    help="discard detections within this many pixels of the edge")
    pe.set_defaults(fn=cmd_extract)

    pm = sub.add_parser("match", help="match two feature files")
    pm.add_argument("file_a")
    pm.add_argument("file_b")
    pm.add_argument("out")
    pm.add_argument("--method", choices=("dualsoftmax", "mnn"), default="dualsoftmax")
    pm.add_argument("--threshold", type=float, default=0.01)
    pm.set_defaults(fn=cmd_match)

    pv = sub.add_parser("eval-synthetic", help="synthetic homography benchmark")
    pv.add_argument("out", help="output CSV")
    add_model_args(pv)
    pv.add_argument("--images", default=None, help="directory of .ppm/.pgm images")
    pv.add_argument("--procedural", type=int, default=0,
                    help="generate N procedural 480x640 images instead")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--top-k", type=int, default=4096)
    pv.add_argument("--nms-radius", type=int, default=2)
    pv.add_argument("--jitter", type=float, default=0.15)
    pv.add_argument("--ransac-iters", type=int, default=1000)
    pv.add_argument("--workers", type=int, default=1)
    pv.set_defaults(fn=cmd_eval_synthetic)

    pb = sub.add_parser("bench", help="description-stage throughput benchmark")
    pb.add_argument("out", help="output CSV")
    pb.add_argument("--configs", nargs="+", default=["A48"], choices=cfg.PRESET_ORDER)
    pb.add_argument("--n-keypoints", nargs="+", type=int, default=list(DEFAULT_N_KEYPOINTS))
    pb.add_argument("--paths", choices=("naive", "fused", "both"), default="both")
    pb.add_argument("--block", nargs="+", type=int, default=[DEFAULT_BLOCK])
    pb.add_argument("--repeats", type=int, default=5)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--workers", type=int, default=1,
                    help="accepted for interface parity; timing runs sequentially")
    pb.set_defaults(fn=cmd_bench)

    ps = sub.add_parser("selfcheck", help="run the built-in consistency checks")
    ps.set_defaults(fn=cmd_selfcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FormatError, ShapeError, ConfigurationError) as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (NumericError, EstimationError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
