"""Description-stage throughput benchmark across configs, paths and keypoint
counts, with auxiliary-memory accounting."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .backbone import backbone_forward, pad_to_multiple
from .config import get_config
from .describe import DEFAULT_BLOCK, ScratchTracker, describe_fused, describe_naive, predict_offsets
from .detect import detect_forward, nms_topk
from .images import procedural_image
from .weights import init_weights

CSV_HEADER = "# cldfeat-bench-csv v1"
DEFAULT_N_KEYPOINTS = (1024, 2048, 4096, 8192, 16384)


@dataclass(frozen=True)
class BenchRecord:
    config: str
    path: str           # "naive" | "fused"
    n_keypoints: int
    block: int          # 0 for the naive path
    wall_ms: float      # median over repeats
    images_per_s: float
    peak_aux_scalars: int
    repeats: int


def _timed(fn, repeats: int) -> tuple[float, int]:
    """Median wall time in ms and the peak scratch count of one run."""
    times = []
    peak = 0
    for _ in range(repeats):
        tracker = ScratchTracker()
        t0 = time.perf_counter()
        fn(tracker)
        times.append((time.perf_counter() - t0) * 1000.0)
        peak = tracker.peak
    return float(np.median(times)), peak


def run_bench(
    config_names: list[str],
    n_keypoints: tuple[int, ...] = DEFAULT_N_KEYPOINTS,
    paths: tuple[str, ...] = ("naive", "fused"),
    blocks: tuple[int, ...] = (DEFAULT_BLOCK,),
    repeats: int = 5,
    seed: int = 0,
    height: int = 480,
    width: int = 640,
) -> list[BenchRecord]:
    """Benchmark only the description stage; detection runs once per config.

    Keypoints are the top-N heatmap responses without suppression so every
    requested count is reachable.
    """
    records: list[BenchRecord] = []
    image = procedural_image(seed, height, width)
    for name in config_names:
        config = get_config(name)
        store = init_weights(config, seed)
        padded, (oh, ow) = pad_to_multiple(image, 32)
        pyramid = backbone_forward(padded, store, config)
        heatmap = detect_forward(pyramid, store, config)
        for n in n_keypoints:
            keypoints = nms_topk(heatmap, radius=0, k=n, valid_w=ow, valid_h=oh)
            for path in paths:
                if path == "naive":
                    def stage(tracker):
                        offs = predict_offsets(pyramid, keypoints, store, config, tracker=tracker)
                        return describe_naive(pyramid, keypoints, offs, store, config, tracker=tracker)

                    ms, peak = _timed(stage, repeats)
                    records.append(BenchRecord(
                        name, "naive", len(keypoints), 0, ms, 1000.0 / ms if ms > 0 else 0.0,
                        peak, repeats,
                    ))
                elif path == "fused":
                    for block in blocks:
                        def stage(tracker, _b=block):
                            return describe_fused(pyramid, keypoints, store, config, block=_b, tracker=tracker)

                        ms, peak = _timed(stage, repeats)
                        records.append(BenchRecord(
                            name, "fused", len(keypoints), block, ms,
                            1000.0 / ms if ms > 0 else 0.0, peak, repeats,
                        ))
                else:
                    raise ValueError(f"unknown path {path!r}")
    return records


def write_bench_csv(path: str, records: list[BenchRecord]) -> None:
    lines = [CSV_HEADER]
    lines.append("config,path,n_keypoints,block,wall_ms,images_per_s,peak_aux_scalars,repeats")
    for r in records:
        lines.append(
            f"{r.config},{r.path},{r.n_keypoints},{r.block},{r.wall_ms:.3f},"
            f"{r.images_per_s:.3f},{r.peak_aux_scalars},{r.repeats}"
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
