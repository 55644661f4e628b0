import { existsSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { buildSeries, parseBenchCsv, plotBench, renderSvg } from "../src/plot.js";

const FIXTURE = join(__dirname, "..", "fixtures", "bench-small.csv");

describe("parseBenchCsv", () => {
  it("reads the fixture", () => {
    const rows = parseBenchCsv(readFileSync(FIXTURE, "utf-8"));
    expect(rows.length).toBe(12); // 2 configs x 2 paths x 3 keypoint counts
    expect(new Set(rows.map((r) => r.config))).toEqual(new Set(["A48", "N64"]));
  });

  it("rejects an empty body", () => {
    const text = "# cldfeat-bench-csv v1\nconfig,path,n_keypoints,block,wall_ms,images_per_s,peak_aux_scalars,repeats\n";
    expect(() => parseBenchCsv(text)).toThrow(/no data rows/);
  });

  it("rejects a foreign csv", () => {
    expect(() => parseBenchCsv("a,b,c\n1,2,3\n")).toThrow(/missing schema comment/);
  });

  it("rejects malformed rows", () => {
    const text =
      "# cldfeat-bench-csv v1\nconfig,path,n_keypoints,block,wall_ms,images_per_s,peak_aux_scalars,repeats\nA48,naive,oops\n";
    expect(() => parseBenchCsv(text)).toThrow(/malformed/);
  });
});

describe("renderSvg", () => {
  it("draws one series per config/path with log2 ticks", () => {
    const rows = parseBenchCsv(readFileSync(FIXTURE, "utf-8"));
    expect(buildSeries(rows).length).toBe(4); // two configs -> 4 series
    const svg = renderSvg(rows);
    expect(svg).toContain("<svg");
    expect((svg.match(/<polyline/g) ?? []).length).toBe(4);
    expect(svg).toContain("2^10"); // 1024-keypoint tick on the log2 axis
    expect(svg).toContain("2^12"); // 4096-keypoint tick
    expect(svg).toContain("log2 scale");
    // naive series dashed, fused solid
    expect((svg.match(/stroke-dasharray/g) ?? []).length).toBeGreaterThanOrEqual(2);
  });

  it("plotBench writes the file without error", () => {
    const out = join(tmpdir(), `bench-${Date.now()}.svg`);
    const seriesCount = plotBench(FIXTURE, out);
    expect(seriesCount).toBe(4);
    expect(existsSync(out)).toBe(true);
    expect(readFileSync(out, "utf-8")).toContain("</svg>");
  });
});
