import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { NamedTensor, readCldw } from "../src/cldw.js";
import { Mapping, convertCheckpoint, transpose } from "../src/convert.js";
import { writeSafetensors } from "./helpers.js";

const FIXTURE = join(__dirname, "..", "fixtures", "a48-seed0.cldw");

/** Source-ecosystem style name for an engine tensor. */
function sourceName(engineName: string): string {
  return "model." + engineName.replace(/\.(weight|bias)$/, ".$1").replace("backbone.", "trunk.");
}

interface MockArchive {
  dir: string;
  sourcePath: string;
  mappingPath: string;
  mapping: Mapping;
}

function buildMockArchive(mutate?: (tensors: NamedTensor[], mapping: Mapping) => void): MockArchive {
  const file = readCldw(FIXTURE);
  const dir = mkdtempSync(join(tmpdir(), "cldfeat-convert-"));
  const mapping: Mapping = { config: "A48", rules: [] };
  const sourceTensors: NamedTensor[] = [];
  for (const t of file.tensors) {
    const srcName = sourceName(t.name);
    if (t.shape.length === 4) {
      // store conv weights in a flipped axis order to exercise directives
      const flipped = transpose({ ...t, name: srcName }, [2, 3, 1, 0]);
      sourceTensors.push(flipped);
      mapping.rules.push({ source: srcName, target: t.name, transpose: [3, 2, 0, 1] });
    } else {
      sourceTensors.push({ ...t, name: srcName });
      mapping.rules.push({ source: srcName, target: t.name });
    }
  }
  mutate?.(sourceTensors, mapping);
  const sourcePath = join(dir, "checkpoint.safetensors");
  writeSafetensors(sourcePath, sourceTensors);
  const mappingPath = join(dir, "mapping.json");
  writeFileSync(mappingPath, JSON.stringify(mapping, null, 2));
  return { dir, sourcePath, mappingPath, mapping };
}

describe("convertCheckpoint", () => {
  let archive: MockArchive;

  beforeAll(() => {
    archive = buildMockArchive();
  });

  it("round-trips to a byte-identical CLDW", () => {
    const out = join(archive.dir, "out.cldw");
    const report = convertCheckpoint(archive.sourcePath, "A48", archive.mappingPath, out);
    expect(report.scalarCount).toBe(4252);
    expect(report.tensorCount).toBe(readCldw(FIXTURE).tensors.length);
    expect(readFileSync(out).equals(readFileSync(FIXTURE))).toBe(true);
  });

  it("names the missing source tensor", () => {
    const broken = buildMockArchive((tensors) => {
      const idx = tensors.findIndex((t) => t.name === sourceName("detect.logits.bias"));
      tensors.splice(idx, 1);
    });
    expect(() =>
      convertCheckpoint(broken.sourcePath, "A48", broken.mappingPath, join(broken.dir, "x.cldw"))
    ).toThrow(/missing tensor 'model\.detect\.logits\.bias'/);
  });

  it("names the tensor whose shape mismatches after directives", () => {
    const broken = buildMockArchive((_tensors, mapping) => {
      const rule = mapping.rules.find((r) => r.target === "backbone.stem0.weight")!;
      rule.transpose = [0, 1, 2, 3]; // leaves the flipped source layout in place
    });
    expect(() =>
      convertCheckpoint(broken.sourcePath, "A48", broken.mappingPath, join(broken.dir, "x.cldw"))
    ).toThrow(/backbone\.stem0\.weight.*expected/);
  });

  it("names an uncovered engine tensor", () => {
    const broken = buildMockArchive((_tensors, mapping) => {
      mapping.rules = mapping.rules.filter((r) => r.target !== "desc.offsets.bias");
    });
    expect(() =>
      convertCheckpoint(broken.sourcePath, "A48", broken.mappingPath, join(broken.dir, "x.cldw"))
    ).toThrow(/does not cover engine tensor 'desc\.offsets\.bias'/);
  });

  it("rejects duplicate coverage", () => {
    const broken = buildMockArchive((_tensors, mapping) => {
      mapping.rules.push({ ...mapping.rules[0] });
    });
    expect(() =>
      convertCheckpoint(broken.sourcePath, "A48", broken.mappingPath, join(broken.dir, "x.cldw"))
    ).toThrow(/more than one rule/);
  });

  it("rejects an unknown config", () => {
    expect(() =>
      convertCheckpoint(archive.sourcePath, "Q7", archive.mappingPath, join(archive.dir, "x.cldw"))
    ).toThrow(/unknown config/);
  });

  it("rejects a mapping for a different config", () => {
    expect(() =>
      convertCheckpoint(archive.sourcePath, "N64", archive.mappingPath, join(archive.dir, "x.cldw"))
    ).toThrow(/mapping is for config 'A48'/);
  });
});

describe("transpose directive", () => {
  it("is an exact inverse of itself for matching permutations", () => {
    const rng = () => Math.random() * 2 - 1;
    const data = Float32Array.from({ length: 2 * 3 * 4 * 5 }, rng);
    const t: NamedTensor = { name: "t", shape: [2, 3, 4, 5], data };
    const back = transpose(transpose(t, [2, 3, 1, 0]), [3, 2, 0, 1]);
    expect(back.shape).toEqual([2, 3, 4, 5]);
    expect(Buffer.from(back.data.buffer).equals(Buffer.from(data.buffer))).toBe(true);
  });

  it("rejects malformed axis lists", () => {
    const t: NamedTensor = { name: "t", shape: [2, 2], data: new Float32Array(4) };
    expect(() => transpose(t, [0, 0])).toThrow(/invalid transpose/);
  });
});
