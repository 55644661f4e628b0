/**
 * Checkpoint conversion: source archive -> engine CLDW, driven by a
 * declarative mapping file.
 *
 * Mapping schema (JSON):
 *   {
 *     "config": "A48",
 *     "rules": [
 *       { "source": "net.stem.weight", "target": "backbone.stem0.weight",
 *         "transpose": [0, 1, 2, 3], "reshape": [4, 3, 4, 4] },
 *       ...
 *     ]
 *   }
 * `transpose` and `reshape` are optional and applied in that order; they
 * exist because the source ecosystem's axis conventions are only known once
 * a concrete release is inspected.  Every engine tensor must be covered by
 * exactly one rule.
 */
import { readFileSync } from "node:fs";

import { NamedTensor, writeCldw } from "./cldw.js";
import { ModelConfig, getConfig, paramCount, shapeSize, tensorLayout } from "./layout.js";
import { readSafetensors } from "./safetensors.js";

export interface MappingRule {
  source: string;
  target: string;
  transpose?: number[];
  reshape?: number[];
}

export interface Mapping {
  config: string;
  rules: MappingRule[];
}

export function loadMapping(path: string): Mapping {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot parse mapping file ${path}: ${err}`);
  }
  const mapping = parsed as Mapping;
  if (typeof mapping.config !== "string" || !Array.isArray(mapping.rules)) {
    throw new Error(`${path}: mapping needs a 'config' string and a 'rules' array`);
  }
  for (const rule of mapping.rules) {
    if (typeof rule.source !== "string" || typeof rule.target !== "string") {
      throw new Error(`${path}: every rule needs 'source' and 'target' names`);
    }
  }
  return mapping;
}

/** Strided permutation of a dense tensor; bytes move, values are untouched. */
export function transpose(tensor: NamedTensor, axes: number[]): NamedTensor {
  const rank = tensor.shape.length;
  if (axes.length !== rank || [...axes].sort().some((a, i) => a !== i)) {
    throw new Error(`invalid transpose [${axes}] for rank-${rank} tensor '${tensor.name}'`);
  }
  const outShape = axes.map((a) => tensor.shape[a]);
  const inStrides = new Array<number>(rank).fill(1);
  for (let i = rank - 2; i >= 0; i--) inStrides[i] = inStrides[i + 1] * tensor.shape[i + 1];
  const outStrides = new Array<number>(rank).fill(1);
  for (let i = rank - 2; i >= 0; i--) outStrides[i] = outStrides[i + 1] * outShape[i + 1];

  const out = new Float32Array(tensor.data.length);
  const index = new Array<number>(rank).fill(0);
  for (let flat = 0; flat < out.length; flat++) {
    let rem = flat;
    let src = 0;
    for (let i = 0; i < rank; i++) {
      index[i] = Math.floor(rem / outStrides[i]);
      rem -= index[i] * outStrides[i];
      src += index[i] * inStrides[axes[i]];
    }
    out[flat] = tensor.data[src];
  }
  return { name: tensor.name, shape: outShape, data: out };
}

export interface ConvertReport {
  config: string;
  tensorCount: number;
  scalarCount: number;
}

export function convertCheckpoint(
  sourcePath: string,
  configName: string,
  mappingPath: string,
  outPath: string
): ConvertReport {
  const config: ModelConfig = getConfig(configName);
  const mapping = loadMapping(mappingPath);
  if (mapping.config !== config.name) {
    throw new Error(
      `mapping is for config '${mapping.config}' but '${config.name}' was requested`
    );
  }
  const source = readSafetensors(sourcePath);
  const layout = tensorLayout(config);
  const expected = new Map(layout.map((t) => [t.name, t.shape]));

  const seen = new Set<string>();
  const produced = new Map<string, NamedTensor>();
  for (const rule of mapping.rules) {
    if (!expected.has(rule.target)) {
      throw new Error(`mapping rule targets unknown engine tensor '${rule.target}'`);
    }
    if (seen.has(rule.target)) {
      throw new Error(`engine tensor '${rule.target}' is covered by more than one rule`);
    }
    seen.add(rule.target);
    const src = source.get(rule.source);
    if (!src) {
      throw new Error(`source checkpoint is missing tensor '${rule.source}'`);
    }
    let tensor: NamedTensor = { name: rule.target, shape: src.shape.slice(), data: src.data };
    if (rule.transpose) tensor = transpose(tensor, rule.transpose);
    if (rule.reshape) {
      if (shapeSize(rule.reshape) !== tensor.data.length) {
        throw new Error(
          `reshape [${rule.reshape}] for '${rule.target}' does not preserve element count`
        );
      }
      tensor = { ...tensor, shape: rule.reshape.slice() };
    }
    const want = expected.get(rule.target)!;
    if (tensor.shape.length !== want.length || tensor.shape.some((d, i) => d !== want[i])) {
      throw new Error(
        `tensor '${rule.target}' has shape [${tensor.shape}] after directives, expected [${want}]`
      );
    }
    produced.set(rule.target, tensor);
  }
  const uncovered = layout.filter((t) => !produced.has(t.name));
  if (uncovered.length > 0) {
    throw new Error(`mapping does not cover engine tensor '${uncovered[0].name}'`);
  }

  const scalarCount = layout.reduce((acc, t) => acc + shapeSize(t.shape), 0);
  const wantScalars = paramCount(config);
  if (scalarCount !== wantScalars) {
    throw new Error(`scalar count ${scalarCount} does not match config total ${wantScalars}`);
  }
  writeCldw(outPath, config, produced);
  return { config: config.name, tensorCount: layout.length, scalarCount };
}
