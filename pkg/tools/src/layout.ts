/**
 * Engine model presets and the frozen tensor layout.
 *
 * This mirrors the engine's architecture definition so the converter can
 * validate name coverage, shapes, and total scalar counts without importing
 * the engine itself.  Names follow `stage.block.layer.{weight|bias}`;
 * convolution weights are (out, in, kh, kw), affine weights (out, in).
 */

export interface ModelConfig {
  name: string;
  c1: number;
  c2: number;
  c3: number;
  r2: number;
  r3: number;
  cDet: number;
  m: number;
  cDesc: number;
}

export const PRESET_ORDER = [
  "A48", "N64", "T64", "S64", "M64", "L64", "G128", "E128", "U128",
] as const;

export const PRESETS: Record<string, ModelConfig> = {
  A48: { name: "A48", c1: 4, c2: 4, c3: 4, r2: 1, r3: 1, cDet: 4, m: 4, cDesc: 48 },
  N64: { name: "N64", c1: 8, c2: 8, c3: 8, r2: 1, r3: 1, cDet: 8, m: 8, cDesc: 64 },
  T64: { name: "T64", c1: 8, c2: 16, c3: 24, r2: 1, r3: 1, cDet: 8, m: 8, cDesc: 64 },
  S64: { name: "S64", c1: 8, c2: 24, c3: 32, r2: 1, r3: 1, cDet: 8, m: 16, cDesc: 64 },
  M64: { name: "M64", c1: 16, c2: 32, c3: 48, r2: 1, r3: 1, cDet: 8, m: 16, cDesc: 64 },
  L64: { name: "L64", c1: 16, c2: 48, c3: 96, r2: 1, r3: 1, cDet: 8, m: 16, cDesc: 64 },
  G128: { name: "G128", c1: 16, c2: 64, c3: 256, r2: 1, r3: 1, cDet: 8, m: 32, cDesc: 128 },
  E128: { name: "E128", c1: 16, c2: 64, c3: 256, r2: 2, r3: 2, cDet: 8, m: 32, cDesc: 128 },
  U128: { name: "U128", c1: 32, c2: 128, c3: 256, r2: 2, r3: 2, cDet: 8, m: 32, cDesc: 128 },
};

export function getConfig(name: string): ModelConfig {
  const config = PRESETS[name];
  if (!config) {
    throw new Error(`unknown config '${name}'; valid: ${PRESET_ORDER.join(", ")}`);
  }
  return config;
}

export function configId(name: string): number {
  const id = PRESET_ORDER.indexOf(name as (typeof PRESET_ORDER)[number]);
  if (id < 0) throw new Error(`unknown config '${name}'`);
  return id;
}

export function configFromId(id: number): ModelConfig {
  if (id < 0 || id >= PRESET_ORDER.length) {
    throw new Error(`unknown config id ${id}`);
  }
  return PRESETS[PRESET_ORDER[id]];
}

export interface TensorSpec {
  name: string;
  shape: number[];
}

/** Ordered (name, shape) pairs of every tensor a model owns. */
export function tensorLayout(config: ModelConfig): TensorSpec[] {
  const layout: TensorSpec[] = [];
  const conv = (name: string, cout: number, cin: number, k: number) => {
    layout.push({ name: `${name}.weight`, shape: [cout, cin, k, k] });
    layout.push({ name: `${name}.bias`, shape: [cout] });
  };
  const affine = (name: string, outDim: number, inDim: number) => {
    layout.push({ name: `${name}.weight`, shape: [outDim, inDim] });
    layout.push({ name: `${name}.bias`, shape: [outDim] });
  };
  const block = (prefix: string, cin: number, cout: number) => {
    conv(`${prefix}.conv1`, cout, cin, 3);
    conv(`${prefix}.conv2`, cout, cout, 3);
    if (cin !== cout) conv(`${prefix}.proj`, cout, cin, 1);
  };

  conv("backbone.stem0", config.c1, 3, 4);
  conv("backbone.stem1", config.c1, config.c1, 3);
  block("backbone.stage1.block0", config.c1, config.c1);
  const stages: Array<[number, number, number, number]> = [
    [2, config.c1, config.c2, config.r2],
    [3, config.c2, config.c3, config.r3],
  ];
  for (const [stage, cin, cout, reps] of stages) {
    for (let b = 0; b < reps; b++) {
      block(`backbone.stage${stage}.block${b}`, b === 0 ? cin : cout, cout);
    }
  }

  conv("detect.compress1", config.cDet, config.c1, 1);
  conv("detect.compress2", config.cDet, config.c2, 1);
  conv("detect.compress3", config.cDet, config.c3, 1);
  conv("detect.refine", config.cDet, config.cDet, 3);
  conv("detect.logits", 4, config.cDet, 3);

  const cSum = config.c1 + config.c2 + config.c3;
  affine("desc.offsets", 6 * config.m, cSum);
  affine("desc.aggregate", config.cDesc, config.m * cSum);
  return layout;
}

export function shapeSize(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** Total scalar count of a config; A48 is exactly 4252. */
export function paramCount(config: ModelConfig): number {
  return tensorLayout(config).reduce((acc, t) => acc + shapeSize(t.shape), 0);
}
