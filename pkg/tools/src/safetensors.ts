/**
 * Minimal safetensors reader: 8-byte little-endian header size, JSON header
 * mapping tensor names to {dtype, shape, data_offsets}, then raw data.
 * Only F32 tensors are accepted — the engine stores float32 exclusively.
 */
import { readFileSync } from "node:fs";

import { NamedTensor } from "./cldw.js";
import { shapeSize } from "./layout.js";

interface HeaderEntry {
  dtype: string;
  shape: number[];
  data_offsets: [number, number];
}

export function readSafetensors(path: string): Map<string, NamedTensor> {
  const buf = readFileSync(path);
  if (buf.length < 8) throw new Error(`${path}: not a safetensors file`);
  const headerLen = Number(buf.readBigUInt64LE(0));
  if (8 + headerLen > buf.length) throw new Error(`${path}: truncated header`);
  const header = JSON.parse(buf.toString("utf-8", 8, 8 + headerLen)) as Record<
    string,
    HeaderEntry
  >;
  const dataStart = 8 + headerLen;
  const tensors = new Map<string, NamedTensor>();
  for (const [name, entry] of Object.entries(header)) {
    if (name === "__metadata__") continue;
    if (entry.dtype !== "F32") {
      throw new Error(`tensor '${name}' has dtype ${entry.dtype}; only F32 is supported`);
    }
    const [begin, end] = entry.data_offsets;
    const n = shapeSize(entry.shape);
    if (end - begin !== 4 * n) {
      throw new Error(`tensor '${name}' payload does not match its shape`);
    }
    if (dataStart + end > buf.length) throw new Error(`${path}: truncated data for '${name}'`);
    const bytes = buf.subarray(dataStart + begin, dataStart + end);
    const data = new Float32Array(n);
    new Uint8Array(data.buffer).set(bytes);
    tensors.set(name, { name, shape: entry.shape.slice(), data });
  }
  return tensors;
}
