/**
 * Reader/writer for the engine's CLDW weight container.
 *
 * Layout (little-endian, no padding):
 *   magic "CLDW", u32 version = 1, u8 config id, u32 tensor count, then per
 *   tensor: u16 name length, UTF-8 name, u8 rank, u32 dims, f32 data.
 * Tensors appear in the engine's tensor-layout order.
 */
import { readFileSync, writeFileSync } from "node:fs";

import {
  ModelConfig,
  TensorSpec,
  configFromId,
  configId,
  shapeSize,
  tensorLayout,
} from "./layout.js";

export const CLDW_MAGIC = "CLDW";
export const CLDW_VERSION = 1;

export interface NamedTensor {
  name: string;
  shape: number[];
  /** Raw little-endian float32 payload. */
  data: Float32Array;
}

export interface WeightFile {
  config: ModelConfig;
  tensors: NamedTensor[];
}

export function readCldw(path: string): WeightFile {
  const buf = readFileSync(path);
  let off = 0;
  const need = (n: number, what: string) => {
    if (off + n > buf.length) throw new Error(`truncated CLDW file while reading ${what}`);
  };
  need(4, "magic");
  if (buf.toString("latin1", 0, 4) !== CLDW_MAGIC) {
    throw new Error(`bad magic in ${path}: expected ${CLDW_MAGIC}`);
  }
  off = 4;
  need(4, "version");
  const version = buf.readUInt32LE(off);
  off += 4;
  if (version !== CLDW_VERSION) throw new Error(`unsupported CLDW version ${version}`);
  need(1, "config id");
  const config = configFromId(buf.readUInt8(off));
  off += 1;
  need(4, "tensor count");
  const count = buf.readUInt32LE(off);
  off += 4;

  const tensors: NamedTensor[] = [];
  for (let i = 0; i < count; i++) {
    need(2, "name length");
    const nameLen = buf.readUInt16LE(off);
    off += 2;
    need(nameLen, "tensor name");
    const name = buf.toString("utf-8", off, off + nameLen);
    off += nameLen;
    need(1, "rank");
    const rank = buf.readUInt8(off);
    off += 1;
    const shape: number[] = [];
    for (let d = 0; d < rank; d++) {
      need(4, "dims");
      shape.push(buf.readUInt32LE(off));
      off += 4;
    }
    const n = shapeSize(shape);
    need(4 * n, `data of ${name}`);
    // copy so the view is aligned and independent of the file buffer
    const bytes = buf.subarray(off, off + 4 * n);
    const data = new Float32Array(n);
    new Uint8Array(data.buffer).set(bytes);
    off += 4 * n;
    tensors.push({ name, shape, data });
  }
  if (off !== buf.length) throw new Error("trailing bytes after declared tensors");
  return { config, tensors };
}

/** Serialize tensors in layout order; validates names and shapes first. */
export function writeCldw(path: string, config: ModelConfig, tensors: Map<string, NamedTensor>): void {
  const layout = tensorLayout(config);
  const chunks: Buffer[] = [];
  const head = Buffer.alloc(13);
  head.write(CLDW_MAGIC, 0, "latin1");
  head.writeUInt32LE(CLDW_VERSION, 4);
  head.writeUInt8(configId(config.name), 8);
  head.writeUInt32LE(layout.length, 9);
  chunks.push(head);

  for (const spec of layout) {
    const tensor = tensors.get(spec.name);
    if (!tensor) throw new Error(`missing tensor '${spec.name}'`);
    assertShape(tensor, spec);
    const nameBytes = Buffer.from(spec.name, "utf-8");
    const meta = Buffer.alloc(2 + nameBytes.length + 1 + 4 * tensor.shape.length);
    let off = 0;
    meta.writeUInt16LE(nameBytes.length, off);
    off += 2;
    nameBytes.copy(meta, off);
    off += nameBytes.length;
    meta.writeUInt8(tensor.shape.length, off);
    off += 1;
    for (const dim of tensor.shape) {
      meta.writeUInt32LE(dim, off);
      off += 4;
    }
    chunks.push(meta);
    chunks.push(Buffer.from(tensor.data.buffer, tensor.data.byteOffset, tensor.data.byteLength));
  }
  writeFileSync(path, Buffer.concat(chunks));
}

function assertShape(tensor: NamedTensor, spec: TensorSpec): void {
  const same =
    tensor.shape.length === spec.shape.length &&
    tensor.shape.every((d, i) => d === spec.shape[i]);
  if (!same) {
    throw new Error(
      `tensor '${spec.name}' has shape [${tensor.shape}], expected [${spec.shape}]`
    );
  }
  if (tensor.data.length !== shapeSize(spec.shape)) {
    throw new Error(`tensor '${spec.name}' data length does not match its shape`);
  }
}
