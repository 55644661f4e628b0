/** Test-only helpers: build mock source archives in safetensors layout. */
import { writeFileSync } from "node:fs";

import { NamedTensor } from "../src/cldw.js";

/** Serialize tensors as a safetensors file (F32 only). */
export function writeSafetensors(path: string, tensors: NamedTensor[]): void {
  const header: Record<string, unknown> = {};
  let offset = 0;
  const payloads: Buffer[] = [];
  for (const t of tensors) {
    const bytes = Buffer.from(t.data.buffer, t.data.byteOffset, t.data.byteLength);
    header[t.name] = {
      dtype: "F32",
      shape: t.shape,
      data_offsets: [offset, offset + bytes.length],
    };
    offset += bytes.length;
    payloads.push(bytes);
  }
  const headerJson = Buffer.from(JSON.stringify(header), "utf-8");
  const sizeField = Buffer.alloc(8);
  sizeField.writeBigUInt64LE(BigInt(headerJson.length));
  writeFileSync(path, Buffer.concat([sizeField, headerJson, ...payloads]));
}
