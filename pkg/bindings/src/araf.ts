// Reader for the tool's binary tensor container:
//   magic "ARAF" | u32 version=1 | u32 ndim | ndim x u32 dims | float32 payload
// all little-endian, payload row-major.

const MAGIC = "ARAF";
const VERSION = 1;

export interface ArafTensor {
  dims: number[];
  /** Row-major payload; dims.reduce((a, b) => a * b) values. */
  values: Float32Array;
}

export function decodeAraf(bytes: Buffer): ArafTensor {
  if (bytes.length < 12 || bytes.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error("missing ARAF magic");
  }
  const version = bytes.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`unsupported ARAF version ${version}`);
  }
  const ndim = bytes.readUInt32LE(8);
  if (bytes.length < 12 + 4 * ndim) {
    throw new Error("truncated ARAF dimension list");
  }
  const dims: number[] = [];
  let count = 1;
  for (let i = 0; i < ndim; i++) {
    const d = bytes.readUInt32LE(12 + 4 * i);
    dims.push(d);
    count *= d;
  }
  const payload = bytes.subarray(12 + 4 * ndim);
  if (payload.length !== 4 * count) {
    throw new Error(`ARAF payload is ${payload.length} bytes, expected ${4 * count}`);
  }
  const values = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = payload.readFloatLE(i * 4);
  }
  return { dims, values };
}
