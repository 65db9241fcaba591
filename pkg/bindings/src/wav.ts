// RIFF/WAVE codec for the mono float32 wire format the batch tool speaks.
// The encoder mirrors the tool's own writer byte for byte (plain 44-byte
// header, fmt chunk 16, format tag 3); the decoder walks chunks word-aligned
// and accepts exactly that shape, so a mismatch fails loudly instead of
// producing subtly wrong samples.

const FMT_IEEE_FLOAT = 3;

/** Serialize samples as a mono little-endian IEEE float32 WAV. */
export function encodeWavFloat32(samples: Float32Array, sampleRate: number): Buffer {
  if (!Number.isInteger(sampleRate) || sampleRate < 1) {
    throw new RangeError(`sample rate must be a positive integer, got ${sampleRate}`);
  }
  const payload = Buffer.from(samples.buffer, samples.byteOffset, samples.byteLength);
  const header = Buffer.alloc(44);
  header.write("RIFF", 0, "ascii");
  header.writeUInt32LE(36 + payload.length, 4);
  header.write("WAVE", 8, "ascii");
  header.write("fmt ", 12, "ascii");
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(FMT_IEEE_FLOAT, 20);
  header.writeUInt16LE(1, 22); // channels
  header.writeUInt32LE(sampleRate, 24);
  header.writeUInt32LE(sampleRate * 4, 28); // byte rate
  header.writeUInt16LE(4, 32); // block align
  header.writeUInt16LE(32, 34); // bits per sample
  header.write("data", 36, "ascii");
  header.writeUInt32LE(payload.length, 40);
  return Buffer.concat([header, payload]);
}

export interface DecodedWav {
  samples: Float32Array;
  sampleRate: number;
}

/** Parse a mono float32 WAV produced by the tool. Throws on anything else. */
export function decodeWavFloat32(bytes: Buffer): DecodedWav {
  if (bytes.length < 12 || bytes.toString("ascii", 0, 4) !== "RIFF" || bytes.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }
  let fmt: { format: number; channels: number; sampleRate: number; bits: number } | null = null;
  let data: Buffer | null = null;
  let pos = 12;
  while (pos + 8 <= bytes.length) {
    const id = bytes.toString("ascii", pos, pos + 4);
    const size = bytes.readUInt32LE(pos + 4);
    const body = pos + 8;
    if (body + size > bytes.length) {
      throw new Error(`truncated ${id.trim() || "??"} chunk`);
    }
    if (id === "fmt ") {
      if (size < 16) throw new Error("fmt chunk too short");
      fmt = {
        format: bytes.readUInt16LE(body),
        channels: bytes.readUInt16LE(body + 2),
        sampleRate: bytes.readUInt32LE(body + 4),
        bits: bytes.readUInt16LE(body + 14),
      };
    } else if (id === "data") {
      data = bytes.subarray(body, body + size);
    }
    pos = body + size + (size % 2); // chunks are word-aligned
  }
  if (fmt === null || data === null) {
    throw new Error("missing fmt or data chunk");
  }
  if (fmt.format !== FMT_IEEE_FLOAT || fmt.channels !== 1 || fmt.bits !== 32) {
    throw new Error(
      `unsupported encoding (format ${fmt.format}, ${fmt.channels} ch, ${fmt.bits} bit); expected mono float32`,
    );
  }
  if (data.length % 4 !== 0) {
    throw new Error("data chunk is not a whole number of float32 samples");
  }
  // copy out so the result does not alias the input buffer
  const samples = new Float32Array(data.length / 4);
  for (let i = 0; i < samples.length; i++) {
    samples[i] = data.readFloatLE(i * 4);
  }
  return { samples, sampleRate: fmt.sampleRate };
}
