// In-process surface for data loaders: apply a sampled augmentation policy
// to a buffer, or extract mel features, with bit-identical numerics to the
// batch tool. Both calls round-trip through the installed `waveaug` binary
// over its documented wire formats (float32 WAV in and out, ARAF tensors),
// so there is exactly one implementation of the math.
//
// Seed discipline matches the batch path: for a work seed S the policy is
// sampled from the stream seeded at S and applied on the stream seeded at
// splitmix64(S); `sample --seed` and `preview --seed` take the same S, which
// is why a manifest line's (steps, seed) pair replays here bit-exactly.

import { mkdtempSync, mkdirSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { decodeAraf } from "./araf.js";
import { errorFromResult, runExpectingSuccess, runWaveaug, splitErrorName, WaveaugProcessError } from "./process.js";
import { decodeWavFloat32, encodeWavFloat32 } from "./wav.js";

export { decodeAraf, type ArafTensor } from "./araf.js";
export { WaveaugProcessError } from "./process.js";
export { decodeWavFloat32, encodeWavFloat32, type DecodedWav } from "./wav.js";

/** Caller-owned audio; read-only to this library, never retained. */
export interface BufferView {
  samples: Float32Array;
  sampleRate: number;
}

export interface MelImage {
  rows: number;
  cols: number;
  /** Row-major float32 values, rows * cols of them. */
  values: Float32Array;
}

/** Mel extraction settings; all optional, defaults match the batch tool. */
export interface MelConfig {
  n_fft?: number;
  hop?: number;
  n_mels?: number;
  /** [rows, cols], or null for the native spectrogram shape. */
  resize?: [number, number] | null;
}

const U64_MASK = (1n << 64n) - 1n;

function checkBuffer(buffer: BufferView): void {
  if (!(buffer.samples instanceof Float32Array) || buffer.samples.length < 1) {
    throw new RangeError("buffer must hold at least one float32 sample");
  }
  for (let i = 0; i < buffer.samples.length; i++) {
    const v = buffer.samples[i]!;
    if (!Number.isFinite(v)) {
      throw new RangeError(`buffer sample ${i} is not finite`);
    }
  }
  if (!Number.isInteger(buffer.sampleRate) || buffer.sampleRate < 1) {
    throw new RangeError(`sample rate must be a positive integer, got ${buffer.sampleRate}`);
  }
}

function toSeedString(seed: bigint | number): string {
  if (typeof seed === "number") {
    if (!Number.isInteger(seed) || seed < 0 || seed > Number.MAX_SAFE_INTEGER) {
      throw new RangeError("numeric seed must be a non-negative safe integer; pass a bigint for full 64-bit seeds");
    }
    return String(seed);
  }
  return (seed & U64_MASK).toString();
}

function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "waveaug-bind-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

interface SampledStep {
  kind: string;
  magnitude: number;
}

/**
 * Sample a policy for `seed` under `configJson` and apply it to the buffer.
 *
 * The config string is handed to the tool verbatim (one schema, validated in
 * one place); the returned samples are a fresh copy-out buffer, bit-identical
 * to what the batch `augment` path writes for a work item with this seed.
 */
export function bindApplyPolicy(buffer: BufferView, configJson: string, seed: bigint | number): Float32Array {
  checkBuffer(buffer);
  const seedArg = toSeedString(seed);
  return withScratchDir((dir) => {
    const cfgPath = join(dir, "config.json");
    writeFileSync(cfgPath, configJson);

    const sampled = runExpectingSuccess(
      ["sample", "--config", cfgPath, "--seed", seedArg],
      "policy sampling failed",
    );
    const steps = (JSON.parse(sampled.stdout) as { steps: SampledStep[] }).steps;
    // String(number) is shortest-round-trip, so the float survives the trip
    const policyArg = steps.map((s) => `${s.kind}:${s.magnitude}`).join(",");

    const inPath = join(dir, "in.wav");
    const outPath = join(dir, "out.wav");
    writeFileSync(inPath, encodeWavFloat32(buffer.samples, buffer.sampleRate));
    runExpectingSuccess(
      ["preview", "--input", inPath, "--output", outPath, "--policy", policyArg, "--seed", seedArg],
      "policy application failed",
    );
    return decodeWavFloat32(readFileSync(outPath)).samples;
  });
}

function checkMelConfig(raw: string): Required<MelConfig> {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (exc) {
    throw new RangeError(`mel config is not valid JSON: ${(exc as Error).message}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new RangeError("mel config must be a JSON object");
  }
  const cfg = parsed as Record<string, unknown>;
  const unknown = Object.keys(cfg).filter((k) => !["n_fft", "hop", "n_mels", "resize"].includes(k));
  if (unknown.length > 0) {
    throw new RangeError(`unknown mel config keys: ${unknown.sort().join(", ")}`);
  }
  const intField = (name: "n_fft" | "hop" | "n_mels", fallback: number): number => {
    const v = cfg[name];
    if (v === undefined) return fallback;
    if (typeof v !== "number" || !Number.isInteger(v) || v < 1) {
      throw new RangeError(`mel config ${name} must be a positive integer, got ${JSON.stringify(v)}`);
    }
    return v;
  };
  let resize: [number, number] | null = [32, 32];
  if ("resize" in cfg) {
    const v = cfg.resize;
    if (v === null) {
      resize = null;
    } else if (
      Array.isArray(v) &&
      v.length === 2 &&
      v.every((d) => typeof d === "number" && Number.isInteger(d) && d >= 1)
    ) {
      resize = [v[0] as number, v[1] as number];
    } else {
      throw new RangeError(`mel config resize must be null or [rows, cols], got ${JSON.stringify(v)}`);
    }
  }
  return { n_fft: intField("n_fft", 1024), hop: intField("hop", 512), n_mels: intField("n_mels", 64), resize };
}

/**
 * Extract the dB mel-spectrogram image for the buffer.
 *
 * `melConfigJson` follows the tool's `mel` config block: optional n_fft,
 * hop, n_mels, and resize ([rows, cols] or null for native shape). Numerics
 * and the returned floats are identical to the batch `features` output.
 */
export function bindMelFeatures(buffer: BufferView, melConfigJson: string): MelImage {
  checkBuffer(buffer);
  const cfg = checkMelConfig(melConfigJson);
  return withScratchDir((dir) => {
    const inDir = join(dir, "in");
    mkdirSync(inDir);
    writeFileSync(join(inDir, "clip.wav"), encodeWavFloat32(buffer.samples, buffer.sampleRate));
    const outDir = join(dir, "feat");

    const args = [
      "features",
      "--input", inDir,
      "--output", outDir,
      "--n-fft", String(cfg.n_fft),
      "--hop", String(cfg.hop),
      "--n-mels", String(cfg.n_mels),
      "--resize", cfg.resize === null ? "none" : `${cfg.resize[0]}x${cfg.resize[1]}`,
    ];
    const r = runWaveaug(args);
    if (r.status !== 0) {
      // per-file failures land in the report on stdout, not on stderr
      try {
        const report = JSON.parse(r.stdout) as { failures?: { path: string; error: string }[] };
        const first = report.failures?.[0];
        if (first) {
          const { name, message } = splitErrorName(first.error);
          throw new WaveaugProcessError(message, name, r.status, r.stderr);
        }
      } catch (exc) {
        if (exc instanceof WaveaugProcessError) throw exc;
      }
      throw errorFromResult(r, "feature extraction failed");
    }

    const tensor = decodeAraf(readFileSync(join(outDir, "clip.araf")));
    if (tensor.dims.length !== 2) {
      throw new Error(`expected a 2-D feature tensor, got ${tensor.dims.length}-D`);
    }
    return { rows: tensor.dims[0]!, cols: tensor.dims[1]!, values: tensor.values };
  });
}
