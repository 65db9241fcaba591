// Subprocess plumbing for the `waveaug` CLI.
// The tool reports runtime failures as `error: <Name>: <message>` on stderr
// with exit code 1; that name is surfaced on the thrown error so callers can
// tell an out-of-range magnitude from a malformed file without string fishing.

import { spawnSync } from "node:child_process";

/** Binary to invoke; override with the WAVEAUG_BIN environment variable. */
export function waveaugBin(): string {
  return process.env.WAVEAUG_BIN || "waveaug";
}

export class WaveaugProcessError extends Error {
  /** Library error class name (e.g. "MagnitudeOutOfRange"), when reported. */
  readonly libraryError: string | null;
  readonly exitCode: number | null;
  readonly stderr: string;

  constructor(message: string, libraryError: string | null, exitCode: number | null, stderr: string) {
    super(message);
    this.name = "WaveaugProcessError";
    this.libraryError = libraryError;
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

export interface RunResult {
  status: number | null;
  stdout: string;
  stderr: string;
}

export function runWaveaug(args: string[]): RunResult {
  const r = spawnSync(waveaugBin(), args, { encoding: "utf8", maxBuffer: 64 * 1024 * 1024 });
  if (r.error) {
    throw new WaveaugProcessError(
      `cannot run ${waveaugBin()}: ${r.error.message}`,
      null,
      null,
      "",
    );
  }
  return { status: r.status, stdout: r.stdout ?? "", stderr: r.stderr ?? "" };
}

const ERROR_LINE = /^error: ([A-Za-z_][A-Za-z0-9_]*): (.*)$/m;

/** Parse "Name: message" out of a diagnostic string, if present. */
export function splitErrorName(text: string): { name: string | null; message: string } {
  const m = /^([A-Za-z_][A-Za-z0-9_]*): (.*)$/s.exec(text);
  return m ? { name: m[1] ?? null, message: text } : { name: null, message: text };
}

export function errorFromResult(r: RunResult, context: string): WaveaugProcessError {
  const m = ERROR_LINE.exec(r.stderr);
  if (m) {
    return new WaveaugProcessError(`${m[1]}: ${m[2]}`, m[1] ?? null, r.status, r.stderr);
  }
  const detail = r.stderr.trim() || `exit code ${r.status}`;
  return new WaveaugProcessError(`${context}: ${detail}`, null, r.status, r.stderr);
}

/** Run and require exit 0, mapping failures to WaveaugProcessError. */
export function runExpectingSuccess(args: string[], context: string): RunResult {
  const r = runWaveaug(args);
  if (r.status !== 0) {
    throw errorFromResult(r, context);
  }
  return r;
}
