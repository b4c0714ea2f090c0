/**
 * Invocation of the blurlab core CLI.
 *
 * The core package is the single source of truth for all numerics; this
 * module only runs it as a subprocess and hands files back and forth. Set
 * BLURLAB_PYTHON to pick the interpreter that has blurlab installed
 * (default: python3).
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export function pythonInterpreter(): string {
  return process.env.BLURLAB_PYTHON ?? "python3";
}

export function runCore(args: string[]): string {
  const python = pythonInterpreter();
  const result = spawnSync(python, ["-m", "blurlab", ...args], {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new Error(`failed to launch ${python}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    const tail = (result.stderr || result.stdout || "").trim().split("\n").slice(-5).join("\n");
    throw new Error(`blurlab ${args[0]} exited with ${result.status}: ${tail}`);
  }
  return result.stdout;
}

/** Run fn with a private scratch directory, removed afterwards. */
export function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "blurlab-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
