/**
 * Node bindings for the blurlab core.
 *
 * Three operations cross the boundary: seeded kernel generation, image
 * blurring, and bounding-box expansion. Data moves through the core's own
 * file formats (BFK1 kernels, BFI1 float images, JSON boxes), so every
 * result is bit-identical to what the CLI produces for the same inputs.
 * One buffer copy happens per direction (file write / file read); decoded
 * arrays are zero-copy views where alignment allows.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { runCore, withScratchDir } from "./core.js";
import {
  decodeImage,
  decodeKernel,
  encodeImage,
  encodeKernel,
  type ImageBuffer,
  type KernelBuffer,
} from "./formats.js";

export { type ImageBuffer, type KernelBuffer } from "./formats.js";

export const VERSION = "0.1.0";

const P_CLASSES = 3;
const E_CLASSES = 5;

export interface KernelMeta {
  pClass: string | null;
  eClass: string | null;
  seed: number;
  centered: boolean;
  barycenter: [number, number];
  extents: [number, number, number, number];
}

export interface GeneratedKernel extends KernelBuffer {
  meta: KernelMeta;
}

export interface GenerateKernelOptions {
  /** Emit a motionless (delta) kernel; the seed is then irrelevant. */
  stationary?: boolean;
}

function checkClassNumber(value: number, limit: number, name: string): void {
  if (!Number.isInteger(value) || value < 1 || value > limit) {
    throw new RangeError(`${name} must be an integer in 1..${limit}, got ${value}`);
  }
}

/**
 * Generate one centered blur kernel for 1-based class numbers (p, e), as
 * `blurlab gen-kernels --p <p> --e <e> --count 1 --seed <seed>` would.
 */
export function generateKernel(
  p: number,
  e: number,
  seed: number,
  options: GenerateKernelOptions = {},
): GeneratedKernel {
  checkClassNumber(p, P_CLASSES, "p");
  checkClassNumber(e, E_CLASSES, "e");
  if (!Number.isInteger(seed) || seed < 0) {
    throw new RangeError(`seed must be a nonnegative integer, got ${seed}`);
  }
  return withScratchDir((dir) => {
    const args = [
      "gen-kernels",
      "--p",
      String(p),
      "--e",
      String(e),
      "--count",
      "1",
      "--seed",
      String(seed),
      "--out",
      dir,
    ];
    if (options.stationary) {
      args.push("--stationary");
    }
    runCore(args);
    const stem = `P${p}_E${e}_00000`;
    const kernel = decodeKernel(readFileSync(join(dir, `${stem}.bfk`)));
    const side = JSON.parse(readFileSync(join(dir, `${stem}.json`), "utf8"));
    const meta: KernelMeta = {
      pClass: side.p_class,
      eClass: side.e_class,
      seed: side.seed,
      centered: side.centered,
      barycenter: side.barycenter,
      extents: side.extents,
    };
    // Detach from the scratch file's buffer before the directory vanishes.
    return { ...kernel, data: kernel.data.slice(), meta };
  });
}

/**
 * Convolve an image with a kernel under reflection padding.
 *
 * Accepts float32 data in [0, 1] or uint8 data (converted to float by the
 * core exactly as its PNG loader would); always returns float32.
 */
export function blurImage(image: ImageBuffer, kernel: KernelBuffer): ImageBuffer {
  return withScratchDir((dir) => {
    const imgPath = join(dir, "in.bfi");
    const kernelPath = join(dir, "k.bfk");
    const outPath = join(dir, "out.bfi");
    writeFileSync(imgPath, encodeImage(image));
    writeFileSync(kernelPath, encodeKernel(kernel));
    runCore(["blur-image", "--image", imgPath, "--kernel", kernelPath, "--out", outPath]);
    const out = decodeImage(readFileSync(outPath));
    return { ...out, data: (out.data as Float32Array).slice() };
  });
}

export type Extents = [number, number, number, number];

/**
 * Expand [x, y, w, h] boxes by kernel extents (x-, x+, y-, y+).
 *
 * Accepts an array of quadruples or a flat Float64Array of length 4N;
 * returns a flat Float64Array of length 4N with the core's exact values.
 */
export function expandBoxes(boxes: number[][] | Float64Array, extents: Extents): Float64Array {
  const quads: number[][] = Array.isArray(boxes)
    ? boxes.map((b) => Array.from(b))
    : (() => {
        if (boxes.length % 4 !== 0) {
          throw new RangeError(`flat box buffer length ${boxes.length} is not a multiple of 4`);
        }
        const out: number[][] = [];
        for (let i = 0; i < boxes.length; i += 4) {
          out.push([boxes[i], boxes[i + 1], boxes[i + 2], boxes[i + 3]]);
        }
        return out;
      })();
  const [xm, xp, ym, yp] = extents;
  if (xm > 0 || ym > 0 || xp < 0 || yp < 0) {
    throw new RangeError(`extents must straddle zero, got ${extents}`);
  }
  if (quads.length === 0) {
    return new Float64Array(0);
  }
  return withScratchDir((dir) => {
    const boxesPath = join(dir, "boxes.json");
    const outPath = join(dir, "out.json");
    writeFileSync(boxesPath, JSON.stringify(quads));
    runCore([
      "expand-labels",
      "--boxes",
      boxesPath,
      `--extents=${xm},${xp},${ym},${yp}`,
      "--out",
      outPath,
    ]);
    const expanded: number[][] = JSON.parse(readFileSync(outPath, "utf8"));
    const flat = new Float64Array(expanded.length * 4);
    expanded.forEach((b, i) => flat.set(b, i * 4));
    return flat;
  });
}

/** Version string reported by the core CLI (should equal VERSION). */
export function coreVersion(): string {
  const out = runCore(["--version"]).trim();
  const parts = out.split(/\s+/);
  return parts[parts.length - 1];
}
