/**
 * Binary containers shared with the core.
 *
 * BFK1 kernels: magic "BFK1", u32 LE width, u32 LE height, then
 * width*height float32 LE weights, row-major.
 *
 * BFI1 images: magic "BFI1", u32 LE width/height/channels/dtype
 * (0 = float32 LE, 1 = uint8), row-major interleaved payload.
 */

const KERNEL_MAGIC = 0x314b4642; // "BFK1" little-endian
const IMAGE_MAGIC = 0x31494642; // "BFI1" little-endian

export interface KernelBuffer {
  width: number;
  height: number;
  /** Row-major weights; a view onto the source bytes when alignment allows. */
  data: Float32Array;
}

export interface ImageBuffer {
  width: number;
  height: number;
  channels: number;
  data: Float32Array | Uint8Array;
}

/** Float32 view over buffer bytes; copies only when misaligned. */
function f32View(buf: Buffer, byteOffset: number, count: number): Float32Array {
  const absolute = buf.byteOffset + byteOffset;
  if (absolute % 4 === 0) {
    return new Float32Array(buf.buffer, absolute, count);
  }
  const copy = Buffer.alloc(count * 4);
  buf.copy(copy, 0, byteOffset, byteOffset + count * 4);
  return new Float32Array(copy.buffer, 0, count);
}

export function decodeKernel(buf: Buffer): KernelBuffer {
  if (buf.length < 12 || buf.readUInt32LE(0) !== KERNEL_MAGIC) {
    throw new Error("not a BFK1 kernel (bad magic)");
  }
  const width = buf.readUInt32LE(4);
  const height = buf.readUInt32LE(8);
  const expected = 12 + 4 * width * height;
  if (buf.length !== expected) {
    throw new Error(`BFK1 size mismatch: expected ${expected} bytes, got ${buf.length}`);
  }
  return { width, height, data: f32View(buf, 12, width * height) };
}

export function encodeKernel(kernel: KernelBuffer): Buffer {
  const { width, height, data } = kernel;
  if (data.length !== width * height) {
    throw new Error(`kernel data length ${data.length} != ${width}x${height}`);
  }
  const out = Buffer.alloc(12 + 4 * data.length);
  out.writeUInt32LE(KERNEL_MAGIC, 0);
  out.writeUInt32LE(width, 4);
  out.writeUInt32LE(height, 8);
  Buffer.from(data.buffer, data.byteOffset, data.byteLength).copy(out, 12);
  return out;
}

export function decodeImage(buf: Buffer): ImageBuffer {
  if (buf.length < 20 || buf.readUInt32LE(0) !== IMAGE_MAGIC) {
    throw new Error("not a BFI1 image (bad magic)");
  }
  const width = buf.readUInt32LE(4);
  const height = buf.readUInt32LE(8);
  const channels = buf.readUInt32LE(12);
  const dtype = buf.readUInt32LE(16);
  const count = width * height * channels;
  if (dtype === 0) {
    if (buf.length !== 20 + 4 * count) {
      throw new Error("BFI1 float payload size mismatch");
    }
    return { width, height, channels, data: f32View(buf, 20, count) };
  }
  if (dtype === 1) {
    if (buf.length !== 20 + count) {
      throw new Error("BFI1 uint8 payload size mismatch");
    }
    return { width, height, channels, data: new Uint8Array(buf.subarray(20)) };
  }
  throw new Error(`unknown BFI1 dtype tag ${dtype}`);
}

export function encodeImage(img: ImageBuffer): Buffer {
  const { width, height, channels, data } = img;
  if (data.length !== width * height * channels) {
    throw new Error(`image data length ${data.length} != ${width}x${height}x${channels}`);
  }
  const isFloat = data instanceof Float32Array;
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  const out = Buffer.alloc(20 + payload.length);
  out.writeUInt32LE(IMAGE_MAGIC, 0);
  out.writeUInt32LE(width, 4);
  out.writeUInt32LE(height, 8);
  out.writeUInt32LE(channels, 12);
  out.writeUInt32LE(isFloat ? 0 : 1, 16);
  payload.copy(out, 20);
  return out;
}
