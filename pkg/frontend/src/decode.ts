// Client-side decoders for the two result formats: binary PGM masks and
// MIV1 volumes. No server-side re-encoding is involved.

export interface GrayImage {
  width: number;
  height: number;
  maxval: number;
  pixels: Uint8Array; // row-major, one byte per pixel
}

export interface VolumeData {
  width: number;
  height: number;
  depth: number;
  voxels: Float32Array; // x-fastest, then y, then z
}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c]);

function readPgmHeaderToken(bytes: Uint8Array, offset: number): [string, number] {
  // Skip whitespace and '#' comment lines, then read one token.
  while (offset < bytes.length) {
    if (WHITESPACE.has(bytes[offset])) {
      offset += 1;
    } else if (bytes[offset] === 0x23) {
      while (offset < bytes.length && bytes[offset] !== 0x0a) {
        offset += 1;
      }
    } else {
      break;
    }
  }
  let end = offset;
  while (end < bytes.length && !WHITESPACE.has(bytes[end])) {
    end += 1;
  }
  if (end === offset) {
    throw new Error("truncated PGM header");
  }
  return [new TextDecoder().decode(bytes.subarray(offset, end)), end];
}

export function decodePgm(bytes: Uint8Array): GrayImage {
  if (bytes.length < 2 || bytes[0] !== 0x50 || bytes[1] !== 0x35) {
    throw new Error("not a binary PGM (P5) payload");
  }
  let offset = 2;
  let width: number, height: number, maxval: number;
  let token: string;
  [token, offset] = readPgmHeaderToken(bytes, offset);
  width = parseInt(token, 10);
  [token, offset] = readPgmHeaderToken(bytes, offset);
  height = parseInt(token, 10);
  [token, offset] = readPgmHeaderToken(bytes, offset);
  maxval = parseInt(token, 10);
  if (!(width > 0) || !(height > 0) || !(maxval > 0) || maxval > 255) {
    throw new Error(`bad PGM header: ${width}x${height} maxval=${maxval}`);
  }
  offset += 1; // the single whitespace byte after maxval
  const expected = width * height;
  if (bytes.length - offset !== expected) {
    throw new Error(
      `PGM body is ${bytes.length - offset} bytes, expected ${expected}`,
    );
  }
  return { width, height, maxval, pixels: bytes.subarray(offset) };
}

export function decodeMiv1(bytes: Uint8Array): VolumeData {
  const newline = bytes.indexOf(0x0a);
  if (newline < 0) {
    throw new Error("missing MIV1 header line");
  }
  const header = new TextDecoder().decode(bytes.subarray(0, newline));
  const match = /^MIV1 (\d+) (\d+) (\d+)$/.exec(header);
  if (!match) {
    throw new Error(`malformed MIV1 header: ${header}`);
  }
  const width = parseInt(match[1], 10);
  const height = parseInt(match[2], 10);
  const depth = parseInt(match[3], 10);
  const body = bytes.subarray(newline + 1);
  const expected = width * height * depth * 4;
  if (body.length !== expected) {
    throw new Error(`MIV1 body is ${body.length} bytes, expected ${expected}`);
  }
  // Realign: subarray offsets are not guaranteed 4-byte aligned.
  const copy = new Uint8Array(body);
  const voxels = new Float32Array(copy.buffer, 0, width * height * depth);
  return { width, height, depth, voxels };
}

export function volumeSlice(volume: VolumeData, z: number): GrayImage {
  if (z < 0 || z >= volume.depth) {
    throw new Error(`slice ${z} out of range [0, ${volume.depth})`);
  }
  const n = volume.width * volume.height;
  const pixels = new Uint8Array(n);
  const base = z * n;
  for (let i = 0; i < n; i += 1) {
    const v = volume.voxels[base + i];
    pixels[i] = Math.max(0, Math.min(255, Math.round(v * 255)));
  }
  return { width: volume.width, height: volume.height, maxval: 255, pixels };
}
