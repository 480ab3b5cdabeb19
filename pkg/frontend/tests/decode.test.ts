import { describe, expect, it } from "vitest";

import { decodeMiv1, decodePgm, volumeSlice } from "../src/decode.js";

function ascii(text: string): Uint8Array {
  return new TextEncoder().encode(text);
}

function concat(...parts: Uint8Array[]): Uint8Array {
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of parts) {
    out.set(part, offset);
    offset += part.length;
  }
  return out;
}

function miv1Bytes(w: number, h: number, d: number, voxels: number[]): Uint8Array {
  const body = new Uint8Array(voxels.length * 4);
  const view = new DataView(body.buffer);
  voxels.forEach((v, i) => view.setFloat32(i * 4, v, true));
  return concat(ascii(`MIV1 ${w} ${h} ${d}\n`), body);
}

describe("decodePgm", () => {
  it("parses a binary P5 payload", () => {
    const payload = concat(
      ascii("P5\n3 2\n255\n"),
      new Uint8Array([0, 128, 255, 10, 20, 30]),
    );
    const image = decodePgm(payload);
    expect(image.width).toBe(3);
    expect(image.height).toBe(2);
    expect(image.maxval).toBe(255);
    expect(Array.from(image.pixels)).toEqual([0, 128, 255, 10, 20, 30]);
  });

  it("skips comment lines in the header", () => {
    const payload = concat(
      ascii("P5\n# produced by a test\n2 1\n255\n"),
      new Uint8Array([7, 9]),
    );
    const image = decodePgm(payload);
    expect(image.width).toBe(2);
    expect(Array.from(image.pixels)).toEqual([7, 9]);
  });

  it("rejects non-P5 payloads", () => {
    expect(() => decodePgm(ascii("P6\n1 1\n255\nabc"))).toThrow(/P5/);
  });

  it("rejects a short body", () => {
    const payload = concat(ascii("P5\n2 2\n255\n"), new Uint8Array([1, 2, 3]));
    expect(() => decodePgm(payload)).toThrow(/expected 4/);
  });
});

describe("decodeMiv1", () => {
  it("parses header and little-endian voxels", () => {
    const volume = decodeMiv1(miv1Bytes(2, 1, 2, [0, 0.5, 1, 0.25]));
    expect(volume.width).toBe(2);
    expect(volume.height).toBe(1);
    expect(volume.depth).toBe(2);
    expect(Array.from(volume.voxels)).toEqual([0, 0.5, 1, 0.25]);
  });

  it("rejects a malformed header", () => {
    expect(() => decodeMiv1(ascii("MIV2 1 1 1\nxxxx"))).toThrow(/header/);
  });

  it("rejects a body size mismatch", () => {
    expect(() => decodeMiv1(concat(ascii("MIV1 2 2 1\n"), new Uint8Array(8))))
      .toThrow(/expected 16/);
  });

  it("extracts slices scaled to bytes", () => {
    const volume = decodeMiv1(miv1Bytes(2, 1, 2, [0, 1, 1, 0]));
    expect(Array.from(volumeSlice(volume, 0).pixels)).toEqual([0, 255]);
    expect(Array.from(volumeSlice(volume, 1).pixels)).toEqual([255, 0]);
    expect(() => volumeSlice(volume, 2)).toThrow(/out of range/);
  });
});
