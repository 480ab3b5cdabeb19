// Draw a decoded grayscale raster into a canvas. The canvas dimensions are
// always set from the decoded image, even when 2D contexts are unavailable
// (e.g. DOM test environments), so dimension checks stay meaningful.

import type { GrayImage } from "./decode.js";

export function renderGray(canvas: HTMLCanvasElement, image: GrayImage): void {
  canvas.width = image.width;
  canvas.height = image.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const data = new Uint8ClampedArray(image.width * image.height * 4);
  const scale = 255 / image.maxval;
  for (let i = 0; i < image.pixels.length; i += 1) {
    const v = Math.round(image.pixels[i] * scale);
    data[i * 4] = v;
    data[i * 4 + 1] = v;
    data[i * 4 + 2] = v;
    data[i * 4 + 3] = 255;
  }
  ctx.putImageData(new ImageData(data, image.width, image.height), 0, 0);
}
