// Result view: renders 2D PGM masks directly and MIV1 volumes slice by
// slice behind a range slider. A not-ready result shows a placeholder.

import type { AppContext } from "../app.js";
import { ApiError } from "../api.js";
import { decodeMiv1, decodePgm, volumeSlice } from "../decode.js";
import { renderGray } from "../render.js";

export function renderTask(
  ctx: AppContext,
  taskId: string,
): { el: HTMLElement; destroy(): void } {
  const el = document.createElement("section");
  el.className = "task-view";
  el.innerHTML = `
    <a href="#/home">&larr; back</a>
    <h1 class="task-id"></h1>
    <dl class="meta"></dl>
    <p class="placeholder" hidden>processing&hellip;</p>
    <p class="error" role="alert" hidden></p>
    <div class="result" hidden>
      <canvas></canvas>
      <label class="slice-control" hidden>
        Slice <input type="range" min="0" value="0" />
        <span class="slice-label"></span>
      </label>
    </div>
  `;
  (el.querySelector(".task-id") as HTMLHeadingElement).textContent = taskId;

  const meta = el.querySelector(".meta") as HTMLDListElement;
  const placeholder = el.querySelector(".placeholder") as HTMLParagraphElement;
  const errorLine = el.querySelector(".error") as HTMLParagraphElement;
  const resultBox = el.querySelector(".result") as HTMLDivElement;
  const canvas = el.querySelector("canvas") as HTMLCanvasElement;
  const sliceControl = el.querySelector(".slice-control") as HTMLLabelElement;
  const slider = el.querySelector('input[type="range"]') as HTMLInputElement;
  const sliceLabel = el.querySelector(".slice-label") as HTMLSpanElement;

  async function load(): Promise<void> {
    const detail = await ctx.client.taskDetail(taskId);
    meta.innerHTML = `
      <dt>Category</dt><dd class="meta-category"></dd>
      <dt>Submitted</dt><dd class="meta-submitted"></dd>
      <dt>State</dt><dd class="meta-state"></dd>
      <dt>Safety</dt><dd class="meta-safety"></dd>
    `;
    (meta.querySelector(".meta-category") as HTMLElement).textContent = detail.category;
    (meta.querySelector(".meta-submitted") as HTMLElement).textContent = detail.submitted_at;
    (meta.querySelector(".meta-state") as HTMLElement).textContent = detail.state;
    (meta.querySelector(".meta-safety") as HTMLElement).textContent = detail.safety;

    let payload: Uint8Array;
    try {
      payload = await ctx.client.fetchResult(taskId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        placeholder.hidden = false;
        return;
      }
      throw err;
    }

    resultBox.hidden = false;
    if (payload[0] === 0x50) {
      renderGray(canvas, decodePgm(payload));
    } else {
      const volume = decodeMiv1(payload);
      slider.max = String(volume.depth - 1);
      sliceControl.hidden = volume.depth <= 1;
      const show = (z: number) => {
        renderGray(canvas, volumeSlice(volume, z));
        sliceLabel.textContent = `${z + 1} / ${volume.depth}`;
      };
      slider.addEventListener("input", () => show(Number(slider.value)));
      show(0);
    }
  }

  load().catch((err) => {
    errorLine.textContent = err instanceof ApiError ? err.message : "network error";
    errorLine.hidden = false;
  });

  return { el, destroy: () => {} };
}
