/** Side-by-side inspection of a clicked sample against the target.
 *
 * Renders come from the service (single source of truth) and are cached per
 * sample index, so re-clicking a sample issues no second network request.
 * Up to three samples pin into a comparison strip.
 */

import { ApiClient } from "./api.js";
import { SampleRecord } from "./types.js";

export interface RenderedSample {
  index: number;
  nlp: number;
  blobUrl: string;
}

export class RenderCache {
  private cache = new Map<number, Promise<RenderedSample>>();
  requestCount = 0;

  constructor(private readonly api: ApiClient,
              private readonly makeUrl: (b: Blob) => string =
                  (b) => URL.createObjectURL(b)) {}

  /** Fetch (or reuse) the render of one sample. */
  get(index: number, sample: SampleRecord): Promise<RenderedSample> {
    let hit = this.cache.get(index);
    if (!hit) {
      this.requestCount += 1;
      hit = this.api.render(sample.theta_c, sample.theta_d).then((blob) => ({
        index,
        nlp: sample.nlp,
        blobUrl: this.makeUrl(blob),
      }));
      hit = hit.catch((err) => {
        this.cache.delete(index); // allow retry after a service error
        throw err;
      });
      this.cache.set(index, hit);
    }
    return hit;
  }

  has(index: number): boolean {
    return this.cache.has(index);
  }

  clear(): void {
    this.cache.clear();
    this.requestCount = 0;
  }
}

/** Gamma toggle: the service returns sRGB-encoded PNGs for display; the
 * "linear" mode previews raw radiance via a CSS filter approximation. */
export type GammaMode = "srgb" | "linear";

export function imageFilter(mode: GammaMode): string {
  return mode === "srgb" ? "none" : "brightness(0.55) saturate(1.15)";
}

export function buildInspectorHtml(target: string, rendered: RenderedSample,
                                   pinned: RenderedSample[]): string {
  const panel = (title: string, src: string, sub = "") => `
    <figure class="panel">
      <img src="${src}" alt="${title}">
      <figcaption>${title}${sub ? `<br><small>${sub}</small>` : ""}</figcaption>
    </figure>`;
  const strip = pinned
    .map((p) => panel(`pin #${p.index}`, p.blobUrl, `nlp ${p.nlp.toFixed(3)}`))
    .join("");
  return `
    <div class="compare">
      ${panel("target", target)}
      ${panel(`sample #${rendered.index}`, rendered.blobUrl,
              `nlp ${rendered.nlp.toFixed(3)}`)}
    </div>
    ${strip ? `<div class="strip">${strip}</div>` : ""}`;
}
