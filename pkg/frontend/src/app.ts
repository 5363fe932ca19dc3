/** Explorer wiring: loads chains, drives the scatter / inspector / trace
 * views off a single ViewState, and proxies every interaction through the
 * reducer so sessions replay deterministically. */

import { ApiClient } from "./api.js";
import { RenderCache, buildInspectorHtml, imageFilter, GammaMode } from "./inspector.js";
import { Action, defaultAxes, reduce } from "./state.js";
import { DECIMATION_THRESHOLD, decimate, drawScatter, hitTest, paramInfo,
         project } from "./scatter.js";
import { buildTraces, drawTrace } from "./traces.js";
import { Manifest, SampleRecord, ViewState, initialViewState } from "./types.js";

export class ExplorerApp {
  state: ViewState = initialViewState();
  manifest!: Manifest;
  samples: SampleRecord[] = [];
  cache: RenderCache;
  gamma: GammaMode = "srgb";
  readonly actionLog: Action[] = [];

  private scatterCanvas!: HTMLCanvasElement;
  private traceRoot!: HTMLElement;
  private inspectorRoot!: HTMLElement;
  private status!: HTMLElement;

  constructor(private readonly api: ApiClient, private readonly root: Document) {
    this.cache = new RenderCache(api);
  }

  async start(): Promise<void> {
    this.scatterCanvas = this.root.getElementById("scatter") as HTMLCanvasElement;
    this.traceRoot = this.root.getElementById("traces")!;
    this.inspectorRoot = this.root.getElementById("inspector")!;
    this.status = this.root.getElementById("status")!;

    this.manifest = await this.api.manifest();
    const [x, y] = defaultAxes(this.manifest);
    this.state = { ...this.state, xParam: x, yParam: y };
    const chains = await this.api.chains();
    if (chains.length === 0) {
      this.status.textContent = "no chains on the service";
      return;
    }
    this.fillSelectors(chains.map((c) => c.id));
    await this.dispatch({ kind: "select-chain", chainId: chains[0].id });
    this.bindEvents();
  }

  async dispatch(action: Action): Promise<void> {
    try {
      this.state = reduce(this.state, action, this.manifest);
    } catch (err) {
      this.status.textContent = String(err);
      return; // invalid interaction: views unchanged
    }
    this.actionLog.push(action);
    if (action.kind === "select-chain" || action.kind === "toggle-burnin"
        || action.kind === "set-stride") {
      await this.reload();
    }
    this.redraw();
    if (action.kind === "select-sample") {
      await this.inspect(action.index);
    }
  }

  private async reload(): Promise<void> {
    if (!this.state.chainId) return;
    const payload = await this.api.samples(this.state.chainId,
                                           this.state.skipBurnIn, this.state.stride);
    this.samples = payload.samples;
    this.cache.clear();
    this.status.textContent =
      `chain ${this.state.chainId}: ${this.samples.length} samples loaded`;
  }

  redraw(): void {
    if (!this.samples.length) return;
    const pts = decimate(project(this.samples, this.manifest,
                                 this.state.xParam, this.state.yParam),
                         DECIMATION_THRESHOLD);
    const ctx = this.scatterCanvas.getContext("2d")!;
    const transform = drawScatter(ctx, pts,
                                  paramInfo(this.manifest, this.state.xParam),
                                  paramInfo(this.manifest, this.state.yParam),
                                  this.state.selectedIndex);
    this.scatterCanvas.onclick = (ev) => {
      const rect = this.scatterCanvas.getBoundingClientRect();
      const hit = hitTest(pts, transform, ev.clientX - rect.left, ev.clientY - rect.top);
      if (hit) void this.dispatch({ kind: "select-sample", index: hit.index });
    };
    this.drawTraces();
  }

  private drawTraces(): void {
    this.traceRoot.replaceChildren();
    const burnIn = this.state.skipBurnIn ? 0 : this.manifest.burn_in;
    for (const series of buildTraces(this.samples, this.manifest, 1)) {
      const canvas = this.root.createElement("canvas");
      canvas.width = 560;
      canvas.height = 80;
      this.traceRoot.appendChild(canvas);
      drawTrace(canvas.getContext("2d")!, series, burnIn);
    }
  }

  private async inspect(index: number): Promise<void> {
    const sample = this.samples[index];
    this.status.textContent = `rendering sample #${index} (nlp ${sample.nlp.toFixed(3)})...`;
    try {
      const rendered = await this.cache.get(index, sample);
      const pinned = await Promise.all(
        this.state.pinned.map((i) => this.cache.get(i, this.samples[i])));
      this.inspectorRoot.innerHTML =
        buildInspectorHtml(this.api.targetUrl(), rendered, pinned);
      for (const img of Array.from(this.inspectorRoot.querySelectorAll("img"))) {
        (img as HTMLImageElement).style.filter = imageFilter(this.gamma);
      }
      this.status.textContent = `sample #${index}: nlp ${sample.nlp.toFixed(3)}`;
    } catch (err) {
      this.inspectorRoot.textContent = `render failed: ${err}`;
    }
  }

  private fillSelectors(chainIds: string[]): void {
    const chainSel = this.root.getElementById("chain") as HTMLSelectElement;
    chainSel.replaceChildren(...chainIds.map((id) => {
      const opt = this.root.createElement("option");
      opt.value = id;
      opt.textContent = `chain ${id}`;
      return opt;
    }));
    const mk = (el: HTMLSelectElement, selected: string) => {
      el.replaceChildren(...this.manifest.continuous.map((p) => {
        const opt = this.root.createElement("option");
        opt.value = p.name;
        opt.textContent = p.name;
        if (p.name === selected) opt.selected = true;
        return opt;
      }));
    };
    mk(this.root.getElementById("x-param") as HTMLSelectElement, this.state.xParam);
    mk(this.root.getElementById("y-param") as HTMLSelectElement, this.state.yParam);
  }

  private bindEvents(): void {
    const $ = (id: string) => this.root.getElementById(id)!;
    ($("chain") as HTMLSelectElement).onchange = (ev) =>
      void this.dispatch({ kind: "select-chain",
                           chainId: (ev.target as HTMLSelectElement).value });
    const axes = () => void this.dispatch({
      kind: "set-axes",
      x: ($("x-param") as HTMLSelectElement).value,
      y: ($("y-param") as HTMLSelectElement).value,
    });
    ($("x-param") as HTMLSelectElement).onchange = axes;
    ($("y-param") as HTMLSelectElement).onchange = axes;
    ($("burnin") as HTMLInputElement).onchange = () =>
      void this.dispatch({ kind: "toggle-burnin" });
    ($("stride") as HTMLInputElement).onchange = (ev) =>
      void this.dispatch({ kind: "set-stride",
                           stride: Number((ev.target as HTMLInputElement).value) });
    $("pin").onclick = () => void this.dispatch({ kind: "pin-selected" });
    $("clear-pins").onclick = () => void this.dispatch({ kind: "clear-pins" });
    ($("gamma") as HTMLInputElement).onchange = (ev) => {
      this.gamma = (ev.target as HTMLInputElement).checked ? "srgb" : "linear";
      if (this.state.selectedIndex !== null) void this.inspect(this.state.selectedIndex);
    };
  }
}

export function boot(): void {
  const app = new ExplorerApp(new ApiClient(""), document);
  void app.start();
  (globalThis as Record<string, unknown>).explorer = app;
}

if (typeof document !== "undefined" && document.getElementById("scatter")) {
  boot();
}
