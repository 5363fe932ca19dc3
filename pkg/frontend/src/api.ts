/** Typed client for the inference service; all renders funnel through a
 * small queue that keeps at most two requests in flight. */

import { ChainMeta, Manifest, SampleRecord } from "./types.js";

export class RenderQueue {
  private active = 0;
  private waiting: (() => void)[] = [];

  constructor(private readonly limit: number = 2) {}

  async run<T>(job: () => Promise<T>): Promise<T> {
    if (this.active >= this.limit) {
      await new Promise<void>((resolve) => this.waiting.push(resolve));
    }
    this.active += 1;
    try {
      return await job();
    } finally {
      this.active -= 1;
      const next = this.waiting.shift();
      if (next) next();
    }
  }

  get inFlight(): number {
    return this.active;
  }
}

export function samplesUrl(base: string, chainId: string,
                           skipBurnIn: boolean, stride: number): string {
  const params = new URLSearchParams();
  if (skipBurnIn) params.set("skip_burnin", "true");
  if (stride !== 1) params.set("stride", String(stride));
  const q = params.toString();
  return `${base}/api/chains/${encodeURIComponent(chainId)}/samples${q ? "?" + q : ""}`;
}

export class ApiClient {
  readonly queue = new RenderQueue(2);

  constructor(readonly base: string = "",
              private readonly fetcher: typeof fetch = fetch) {}

  private async json<T>(url: string): Promise<T> {
    const res = await this.fetcher(url);
    if (!res.ok) {
      const body = await res.text();
      let reason = body;
      try {
        reason = JSON.parse(body).error ?? body;
      } catch { /* not JSON */ }
      throw new Error(`${res.status}: ${reason}`);
    }
    return (await res.json()) as T;
  }

  manifest(): Promise<Manifest> {
    return this.json(`${this.base}/api/manifest`);
  }

  chains(): Promise<ChainMeta[]> {
    return this.json(`${this.base}/api/chains`);
  }

  async samples(chainId: string, skipBurnIn: boolean, stride: number):
      Promise<{ burn_in: number; samples: SampleRecord[] }> {
    return this.json(samplesUrl(this.base, chainId, skipBurnIn, stride));
  }

  targetUrl(): string {
    return `${this.base}/api/target`;
  }

  /** Render a theta record to a PNG blob; queued, never more than two at once. */
  render(thetaC: number[], thetaD: number[]): Promise<Blob> {
    return this.queue.run(async () => {
      const res = await this.fetcher(`${this.base}/api/render`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ theta_c: thetaC, theta_d: thetaD }),
      });
      if (!res.ok) {
        let reason = await res.text();
        try {
          reason = JSON.parse(reason).error ?? reason;
        } catch { /* not JSON */ }
        throw new Error(`render failed (${res.status}): ${reason}`);
      }
      return res.blob();
    });
  }
}
