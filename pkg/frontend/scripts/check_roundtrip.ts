/** End-to-end check against a live service hosting a translucent-demo run:
 *
 *   1. the (sigma_s, g) scatter data traces the similarity ridge
 *      ((1 - g) sigma_s nearly constant while sigma_s spans a wide range);
 *   2. rendering the stored theta* record reproduces the target PNG
 *      byte-for-byte;
 *   3. the render round trip stays under two seconds.
 *
 * Usage: matinfer serve --config <translucent run> &  then
 *        npm run check:e2e  (SERVICE_URL overrides the default address)
 */

export {};

const base = process.env.SERVICE_URL ?? "http://127.0.0.1:8080";

interface Rec { t: number; theta_c: number[]; theta_d: number[]; nlp: number }

async function getJson<T>(path: string): Promise<T> {
  const res = await fetch(base + path);
  if (!res.ok) throw new Error(`${path} -> ${res.status}: ${await res.text()}`);
  return res.json() as Promise<T>;
}

function fail(msg: string): never {
  console.error(`[FAIL] ${msg}`);
  process.exit(1);
}

const manifest = await getJson<{ model: string; continuous: { name: string }[] }>(
  "/api/manifest");
if (manifest.model !== "translucent_demo") {
  fail(`service hosts '${manifest.model}', expected a translucent_demo run`);
}

const chains = await getJson<{ id: string }[]>("/api/chains");
if (!chains.length) fail("no chains on the service");
const cid = chains[0].id;

const payload = await getJson<{ samples: Rec[] }>(
  `/api/chains/${cid}/samples?skip_burnin=true`);
const sig = payload.samples.map((s) => s.theta_c[0]);
const g = payload.samples.map((s) => s.theta_c[1]);
const reduced = sig.map((s, i) => (1 - g[i]) * s);
const mean = reduced.reduce((a, b) => a + b, 0) / reduced.length;
const cv = Math.sqrt(reduced.reduce((a, b) => a + (b - mean) ** 2, 0)
                     / reduced.length) / mean;
const span = Math.max(...sig) / Math.min(...sig);
if (cv >= 0.10 || span < 2.0) {
  fail(`ridge not visible: CV((1-g)sigma_s)=${cv.toFixed(4)}, span=${span.toFixed(2)}x`);
}
console.log(`[PASS] ridge visible: CV=${cv.toFixed(4)} < 0.10, sigma_s span ${span.toFixed(1)}x >= 2`);

// theta* round trip: the stored ground truth must re-render pixel-identical
const star = await getJson<{ theta_c: number[]; theta_d: number[] }>("/api/theta_star")
  .catch(() => null);
const target = new Uint8Array(await (await fetch(base + "/api/target")).arrayBuffer());
if (star) {
  const t0 = performance.now();
  const res = await fetch(base + "/api/render", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ theta_c: star.theta_c, theta_d: star.theta_d }),
  });
  const elapsed = (performance.now() - t0) / 1000;
  if (!res.ok) fail(`render of theta* failed: ${res.status}`);
  const rendered = new Uint8Array(await res.arrayBuffer());
  const identical = rendered.length === target.length
    && rendered.every((b, i) => b === target[i]);
  if (!identical) fail("theta* render differs from the stored target");
  if (elapsed >= 2.0) fail(`render round trip took ${elapsed.toFixed(2)}s >= 2s`);
  console.log(`[PASS] theta* renders pixel-identical to the target in ${elapsed.toFixed(2)}s < 2s`);
} else {
  fail("theta* record not available from the service (run synth in the served directory)");
}
console.log("[PASS] explorer round trip");
