"""HTTP service for interactive posterior exploration.

Serves chain samples, 2D projections, the target image, the model
manifest, and on-demand renders of arbitrary theta records (cached by a
hash of theta, and throttled by a bounded worker semaphore).  All payloads
are JSON except images, which are PNG.  The explorer frontend, when built,
is served from the static directory.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np
from PIL import Image

from .chains import list_chains, read_chain
from .imgio import linear_to_srgb
from .runs import RunContext, render_values

_STATIC_TYPES = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".map": "application/json"}


def _png_bytes(img: np.ndarray) -> bytes:
    u8 = np.round(linear_to_srgb(img) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class ExplorerService:
    """Run-directory-backed API state shared across request threads."""

    def __init__(self, ctx: RunContext, render_workers: int = 2,
                 static_dir: str | None = None):
        self.ctx = ctx
        self.render_gate = threading.Semaphore(render_workers)
        self.render_cache: dict[str, bytes] = {}
        self.cache_lock = threading.Lock()
        self.static_dir = static_dir
        self.chains = {}
        for path in list_chains(ctx.out_dir):
            cid = re.match(r"chain_(.+)\.jsonl$", os.path.basename(path)).group(1)
            self.chains[cid] = path
        if not self.chains:
            raise FileNotFoundError(f"no chain files in {ctx.out_dir}; run sample first")

    # -- data access -----------------------------------------------------

    def chain_records(self, cid: str) -> list:
        return read_chain(self.chains[cid])

    def chain_meta(self) -> list:
        out = []
        burn_in = int(self.ctx.config.sampler["burn_in"])
        for cid in sorted(self.chains):
            recs = self.chain_records(cid)
            out.append({
                "id": cid,
                "samples": len(recs),
                "burn_in": burn_in,
                "model": self.ctx.model.spec.model,
                "manifest_hash": self.ctx.model.spec.manifest_hash(),
                "min_nlp": min((r["nlp"] for r in recs), default=None),
            })
        return out

    def render_theta(self, theta_c, theta_d) -> bytes:
        theta_c = np.asarray(theta_c, dtype=np.float64)
        theta_d = np.asarray(theta_d, dtype=np.int64)
        self.ctx.model.spec.validate(theta_c, theta_d)
        key = hashlib.sha256(theta_c.tobytes() + theta_d.tobytes()).hexdigest()
        with self.cache_lock:
            cached = self.render_cache.get(key)
        if cached is not None:
            return cached
        with self.render_gate:
            with self.cache_lock:
                cached = self.render_cache.get(key)
            if cached is not None:
                return cached
            png = _png_bytes(render_values(self.ctx, theta_c, theta_d))
        with self.cache_lock:
            self.render_cache[key] = png
        return png


class _Handler(BaseHTTPRequestHandler):
    service: ExplorerService  # set by make_server

    # -- plumbing ----------------------------------------------------------

    def log_message(self, *args):
        pass

    def _send(self, code: int, body: bytes, ctype: str):
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, code: int, payload):
        self._send(code, json.dumps(payload).encode(), "application/json")

    def _error(self, code: int, reason: str):
        self._json(code, {"error": reason})

    # -- routing -----------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        q = {k: v[-1] for k, v in parse_qs(url.query).items()}
        try:
            self._route_get(url.path, q)
        except (KeyError, FileNotFoundError) as e:
            self._error(404, f"not found: {e}")
        except ValueError as e:
            self._error(400, str(e))
        except BrokenPipeError:
            pass

    def do_POST(self):
        url = urlparse(self.path)
        try:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw) if raw else {}
            except json.JSONDecodeError as e:
                return self._error(400, f"malformed JSON body: {e}")
            if url.path == "/api/render":
                return self._post_render(payload)
            self._error(404, f"unknown endpoint {url.path}")
        except ValueError as e:
            self._error(400, str(e))
        except BrokenPipeError:
            pass

    def _route_get(self, path: str, q: dict):
        svc = self.service
        if path == "/api/target":
            png = os.path.join(svc.ctx.out_dir, "target.png")
            with open(png, "rb") as f:
                return self._send(200, f.read(), "image/png")
        if path == "/api/chains":
            return self._json(200, svc.chain_meta())
        m = re.match(r"^/api/chains/([^/]+)/samples$", path)
        if m:
            return self._get_samples(m.group(1), q)
        m = re.match(r"^/api/chains/([^/]+)/projection$", path)
        if m:
            return self._get_projection(m.group(1), q)
        if path == "/api/manifest":
            manifest = svc.ctx.model.spec.manifest()
            manifest["burn_in"] = int(svc.ctx.config.sampler["burn_in"])
            manifest["resolution"] = svc.ctx.config.resolution
            return self._json(200, manifest)
        if path == "/api/theta_star":
            record = os.path.join(svc.ctx.out_dir, "theta_star.json")
            with open(record, "r", encoding="utf-8") as f:
                return self._json(200, json.load(f))
        return self._static(path)

    def _get_samples(self, cid: str, q: dict):
        svc = self.service
        if cid not in svc.chains:
            return self._error(404, f"unknown chain id {cid!r}")
        recs = svc.chain_records(cid)
        burn_in = int(svc.ctx.config.sampler["burn_in"])
        if q.get("skip_burnin", "false").lower() in ("1", "true", "yes"):
            recs = recs[burn_in:]
        stride = int(q.get("stride", 1))
        if stride < 1:
            raise ValueError("stride must be >= 1")
        recs = recs[::stride]
        self._json(200, {"burn_in": burn_in, "samples": recs})

    def _get_projection(self, cid: str, q: dict):
        svc = self.service
        if cid not in svc.chains:
            return self._error(404, f"unknown chain id {cid!r}")
        spec = svc.ctx.model.spec
        try:
            xi = spec.index(q.get("x", ""))
            yi = spec.index(q.get("y", ""))
        except KeyError as e:
            raise ValueError(f"unknown parameter name {e}") from None
        recs = svc.chain_records(cid)
        self._json(200, {
            "x": [r["theta_c"][xi] for r in recs],
            "y": [r["theta_c"][yi] for r in recs],
            "nlp": [r["nlp"] for r in recs],
            "t": [r["t"] for r in recs],
            "x_name": q["x"], "y_name": q["y"],
            "burn_in": int(svc.ctx.config.sampler["burn_in"]),
        })

    def _post_render(self, payload: dict):
        if "theta_c" not in payload:
            return self._error(400, "missing field theta_c")
        png = self.service.render_theta(payload["theta_c"],
                                        payload.get("theta_d", []))
        self._send(200, png, "image/png")

    def _static(self, path: str):
        root = self.service.static_dir
        if root is None:
            return self._error(404, f"unknown endpoint {path}")
        rel = "index.html" if path == "/" else path.lstrip("/")
        full = os.path.normpath(os.path.join(root, rel))
        if not full.startswith(os.path.abspath(root)):
            return self._error(400, "path escapes static root")
        if not os.path.isfile(full):
            return self._error(404, f"unknown endpoint {path}")
        ext = os.path.splitext(full)[1]
        with open(full, "rb") as f:
            self._send(200, f.read(), _STATIC_TYPES.get(ext, "application/octet-stream"))


def make_server(ctx: RunContext, host: str = "127.0.0.1", port: int = 8080,
                render_workers: int = 2, static_dir: str | None = None) -> ThreadingHTTPServer:
    service = ExplorerService(ctx, render_workers=render_workers, static_dir=static_dir)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def serve(ctx: RunContext, host: str = "127.0.0.1", port: int = 8080,
          render_workers: int = 2, static_dir: str | None = None):
    server = make_server(ctx, host, port, render_workers, static_dir)
    print(f"serving posterior explorer on http://{host}:{port}/ (out_dir={ctx.out_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
