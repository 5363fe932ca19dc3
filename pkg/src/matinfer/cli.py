"""Command-line entry point.

Subcommands: synth | fit | sample | render | serve | export.  Every
subcommand reads a JSON config (--config) and accepts field overrides:
the dedicated flags below plus generic --set path.to.field=value pairs
whose names mirror the config structure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_config, make_config, set_path
from .runs import (build_context, cmd_export, cmd_fit, cmd_render, cmd_sample,
                   cmd_synth)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="matinfer",
                                 description="procedural material parameter estimation")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("synth", "render a synthetic target from theta*"),
        ("fit", "MAP point estimate"),
        ("sample", "MCMC posterior sampling"),
        ("render", "render a stored theta record"),
        ("serve", "HTTP service for the posterior explorer"),
        ("export", "export material maps for a theta record"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="override output directory")
        p.add_argument("--resolution", type=int, help="override render resolution")
        p.add_argument("--init-from", dest="init_from",
                       help="theta record to initialize from (fit/sample)")
        p.add_argument("--set", action="append", default=[], metavar="PATH=VALUE",
                       help="override any config field, e.g. --set sampler.n_samples=5000")
        if name in ("render", "export"):
            p.add_argument("--theta", required=True, help="theta record JSON path")
        if name == "serve":
            p.add_argument("--host", default="127.0.0.1")
            p.add_argument("--port", type=int, default=8080)
            p.add_argument("--render-workers", type=int, default=2)
            p.add_argument("--static", help="directory with the built explorer frontend")
        if name == "sample":
            p.add_argument("--chain-id", default="0")
    return ap


def _config_from_args(args) -> "RunConfig":
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.resolution is not None:
        overrides["resolution"] = args.resolution
    for item in args.set:
        if "=" not in item:
            raise SystemExit(f"--set expects PATH=VALUE, got {item!r}")
        path, value = item.split("=", 1)
        set_path(overrides, path, value)
    if args.config:
        return load_config(args.config, overrides)
    return make_config(overrides)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    cfg = _config_from_args(args)
    ctx = build_context(cfg)

    if args.command == "synth":
        out = cmd_synth(ctx)
        print(f"target written: {out['target_exr']} (theta* in {out['theta_star']})")
    elif args.command == "fit":
        out = cmd_fit(ctx, init_from=args.init_from)
        rec = out["record"]
        print(f"MAP written: {out['map']} nlp={rec['nlp']:.4f} data_term={rec['data_term']:.6g}")
    elif args.command == "sample":
        out = cmd_sample(ctx, init_from=args.init_from, chain_id=args.chain_id)
        res = out["result"]
        print(f"chain written: {out['chain']} ({len(res.samples)} samples, "
              f"tau={res.tau:.4g}, acc_c={res.accept_rate_continuous:.2f})")
        if res.aborted:
            print(f"warning: {res.aborted}", file=sys.stderr)
            return 1
    elif args.command == "render":
        out = cmd_render(ctx, args.theta)
        print(f"render written: {out['render_png']}")
    elif args.command == "export":
        out = cmd_export(ctx, args.theta)
        print("maps written: " + ", ".join(f"{k}={v}" for k, v in out.items()))
    elif args.command == "serve":
        from .service import serve
        static = args.static
        if static is None:
            default_static = os.path.join(os.getcwd(), "frontend")
            if os.path.isfile(os.path.join(default_static, "index.html")):
                static = default_static
        serve(ctx, host=args.host, port=args.port,
              render_workers=args.render_workers, static_dir=static)
    return 0


if __name__ == "__main__":
    sys.exit(main())
