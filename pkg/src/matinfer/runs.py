"""Run orchestration: target synthesis, MAP fitting, posterior sampling,
and record rendering, all driven by a RunConfig.

Every run writes a manifest (config hash, seed, model manifest hash, code
version) sufficient to reproduce its chain files bit-identically.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass

import numpy as np

from . import __version__ as CODE_VERSION
from . import params as pr
from .chains import ChainWriter
from .config import RunConfig
from .imgio import Grid, load_image, save_image
from .materials import RandomInputs, get_model
from .params import ContinuousParam, ParamSpec
from .posterior import ErrorModel, Posterior
from .render import CameraRig
from .sampler import SamplerConfig, map_estimate, sample_posterior
from .summaries import (active_feature_net, evaluate_summary, load_feature_net,
                        range_compress, summary_bins, summary_compose,
                        summary_fft_bins, summary_gram, summary_mean)


def apply_prior_overrides(model, overrides: dict):
    """Clone the model with replaced prior fields (mean/std/low/high/pmf)."""
    if not overrides:
        return model
    cont = []
    for p in model.spec.continuous:
        if p.name in overrides:
            o = overrides[p.name]
            p = ContinuousParam(p.name,
                                float(o.get("mean", p.mean)),
                                float(o.get("std", p.std)),
                                float(o.get("low", p.low)),
                                float(o.get("high", p.high)),
                                role=p.role)
        cont.append(p)
    clone = copy.copy(model)
    clone.spec = ParamSpec(model.spec.model, tuple(cont), model.spec.discrete)
    return clone


def build_summary_fn(summary_cfg: dict):
    parts = []
    net = None
    for item in summary_cfg.get("recipe", []):
        op = item["op"]
        weight = float(item.get("weight", 1.0))
        pre = range_compress if item.get("compress") else (lambda im: im)
        if op == "mean":
            parts.append(((lambda im, pre=pre: summary_mean(pre(im))), weight))
        elif op == "bins":
            layout = item.get("layout", "concentric")
            k = int(item.get("k", 16))
            parts.append(((lambda im, layout=layout, k=k, pre=pre:
                           summary_bins(pre(im), layout, k)), weight))
        elif op == "fft_bins":
            k = int(item.get("k", 64))
            parts.append(((lambda im, k=k, pre=pre: summary_fft_bins(pre(im), k)), weight))
        elif op == "gram":
            if net is None:
                wf = summary_cfg.get("weights_file")
                net = load_feature_net(wf) if wf else active_feature_net()
            parts.append(((lambda im, net=net, pre=pre: summary_gram(pre(im), net)), weight))
        else:
            raise ValueError(f"unknown summary op {op!r}")
    if not parts:
        raise ValueError("summary recipe is empty")
    return summary_compose(parts)


@dataclass
class RunContext:
    config: RunConfig
    model: object
    rig: CameraRig
    z: RandomInputs
    summary_fn: object

    @property
    def out_dir(self) -> str:
        return self.config.out_dir


def build_context(cfg: RunConfig) -> RunContext:
    model = apply_prior_overrides(get_model(cfg.model), cfg.prior_overrides)
    rig = CameraRig(fov=float(cfg.rig["fov"]), distance=float(cfg.rig["distance"]),
                    resolution=cfg.resolution)
    z = RandomInputs.create(cfg.seed, cfg.resolution)
    return RunContext(config=cfg, model=model, rig=rig, z=z,
                      summary_fn=build_summary_fn(cfg.summary))


def _ensure_dir(path: str):
    os.makedirs(path, exist_ok=True)


def write_run_manifest(ctx: RunContext, extra: dict | None = None) -> dict:
    manifest = {
        "code_version": CODE_VERSION,
        "config_hash": ctx.config.hash(),
        "seed": ctx.config.seed,
        "model": ctx.model.spec.model,
        "model_manifest_hash": ctx.model.spec.manifest_hash(),
        "burn_in": ctx.config.sampler["burn_in"],
    }
    if extra:
        manifest.update(extra)
    _ensure_dir(ctx.out_dir)
    with open(os.path.join(ctx.out_dir, "run_manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(ctx.out_dir, "model_manifest.json"), "w", encoding="utf-8") as f:
        json.dump(ctx.model.spec.manifest(), f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def synth_theta(ctx: RunContext):
    """Resolve the ground-truth theta* for target synthesis."""
    spec = ctx.model.spec
    synth = ctx.config.target.get("synth") or {}
    if synth.get("theta_c") is not None:
        theta_c = np.asarray(synth["theta_c"], dtype=np.float64)
    elif synth.get("sample_seed") is not None:
        rng = np.random.default_rng(int(synth["sample_seed"]))
        theta_c, _ = spec.sample_prior(rng)
    else:
        theta_c = spec.prior_mode()
    offset = float(synth.get("offset_sigma", 0.0))
    if offset:
        # deterministic offset from the prior mode, clipped inside bounds
        for i, p in enumerate(spec.continuous):
            span = p.high - p.low
            theta_c[i] = float(np.clip(theta_c[i] + offset * p.std * (1 if i % 2 else -1),
                                       p.low + 1e-4 * span, p.high - 1e-4 * span))
    if synth.get("theta_d") is not None:
        theta_d = np.asarray(synth["theta_d"], dtype=np.int64)
    else:
        theta_d = np.zeros(spec.n_discrete, dtype=np.int64)
    return spec.validate(theta_c, theta_d)


def render_values(ctx: RunContext, theta_c, theta_d) -> np.ndarray:
    from . import autodiff as ad
    from .render import render_collocated
    with ad.Tape():
        maps = ctx.model.generate_from_values(theta_c, theta_d, ctx.z,
                                              ctx.rig.resolution, ctx.rig.texel_size)
        return np.asarray(render_collocated(maps, ctx.rig).value)


def cmd_synth(ctx: RunContext) -> dict:
    """Render f(theta*, z) and write target images plus the theta* record."""
    theta_c, theta_d = synth_theta(ctx)
    img = render_values(ctx, theta_c, theta_d)
    _ensure_dir(ctx.out_dir)
    exr = os.path.join(ctx.out_dir, "target.exr")
    png = os.path.join(ctx.out_dir, "target.png")
    save_image(Grid(img), exr)
    save_image(Grid(img), png)
    record = {
        "model": ctx.model.spec.model,
        "manifest_hash": ctx.model.spec.manifest_hash(),
        "seed": ctx.config.seed,
        "theta_c": theta_c.tolist(),
        "theta_d": theta_d.tolist(),
    }
    path = os.path.join(ctx.out_dir, "theta_star.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")
    write_run_manifest(ctx)
    return {"target_exr": exr, "target_png": png, "theta_star": path, "record": record}


# ---------------------------------------------------------------------------
# fit / sample
# ---------------------------------------------------------------------------

def load_target_image(ctx: RunContext) -> np.ndarray:
    path = ctx.config.target.get("path")
    if path is None:
        path = os.path.join(ctx.out_dir, "target.exr")
        if not os.path.exists(path):
            raise FileNotFoundError(
                f"no target image: configure target.path or run synth first ({path})")
    return load_image(path).data


def build_posterior(ctx: RunContext, target_img: np.ndarray | None = None) -> Posterior:
    if target_img is None:
        target_img = load_target_image(ctx)
    target = evaluate_summary(ctx.summary_fn, target_img)
    em = ctx.config.error_model
    if "sigma" in em and em["sigma"] is not None:
        error = ErrorModel(np.full(len(target.values), float(em["sigma"])))
    else:
        error = ErrorModel.relative(target, rel=float(em.get("rel", 0.05)),
                                    floor=float(em.get("floor", 1e-3)))
    return Posterior(ctx.model, ctx.z, ctx.rig, ctx.summary_fn, target, error)


def _init_state(ctx: RunContext, posterior: Posterior, init_from: str | None):
    spec = ctx.model.spec
    if init_from:
        with open(init_from, "r", encoding="utf-8") as f:
            rec = json.load(f)
        theta_c = np.asarray(rec["theta_c"], dtype=np.float64)
        theta_d = np.asarray(rec.get("theta_d", []), dtype=np.int64)
    else:
        theta_c = spec.prior_mode()
        theta_d = np.zeros(spec.n_discrete, dtype=np.int64)
    theta_c, theta_d = spec.validate(theta_c, theta_d)
    return pr.to_unconstrained(theta_c, spec), theta_d


def cmd_fit(ctx: RunContext, init_from: str | None = None) -> dict:
    """MAP estimation; writes map.json with the best-seen parameters."""
    posterior = build_posterior(ctx)
    u0, theta_d = _init_state(ctx, posterior, init_from)
    mcfg = ctx.config.map
    res = map_estimate(posterior.nlp_u, u0, iters=int(mcfg.get("iters", 300)),
                       theta_d=theta_d, lr=float(mcfg.get("lr", 0.1)))
    theta_c, _ = pr.from_unconstrained(res.u, ctx.model.spec)
    record = {
        "model": ctx.model.spec.model,
        "manifest_hash": ctx.model.spec.manifest_hash(),
        "theta_c": theta_c.tolist(),
        "theta_d": theta_d.tolist(),
        "nlp": res.nlp,
        "data_term": posterior.data_term(theta_c, theta_d),
        "diverged": res.diverged,
        "iters": len(res.trace) - 1,
    }
    _ensure_dir(ctx.out_dir)
    path = os.path.join(ctx.out_dir, "map.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")
    write_run_manifest(ctx)
    return {"map": path, "record": record}


def cmd_sample(ctx: RunContext, init_from: str | None = None,
               chain_id: str = "0") -> dict:
    """MCMC sampling; streams the chain to disk as it runs."""
    posterior = build_posterior(ctx)
    u0, theta_d0 = _init_state(ctx, posterior, init_from)
    s = ctx.config.sampler
    cfg = SamplerConfig(
        n_samples=int(s["n_samples"]),
        alpha=s.get("alpha"),
        tau=s.get("tau"),
        burn_in=int(s["burn_in"]),
        seed=int(ctx.config.seed),
        freeze_after=s.get("freeze_after"),
    )
    spec = ctx.model.spec
    _ensure_dir(ctx.out_dir)
    chain_path = os.path.join(ctx.out_dir, f"chain_{chain_id}.jsonl")
    with ChainWriter(chain_path) as writer:
        result = sample_posterior(
            cfg, posterior.nlp_u, u0,
            discrete_spec=spec.discrete,
            init_theta_d=theta_d0,
            to_bounded=lambda u: pr.from_unconstrained(u, spec)[0],
            on_sample=writer.write,
        )
    manifest = write_run_manifest(ctx, extra={
        "tau": result.tau,
        "accept_rate_continuous": result.accept_rate_continuous,
        "accept_rate_discrete": result.accept_rate_discrete,
        "aborted": result.aborted,
    })
    return {"chain": chain_path, "result": result, "manifest": manifest}


def cmd_render(ctx: RunContext, record_path: str, out_path: str | None = None) -> dict:
    """Render a stored theta record to an image file pair."""
    with open(record_path, "r", encoding="utf-8") as f:
        rec = json.load(f)
    theta_c = np.asarray(rec["theta_c"], dtype=np.float64)
    theta_d = np.asarray(rec.get("theta_d", []), dtype=np.int64)
    img = render_values(ctx, theta_c, theta_d)
    _ensure_dir(ctx.out_dir)
    base = out_path or os.path.join(ctx.out_dir, "render")
    base = base[:-4] if base.endswith((".png", ".exr")) else base
    save_image(Grid(img), base + ".exr")
    save_image(Grid(img), base + ".png")
    return {"render_exr": base + ".exr", "render_png": base + ".png"}


def cmd_export(ctx: RunContext, record_path: str) -> dict:
    """Export the material maps (albedo/roughness/normal) for a theta record."""
    from . import autodiff as ad
    with open(record_path, "r", encoding="utf-8") as f:
        rec = json.load(f)
    theta_c = np.asarray(rec["theta_c"], dtype=np.float64)
    theta_d = np.asarray(rec.get("theta_d", []), dtype=np.int64)
    with ad.Tape():
        maps = ctx.model.generate_from_values(theta_c, theta_d, ctx.z,
                                              ctx.rig.resolution, ctx.rig.texel_size)
        out = {}
        exp_dir = os.path.join(ctx.out_dir, "maps")
        _ensure_dir(exp_dir)
        if maps.albedo is not None:
            path = os.path.join(exp_dir, "albedo.png")
            save_image(Grid(np.asarray(maps.albedo.value)), path)
            out["albedo"] = path
        normal = np.asarray(maps.normal.value)
        path = os.path.join(exp_dir, "normal.png")
        save_image(Grid((normal + 1.0) / 2.0), path)
        out["normal"] = path
        rough = np.asarray(maps.roughness.value) if maps.roughness is not None else None
        if rough is not None:
            path = os.path.join(exp_dir, "roughness.exr")
            save_image(Grid(rough if rough.shape[2] in (1, 3) else rough[:, :, :1]), path)
            out["roughness"] = path
    with open(os.path.join(exp_dir, "theta.json"), "w", encoding="utf-8") as f:
        json.dump(rec, f, indent=2, sort_keys=True)
        f.write("\n")
    return out
