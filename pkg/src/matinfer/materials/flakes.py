"""Layered metallic-paint model: clear coat + mirror flakes + glow.

Three isotropic microfacet lobes.  The coat is a smooth dielectric layer
(Schlick reflectivity pinned at 0.04 for IOR 1.5).  Flakes live on Voronoi
cells of a blue-noise point set; each cell's normal comes from a Beckmann
draw realized as reparameterized slopes (fixed standard-normal pair from z,
scaled by the spread parameter) so the spread stays differentiable.  The
glow lobe approximates interreflection between coat and flakes with a flat
normal and a fixed broad roughness; a single weight blends flakes against
glow.

The glow lobe's roughness is held constant so the continuous parameter
count lands on the published 13 for this model.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..params import ContinuousParam, ParamSpec
from ..texture import fourier_resample
from .base import (DIELECTRIC_F0, MaterialMaps, Model, SpecularLobe,
                   flat_normal, light_tail, rgb_vector, scalar_map)

GLOW_ROUGHNESS = 0.35


class FlakesModel(Model):
    name = "flakes"
    spec = ParamSpec("flakes", continuous=(
        ContinuousParam("coat_roughness", 0.08, 0.04, 0.02, 0.30, role="top-coat GGX roughness"),
        ContinuousParam("flake_roughness", 0.30, 0.10, 0.10, 0.70, role="flake lobe GGX roughness"),
        ContinuousParam("flake_spread", 0.18, 0.08, 0.0, 0.45, role="Beckmann spread of flake normals"),
        ContinuousParam("flake_f0_r", 0.70, 0.15, 0.30, 0.98, role="flake Fresnel reflectance, red"),
        ContinuousParam("flake_f0_g", 0.65, 0.15, 0.30, 0.98, role="flake Fresnel reflectance, green"),
        ContinuousParam("flake_f0_b", 0.60, 0.15, 0.30, 0.98, role="flake Fresnel reflectance, blue"),
        ContinuousParam("glow_f0_r", 0.30, 0.15, 0.02, 0.90, role="glow Fresnel reflectance, red"),
        ContinuousParam("glow_f0_g", 0.25, 0.15, 0.02, 0.90, role="glow Fresnel reflectance, green"),
        ContinuousParam("glow_f0_b", 0.20, 0.15, 0.02, 0.90, role="glow Fresnel reflectance, blue"),
        ContinuousParam("blend_weight", 0.5, 0.25, 0.0, 1.0, role="flakes vs glow mix"),
        ContinuousParam("cell_scale", 0.9, 0.3, 0.4, 1.8, role="flake cell map zoom"),
        *light_tail(),
    ))

    def generate(self, p, theta_d, z, size, texel_size):
        vset = z.bank.voronoi[0]
        # per-cell standard-normal slope pair, resampled at the chosen scale
        feats = fourier_resample(vset.features[:, :, :2], p["cell_scale"], size)
        slopes = feats * p["flake_spread"]
        sx = slopes[:, :, 0:1]
        sy = slopes[:, :, 1:2]
        one = ad.constant(np.ones((size, size, 1)))
        n_flake = ad.concat([-sx, -sy, one], axis=2)
        n_flake = n_flake / ad.sqrt(ad.asum(n_flake * n_flake, axis=2, keepdims=True))

        flat = flat_normal(size)
        w = p["blend_weight"]
        coat = SpecularLobe(roughness=scalar_map(p["coat_roughness"], size),
                            f0=ad.constant(np.full(3, DIELECTRIC_F0)),
                            normal=flat)
        flakes = SpecularLobe(roughness=scalar_map(p["flake_roughness"], size),
                              f0=rgb_vector(p["flake_f0_r"], p["flake_f0_g"], p["flake_f0_b"]),
                              normal=n_flake,
                              weight=w)
        glow = SpecularLobe(roughness=ad.constant(np.full((size, size, 1), GLOW_ROUGHNESS)),
                            f0=rgb_vector(p["glow_f0_r"], p["glow_f0_g"], p["glow_f0_b"]),
                            normal=flat,
                            weight=1.0 - w)
        return MaterialMaps(size=size, normal=flat, lobes=[coat, flakes, glow],
                            albedo=None,
                            light_intensity=p["light_intensity"],
                            vignette_sigma=p["vignette_sigma"])
