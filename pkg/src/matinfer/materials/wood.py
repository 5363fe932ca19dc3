"""Growth-ring wood: a 3D cylinder of rings cut by an oriented plane.

The tree axis is z.  A cutting plane (two orientation angles plus an offset
along the plane normal) maps image coordinates into the 3D log; distance
from the tree axis, perturbed by width noise and a global sinusoidal
distortion, drives a periodic earlywood/latewood mask that colors the
albedo and modulates roughness and height.  Small-scale noise rides on top.
"""

from __future__ import annotations

import math

import numpy as np

from .. import autodiff as ad
from ..params import ContinuousParam, DiscreteParam, ParamSpec
from ..texture import fourier_resample, height_to_normals
from .base import (DIELECTRIC_F0, MaterialMaps, Model, SpecularLobe,
                   clamp01, light_tail, rgb_vector, scalar_map)


class WoodModel(Model):
    name = "wood"
    spec = ParamSpec("wood", continuous=(
        ContinuousParam("ring_period", 0.05, 0.02, 0.015, 0.15, role="growth-ring spacing, scene units"),
        ContinuousParam("width_noise", 0.10, 0.05, 0.02, 0.35, role="relative ring-width jitter"),
        ContinuousParam("early_r", 0.55, 0.12, 0.20, 0.95, role="earlywood color, red"),
        ContinuousParam("early_g", 0.38, 0.10, 0.10, 0.85, role="earlywood color, green"),
        ContinuousParam("early_b", 0.22, 0.08, 0.03, 0.70, role="earlywood color, blue"),
        ContinuousParam("late_r", 0.32, 0.10, 0.05, 0.80, role="latewood color, red"),
        ContinuousParam("late_g", 0.20, 0.08, 0.03, 0.65, role="latewood color, green"),
        ContinuousParam("late_b", 0.12, 0.06, 0.01, 0.50, role="latewood color, blue"),
        ContinuousParam("color_noise", 0.05, 0.03, 0.0, 0.20, role="albedo noise amplitude"),
        ContinuousParam("ring_sharpness", 6.0, 3.0, 1.0, 24.0, role="early/late transition steepness"),
        ContinuousParam("plane_theta", 0.25, 0.12, 0.0, 0.70, role="cutting plane tilt from the tree axis"),
        ContinuousParam("plane_phi", 0.0, 1.0, -3.14, 3.14, role="cutting plane tilt azimuth"),
        ContinuousParam("plane_offset", 0.30, 0.20, 0.0, 1.2, role="plane shift along its normal"),
        ContinuousParam("distort_amp", 0.010, 0.008, 0.0, 0.05, role="global ring distortion amplitude"),
        ContinuousParam("distort_freq", 4.0, 2.0, 0.5, 12.0, role="global ring distortion frequency"),
        ContinuousParam("distort_phase", 0.0, 1.0, -3.14, 3.14, role="global ring distortion phase"),
        ContinuousParam("small_noise_amp", 0.0018, 0.0009, 0.0005, 0.006, role="small-scale height noise"),
        ContinuousParam("small_noise_scale", 1.5, 0.7, 0.75, 4.0, role="small-scale noise zoom"),
        ContinuousParam("roughness_base", 0.45, 0.12, 0.15, 0.85, role="base GGX roughness"),
        ContinuousParam("roughness_mod", 0.15, 0.06, 0.04, 0.35, role="roughness swing across rings"),
        ContinuousParam("height_amplitude", 0.003, 0.002, 0.0002, 0.012, role="ring relief, scene units"),
        *light_tail(),
    ), discrete=(
        DiscreteParam("noise_choice", 4, role="which pre-generated fractal texture"),
    ))

    def generate(self, p, theta_d, z, size, texel_size):
        extent = size * texel_size
        coords = (np.arange(size) + 0.5) / size - 0.5
        xg = ad.constant(np.broadcast_to(coords[None, :] * extent, (size, size)).copy())
        yg = ad.constant(np.broadcast_to(coords[:, None] * extent, (size, size)).copy())

        # cutting plane frame from the two orientation angles
        st = ad.sin(p["plane_theta"])
        ct = ad.cos(p["plane_theta"])
        nx = st * ad.cos(p["plane_phi"])
        ny = st * ad.sin(p["plane_phi"])
        nz = ct
        norm_u = ad.sqrt(nx * nx + nz * nz)
        ux, uy, uz = nz / norm_u, ad.constant(0.0), nx / norm_u * -1.0
        vx = ny * uz
        vy = nz * ux - nx * uz
        vz = ny * ux * -1.0

        off = p["plane_offset"]
        px = nx * off + xg * ux + yg * vx
        py = ny * off + xg * uy + yg * vy
        pz = nz * off + xg * uz + yg * vz

        radius = ad.sqrt(px * px + py * py + 1e-9)
        tex_w = ad.constant(z.bank.textures[int(theta_d[0])] - 0.5)
        r_rings = radius * (tex_w * p["width_noise"] + 1.0) \
            + ad.sin(pz * p["distort_freq"] + p["distort_phase"]) * p["distort_amp"]

        phase = r_rings / p["ring_period"] * (2.0 * math.pi)
        late_mask = ad.sigmoid(ad.cos(phase) * p["ring_sharpness"])  # (H, W)
        m = ad.reshape(late_mask, (size, size, 1))

        early = rgb_vector(p["early_r"], p["early_g"], p["early_b"])
        late = rgb_vector(p["late_r"], p["late_g"], p["late_b"])
        color_tex = ad.constant(np.stack([z.bank.textures[(int(theta_d[0]) + k + 1) % 4]
                                          for k in range(3)], axis=2) - 0.5)
        albedo = clamp01(m * early + (1.0 - m) * late + color_tex * p["color_noise"])

        fine = fourier_resample(z.bank.textures[int(theta_d[0])], p["small_noise_scale"], size)
        h = late_mask * p["height_amplitude"] + (fine - 0.5) * p["small_noise_amp"]
        n = height_to_normals(h, texel_size)
        rough = scalar_map(p["roughness_base"], size) + m * p["roughness_mod"]
        lobe = SpecularLobe(roughness=rough, f0=ad.constant(np.full(3, DIELECTRIC_F0)), normal=n)
        return MaterialMaps(size=size, normal=n, lobes=[lobe], albedo=albedo,
                            light_intensity=p["light_intensity"],
                            vignette_sigma=p["vignette_sigma"])
