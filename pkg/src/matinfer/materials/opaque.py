"""Bumpy dielectric, leather, plaster, and brushed-metal forward models.

All four share the microfacet-over-heightfield structure: a procedural
heightfield drives a normal map, a GGX lobe (isotropic or anisotropic)
provides the specular response, and all but the metal add a Lambertian
diffuse term.  Leather and plaster vary roughness spatially and select
their pre-generated noise/cell textures with discrete parameters.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..params import ContinuousParam, DiscreteParam, ParamSpec
from ..texture import (fourier_resample, height_to_normals, scaled_lookup,
                       synth_heightfield, threshold_remap)
from .base import (DIELECTRIC_F0, MaterialMaps, Model, SpecularLobe,
                   light_tail, rgb_map, rgb_vector, scalar_map)

_ALBEDO = [
    ContinuousParam("albedo_r", 0.45, 0.22, 0.02, 0.98, role="diffuse albedo, red"),
    ContinuousParam("albedo_g", 0.45, 0.22, 0.02, 0.98, role="diffuse albedo, green"),
    ContinuousParam("albedo_b", 0.45, 0.22, 0.02, 0.98, role="diffuse albedo, blue"),
]


class BumpModel(Model):
    """Opaque dielectric with an isotropic Fourier-noise heightfield."""

    name = "bump"
    spec = ParamSpec("bump", continuous=(
        *_ALBEDO,
        ContinuousParam("roughness", 0.35, 0.15, 0.05, 0.90, role="GGX roughness r (alpha = r^2)"),
        ContinuousParam("sigma_f", 10.0, 4.0, 4.0, 24.0, role="spectrum std dev, cycles/texture"),
        ContinuousParam("height_amplitude", 0.006, 0.003, 0.002, 0.025, role="heightfield scale, scene units"),
        *light_tail(),
    ))

    def generate(self, p, theta_d, z, size, texel_size):
        h = synth_heightfield(p["sigma_f"], p["sigma_f"], p["height_amplitude"], z.phases, size)
        n = height_to_normals(h, texel_size)
        lobe = SpecularLobe(roughness=scalar_map(p["roughness"], size),
                            f0=ad.constant(np.full(3, DIELECTRIC_F0)),
                            normal=n)
        return MaterialMaps(size=size, normal=n, lobes=[lobe],
                            albedo=rgb_map(p["albedo_r"], p["albedo_g"], p["albedo_b"], size),
                            light_intensity=p["light_intensity"],
                            vignette_sigma=p["vignette_sigma"])


class LeatherModel(Model):
    """Voronoi crease cells over a dielectric base, plus fine fractal noise."""

    name = "leather"
    spec = ParamSpec("leather", continuous=(
        *_ALBEDO,
        ContinuousParam("roughness", 0.40, 0.15, 0.08, 0.90, role="base GGX roughness"),
        ContinuousParam("roughness_variation", 0.18, 0.08, 0.05, 0.45, role="extra roughness inside creases"),
        ContinuousParam("cell_scale", 1.2, 0.5, 0.5, 3.0, role="Voronoi cell map zoom"),
        ContinuousParam("crease_level", 0.055, 0.02, 0.015, 0.12, role="cell-distance threshold for creases"),
        ContinuousParam("crease_sharpness", 60.0, 25.0, 15.0, 160.0, role="crease threshold steepness"),
        ContinuousParam("height_amplitude", 0.006, 0.003, 0.002, 0.025, role="crease depth, scene units"),
        ContinuousParam("noise_amplitude", 0.002, 0.0015, 0.0, 0.008, role="fine fractal height noise"),
        *light_tail(),
    ), discrete=(
        DiscreteParam("noise_choice", 4, role="which pre-generated fractal texture"),
        DiscreteParam("cell_choice", 2, role="which pre-generated Voronoi map"),
    ))

    def generate(self, p, theta_d, z, size, texel_size):
        vset = z.bank.voronoi[int(theta_d[1])]
        dist = scaled_lookup(vset.distance, p["cell_scale"], size)
        # 0 near cell seeds, 1 along cell boundaries
        crease = threshold_remap(dist, p["crease_level"], p["crease_sharpness"])
        noise = ad.constant(z.bank.textures[int(theta_d[0])] - 0.5)
        h = crease * -1.0 * p["height_amplitude"] + noise * p["noise_amplitude"]
        n = height_to_normals(h, texel_size)
        rough = scalar_map(p["roughness"], size) + ad.reshape(crease, (size, size, 1)) * p["roughness_variation"]
        lobe = SpecularLobe(roughness=rough, f0=ad.constant(np.full(3, DIELECTRIC_F0)), normal=n)
        return MaterialMaps(size=size, normal=n, lobes=[lobe],
                            albedo=rgb_map(p["albedo_r"], p["albedo_g"], p["albedo_b"], size),
                            light_intensity=p["light_intensity"],
                            vignette_sigma=p["vignette_sigma"])


class PlasterModel(Model):
    """Thresholded fractal noise driving height and roughness variation."""

    name = "plaster"
    spec = ParamSpec("plaster", continuous=(
        *_ALBEDO,
        ContinuousParam("roughness", 0.45, 0.15, 0.10, 0.95, role="base GGX roughness"),
        ContinuousParam("roughness_variation", 0.15, 0.07, 0.05, 0.40, role="roughness swing from the noise mask"),
        ContinuousParam("noise_scale", 1.5, 0.6, 0.75, 4.0, role="spatial zoom of the fractal texture"),
        ContinuousParam("threshold_level", 0.5, 0.15, 0.2, 0.8, role="intensity threshold on the texture"),
        ContinuousParam("threshold_sharpness", 10.0, 5.0, 2.0, 40.0, role="threshold steepness"),
        ContinuousParam("height_amplitude", 0.005, 0.0025, 0.0015, 0.02, role="height scale, scene units"),
        *light_tail(),
    ), discrete=(
        DiscreteParam("noise_choice", 4, role="which pre-generated fractal texture"),
    ))

    def generate(self, p, theta_d, z, size, texel_size):
        tex = fourier_resample(z.bank.textures[int(theta_d[0])], p["noise_scale"], size)
        mask = threshold_remap(tex, p["threshold_level"], p["threshold_sharpness"])
        h = mask * p["height_amplitude"]
        n = height_to_normals(h, texel_size)
        rough = scalar_map(p["roughness"], size) + ad.reshape(mask, (size, size, 1)) * p["roughness_variation"]
        lobe = SpecularLobe(roughness=rough, f0=ad.constant(np.full(3, DIELECTRIC_F0)), normal=n)
        return MaterialMaps(size=size, normal=n, lobes=[lobe],
                            albedo=rgb_map(p["albedo_r"], p["albedo_g"], p["albedo_b"], size),
                            light_intensity=p["light_intensity"],
                            vignette_sigma=p["vignette_sigma"])


class BrushedMetalModel(Model):
    """Anisotropic GGX over an anisotropic heightfield; no diffuse term.

    Priors orient the brushing so the stretched highlight sits vertical in
    the image (larger roughness and longer heightfield correlation along y).
    """

    name = "brushed_metal"
    spec = ParamSpec("brushed_metal", continuous=(
        ContinuousParam("roughness_x", 0.10, 0.05, 0.03, 0.45, role="GGX roughness across the brushing"),
        ContinuousParam("roughness_y", 0.35, 0.12, 0.08, 0.80, role="GGX roughness along the brushing"),
        ContinuousParam("sigma_fx", 14.0, 5.0, 6.0, 28.0, role="spectrum std dev across, cycles/texture"),
        ContinuousParam("sigma_fy", 4.0, 2.0, 2.0, 12.0, role="spectrum std dev along, cycles/texture"),
        ContinuousParam("height_amplitude", 0.004, 0.002, 0.001, 0.02, role="heightfield scale, scene units"),
        ContinuousParam("f0_r", 0.85, 0.15, 0.30, 0.99, role="Fresnel reflectance at normal incidence, red"),
        ContinuousParam("f0_g", 0.83, 0.15, 0.30, 0.99, role="Fresnel reflectance at normal incidence, green"),
        ContinuousParam("f0_b", 0.80, 0.15, 0.30, 0.99, role="Fresnel reflectance at normal incidence, blue"),
        *light_tail(),
    ))

    def generate(self, p, theta_d, z, size, texel_size):
        h = synth_heightfield(p["sigma_fx"], p["sigma_fy"], p["height_amplitude"], z.phases, size)
        n = height_to_normals(h, texel_size)
        rough = ad.concat([scalar_map(p["roughness_x"], size),
                           scalar_map(p["roughness_y"], size)], axis=2)
        lobe = SpecularLobe(roughness=rough,
                            f0=rgb_vector(p["f0_r"], p["f0_g"], p["f0_b"]),
                            normal=n)
        return MaterialMaps(size=size, normal=n, lobes=[lobe], albedo=None,
                            light_intensity=p["light_intensity"],
                            vignette_sigma=p["vignette_sigma"])
