"""Homogeneous translucent demo material with two free parameters.

A uniform Lambertian patch whose reflectance is the classical
diffusion-approximation diffuse albedo evaluated from the absorption
coefficient (fixed) and the reduced scattering coefficient
sigma_s' = (1 - g) * sigma_s.  Because sigma_s' is formed first and
everything downstream depends on the parameters only through it, parameter
pairs related by (1 - g) sigma_s = (1 - g*) sigma_s* produce bitwise
identical images: the posterior carries the similarity-relation ridge
exactly.

Light intensity and vignette are fixed constants here; freeing them would
smear the two-parameter ridge this demo exists to expose.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..params import ContinuousParam, ParamSpec
from .base import MaterialMaps, Model, flat_normal

SIGMA_A = 0.1
LIGHT_INTENSITY = 12.0
VIGNETTE_SIGMA = 1.5


def diffusion_reflectance(sigma_s_prime, sigma_a=SIGMA_A):
    """Total diffuse reflectance of a semi-infinite slab (diffusion theory,
    index-matched boundary)."""
    alpha = sigma_s_prime / (sigma_s_prime + sigma_a)
    s = ad.sqrt((1.0 - alpha) * 3.0)
    return alpha * 0.5 * (1.0 + ad.exp(s * (-4.0 / 3.0))) * ad.exp(-1.0 * s)


class TranslucentDemoModel(Model):
    name = "translucent_demo"
    spec = ParamSpec("translucent_demo", continuous=(
        ContinuousParam("sigma_s", 1.5, 1.0, 0.05, 5.0, role="scattering coefficient"),
        ContinuousParam("g", 0.3, 0.4, -0.9, 0.9, role="phase function first Legendre moment"),
    ))

    def generate(self, p, theta_d, z, size, texel_size):
        g_val = float(p["g"].value)
        s_val = float(p["sigma_s"].value)
        if not (-1.0 < g_val < 1.0):
            raise ValueError(f"g={g_val} is at or beyond the physical boundary (-1, 1)")
        if s_val <= 0.0:
            raise ValueError(f"sigma_s={s_val} must be positive")
        sigma_s_prime = (1.0 - p["g"]) * p["sigma_s"]  # sole route into the image
        refl = diffusion_reflectance(sigma_s_prime)
        albedo = ad.constant(np.ones((size, size, 3))) * refl
        return MaterialMaps(size=size, normal=flat_normal(size), lobes=[],
                            albedo=albedo,
                            light_intensity=ad.constant(LIGHT_INTENSITY),
                            vignette_sigma=ad.constant(VIGNETTE_SIGMA))
