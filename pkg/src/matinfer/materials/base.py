"""Shared structure for the procedural forward models.

Each model maps (theta_c as named Vars, theta_d, RandomInputs, size,
texel_size) to MaterialMaps, a bag of per-pixel maps plus the global light
and vignette scalars that the renderer consumes.  Everything is a
deterministic, differentiable function of theta_c for fixed random inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..params import ContinuousParam, ParamSpec
from ..texture import NoiseBank, make_noise_bank

# Fresnel reflectance at normal incidence for IOR 1.5 dielectrics
DIELECTRIC_F0 = 0.04


@dataclass(frozen=True)
class RandomInputs:
    """The fixed random vector z: fully determined by the master seed."""
    seed: int
    size: int
    phases: np.ndarray       # (size, size) in [0, 2pi)
    phases_alt: np.ndarray   # independent second grid (wood rings etc.)
    bank: NoiseBank

    @classmethod
    def create(cls, seed: int, size: int) -> "RandomInputs":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, size])))
        phases = rng.uniform(0.0, 2.0 * np.pi, (size, size))
        phases_alt = rng.uniform(0.0, 2.0 * np.pi, (size, size))
        bank = make_noise_bank(size, rng)
        return cls(seed=seed, size=size, phases=phases, phases_alt=phases_alt, bank=bank)


@dataclass
class SpecularLobe:
    roughness: ad.Var          # (H, W, 1) isotropic or (H, W, 2) anisotropic
    f0: ad.Var                 # (3,) or (H, W, 3) Fresnel reflectance at normal incidence
    normal: ad.Var             # (H, W, 3) unit shading normal for this lobe
    weight: ad.Var | float = 1.0


@dataclass
class MaterialMaps:
    """Per-pixel maps plus global scalars produced by a forward model."""
    size: int
    normal: ad.Var                      # primary shading normal
    lobes: list = field(default_factory=list)
    albedo: ad.Var | None = None        # (H, W, 3) Lambertian albedo, or None
    light_intensity: ad.Var | float = 1.0
    vignette_sigma: ad.Var | float = 1e6

    @property
    def roughness(self):
        return self.lobes[0].roughness if self.lobes else None

    @property
    def fresnel_f0(self):
        return self.lobes[0].f0 if self.lobes else None

    @property
    def lobe_weights(self):
        return [lobe.weight for lobe in self.lobes]


# ---------------------------------------------------------------------------
# small helpers shared by the model recipes
# ---------------------------------------------------------------------------

def const_map(size: int, channels: int = 1):
    return ad.constant(np.ones((size, size, channels)))


def scalar_map(x, size: int):
    """Broadcast a scalar Var to an (H, W, 1) map."""
    return const_map(size) * x


def rgb_vector(r, g, b):
    """Pack three scalar Vars into a (3,) vector."""
    return ad.concat([ad.reshape(r, (1,)), ad.reshape(g, (1,)), ad.reshape(b, (1,))])


def rgb_map(r, g, b, size: int):
    """Broadcast three scalar Vars to an (H, W, 3) map."""
    one = const_map(size)
    return ad.concat([one * r, one * g, one * b], axis=2)


def flat_normal(size: int):
    n = np.zeros((size, size, 3))
    n[..., 2] = 1.0
    return ad.constant(n)


def clamp01(x):
    return ad.minimum(ad.maximum(x, 0.0), 1.0)


def light_tail(light_mean=8.0, light_std=5.0, light_low=0.5, light_high=40.0):
    """The light-intensity and vignette-width parameters appended to models."""
    return (
        ContinuousParam("light_intensity", light_mean, light_std, light_low, light_high,
                        role="flash intensity (unknown, uncalibrated)"),
        ContinuousParam("vignette_sigma", 1.2, 0.6, 0.3, 4.0,
                        role="image-space Gaussian vignette width"),
    )


class Model:
    """One procedural material: a ParamSpec plus the generate recipe."""

    name: str = ""
    spec: ParamSpec

    def generate(self, p: dict, theta_d: np.ndarray, z: RandomInputs,
                 size: int, texel_size: float) -> MaterialMaps:
        raise NotImplementedError

    def generate_from_values(self, theta_c, theta_d, z: RandomInputs,
                             size: int, texel_size: float) -> MaterialMaps:
        """Validate bounded values and run the recipe off the autodiff tape."""
        theta_c, theta_d = self.spec.validate(theta_c, theta_d)
        p = {name: ad.constant(v) for name, v in zip(self.spec.names(), theta_c)}
        return self.generate(p, theta_d, z, size, texel_size)
