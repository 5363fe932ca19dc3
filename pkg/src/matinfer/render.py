"""Differentiable collocated-flash rendering of material maps.

Camera and point light share a pinhole at a known distance above a planar,
fronto-parallel sample, so the view, light, and half vectors coincide at
every pixel.  Radiance is linear RGB, never clamped or tone mapped:

    L(pixel) = intensity * factor(pixel) / r(pixel)^2 * vignette(pixel)

where `factor` folds the BRDF lobes and the foreshortening cosine, r is the
per-pixel ray length (inverse-square falloff), and the vignette is an
image-space Gaussian of the normalized distance to the image center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

_MIN_COS = 1e-5


@dataclass(frozen=True)
class CameraRig:
    """Collocated pinhole camera + point light."""
    fov: float = 0.7          # radians, full horizontal angle
    distance: float = 2.0     # scene units from sample plane
    resolution: int = 128

    def __post_init__(self):
        if not (0.0 < self.fov < math.pi):
            raise ValueError("fov must be in (0, pi)")
        if self.distance <= 0:
            raise ValueError("distance must be positive")

    @property
    def half_extent(self) -> float:
        """Half of the sample-plane width covered by the image."""
        return self.distance * math.tan(self.fov / 2.0)

    @property
    def texel_size(self) -> float:
        """Physical size of one pixel footprint on the sample plane."""
        return 2.0 * self.half_extent / self.resolution

    def pixel_geometry(self):
        """Per-pixel view direction (= light = half vector), ray length, NDC radius^2."""
        n = self.resolution
        ndc = (2.0 * (np.arange(n) + 0.5) / n) - 1.0
        px = ndc[None, :] * self.half_extent
        py = ndc[:, None] * self.half_extent
        px = np.broadcast_to(px, (n, n))
        py = np.broadcast_to(py, (n, n))
        dz = np.full((n, n), self.distance)
        r = np.sqrt(px * px + py * py + dz * dz)
        omega = np.stack([-px / r, -py / r, dz / r], axis=2)
        ndc_r2 = ndc[None, :] ** 2 + ndc[:, None] ** 2
        return omega, r, ndc_r2


# ---------------------------------------------------------------------------
# microfacet pieces
# ---------------------------------------------------------------------------

def ggx_d(n_dot_h, alpha):
    """Isotropic GGX normal distribution: a^2 / (pi ((n.h)^2 (a^2-1) + 1)^2)."""
    a2 = alpha * alpha
    k = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0
    return a2 / (math.pi * k * k)


def ggx_d_aniso(h_slopes, alpha_x, alpha_y):
    """Elliptical GGX evaluated from half-vector slopes (-hx/hz, -hy/hz)."""
    sx, sy = h_slopes
    s2 = sx * sx + sy * sy
    cos2 = 1.0 / (1.0 + s2)
    q = 1.0 + (sx / alpha_x) * (sx / alpha_x) + (sy / alpha_y) * (sy / alpha_y)
    return 1.0 / (math.pi * alpha_x * alpha_y * (cos2 * cos2) * (q * q))


def _smith_g_collocated(alpha2_tan2):
    # height-correlated Smith for coincident in/out directions:
    # G = 1 / (1 + 2 Lambda) = 1 / sqrt(1 + a^2 tan^2)
    return 1.0 / ad.sqrt(1.0 + alpha2_tan2)


def _lobe_radiance(lobe, omega: np.ndarray):
    """w * D * G * F / (4 (n.w)) for one lobe under collocated geometry."""
    n = lobe.normal
    cos = ad.asum(n * ad.constant(omega), axis=2, keepdims=True)
    cos = ad.maximum(cos, _MIN_COS)
    rough = lobe.roughness
    if rough.value.shape[2] == 1:
        alpha = rough * rough  # GGX alpha = r^2
        d = ggx_d(cos, alpha)
        tan2 = (1.0 - cos * cos) / (cos * cos)
        g = _smith_g_collocated(alpha * alpha * tan2)
    else:
        # slopes of omega in the tangent frame of the shading normal, with the
        # tangent aligned to the image x axis
        ax = rough[:, :, 0:1] ** 2
        ay = rough[:, :, 1:2] ** 2
        t, b = _tangent_frame(n)
        wx = ad.asum(t * ad.constant(omega), axis=2, keepdims=True)
        wy = ad.asum(b * ad.constant(omega), axis=2, keepdims=True)
        sx = wx / cos * -1.0
        sy = wy / cos * -1.0
        d = ggx_d_aniso((sx, sy), ax, ay)
        a2t2 = (ax * ax * wx * wx + ay * ay * wy * wy) / (cos * cos)
        g = _smith_g_collocated(a2t2)
    # collocated: omega.h = 1, so Schlick Fresnel reduces to F0 exactly
    f0 = lobe.f0
    spec = d * g / (4.0 * cos)
    return spec * f0 * lobe.weight


def _tangent_frame(n):
    """Orthonormal (t, b) from the minimal rotation taking +z to the normal.

    This frame is covariant under the x/y mirror (swapping the anisotropy
    axes transposes the response exactly), which a Gram-Schmidt anchoring
    to a fixed axis is not.  Valid for upward-facing normals (n_z > -1).
    """
    nx = n[:, :, 0:1]
    ny = n[:, :, 1:2]
    nz = n[:, :, 2:3]
    k = 1.0 / (1.0 + nz)
    t = ad.concat([1.0 - nx * nx * k, -1.0 * nx * ny * k, -1.0 * nx], axis=2)
    b = ad.concat([-1.0 * nx * ny * k, 1.0 - ny * ny * k, -1.0 * ny], axis=2)
    return t, b


def eval_collocated(maps, omega: np.ndarray):
    """Per-pixel RGB radiance factor: specular lobes plus an optional
    Lambertian term, with the foreshortening cosine folded in."""
    out = None
    for lobe in maps.lobes:
        term = _lobe_radiance(lobe, omega)
        out = term if out is None else out + term
    if maps.albedo is not None:
        cos = ad.maximum(ad.asum(maps.normal * ad.constant(omega), axis=2, keepdims=True), 0.0)
        diffuse = maps.albedo * (1.0 / math.pi) * cos
        out = diffuse if out is None else out + diffuse
    if out is None:
        raise ValueError("material has neither specular lobes nor a diffuse term")
    return out


def render_collocated(maps, rig: CameraRig):
    """Render material maps to a linear RGB grid under the collocated rig."""
    if maps.size != rig.resolution:
        raise ValueError(f"maps resolution {maps.size} != rig resolution {rig.resolution}")
    omega, r, ndc_r2 = rig.pixel_geometry()
    factor = eval_collocated(maps, omega)
    falloff = ad.constant((1.0 / (r * r))[:, :, None])
    sig = maps.vignette_sigma
    vignette = ad.exp(ad.constant(-ndc_r2[:, :, None] / 2.0) / (sig * sig))
    return factor * falloff * vignette * maps.light_intensity
