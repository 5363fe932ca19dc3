"""Differentiable procedural texture building blocks.

Heightfields come from Fourier synthesis against a fixed random phase grid;
noise textures and Voronoi cell maps are pre-generated from the random
inputs and enter the differentiable graph only as constants (optionally
resampled with a differentiable scale).  Everything tiles toroidally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def value_noise(size: int, cells: int, rng: np.random.Generator) -> np.ndarray:
    """Tileable 2D value noise: random lattice + smoothstep interpolation."""
    lattice = rng.random((cells, cells))
    u = np.arange(size) * (cells / size)
    iu = np.floor(u).astype(np.int64)
    fu = _smoothstep(u - iu)
    i0 = iu % cells
    i1 = (iu + 1) % cells

    vy0 = lattice[i0][:, i0]
    vy0x1 = lattice[i0][:, i1]
    vy1 = lattice[i1][:, i0]
    vy1x1 = lattice[i1][:, i1]
    fx = fu[None, :]
    fy = fu[:, None]
    top = vy0 * (1 - fx) + vy0x1 * fx
    bot = vy1 * (1 - fx) + vy1x1 * fx
    return top * (1 - fy) + bot * fy


def fractal_noise(size: int, rng: np.random.Generator,
                  octaves: int = 5, gain: float = 0.5, base_cells: int = 4) -> np.ndarray:
    """Sum of value-noise octaves, normalized to [0, 1]."""
    out = np.zeros((size, size))
    amp = 1.0
    cells = base_cells
    for _ in range(octaves):
        cells = min(cells, size)
        out += amp * value_noise(size, cells, rng)
        amp *= gain
        cells *= 2
    lo, hi = out.min(), out.max()
    return (out - lo) / (hi - lo)


def blue_noise_points(count: int, rng: np.random.Generator) -> np.ndarray:
    """Toroidal dart throwing in the unit square; returns (count, 2) points.

    Minimum distance starts at 0.7/sqrt(count) and relaxes if the throw
    stalls, so generation always terminates deterministically.  A toroidal
    bucket grid limits each rejection test to the neighboring buckets,
    keeping large point sets cheap.
    """
    if count < 1:
        raise ValueError("need at least one point")
    min_dist = 0.7 / np.sqrt(count)
    n_buckets = max(1, int(1.0 / min_dist))
    buckets: dict = {}
    pts: list[np.ndarray] = []
    misses = 0
    while len(pts) < count:
        cand = rng.random(2)
        bx, by = int(cand[0] * n_buckets), int(cand[1] * n_buckets)
        near = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                near.extend(buckets.get(((bx + dx) % n_buckets, (by + dy) % n_buckets), ()))
        ok = True
        if near:
            d = np.abs(np.asarray(near) - cand)
            d = np.minimum(d, 1.0 - d)
            ok = not (np.hypot(d[:, 0], d[:, 1]) < min_dist).any()
        if not ok:
            misses += 1
            if misses > 200:
                min_dist *= 0.9
                new_n = max(1, int(1.0 / min_dist))
                if new_n != n_buckets:
                    n_buckets = new_n
                    buckets = {}
                    for p in pts:
                        buckets.setdefault((int(p[0] * n_buckets), int(p[1] * n_buckets)), []).append(p)
                misses = 0
            continue
        pts.append(cand)
        buckets.setdefault((bx, by), []).append(cand)
        misses = 0
    return np.asarray(pts)


def toroidal_blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur with wrap-around, via the FFT; sigma in texels."""
    n = arr.shape[0]
    f = np.fft.fftfreq(n) * n
    fx, fy = np.meshgrid(f, f, indexing="ij")
    kern = np.exp(-2.0 * (np.pi * sigma / n) ** 2 * (fx ** 2 + fy ** 2))
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    out = np.empty(arr.shape)
    for c in range(arr.shape[2]):
        out[:, :, c] = np.fft.ifft2(np.fft.fft2(arr[:, :, c]) * kern).real
    return out[:, :, 0] if squeeze else out


def voronoi_unit_maps(points: np.ndarray, size: int):
    """Nearest-seed id and distance maps on a size x size toroidal grid.

    Seed positions are snapped to texel centers so the distance map is
    exactly zero at each seed's texel.
    """
    if len(points) == 0:
        raise ValueError("empty Voronoi point set")
    snapped = (np.floor(points * size) + 0.5) / size
    centers = (np.arange(size) + 0.5) / size
    gx = centers[None, :, None]  # (1, size, npts) after broadcast
    gy = centers[:, None, None]
    dx = np.abs(gx - snapped[None, None, :, 0])
    dy = np.abs(gy - snapped[None, None, :, 1])
    dx = np.minimum(dx, 1.0 - dx)
    dy = np.minimum(dy, 1.0 - dy)
    d2 = dx * dx + dy * dy
    ids = d2.argmin(axis=2)
    dist = np.sqrt(d2.min(axis=2))
    return ids, dist


@dataclass(frozen=True)
class VoronoiSet:
    """One pre-generated cell map: seeds plus derived per-texel maps."""
    points: np.ndarray      # (n, 2) in the unit square
    cell_id: np.ndarray     # (size, size) int
    distance: np.ndarray    # (size, size), 0 at seed texels
    features: np.ndarray    # (size, size, k) per-cell feature channels, antialiased


def make_voronoi_set(count: int, size: int, rng: np.random.Generator,
                     feature_channels: int = 2) -> VoronoiSet:
    """Generate seeds and bake id/distance/per-cell-feature maps.

    Feature maps are antialiased with a small toroidal blur: cell interiors
    keep their per-cell draw while boundaries blend over a couple of texels,
    which keeps gradients through a resampling scale finite-difference
    accurate.
    """
    if count < 16:
        raise ValueError("need at least 16 Voronoi points")
    points = blue_noise_points(count, rng)
    ids, dist = voronoi_unit_maps(points, size)
    cell_values = rng.standard_normal((count, feature_channels))
    features = toroidal_blur(cell_values[ids], sigma=1.0)
    return VoronoiSet(points=points, cell_id=ids, distance=dist, features=features)


@dataclass(frozen=True)
class NoiseBank:
    """Pre-generated stationary textures and cell maps, selected by theta_d."""
    textures: list          # of (size, size) arrays in [0, 1]
    voronoi: list           # of VoronoiSet

    def __post_init__(self):
        if len(self.textures) < 2 or len(self.voronoi) < 2:
            raise ValueError("noise bank needs >= 2 entries per family for the discrete choice")


def make_noise_bank(size: int, rng: np.random.Generator,
                    n_textures: int = 4, n_voronoi: int = 2,
                    voronoi_counts=(1536, 96)) -> NoiseBank:
    """First Voronoi set is fine-grained (metallic flakes), later ones are
    coarser (leather grain); either remains selectable by a discrete choice.
    """
    textures = []
    for k in range(n_textures):
        textures.append(fractal_noise(size, rng, octaves=5, gain=0.5, base_cells=16 * (1 + k % 2)))
    voronoi = [make_voronoi_set(voronoi_counts[i % len(voronoi_counts)], size, rng)
               for i in range(n_voronoi)]
    return NoiseBank(textures=textures, voronoi=voronoi)


# ---------------------------------------------------------------------------
# differentiable operations
# ---------------------------------------------------------------------------

def frequency_grids(size: int):
    """Integer frequency coordinates (cycles per texture) for an FFT grid."""
    f = np.fft.fftfreq(size) * size
    fx = f[None, :].repeat(size, axis=0)
    fy = f[:, None].repeat(size, axis=1)
    return fx, fy


def hermitian_phases(phases: np.ndarray) -> np.ndarray:
    """Antisymmetrize a phase grid: psi(-k) = -psi(k), zero on self-conjugate bins.

    Attaching exp(i*psi) to an even amplitude grid yields an exactly
    Hermitian spectrum, so the inverse FFT is real and the per-bin magnitude
    is untouched by the phase draw.
    """
    size = phases.shape[0]
    rev = (-np.arange(size)) % size
    return 0.5 * (phases - phases[rev[:, None], rev[None, :]])


def synth_heightfield(sigma_fx, sigma_fy, amplitude, phases: np.ndarray, size: int):
    """Fourier-synthesized heightfield with a Gaussian power spectrum.

    The per-texel spectral amplitude is the square root of the Gaussian
    power spectrum (folded into a single exp so gradients stay clean where
    the spectrum underflows), the fixed random phase from `phases` is
    attached in conjugate-symmetrized form, and the real part of the
    inverse FFT is scaled by `amplitude`.

    Differentiable in (sigma_fx, sigma_fy, amplitude); `phases` belongs to
    the fixed random inputs.
    """
    if phases.shape != (size, size):
        raise ValueError("phase grid size mismatch")
    fx, fy = frequency_grids(size)
    dc_mask = np.ones((size, size))
    dc_mask[0, 0] = 0.0  # no constant offset

    qx = ad.power(ad.div(ad.constant(fx), sigma_fx), 2)
    qy = ad.power(ad.div(ad.constant(fy), sigma_fy), 2)
    amp = ad.exp((qx + qy) * -0.25)  # sqrt of exp(-(qx+qy)/2)
    amp = amp * ad.constant(dc_mask)

    spec = amp * ad.constant(np.exp(1j * hermitian_phases(phases)))
    field = ad.creal(ad.ifft2(spec))
    return field * amplitude


def height_to_normals(h, texel_size: float):
    """Per-pixel unit normals from central differences (toroidal)."""
    if texel_size <= 0:
        raise ValueError("texel_size must be positive")
    inv = 1.0 / (2.0 * texel_size)
    dhdx = (ad.roll(h, -1, axis=1) - ad.roll(h, 1, axis=1)) * inv
    dhdy = (ad.roll(h, -1, axis=0) - ad.roll(h, 1, axis=0)) * inv
    size = h.shape[0]
    nx = ad.reshape(-dhdx, (size, size, 1))
    ny = ad.reshape(-dhdy, (size, size, 1))
    nz = ad.constant(np.ones((size, size, 1)))
    n = ad.concat([nx, ny, nz], axis=2)
    norm = ad.sqrt(ad.asum(n * n, axis=2, keepdims=True))
    return n / norm


def scaled_lookup(table: np.ndarray, scale, size: int):
    """Resample a toroidal table, zooming about the image center
    (differentiable in scale).

    scale = 1 reproduces the table exactly; larger scales shrink features.
    Centering keeps coordinate magnitudes (and so the sensitivity of the
    lookup to scale) as small as possible.
    """
    c = size // 2
    base = np.arange(size, dtype=np.float64) - c
    x = ad.constant(base[None, :].repeat(size, axis=0)) * scale + float(c)
    y = ad.constant(base[:, None].repeat(size, axis=1)) * scale + float(c)
    return ad.periodic_lookup(table, x, y)


def fourier_resample(table: np.ndarray, scale, size: int):
    """Resample a toroidal table by evaluating its trigonometric interpolant
    at coordinates zoomed about the image center.

    Unlike stencil interpolation this is smooth in `scale` to all orders
    (no texel-boundary knots), which keeps finite-difference checks of
    gradients through `scale` tight even when many pixels contribute.
    Exact at scale = 1 up to float round-off.
    """
    if table.ndim == 3:
        chans = [fourier_resample(table[:, :, c], scale, size) for c in range(table.shape[2])]
        return ad.concat([ad.reshape(ch, (size, size, 1)) for ch in chans], axis=2)
    n = table.shape[0]
    if table.shape != (n, n) or n != size:
        raise ValueError("fourier_resample expects a square table matching the output size")
    coeff = np.fft.fft2(table) / (n * n)
    k = np.fft.fftfreq(n) * n
    c = n // 2
    base = np.arange(n, dtype=np.float64) - c
    slope = np.outer(base, k) * (2.0 * np.pi / n)      # (pixel, mode)
    intercept = np.outer(np.full(n, float(c)), k) * (2.0 * np.pi / n)
    ang = ad.constant(slope) * scale + ad.constant(intercept)
    e_re = ad.cos(ang)
    e_im = ad.sin(ang)
    # value = Re( E_y @ C @ E_x^T ); the grid is square so E_y = E_x
    m_re = ad.matmul(e_re, ad.constant(coeff.real)) - ad.matmul(e_im, ad.constant(coeff.imag))
    m_im = ad.matmul(e_re, ad.constant(coeff.imag)) + ad.matmul(e_im, ad.constant(coeff.real))
    return ad.matmul(m_re, ad.transpose2(e_re)) - ad.matmul(m_im, ad.transpose2(e_im))


def voronoi_maps(vset: VoronoiSet, scale, size: int):
    """Scaled cell-id and cell-distance maps.

    Ids are resampled by nearest lookup (discrete, no gradients); the
    distance and feature maps go through the differentiable resampler so
    gradients flow into `scale`.
    """
    if len(vset.points) == 0:
        raise ValueError("empty Voronoi point set")
    sval = float(scale.value) if isinstance(scale, ad.Var) else float(scale)
    if sval <= 0:
        raise ValueError("scale must be positive")
    n = vset.cell_id.shape[0]
    c = size // 2
    idx = np.mod(np.round((np.arange(size) - c) * sval + c), n).astype(np.int64)
    ids = vset.cell_id[idx[:, None], idx[None, :]]
    dist = scaled_lookup(vset.distance, scale, size)
    return ids, dist


def threshold_remap(t, level, sharpness):
    """Smooth threshold: sigmoid((t - level) * sharpness), output in (0, 1)."""
    return ad.sigmoid((t - level) * sharpness)
