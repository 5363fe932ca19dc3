"""Procedural texture building blocks: Fourier heightfields, fractal noise,
Voronoi cell maps, and the differentiable threshold.

Writes demos/out/textures.png with a contact sheet.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from matinfer import autodiff as ad
from matinfer import texture as tx

size = 128
rng = np.random.default_rng(7)
phases = rng.uniform(0, 2 * np.pi, (size, size))

fig, axes = plt.subplots(2, 4, figsize=(14, 7))

# isotropic vs anisotropic spectra
for ax, (sx, sy, label) in zip(axes[0], [
    (6, 6, "isotropic, sigma_f=6"),
    (16, 16, "isotropic, sigma_f=16"),
    (20, 4, "anisotropic 20x4"),
    (4, 20, "anisotropic 4x20"),
]):
    with ad.Tape():
        h = tx.synth_heightfield(ad.constant(float(sx)), ad.constant(float(sy)),
                                 ad.constant(1.0), phases, size).value
    ax.imshow(h, cmap="gray")
    ax.set_title(label, fontsize=9)
    ax.axis("off")

bank = tx.make_noise_bank(size, np.random.default_rng(3))
axes[1][0].imshow(bank.textures[0], cmap="gray")
axes[1][0].set_title("fractal noise (bank 0)", fontsize=9)
axes[1][1].imshow(bank.voronoi[1].distance, cmap="magma")
axes[1][1].set_title("Voronoi cell distance", fontsize=9)

with ad.Tape():
    zoomed = tx.scaled_lookup(bank.voronoi[1].distance, ad.constant(2.0), size).value
    masked = tx.threshold_remap(ad.constant(bank.textures[0]),
                                ad.constant(0.55), ad.constant(25.0)).value
axes[1][2].imshow(zoomed, cmap="magma")
axes[1][2].set_title("same map, scale = 2", fontsize=9)
axes[1][3].imshow(masked, cmap="gray")
axes[1][3].set_title("smooth threshold of the noise", fontsize=9)
for ax in axes[1]:
    ax.axis("off")

os.makedirs(os.path.join(os.path.dirname(__file__), "out"), exist_ok=True)
out = os.path.join(os.path.dirname(__file__), "out", "textures.png")
fig.tight_layout()
fig.savefig(out, dpi=110)
print(f"wrote {out}")
