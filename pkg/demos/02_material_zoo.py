"""Render every procedural material at its prior mode under the collocated
flash rig, plus a second random draw of each, into demos/out/zoo.png.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from matinfer import autodiff as ad
from matinfer.imgio import linear_to_srgb
from matinfer.materials import MODELS, RandomInputs
from matinfer.render import CameraRig, render_collocated

size = 128
rig = CameraRig(resolution=size)
z = RandomInputs.create(0, size)
rng = np.random.default_rng(12)

names = list(MODELS)
fig, axes = plt.subplots(2, len(names), figsize=(3 * len(names), 6.4))
for col, name in enumerate(names):
    model = MODELS[name]
    for row, (tc, td) in enumerate([
        (model.spec.prior_mode(), np.zeros(model.spec.n_discrete, dtype=np.int64)),
        model.spec.sample_prior(rng),
    ]):
        with ad.Tape():
            maps = model.generate_from_values(tc, td, z, size, rig.texel_size)
            img = np.asarray(render_collocated(maps, rig).value)
        axes[row][col].imshow(linear_to_srgb(np.clip(img, 0, 1)))
        axes[row][col].axis("off")
        if row == 0:
            axes[row][col].set_title(f"{name}\n({model.spec.n_continuous} params)", fontsize=9)

os.makedirs(os.path.join(os.path.dirname(__file__), "out"), exist_ok=True)
out = os.path.join(os.path.dirname(__file__), "out", "zoo.png")
fig.tight_layout()
fig.savefig(out, dpi=110)
print(f"wrote {out}")
