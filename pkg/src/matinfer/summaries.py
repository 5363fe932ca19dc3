"""Summary functions: images -> flat real vectors compared under a Gaussian
error model.

Available components: whole-image RGB mean, binned RGB means (concentric
annuli or vertical strips), per-bin 1D FFT magnitude spectra, and Gram
matrices of a loadable convolutional feature extractor.  A composed summary
concatenates weighted components; the layout descriptor travels with the
values so target and candidate vectors can be checked for compatibility.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import autodiff as ad

FFT_MAG_EPS = 1e-12  # keeps |.| differentiable at zero magnitude


@dataclass(frozen=True)
class SummaryComponent:
    name: str
    offset: int
    length: int
    weight: float = 1.0


@dataclass
class SummaryVector:
    """Flat summary values plus the component layout they were built from."""
    values: np.ndarray
    layout: tuple

    def __post_init__(self):
        total = sum(c.length for c in self.layout)
        if total != len(self.values):
            raise ValueError("layout does not cover the summary vector")

    def component(self, name: str) -> np.ndarray:
        for c in self.layout:
            if c.name == name:
                return self.values[c.offset:c.offset + c.length]
        raise KeyError(name)


def layouts_match(a, b) -> bool:
    return tuple(a) == tuple(b)


# ---------------------------------------------------------------------------
# bin machinery (fixed masks, cached per geometry)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _concentric_matrix(size: int, k: int) -> np.ndarray:
    """(k, size*size) row-normalized averaging matrix over equal-width annuli."""
    c = (np.arange(size) + 0.5) / size - 0.5
    r = np.hypot(c[None, :], c[:, None])
    rmax = r.max() * (1 + 1e-9)
    idx = np.minimum((r / rmax * k).astype(int), k - 1).ravel()
    m = np.zeros((k, size * size))
    m[idx, np.arange(size * size)] = 1.0
    return m / m.sum(axis=1, keepdims=True)


@lru_cache(maxsize=32)
def _vertical_matrix(size: int, k: int) -> np.ndarray:
    """(k, size*size) averaging matrix over vertical strips."""
    if size % k:
        raise ValueError(f"bin count {k} does not divide image width {size}")
    cols = np.tile(np.arange(size) // (size // k), (size, 1)).ravel()
    m = np.zeros((k, size * size))
    m[cols, np.arange(size * size)] = 1.0
    return m / m.sum(axis=1, keepdims=True)


def _bin_means(img, matrix: np.ndarray):
    size = img.shape[0]
    flat = ad.reshape(img, (size * size, 3))
    return ad.reshape(ad.linmap(matrix, flat), (-1,))  # k bins x RGB, row-major


# ---------------------------------------------------------------------------
# summary operations
# ---------------------------------------------------------------------------

def summary_mean(img):
    """Channel-wise image mean; length 3.

    Summed in sorted order, so the value is bit-identical under any
    permutation of the pixels.
    """
    vals = ad.channel_mean_sorted(img)
    return vals, (SummaryComponent("mean", 0, 3),)


def summary_bins(img, layout: str = "concentric", k: int = 16):
    """Per-bin RGB means; length 3k.  k=1 reduces to the whole-image mean."""
    if k < 1:
        raise ValueError("need at least one bin")
    size = img.shape[0]
    if layout == "concentric":
        m = _concentric_matrix(size, k)
    elif layout == "vertical":
        m = _vertical_matrix(size, k)
    else:
        raise ValueError(f"unknown bin layout {layout!r}")
    vals = _bin_means(img, m)
    return vals, (SummaryComponent(f"bins_{layout}_{k}", 0, 3 * k),)


def summary_fft_bins(img, k: int = 64):
    """Vertical-bin means plus per-bin 1D FFT magnitudes of the column profile.

    Each bin is reduced to a single column (mean over the bin's columns and
    channels) and transformed along the image height; the first height/2
    non-DC magnitudes are kept.  The DC bin is excluded: it is the bin mean
    scaled by the height, and the means are already concatenated at their
    natural scale.
    """
    size = img.shape[0]
    if size & (size - 1):
        raise ValueError("image height must be a power of two")
    means = _bin_means(img, _vertical_matrix(size, k))

    gray = ad.amean(img, axis=2)                      # (H, W)
    prof = ad.amean(ad.reshape(gray, (size, k, size // k)), axis=2)  # (H, k)
    rows = ad.transpose2(prof)                        # one row per bin
    spec = ad.fft1_batch(rows)
    re = ad.creal(spec)
    im = ad.cimag(spec)
    mag = ad.sqrt(re * re + im * im + FFT_MAG_EPS)
    half = ad.reshape(ad.getitem(mag, (slice(None), slice(1, size // 2 + 1))), (-1,))
    vals = ad.concat([means, half])
    layout = (SummaryComponent(f"bins_vertical_{k}", 0, 3 * k),
              SummaryComponent(f"fft_vertical_{k}", 3 * k, k * (size // 2)))
    return vals, layout


def summary_gram(img, net: "FeatureNet"):
    """Concatenated flattened Gram matrices at the network's tap points.

    G_ij = mean over pixels of the elementwise product F_i * F_j; the output
    length depends only on channel counts, never on image size.
    """
    taps = net.apply(img)
    parts = []
    layout = []
    offset = 0
    for t, feat in enumerate(taps):
        h, w, c = feat.shape
        flat = ad.reshape(feat, (h * w, c))
        gram = ad.matmul(ad.transpose2(flat), flat) * (1.0 / (h * w))
        parts.append(ad.reshape(gram, (-1,)))
        layout.append(SummaryComponent(f"gram{t}", offset, c * c))
        offset += c * c
    return ad.concat(parts), tuple(layout)


def range_compress(img):
    """Map linear radiance into [0, 1) via x / (1 + x).

    Smooth, monotone, and bounded: specular glints stop dominating
    quadratic feature statistics, the way display-encoded inputs behave for
    pretrained descriptor networks.  Use by wrapping a summary op, e.g.
    ``lambda im: summary_gram(range_compress(im), net)``.
    """
    return img / (1.0 + img)


def summary_compose(components):
    """Concatenate (values, layout) pairs with scalar weights folded in.

    `components` is a list of (summary_callable, weight); each callable maps
    an image to (values, layout).
    """
    if not components:
        raise ValueError("need at least one summary component")

    def composed(img):
        parts = []
        layout = []
        offset = 0
        for fn, weight in components:
            vals, sub = fn(img)
            parts.append(vals * float(weight))
            for c in sub:
                layout.append(SummaryComponent(c.name, offset + c.offset, c.length,
                                               weight=float(weight) * c.weight))
            offset += sum(c.length for c in sub)
        return ad.concat(parts), tuple(layout)

    return composed


def evaluate_summary(summary_fn, img: np.ndarray) -> SummaryVector:
    """Apply a summary off-tape to a plain image array."""
    with ad.Tape():
        vals, layout = summary_fn(ad.constant(img))
    return SummaryVector(values=np.asarray(vals.value).copy(), layout=layout)


# ---------------------------------------------------------------------------
# feature network
# ---------------------------------------------------------------------------

LAYER_CONV, LAYER_RECTIFY, LAYER_AVGPOOL, LAYER_TAP = 0, 1, 2, 3

_MAGIC = b"MSFN"
_VERSION = 1


class FeatureNet:
    """Fixed-weight convolutional stack with Gram tap points.

    Layers are ordered (conv, rectify, tap, avgpool) blocks; taps mark where
    Gram matrices are extracted, always immediately before a pooling layer.
    """

    def __init__(self, layers):
        self.layers = list(layers)
        self._validate()

    def _validate(self):
        for i, layer in enumerate(self.layers):
            if layer[0] == LAYER_TAP:
                nxt = self.layers[i + 1] if i + 1 < len(self.layers) else None
                if nxt is None or nxt[0] != LAYER_AVGPOOL:
                    raise ValueError("each tap must sit immediately before a pooling layer")
            elif layer[0] == LAYER_CONV:
                w, b = layer[1], layer[2]
                if not (np.isfinite(w).all() and np.isfinite(b).all()):
                    raise ValueError("feature net weights must be finite")

    @property
    def receptive_field(self) -> int:
        # minimum input size so every pool sees an even extent
        pools = sum(1 for l in self.layers if l[0] == LAYER_AVGPOOL)
        return 2 ** pools

    def in_channels(self) -> int:
        for layer in self.layers:
            if layer[0] == LAYER_CONV:
                return layer[1].shape[2]
        raise ValueError("net has no convolution layers")

    def apply(self, img):
        size = img.shape[0]
        if size < self.receptive_field:
            raise ValueError(f"image size {size} below net receptive field "
                             f"{self.receptive_field}")
        if img.shape[2] != self.in_channels():
            raise ValueError(f"image has {img.shape[2]} channels, "
                             f"net expects {self.in_channels()}")
        taps = []
        x = img
        for layer in self.layers:
            kind = layer[0]
            if kind == LAYER_CONV:
                x = ad.conv2d(x, layer[1]) + ad.constant(layer[2])
            elif kind == LAYER_RECTIFY:
                x = ad.relu(x)
            elif kind == LAYER_AVGPOOL:
                x = ad.avgpool2(x)
            elif kind == LAYER_TAP:
                taps.append(x)
            else:
                raise ValueError(f"unknown layer tag {kind}")
        return taps


def default_feature_net(seed: int = 2024,
                        widths=(16, 32, 64), kernel: int = 3) -> FeatureNet:
    """Three-block random net with variance-preserving filters.

    Stands in for a pretrained descriptor so the repository is
    self-contained; a real weights file drops in via MATINFER_WEIGHTS or
    `load_feature_net`.
    """
    rng = np.random.default_rng(seed)
    layers = []
    cin = 3
    for cout in widths:
        scale = 1.0 / np.sqrt(kernel * kernel * cin)
        w = rng.standard_normal((kernel, kernel, cin, cout)) * scale
        b = np.zeros(cout)
        layers += [(LAYER_CONV, w, b), (LAYER_RECTIFY,), (LAYER_TAP,), (LAYER_AVGPOOL,)]
        cin = cout
    return FeatureNet(layers)


def save_feature_net(net: FeatureNet, path: str):
    """Write the binary weights file: magic, version, layer records."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _VERSION, len(net.layers)))
        for layer in net.layers:
            f.write(struct.pack("<B", layer[0]))
            if layer[0] == LAYER_CONV:
                w, b = layer[1], layer[2]
                kh, kw, cin, cout = w.shape
                if kh != kw:
                    raise ValueError("only square kernels are serializable")
                f.write(struct.pack("<III", cout, cin, kh))
                # row-major (out, in, kh, kw) float32
                f.write(np.ascontiguousarray(w.transpose(3, 2, 0, 1), dtype="<f4").tobytes())
                f.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def load_feature_net(path: str) -> FeatureNet:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != _MAGIC:
        raise ValueError(f"{path}: not a feature-net weights file (bad magic)")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported weights version {version}")
    off = 12
    layers = []
    for _ in range(count):
        (tag,) = struct.unpack_from("<B", blob, off)
        off += 1
        if tag == LAYER_CONV:
            cout, cin, k = struct.unpack_from("<III", blob, off)
            off += 12
            n = cout * cin * k * k
            w = np.frombuffer(blob, dtype="<f4", count=n, offset=off).astype(np.float64)
            w = w.reshape(cout, cin, k, k).transpose(2, 3, 1, 0).copy()
            off += 4 * n
            b = np.frombuffer(blob, dtype="<f4", count=cout, offset=off).astype(np.float64)
            off += 4 * cout
            layers.append((LAYER_CONV, w, b))
        elif tag in (LAYER_RECTIFY, LAYER_AVGPOOL, LAYER_TAP):
            layers.append((tag,))
        else:
            raise ValueError(f"{path}: unknown layer tag {tag} at byte {off - 1}")
    return FeatureNet(layers)


def active_feature_net() -> FeatureNet:
    """The net named by MATINFER_WEIGHTS, or the built-in random default."""
    path = os.environ.get("MATINFER_WEIGHTS")
    if path:
        return load_feature_net(path)
    return default_feature_net()
