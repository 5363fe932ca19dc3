"""Reverse-mode automatic differentiation over dense real/complex grids.

Values are numpy arrays (float64 or complex128, 0-d arrays for scalars)
wrapped in :class:`Var` nodes.  A :class:`Tape` records every primitive in
creation order, which is a valid topological order of the computation DAG,
so the backward pass is a single reversed sweep with deterministic
accumulation order.

Complex values use the real-pair convention: the gradient stored for a
complex node encodes (dL/d(Re z)) + i*(dL/d(Im z)) for a real-valued final
scalar L.  Under this convention the backward rule of multiplication is
``g_u = conj(v) * g_z`` and the adjoint of the unnormalized DFT is the
unnormalized inverse DFT, which is what the FFT primitives implement.

All computation is float64/complex128; non-smooth primitives (maximum,
minimum, relu) use subgradient 0 at ties.
"""

from __future__ import annotations

import threading

import numpy as np

__all__ = [
    "NonFiniteError",
    "Tape",
    "Var",
    "constant",
    "grad",
    "value_and_grad",
    "add", "sub", "mul", "div", "neg", "power", "exp", "log", "sqrt",
    "sin", "cos", "tanh", "sigmoid", "maximum", "minimum", "relu",
    "asum", "amean", "channel_mean_sorted", "reshape", "getitem", "concat", "roll",
    "transpose2", "linmap", "matmul",
    "make_complex", "creal", "cimag", "conj",
    "fft2", "ifft2", "fft1_batch", "conv2d", "avgpool2", "periodic_lookup",
]


class NonFiniteError(RuntimeError):
    """A primitive produced NaN or infinity."""

    def __init__(self, primitive: str):
        super().__init__(f"non-finite values produced by primitive '{primitive}'")
        self.primitive = primitive


_TLS = threading.local()


def _tape_stack():
    stack = getattr(_TLS, "tapes", None)
    if stack is None:
        stack = []
        _TLS.tapes = stack
    return stack


def _active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """Single-writer record of primitive applications, in creation order.

    Entering the tape as a context manager makes it the recording target for
    the current thread.  Concurrent evaluations must each use their own tape.
    """

    __slots__ = ("nodes",)

    def __init__(self):
        self.nodes: list[Var] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        popped = _tape_stack().pop()
        assert popped is self, "tape context unwound out of order"
        return False

    def gradients(self, output: "Var", inputs: list["Var"]):
        """Backward pass: cotangent of `output` w.r.t. every input.

        Inputs that do not participate in `output` get exactly-zero
        cotangents.  Accumulation order follows the recorded node order, so
        repeated calls produce bit-identical results.
        """
        out_val = np.asarray(output.value)
        if out_val.ndim != 0:
            raise ValueError("gradients are defined for scalar outputs only")
        if not np.isfinite(out_val):
            raise NonFiniteError(output.op)
        grads: dict[int, np.ndarray] = {id(output): np.ones((), dtype=np.float64)}
        try:
            stop = output._index + 1
        except AttributeError:  # output created off-tape (constant program)
            stop = 0
        for node in reversed(self.nodes[:stop]):
            g = grads.get(id(node))
            if g is None:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                pg = vjp(g)
                pg = _match(pg, parent.value)
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg
        out = []
        for v in inputs:
            g = grads.get(id(v))
            if g is None:
                g = np.zeros_like(np.asarray(v.value, dtype=np.float64))
            out.append(g)
        return out


def _match(g, ref):
    """Cast a cotangent onto the dtype/shape of the value it belongs to."""
    g = np.asarray(g)
    if np.iscomplexobj(ref):
        g = g.astype(np.complex128, copy=False)
    elif np.iscomplexobj(g):
        g = np.ascontiguousarray(g.real)
    return _unbroadcast(g, np.shape(ref))


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == tuple(shape):
        return g
    # sum out broadcast axes
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _coerce(value) -> np.ndarray:
    a = np.asarray(value)
    if a.dtype.kind in "iub":
        a = a.astype(np.float64)
    elif a.dtype == np.float32:
        a = a.astype(np.float64)
    elif a.dtype == np.complex64:
        a = a.astype(np.complex128)
    return a


class Var:
    """One recorded value: payload plus parent references and their vjps."""

    __slots__ = ("value", "parents", "vjps", "op", "_index")

    def __init__(self, value, parents=(), vjps=(), op="input", check=True):
        value = _coerce(value)
        if check and not np.isfinite(value).all():
            raise NonFiniteError(op)
        self.value = value
        self.parents = parents
        self.vjps = vjps
        self.op = op
        tape = _active_tape()
        if tape is not None:
            self._index = len(tape.nodes)
            tape.nodes.append(self)
        else:
            # off-tape: value-only evaluation, nothing to differentiate
            self.parents = ()
            self.vjps = ()

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Var(op={self.op!r}, shape={self.value.shape}, dtype={self.value.dtype})"

    # operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __getitem__(self, idx):
        return getitem(self, idx)


def constant(value) -> Var:
    """Wrap a value that never receives gradients."""
    return Var(value, op="constant")


def _val(x):
    return x.value if isinstance(x, Var) else _coerce(x)


def _as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x, op="constant")


# ---------------------------------------------------------------------------
# arithmetic primitives
# ---------------------------------------------------------------------------

def add(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    return Var(a.value + b.value, (a, b), (lambda g: g, lambda g: g), "add")


def sub(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    return Var(a.value - b.value, (a, b), (lambda g: g, lambda g: -g), "sub")


def mul(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    av, bv = a.value, b.value
    return Var(av * bv,
               (a, b),
               (lambda g: g * np.conj(bv), lambda g: g * np.conj(av)),
               "mul")


def div(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    av, bv = a.value, b.value
    with np.errstate(invalid="ignore", divide="ignore"):
        out = av / bv  # non-finite results raise NonFiniteError below
    return Var(out,
               (a, b),
               (lambda g: g * np.conj(1.0 / bv),
                lambda g: g * np.conj(-av / (bv * bv))),
               "div")


def neg(a) -> Var:
    a = _as_var(a)
    return Var(-a.value, (a,), (lambda g: -g,), "neg")


def power(a, p: float) -> Var:
    """Elementwise a**p for a constant real exponent."""
    a = _as_var(a)
    av = a.value
    out = av ** p
    return Var(out, (a,), (lambda g: g * p * av ** (p - 1),), "power")


def exp(a) -> Var:
    a = _as_var(a)
    out = np.exp(a.value)
    return Var(out, (a,), (lambda g: g * out,), "exp")


def log(a) -> Var:
    a = _as_var(a)
    av = a.value
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.log(av)  # non-finite results raise NonFiniteError below
    return Var(out, (a,), (lambda g: g / av,), "log")


def sqrt(a) -> Var:
    a = _as_var(a)
    with np.errstate(invalid="ignore"):
        out = np.sqrt(a.value)  # non-finite results raise NonFiniteError below
    return Var(out, (a,), (lambda g: g * 0.5 / out,), "sqrt")


def sin(a) -> Var:
    a = _as_var(a)
    av = a.value
    return Var(np.sin(av), (a,), (lambda g: g * np.cos(av),), "sin")


def cos(a) -> Var:
    a = _as_var(a)
    av = a.value
    return Var(np.cos(av), (a,), (lambda g: -g * np.sin(av),), "cos")


def tanh(a) -> Var:
    a = _as_var(a)
    out = np.tanh(a.value)
    return Var(out, (a,), (lambda g: g * (1.0 - out * out),), "tanh")


def sigmoid(a) -> Var:
    a = _as_var(a)
    av = a.value
    t = np.exp(-np.abs(av))  # overflow-safe in both tails
    out = np.where(av >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    return Var(out, (a,), (lambda g: g * out * (1.0 - out),), "sigmoid")


def maximum(a, b) -> Var:
    """Elementwise max; subgradient 0 at ties on both branches."""
    a, b = _as_var(a), _as_var(b)
    av, bv = a.value, b.value
    mask_a = av > bv
    mask_b = bv > av
    return Var(np.maximum(av, bv),
               (a, b),
               (lambda g: g * mask_a, lambda g: g * mask_b),
               "maximum")


def minimum(a, b) -> Var:
    a, b = _as_var(a), _as_var(b)
    av, bv = a.value, b.value
    mask_a = av < bv
    mask_b = bv < av
    return Var(np.minimum(av, bv),
               (a, b),
               (lambda g: g * mask_a, lambda g: g * mask_b),
               "minimum")


def relu(a) -> Var:
    a = _as_var(a)
    av = a.value
    mask = av > 0
    return Var(av * mask, (a,), (lambda g: g * mask,), "relu")


# ---------------------------------------------------------------------------
# reductions / shape
# ---------------------------------------------------------------------------

def asum(a, axis=None, keepdims=False) -> Var:
    a = _as_var(a)
    av = a.value
    out = av.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, av.shape)
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, av.shape)

    return Var(out, (a,), (vjp,), "sum")


def amean(a, axis=None, keepdims=False) -> Var:
    a = _as_var(a)
    av = a.value
    out = av.mean(axis=axis, keepdims=keepdims)
    if axis is None:
        n = av.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = 1
        for ax in axes:
            n *= av.shape[ax]

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g / n, av.shape)
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg / n, av.shape)

    return Var(out, (a,), (vjp,), "mean")


def channel_mean_sorted(a) -> Var:
    """Per-channel mean of an (H, W, C) grid, summed in sorted order.

    Sorting makes the reduction bit-identical under any permutation of the
    pixels; the gradient of a mean is uniform, so the reorder never touches
    the backward pass.
    """
    a = _as_var(a)
    av = a.value
    h, w, c = av.shape
    n = h * w
    flat = av.reshape(n, c)
    out = np.array([np.sort(flat[:, k]).sum() / n for k in range(c)])

    def vjp(g):
        return np.broadcast_to(g / n, (h, w, c))

    return Var(out, (a,), (vjp,), "channel_mean_sorted")


def reshape(a, shape) -> Var:
    a = _as_var(a)
    av = a.value
    return Var(av.reshape(shape), (a,), (lambda g: g.reshape(av.shape),), "reshape")


def getitem(a, idx) -> Var:
    a = _as_var(a)
    av = a.value

    def vjp(g):
        out = np.zeros_like(av)
        np.add.at(out, idx, g)
        return out

    return Var(av[idx], (a,), (vjp,), "getitem")


def transpose2(a) -> Var:
    """Transpose the two leading axes of a 2-d array."""
    a = _as_var(a)
    return Var(a.value.T, (a,), (lambda g: g.T,), "transpose2")


def linmap(m, x) -> Var:
    """Apply a constant matrix to a vector/matrix: m @ x."""
    x = _as_var(x)
    m = np.asarray(m, dtype=np.float64)
    return Var(m @ x.value, (x,), (lambda g: m.T @ g,), "linmap")


def matmul(a, b) -> Var:
    """Real matrix product with gradients into both operands."""
    a, b = _as_var(a), _as_var(b)
    av, bv = a.value, b.value
    return Var(av @ bv,
               (a, b),
               (lambda g: g @ bv.T, lambda g: av.T @ g),
               "matmul")


def concat(parts, axis=0) -> Var:
    parts = [_as_var(p) for p in parts]
    vals = [p.value for p in parts]
    out = np.concatenate(vals, axis=axis)
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(k):
        sl = [slice(None)] * out.ndim
        sl[axis] = slice(offsets[k], offsets[k + 1])
        sl = tuple(sl)
        return lambda g: g[sl]

    return Var(out, tuple(parts), tuple(make_vjp(k) for k in range(len(parts))), "concat")


# ---------------------------------------------------------------------------
# complex structure
# ---------------------------------------------------------------------------

def make_complex(re, im) -> Var:
    re, im = _as_var(re), _as_var(im)
    out = re.value + 1j * im.value
    return Var(out, (re, im),
               (lambda g: np.real(g), lambda g: np.imag(g)),
               "make_complex")


def conj(z) -> Var:
    z = _as_var(z)
    return Var(np.conj(z.value), (z,), (lambda g: np.conj(g),), "conj")


def roll(a, shift, axis) -> Var:
    a = _as_var(a)
    return Var(np.roll(a.value, shift, axis=axis),
               (a,),
               (lambda g: np.roll(g, tuple(-s for s in shift) if isinstance(shift, tuple) else -shift, axis=axis),),
               "roll")


def creal(z) -> Var:
    z = _as_var(z)
    return Var(np.real(z.value), (z,), (lambda g: g.astype(np.complex128),), "real")


def cimag(z) -> Var:
    z = _as_var(z)
    return Var(np.imag(z.value), (z,), (lambda g: 1j * g,), "imag")


# ---------------------------------------------------------------------------
# spectral primitives
# ---------------------------------------------------------------------------

def _require_pow2(n: int, what: str):
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"{what} must be a power of two, got {n}")


def fft2(a) -> Var:
    """Unnormalized forward 2D DFT of an H x W grid (powers of two only)."""
    a = _as_var(a)
    av = a.value
    if av.ndim != 2:
        raise ValueError("fft2 expects a 2-d grid")
    h, w = av.shape
    _require_pow2(h, "fft2 height")
    _require_pow2(w, "fft2 width")
    out = np.fft.fft2(av)
    n = h * w

    def vjp(g):
        return np.fft.ifft2(g) * n

    return Var(out, (a,), (vjp,), "fft2")


def ifft2(a) -> Var:
    """Inverse 2D DFT with 1/(H*W) normalization (powers of two only)."""
    a = _as_var(a)
    av = a.value
    if av.ndim != 2:
        raise ValueError("ifft2 expects a 2-d grid")
    h, w = av.shape
    _require_pow2(h, "ifft2 height")
    _require_pow2(w, "ifft2 width")
    out = np.fft.ifft2(av)
    n = h * w

    def vjp(g):
        return np.fft.fft2(g) / n

    return Var(out, (a,), (vjp,), "ifft2")


def fft1_batch(a) -> Var:
    """Unnormalized forward DFT of each row of an H x W grid."""
    a = _as_var(a)
    av = a.value
    if av.ndim != 2:
        raise ValueError("fft1_batch expects a 2-d grid of rows")
    w = av.shape[1]
    _require_pow2(w, "fft1_batch row length")
    out = np.fft.fft(av, axis=1)

    def vjp(g):
        return np.fft.ifft(g, axis=1) * w

    return Var(out, (a,), (vjp,), "fft1_batch")


# ---------------------------------------------------------------------------
# convolution / pooling
# ---------------------------------------------------------------------------

def conv2d(a, weights, stride: int = 1, padding="same") -> Var:
    """Cross-correlate an (H, W, Cin) grid with an (kh, kw, Cin, Cout) bank.

    Weights are fixed constants; gradients flow into the input only.
    `padding` is "same" (zero-pad to preserve size at stride 1), "valid",
    or an explicit integer border.
    """
    a = _as_var(a)
    av = a.value
    w = np.asarray(weights, dtype=np.float64)
    if av.ndim != 3 or w.ndim != 4:
        raise ValueError("conv2d expects input (H, W, Cin) and weights (kh, kw, Cin, Cout)")
    kh, kw, cin, _ = w.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("conv2d kernel spatial size must be odd")
    if av.shape[2] != cin:
        raise ValueError(f"conv2d channel mismatch: input has {av.shape[2]}, weights expect {cin}")
    if padding == "same":
        ph, pw = kh // 2, kw // 2
    elif padding == "valid":
        ph = pw = 0
    else:
        ph = pw = int(padding)
    if stride < 1:
        raise ValueError("conv2d stride must be >= 1")

    padded = np.pad(av, ((ph, ph), (pw, pw), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw), axis=(0, 1))
    win = win[::stride, ::stride]  # (Hout, Wout, Cin, kh, kw)
    out = np.tensordot(win, w, axes=((3, 4, 2), (0, 1, 2)))

    hout, wout = out.shape[:2]
    hp, wp = padded.shape[:2]

    def vjp(g):
        # scatter g x W back onto the padded input, one kernel offset at a time
        contrib = np.tensordot(g, w, axes=((2,), (3,)))  # (Hout, Wout, kh, kw, Cin)
        gp = np.zeros((hp, wp, cin), dtype=np.float64)
        for di in range(kh):
            for dj in range(kw):
                gp[di:di + hout * stride:stride, dj:dj + wout * stride:stride] += contrib[:, :, di, dj, :]
        if ph or pw:
            gp = gp[ph:hp - ph, pw:wp - pw]
        return gp

    return Var(out, (a,), (vjp,), "conv2d")


def avgpool2(a) -> Var:
    """2x average pooling of an (H, W, C) grid; H, W must be even."""
    a = _as_var(a)
    av = a.value
    h, w, c = av.shape
    if h % 2 or w % 2:
        raise ValueError("avgpool2 requires even spatial dimensions")
    out = av.reshape(h // 2, 2, w // 2, 2, c).mean(axis=(1, 3))

    def vjp(g):
        return np.repeat(np.repeat(g, 2, axis=0), 2, axis=1) / 4.0

    return Var(out, (a,), (vjp,), "avgpool2")


# ---------------------------------------------------------------------------
# table lookup with differentiable coordinates
# ---------------------------------------------------------------------------

def periodic_lookup(table, x, y) -> Var:
    """Sample a toroidal table at real-valued coordinates.

    `table` is a constant (N, M) or (N, M, C) array indexed (row=y, col=x)
    with wrap-around.  `x`, `y` carry gradients.  Texel weights blend the
    bilinear stencil through a quintic fade: exact at integer coordinates
    and C2 across texel boundaries, so coordinate gradients stay
    finite-difference checkable even after summing over many pixels.
    """
    x, y = _as_var(x), _as_var(y)
    t = np.asarray(table, dtype=np.float64)
    if t.ndim == 2:
        t = t[:, :, None]
        squeeze = True
    else:
        squeeze = False
    n, m = t.shape[:2]
    xv, yv = x.value, y.value

    ix = np.floor(xv).astype(np.int64)
    iy = np.floor(yv).astype(np.int64)
    fx = xv - ix
    fy = yv - iy
    sx = fx * fx * fx * (fx * (fx * 6.0 - 15.0) + 10.0)
    sy = fy * fy * fy * (fy * (fy * 6.0 - 15.0) + 10.0)
    dsx = 30.0 * fx * fx * (fx - 1.0) * (fx - 1.0)
    dsy = 30.0 * fy * fy * (fy - 1.0) * (fy - 1.0)

    x0 = np.mod(ix, m)
    x1 = np.mod(ix + 1, m)
    y0 = np.mod(iy, n)
    y1 = np.mod(iy + 1, n)

    v00 = t[y0, x0]
    v01 = t[y0, x1]
    v10 = t[y1, x0]
    v11 = t[y1, x1]

    wx = sx[..., None]
    wy = sy[..., None]
    out = ((1 - wy) * ((1 - wx) * v00 + wx * v01)
           + wy * ((1 - wx) * v10 + wx * v11))

    dval_dx = ((1 - wy) * (v01 - v00) + wy * (v11 - v10)) * dsx[..., None]
    dval_dy = ((1 - wx) * (v10 - v00) + wx * (v11 - v01)) * dsy[..., None]

    if squeeze:
        out = out[..., 0]
        dval_dx = dval_dx[..., 0]
        dval_dy = dval_dy[..., 0]

        def vjp_x(g):
            return g * dval_dx

        def vjp_y(g):
            return g * dval_dy
    else:
        def vjp_x(g):
            return (g * dval_dx).sum(axis=-1)

        def vjp_y(g):
            return (g * dval_dy).sum(axis=-1)

    return Var(out, (x, y), (vjp_x, vjp_y), "periodic_lookup")


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def value_and_grad(program, inputs):
    """Run a scalar-valued program on fresh input Vars; return (value, grads).

    `inputs` are arrays/scalars; cotangents come back in the same order.
    Inputs the program never touches get exactly-zero cotangents.
    """
    with Tape() as tape:
        vars_ = [Var(x, op="input") for x in inputs]
        out = program(*vars_)
        if not isinstance(out, Var):
            out = _as_var(out)
        grads = tape.gradients(out, vars_)
    return np.asarray(out.value), grads


def grad(program, inputs):
    """Cotangents of a scalar-valued program with respect to each input."""
    return value_and_grad(program, inputs)[1]
