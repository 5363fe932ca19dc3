import numpy as np
import pytest

from matinfer import autodiff as ad
from oracles import conv2d_bruteforce, dft1_bruteforce, dft2_bruteforce, finite_difference, rel_error

RNG = np.random.default_rng(20260810)


def test_grad_square():
    g = ad.grad(lambda x: x * x, [3.0])
    assert g[0] == pytest.approx(6.0)


def test_grad_constant_program_is_zero():
    g = ad.grad(lambda x: ad.constant(7.0) * ad.constant(3.0), [2.0])
    assert g[0] == 0.0


def test_unused_input_gets_exact_zero():
    g = ad.grad(lambda x, y: x * x, [1.5, 4.0])
    assert g[1] == 0.0 and g[0] == pytest.approx(3.0)


@pytest.mark.parametrize("op,fn", [
    ("exp", lambda x: ad.asum(ad.exp(x))),
    ("log", lambda x: ad.asum(ad.log(x + 3.0))),
    ("sqrt", lambda x: ad.asum(ad.sqrt(x + 3.0))),
    ("sin", lambda x: ad.asum(ad.sin(x))),
    ("cos", lambda x: ad.asum(ad.cos(x))),
    ("tanh", lambda x: ad.asum(ad.tanh(x))),
    ("sigmoid", lambda x: ad.asum(ad.sigmoid(x))),
    ("mix", lambda x: ad.asum(x * x * 0.5 + ad.exp(-x) / (x + 4.0))),
    ("mean", lambda x: ad.amean(x * x)),
    ("reduce_axis", lambda x: ad.asum(ad.amean(x * x, axis=0) * 2.0)),
])
def test_elementwise_grads_match_fd(op, fn):
    x = RNG.standard_normal((5, 4))
    g = ad.grad(lambda v: fn(v), [x])[0]
    fd = finite_difference(lambda v: float(ad.value_and_grad(lambda q: fn(q), [v])[0]), x)
    assert rel_error(g, fd) < 1e-4, op


def test_broadcast_grads():
    x = RNG.standard_normal((4, 4))
    s = 1.7
    val, grads = ad.value_and_grad(lambda a, b: ad.asum(a * b), [x, s])
    assert grads[1] == pytest.approx(x.sum())
    assert np.allclose(grads[0], s)


def test_maximum_subgradient_zero_at_ties():
    g = ad.grad(lambda x: ad.asum(ad.maximum(x, 2.0)), [np.array([1.0, 2.0, 3.0])])[0]
    assert g.tolist() == [0.0, 0.0, 1.0]


def test_getitem_scatter():
    x = np.arange(6.0).reshape(2, 3)
    g = ad.grad(lambda v: ad.asum(v[0, :] * 2.0) + v[1, 2] * 5.0, [x])[0]
    assert np.allclose(g, [[2, 2, 2], [0, 0, 5]])


def test_concat_grads():
    a = np.ones(3)
    b = np.ones(2)
    g = ad.grad(lambda u, v: ad.asum(ad.concat([u * 2.0, v * 3.0])), [a, b])
    assert np.allclose(g[0], 2.0) and np.allclose(g[1], 3.0)


def test_nonfinite_raises_with_primitive_name():
    with pytest.raises(ad.NonFiniteError) as exc:
        ad.grad(lambda x: ad.log(x - 2.0), [1.0])
    assert "log" in str(exc.value)


def test_concurrent_tapes_are_independent():
    import threading
    results = {}

    def worker(key, scale):
        x = np.full((16, 16), scale)
        for _ in range(200):
            g = ad.grad(lambda v: ad.asum(v * v) * 0.5, [x])[0]
        results[key] = g

    threads = [threading.Thread(target=worker, args=(k, float(k + 1))) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for k in range(4):
        assert np.allclose(results[k], k + 1.0)


def test_backward_deterministic():
    x = RNG.standard_normal((8, 8))

    def program(v):
        return ad.asum(ad.exp(ad.sin(v)) * v) + ad.amean(v * v)

    with ad.Tape() as tape:
        v = ad.Var(x)
        out = program(v)
        g1 = tape.gradients(out, [v])[0]
        g2 = tape.gradients(out, [v])[0]
    assert g1.tobytes() == g2.tobytes()


# ---------------------------------------------------------------------------
# FFT primitives
# ---------------------------------------------------------------------------

def test_fft2_constant_grid():
    c = 2.5
    x = np.full((8, 8), c)
    with ad.Tape():
        out = ad.fft2(ad.Var(x)).value
    assert out[0, 0] == pytest.approx(c * 64)
    out[0, 0] = 0
    assert np.abs(out).max() < 1e-9


def test_fft2_impulse():
    x = np.zeros((8, 8))
    x[0, 0] = 1.0
    with ad.Tape():
        out = ad.fft2(ad.Var(x)).value
    assert np.allclose(out, 1.0)


def test_fft2_matches_bruteforce():
    x = RNG.standard_normal((8, 8))
    with ad.Tape():
        out = ad.fft2(ad.Var(x)).value
    assert np.abs(out - dft2_bruteforce(x)).max() < 1e-6


def test_fft2_complex_matches_bruteforce():
    x = RNG.standard_normal((8, 8)) + 1j * RNG.standard_normal((8, 8))
    with ad.Tape():
        out = ad.fft2(ad.Var(x)).value
    ref = dft2_bruteforce(x.real) + 1j * dft2_bruteforce(x.imag)
    assert np.abs(out - ref).max() < 1e-6


def test_fft2_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        with ad.Tape():
            ad.fft2(ad.Var(np.zeros((6, 8))))


def test_ifft2_inverts_with_convention():
    x = RNG.standard_normal((16, 16))
    with ad.Tape():
        v = ad.Var(x)
        back = ad.ifft2(ad.fft2(v)).value
    assert np.abs(back.real - x).max() < 1e-10
    assert np.abs(back.imag).max() < 1e-10


def test_fft_linearity():
    x = RNG.standard_normal((16, 16))
    y = RNG.standard_normal((16, 16))
    a, b = 2.3, -1.1
    with ad.Tape():
        lhs = ad.fft2(ad.Var(a * x + b * y)).value
        rhs = a * ad.fft2(ad.Var(x)).value + b * ad.fft2(ad.Var(y)).value
    assert np.abs(lhs - rhs).max() / np.abs(rhs).max() < 1e-9


def test_fft_parseval():
    x = RNG.standard_normal((32, 32))
    with ad.Tape():
        spec = ad.fft2(ad.Var(x)).value
    lhs = (x ** 2).sum()
    rhs = (np.abs(spec) ** 2).sum() / x.size
    assert abs(lhs - rhs) / abs(lhs) < 1e-6


def test_fft1_batch_constant_and_tone():
    c = np.full((3, 16), 1.5)
    with ad.Tape():
        out = ad.fft1_batch(ad.Var(c)).value
    assert np.allclose(out[:, 0], 24.0)
    assert np.abs(out[:, 1:]).max() < 1e-9

    k = 3
    t = np.cos(2 * np.pi * k * np.arange(16) / 16)[None, :]
    with ad.Tape():
        out = ad.fft1_batch(ad.Var(t)).value
    mags = np.abs(out[0])
    hot = {k, 16 - k}
    for i in range(16):
        if i in hot:
            assert mags[i] == pytest.approx(8.0)
        else:
            assert mags[i] < 1e-9


def test_fft1_batch_matches_bruteforce():
    x = RNG.standard_normal((4, 16))
    with ad.Tape():
        out = ad.fft1_batch(ad.Var(x)).value
    for r in range(4):
        assert np.abs(out[r] - dft1_bruteforce(x[r])).max() < 1e-6


def test_fft2_gradient_through_magnitude():
    x = RNG.standard_normal((8, 8))

    def program(v):
        spec = ad.fft2(v)
        re = ad.creal(spec)
        im = ad.cimag(spec)
        mag = ad.sqrt(re * re + im * im + 1e-12)
        return ad.asum(mag)

    g = ad.grad(program, [x])[0]
    fd = finite_difference(lambda v: float(ad.value_and_grad(program, [v])[0]), x)
    assert rel_error(g, fd) < 1e-3


def test_ifft2_real_part_gradient():
    x = RNG.standard_normal((8, 8))
    phase = np.exp(1j * RNG.uniform(0, 2 * np.pi, (8, 8)))

    def program(v):
        spec = v * ad.constant(phase)
        field = ad.creal(ad.ifft2(spec))
        return ad.asum(field * field)

    g = ad.grad(program, [x])[0]
    fd = finite_difference(lambda v: float(ad.value_and_grad(program, [v])[0]), x)
    assert rel_error(g, fd) < 1e-4


# ---------------------------------------------------------------------------
# conv / pooling / lookup
# ---------------------------------------------------------------------------

def test_conv2d_identity_kernel():
    x = RNG.standard_normal((5, 5, 2))
    w = np.zeros((1, 1, 2, 2))
    w[0, 0, 0, 0] = 1.0
    w[0, 0, 1, 1] = 1.0
    with ad.Tape():
        out = ad.conv2d(ad.Var(x), w).value
    assert np.allclose(out, x)


def test_conv2d_box_on_constant():
    x = np.full((6, 6, 1), 2.0)
    w = np.ones((3, 3, 1, 1))
    with ad.Tape():
        out = ad.conv2d(ad.Var(x), w).value
    assert np.allclose(out[1:-1, 1:-1, 0], 18.0)


def test_conv2d_matches_bruteforce():
    x = RNG.standard_normal((5, 5, 2))
    w = RNG.standard_normal((3, 3, 2, 3))
    with ad.Tape():
        out = ad.conv2d(ad.Var(x), w).value
    assert np.abs(out - conv2d_bruteforce(x, w)).max() < 1e-6


def test_conv2d_stride2_matches_bruteforce():
    x = RNG.standard_normal((6, 6, 1))
    w = RNG.standard_normal((3, 3, 1, 2))
    with ad.Tape():
        out = ad.conv2d(ad.Var(x), w, stride=2).value
    assert np.abs(out - conv2d_bruteforce(x, w, stride=2)).max() < 1e-6


def test_conv2d_shape_mismatch_errors():
    with pytest.raises(ValueError):
        with ad.Tape():
            ad.conv2d(ad.Var(np.zeros((4, 4, 3))), np.zeros((3, 3, 2, 1)))


def test_conv2d_input_gradient_matches_fd():
    x = RNG.standard_normal((6, 6, 2))
    w = RNG.standard_normal((3, 3, 2, 2))

    def program(v):
        return ad.asum(ad.conv2d(v, w) ** 2)

    g = ad.grad(program, [x])[0]
    fd = finite_difference(lambda v: float(ad.value_and_grad(program, [v])[0]), x)
    assert rel_error(g, fd) < 1e-4


def test_avgpool2_forward_and_grad():
    x = RNG.standard_normal((4, 4, 1))

    def program(v):
        return ad.asum(ad.avgpool2(v) ** 2)

    with ad.Tape():
        out = ad.avgpool2(ad.Var(x)).value
    assert out[0, 0, 0] == pytest.approx(x[:2, :2, 0].mean())
    g = ad.grad(program, [x])[0]
    fd = finite_difference(lambda v: float(ad.value_and_grad(program, [v])[0]), x)
    assert rel_error(g, fd) < 1e-4


def test_periodic_lookup_exact_at_integers():
    table = RNG.standard_normal((8, 8))
    jj, ii = np.meshgrid(np.arange(8.0), np.arange(8.0), indexing="ij")
    with ad.Tape():
        out = ad.periodic_lookup(table, ad.Var(ii), ad.Var(jj)).value
    assert np.abs(out - table).max() == 0.0


def test_periodic_lookup_wraps():
    table = RNG.standard_normal((4, 4))
    with ad.Tape():
        out = ad.periodic_lookup(table, ad.Var(np.array(5.0)), ad.Var(np.array(-1.0))).value
    assert out == pytest.approx(table[3, 1])


def test_periodic_lookup_coordinate_gradients():
    table = RNG.standard_normal((8, 8, 2))
    base_x = RNG.uniform(0, 8, (4, 4))
    base_y = RNG.uniform(0, 8, (4, 4))

    def program(s):
        x = ad.constant(base_x) * s
        y = ad.constant(base_y) * s
        return ad.asum(ad.periodic_lookup(table, x, y) ** 2)

    s0 = np.array(1.37)
    g = ad.grad(program, [s0])[0]
    fd = finite_difference(lambda v: float(ad.value_and_grad(program, [v])[0]), s0)
    assert rel_error(g, fd) < 1e-4
