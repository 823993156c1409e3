import numpy as np
import pytest

from frscatter.nn import (
    AdamState,
    BatchNorm2d,
    BilinearUp2,
    Conv2d,
    Dense,
    ReLU,
    Tanh,
    adam_step,
    g1_build,
    g2_build,
    l1_loss,
    l1_loss_grad,
)
from frscatter.tensorio import SeededRng


def gradcheck_layer(layer, x, h=1e-3, probes=5, tol=1e-4):
    """Central finite differences against the analytic gradients.

    Uses a fixed random quadratic readout so the checked function is smooth.
    Error is relative with an absolute floor of 1e-6 (grads that are exactly
    zero by construction, e.g. a conv bias feeding batch norm, compare as 0/0
    otherwise).
    """
    c = np.random.default_rng(99).standard_normal(layer.forward(x, True).shape)

    def loss():
        y = layer.forward(x, True)
        return float(np.sum(c * y ** 2) / 2)

    y = layer.forward(x, True)
    gin = layer.backward(c * y)
    rng = np.random.default_rng(123)
    worst = 0.0

    def fd(arr, grad):
        nonlocal worst
        for _ in range(probes):
            idx = tuple(rng.integers(0, s) for s in arr.shape)
            old = arr[idx]
            arr[idx] = old + h
            lp = loss()
            arr[idx] = old - h
            lm = loss()
            arr[idx] = old
            num = (lp - lm) / (2 * h)
            err = abs(num - grad[idx]) / max(abs(num), abs(grad[idx]), 1e-6)
            worst = max(worst, err)

    for name, p in layer.params.items():
        fd(p, layer.grads[name])
    fd(x, gin)
    assert worst < tol, f"worst relative gradient error {worst}"


@pytest.mark.parametrize("kernel", [1, 3, 7])
def test_conv_gradients(kernel, rng):
    layer = Conv2d(3, 4, kernel, SeededRng(0))
    gradcheck_layer(layer, rng.standard_normal((2, 3, 8, 8)))


def test_dense_gradients(rng):
    gradcheck_layer(Dense(10, (4, 2, 2), SeededRng(1)), rng.standard_normal((3, 10)))


def test_upsample_gradients(rng):
    gradcheck_layer(BilinearUp2(), rng.standard_normal((2, 3, 4, 4)))


def test_batchnorm_gradients(rng):
    gradcheck_layer(BatchNorm2d(3), rng.standard_normal((4, 3, 5, 5)))


def test_relu_tanh_gradients(rng):
    gradcheck_layer(ReLU(), rng.standard_normal((2, 3, 4, 4)) + 0.3)
    gradcheck_layer(Tanh(), rng.standard_normal((2, 3, 4, 4)))


def test_composed_g2_gradients(rng):
    model = g2_build(4, 4, 16, 16, SeededRng(2))  # two upsampling blocks

    class Wrapper:
        params = {}
        grads = {}

        def forward(self, x, train):
            return model.forward(x, "train" if train else "eval")

        def backward(self, g):
            gin = model.backward(g)
            self.params = dict(model.parameters())
            self.grads = dict(model.gradients())
            return gin

    w = Wrapper()
    x = rng.random((2, 4, 4, 4))
    y = w.forward(x, True)
    c = np.random.default_rng(99).standard_normal(y.shape)
    w.backward(c * y)
    gradcheck_layer_like_model(model, x, c)


def gradcheck_layer_like_model(model, x, c, h=1e-4, tol=2e-2):
    # Looser tolerance than the per-layer checks: a finite-difference step can
    # flip ReLU activations deep in the composition, which costs O(h) accuracy.
    # Per-layer backward passes are validated tightly above; this confirms the
    # layers are chained correctly.
    def loss():
        y = model.forward(x, "train")
        return float(np.sum(c * y ** 2) / 2)

    y = model.forward(x, "train")
    model.backward(c * y)
    grads = dict(model.gradients())
    params = dict(model.parameters())
    rng = np.random.default_rng(7)
    for key in params:
        p = params[key]
        for _ in range(2):
            idx = tuple(rng.integers(0, s) for s in p.shape)
            old = p[idx]
            p[idx] = old + h
            lp = loss()
            p[idx] = old - h
            lm = loss()
            p[idx] = old
            num = (lp - lm) / (2 * h)
            ana = grads[key][idx]
            err = abs(num - ana) / max(abs(num), abs(ana), 1e-6)
            assert err < tol, f"{key}: relative error {err}"


def test_relu_blocks_gradient_at_negative_preactivation():
    layer = ReLU()
    x = -np.ones((1, 1, 2, 2))
    layer.forward(x, True)
    g = layer.backward(np.ones_like(x))
    assert np.all(g == 0.0)


def test_zero_upstream_gradient_gives_zero_param_gradients(rng):
    layer = Conv2d(2, 3, 3, SeededRng(3))
    x = rng.standard_normal((2, 2, 6, 6))
    layer.forward(x, True)
    layer.backward(np.zeros((2, 3, 6, 6)))
    assert np.all(layer.grads["w"] == 0.0)
    assert np.all(layer.grads["b"] == 0.0)


def test_backward_without_forward_raises():
    layer = Conv2d(1, 1, 3, SeededRng(0))
    with pytest.raises(RuntimeError):
        layer.backward(np.zeros((1, 1, 4, 4)))


# ---------------------------------------------------------------- shapes


def test_g2_cifar_architecture():
    model = g2_build(49, 4, 32, 64, SeededRng(0))
    kinds = [l.spec.kind for l in model.layers]
    assert kinds.count("bilinear_upsample_x2") == 3
    assert kinds[0] == "fully_conv" and kinds[-1] == "tanh"
    out = model.forward(np.zeros((2, 49, 4, 4)), "eval")
    assert out.shape == (2, 1, 32, 32)


def test_g2_celeba_architecture():
    model = g2_build(65, 8, 128, 32, SeededRng(0))
    kinds = [l.spec.kind for l in model.layers]
    assert kinds.count("bilinear_upsample_x2") == 4
    out = model.forward(np.zeros((1, 65, 8, 8)), "eval")
    assert out.shape == (1, 1, 128, 128)


def test_g2_degenerate_no_upsample():
    model = g2_build(4, 2, 2, 16, SeededRng(0))
    kinds = [l.spec.kind for l in model.layers]
    assert kinds == ["fully_conv", "conv3x3", "tanh"]
    assert model.forward(np.zeros((2, 4, 2, 2)), "eval").shape == (2, 1, 2, 2)


def test_g2_channel_floor_16():
    model = g2_build(49, 4, 32, 32, SeededRng(0))
    convs = [l for l in model.layers if l.spec.kind == "conv3x3"]
    assert all(c.out_ch >= 16 or c.out_ch == 1 for c in convs)


def test_g2_rejects_bad_ratio():
    with pytest.raises(ValueError):
        g2_build(4, 4, 24, 16, SeededRng(0))


def test_g1_cifar_architecture():
    model = g1_build(784, 32, 64, SeededRng(0))
    kinds = [l.spec.kind for l in model.layers]
    assert kinds[0] == "fully_connected"
    assert kinds.count("bilinear_upsample_x2") == 3
    assert kinds.count("conv7x7") == 4  # 3 block convs + final
    assert model.forward(np.zeros((2, 784)), "eval").shape == (2, 1, 32, 32)


def test_g1_celeba_architecture():
    model = g1_build(4160, 128, 32, SeededRng(0))
    kinds = [l.spec.kind for l in model.layers]
    assert kinds.count("bilinear_upsample_x2") == 5
    assert model.forward(np.zeros((1, 4160)), "eval").shape == (1, 1, 128, 128)


def test_g1_minimal():
    model = g1_build(1, 4, 16, SeededRng(0))
    kinds = [l.spec.kind for l in model.layers]
    assert kinds == ["fully_connected", "conv7x7", "tanh"]
    with pytest.raises(ValueError):
        g1_build(0, 4, 16, SeededRng(0))


# ---------------------------------------------------------------- forward


def test_forward_range(rng):
    model = g2_build(8, 4, 16, 16, SeededRng(4))
    out = model.forward(rng.standard_normal((3, 8, 4, 4)) * 10, "train")
    assert np.all(out >= -1.0) and np.all(out <= 1.0)


def test_eval_forward_deterministic(rng):
    model = g2_build(8, 4, 16, 16, SeededRng(5))
    x = rng.standard_normal((3, 8, 4, 4))
    assert np.array_equal(model.forward(x, "eval"), model.forward(x, "eval"))


def test_zero_weights_give_zero_output(rng):
    model = g2_build(8, 4, 16, 16, SeededRng(6))
    for layer in model.layers:
        for name in layer.params:
            if name in ("w", "b", "beta"):
                layer.params[name][:] = 0.0
    out = model.forward(rng.standard_normal((2, 8, 4, 4)), "eval")
    assert np.all(out == 0.0)


def test_batchnorm_rejects_train_batch_of_one():
    with pytest.raises(ValueError):
        BatchNorm2d(2).forward(np.zeros((1, 2, 4, 4)), True)


def test_upsample_doubles_dimensions(rng):
    out = BilinearUp2().forward(rng.standard_normal((1, 2, 5, 7)), False)
    assert out.shape == (1, 2, 10, 14)


# ---------------------------------------------------------------- loss / Adam


def test_l1_loss_examples(rng):
    x = rng.random((2, 1, 8, 8))
    assert l1_loss(x, x) == 0.0
    assert abs(l1_loss(x, x + 0.2) - 0.2) < 1e-12


def test_l1_loss_flat_loop_oracle(rng):
    x, y = rng.random((2, 1, 4, 4)), rng.random((2, 1, 4, 4))
    acc = 0.0
    for v, w in zip(x.ravel(), y.ravel()):
        acc += abs(v - w)
    assert abs(l1_loss(x, y) - acc / x.size) < 1e-12


def test_l1_grad_matches_loss(rng):
    x, y = rng.random((2, 1, 4, 4)), rng.random((2, 1, 4, 4))
    g = l1_loss_grad(x, y)
    assert g.shape == y.shape
    assert np.allclose(np.abs(g), 1.0 / x.size)


def test_adam_first_step_magnitude():
    params = {"w": np.array([0.0])}
    grads = {"w": np.array([1.0])}
    state = AdamState()
    adam_step(params, grads, state)
    assert abs(params["w"][0] + 0.001) < 1e-6
    assert state.t == 1


def test_adam_zero_gradient_fixed_point():
    params = {"w": np.array([1.5, -2.0])}
    state = AdamState()
    for _ in range(10):
        adam_step(params, {"w": np.zeros(2)}, state)
    assert np.array_equal(params["w"], [1.5, -2.0])


def test_adam_minimizes_absolute_value():
    params = {"w": np.array([0.0])}
    state = AdamState()
    for _ in range(3000):
        g = np.sign(params["w"] - 3.0)
        adam_step(params, {"w": g}, state)
    assert abs(params["w"][0] - 3.0) < 0.15


def test_model_save_load_roundtrip(tmp_path, rng):
    model = g2_build(4, 4, 8, 16, SeededRng(7))
    x = rng.standard_normal((2, 4, 4, 4))
    want = model.forward(x, "eval")
    model.save(tmp_path / "ckpt")
    other = g2_build(4, 4, 8, 16, SeededRng(8))
    other.load_params(tmp_path / "ckpt")
    assert np.array_equal(other.forward(x, "eval"), want)
