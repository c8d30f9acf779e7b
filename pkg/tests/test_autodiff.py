"""Every tape primitive is checked against central finite differences."""

import numpy as np
import pytest

from graphpool import autodiff as ad


def fd_gradient(fn, x0, h=1e-6):
    grad = np.zeros_like(x0)
    flat = grad.reshape(-1)
    for idx in range(x0.size):
        up = x0.copy()
        up.reshape(-1)[idx] += h
        down = x0.copy()
        down.reshape(-1)[idx] -= h
        flat[idx] = (fn(up) - fn(down)) / (2 * h)
    return grad


def check(build, x0, tol=2e-5):
    """build maps a leaf Tensor to a scalar Tensor."""
    leaf = ad.Tensor(x0)
    loss = build(leaf)
    loss.backward()
    numeric = fd_gradient(lambda x: float(build(ad.Tensor(x)).value), x0)
    scale = max(np.abs(numeric).max(), np.abs(leaf.grad).max(), 1.0)
    assert np.abs(leaf.grad - numeric).max() <= tol * scale


RNG = np.random.default_rng(0)


class TestElementwise:
    def test_add_broadcast_bias(self):
        m = RNG.standard_normal((4, 3))
        coef = RNG.standard_normal((4, 3))
        check(lambda b: ad.tsum(ad.mul(ad.add(m, b), coef)), RNG.standard_normal(3))

    def test_sub(self):
        check(lambda x: ad.tsum(ad.sub(x, 1.5)), RNG.standard_normal((3, 2)))

    def test_mul_broadcast_column(self):
        m = RNG.standard_normal((5, 4))
        check(lambda c: ad.tsum(ad.mul(m, c)), RNG.standard_normal((5, 1)))

    def test_div(self):
        check(lambda x: ad.tsum(ad.div(1.0, x)), RNG.random((3, 3)) + 1.0)

    def test_relu_away_from_kink(self):
        x0 = RNG.standard_normal((4, 4))
        x0[np.abs(x0) < 0.1] += 0.2
        check(lambda x: ad.tsum(ad.relu(x)), x0)

    def test_tanh(self):
        check(lambda x: ad.tsum(ad.tanh(x)), RNG.standard_normal((3, 3)))

    def test_sigmoid(self):
        check(lambda x: ad.tsum(ad.sigmoid(x)), RNG.standard_normal((3, 3)))

    def test_exp_log_sqrt(self):
        check(lambda x: ad.tsum(ad.exp(x)), RNG.standard_normal((2, 3)))
        check(lambda x: ad.tsum(ad.log(x)), RNG.random((2, 3)) + 0.5)
        check(lambda x: ad.tsum(ad.sqrt(x)), RNG.random((2, 3)) + 0.5)

    def test_absolute_away_from_kink(self):
        x0 = RNG.standard_normal((3, 3))
        x0[np.abs(x0) < 0.1] = 0.3
        check(lambda x: ad.tsum(ad.absolute(x)), x0)


class TestReductionsAndShape:
    def test_sum_axis(self):
        w = RNG.standard_normal(4)
        check(lambda x: ad.tsum(ad.mul(ad.tsum(x, axis=1), w)), RNG.standard_normal((4, 3)))
        w0 = RNG.standard_normal(3)
        check(lambda x: ad.tsum(ad.mul(ad.tsum(x, axis=0), w0)), RNG.standard_normal((4, 3)))

    def test_mean(self):
        check(lambda x: ad.tmean(x), RNG.standard_normal((4, 5)))

    def test_transpose(self):
        m = RNG.standard_normal((3, 4))
        check(lambda x: ad.tsum(ad.mul(x.T, m)), RNG.standard_normal((4, 3)))

    def test_trace(self):
        check(lambda x: ad.trace(x), RNG.standard_normal((4, 4)))

    def test_diag_embed_and_part(self):
        w = RNG.standard_normal((3, 3))
        check(lambda v: ad.tsum(ad.mul(ad.diag_embed(v), w)), RNG.standard_normal(3))
        check(lambda m: ad.tsum(ad.mul(ad.diag_part(m), np.array([1.0, -2.0, 3.0]))),
              RNG.standard_normal((3, 3)))

    def test_gather_scatter(self):
        idx = np.array([2, 0, 2])
        w = RNG.standard_normal((3, 2))
        check(lambda x: ad.tsum(ad.mul(ad.gather_rows(x, idx), w)), RNG.standard_normal((4, 2)))
        w5 = RNG.standard_normal((5, 2))
        check(lambda x: ad.tsum(ad.mul(ad.scatter_rows(x, np.array([1, 4]), 5), w5)),
              RNG.standard_normal((2, 2)))


class TestLinearAlgebra:
    def test_matmul_both_sides(self):
        a = RNG.standard_normal((3, 4))
        b = RNG.standard_normal((4, 2))
        check(lambda x: ad.tsum(ad.matmul(x, b)), a.copy())
        check(lambda x: ad.tsum(ad.matmul(a, x)), b.copy())

    def test_softmax_rows(self):
        w = RNG.standard_normal((4, 3))
        check(lambda x: ad.tsum(ad.mul(ad.softmax_rows(x), w)), RNG.standard_normal((4, 3)))

    def test_inverse(self):
        m0 = RNG.standard_normal((3, 3)) + 4.0 * np.eye(3)
        w = RNG.standard_normal((3, 3))
        check(lambda m: ad.tsum(ad.mul(ad.inv(m), w)), m0)

    def test_frobenius(self):
        check(lambda x: ad.frobenius(x), RNG.standard_normal((4, 3)))


class TestTapeMechanics:
    def test_backward_requires_scalar(self):
        t = ad.Tensor(np.ones((2, 2)))
        with pytest.raises(ValueError):
            t.backward()

    def test_gradient_accumulates_on_reuse(self):
        x = ad.Tensor(np.array(2.0))
        loss = ad.add(ad.mul(x, x), ad.mul(3.0, x))  # x^2 + 3x
        loss.backward()
        assert float(x.grad) == pytest.approx(2 * 2.0 + 3.0)

    def test_diamond_graph(self):
        x = ad.Tensor(np.array(1.5))
        y = ad.mul(x, 2.0)
        loss = ad.add(ad.mul(y, y), y)  # 4x^2 + 2x
        loss.backward()
        assert float(x.grad) == pytest.approx(8 * 1.5 + 2.0)

    def test_operator_overloads(self):
        x = ad.Tensor(np.array(3.0))
        loss = (x * x - 2.0 * x) / 3.0 + 1.0
        loss.backward()
        assert float(x.grad) == pytest.approx((2 * 3.0 - 2.0) / 3.0)
