import torch

from eplidar.nn import DTYPE, SharedMLP, dense_layer, finite_difference_check, module_gradient_check, numerical_gradient
from eplidar.nn.gradcheck import max_relative_error


def test_numerical_gradient_of_cubic():
    x = torch.tensor([1.0, -2.0, 0.5], dtype=DTYPE)
    grad = numerical_gradient(lambda: (x ** 3).sum(), x)
    torch.testing.assert_close(grad, 3 * x ** 2, rtol=1e-6, atol=1e-8)


def test_numerical_gradient_restores_input():
    x = torch.tensor([0.1, 0.2], dtype=DTYPE)
    numerical_gradient(lambda: x.sum(), x)
    assert x.tolist() == [0.1, 0.2]


def test_relative_error_floor():
    a = torch.tensor([1e-9], dtype=DTYPE)
    n = torch.tensor([2e-9], dtype=DTYPE)
    assert max_relative_error(a, n) < 1e-5


def test_smooth_function_passes():
    gen = torch.Generator().manual_seed(0)
    x = torch.randn(4, 3, dtype=DTYPE, generator=gen)
    y = torch.randn(3, dtype=DTYPE, generator=gen)
    err = finite_difference_check(lambda a, b: torch.tanh(a @ b).pow(2).sum(), [x, y])
    assert err < 1e-6


def test_shared_mlp_parameters_pass():
    gen = torch.Generator().manual_seed(3)
    mlp = SharedMLP([3, 5, 2], final_relu=False, generator=gen)
    x = torch.randn(6, 3, dtype=DTYPE, generator=gen)
    err = module_gradient_check(mlp, lambda call: call(x).pow(2).sum())
    assert err < 1e-5


def test_broken_gradient_is_detected():
    layer = dense_layer(2, 1, torch.Generator().manual_seed(1))

    class Wrong(torch.autograd.Function):
        @staticmethod
        def forward(ctx, v):
            return v.pow(2).sum()

        @staticmethod
        def backward(ctx, g):
            return torch.ones(2, dtype=DTYPE) * g

    err = finite_difference_check(lambda v: Wrong.apply(v), [layer.weight.detach()[0].clone() + 3.0])
    assert err > 0.1
