"""
A small MLP trained by hand
===========================

Forward, backward and Adam on a 1-d regression, no autodiff involved.
"""
import numpy as np

from ader.approximator import IDENTITY, RELU, adam_init, adam_step, backward, forward_cached, init_mlp

rng = np.random.default_rng(0)
x = rng.uniform(-2, 2, size=(256, 1))
y = np.sin(2 * x)

net = init_mlp([1, 32, 32, 1], [RELU, RELU, IDENTITY], rng)
opt = adam_init(net)

for step in range(2001):
    out, cache = forward_cached(net, x)
    err = out - y
    # gradient of the mean squared error, summed over the batch by backward
    grads, _ = backward(net, x, err / len(x), cache)
    net, opt = adam_step(net, grads, opt, lr=3e-3)
    if step % 500 == 0:
        print(f"step {step:4d}  mse {np.mean(err ** 2):.5f}")
