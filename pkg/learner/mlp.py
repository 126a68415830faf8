"""
Multilayer Perceptron
Small tanh MLPs with hand-written forward and backward passes (float64)
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import UsageError


@dataclass
class Mlp:
    """
    Fully connected net: tanh on hidden layers, linear output.

    weights[i] has shape (sizes[i], sizes[i + 1]) so a batch of row
    vectors flows through as `x @ W + b`.
    """

    sizes: tuple
    weights: list
    biases: list

    @property
    def input_size(self):
        return self.sizes[0]

    @property
    def output_size(self):
        return self.sizes[-1]

    def parameters(self):
        """Weights and biases interleaved: W0, b0, W1, b1, ..."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def copy(self):
        return Mlp(
            sizes=tuple(self.sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_mlp(sizes, rng, output_scale=1.0):
    """
    Glorot-uniform weights, zero biases.

    Args:
        sizes (tuple): (input, hidden..., output)
        rng (np.random.Generator): Source of randomness
        output_scale (float): Multiplier on the last layer (small values start policies near uniform)
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise UsageError(f"Invalid layer sizes {sizes}")
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        if i == len(sizes) - 2:
            w = w * output_scale
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return Mlp(sizes=sizes, weights=weights, biases=biases)


def zeros_like(net):
    return Mlp(
        sizes=tuple(net.sizes),
        weights=[np.zeros_like(w) for w in net.weights],
        biases=[np.zeros_like(b) for b in net.biases],
    )


def _check_input(net, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_size or x.ndim not in (1, 2):
        raise UsageError(
            f"Input of shape {x.shape} does not match net input size {net.input_size}"
        )
    return x


def forward(net, x):
    """
    Evaluate the net on one vector (shape (in,)) or a batch (shape (B, in)).

    Raises:
        UsageError: On a dimension mismatch
    """
    out, _ = forward_with_cache(net, x)
    return out


def forward_with_cache(net, x):
    """Forward pass that also returns the layer inputs needed by `backward`."""
    h = _check_input(net, x)
    activations = [h]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        h = z if i == last else np.tanh(z)
        activations.append(h)
    return h, activations


def backward(net, activations, grad_out):
    """
    Backpropagate dL/d(output) through the net.

    Args:
        net (Mlp): The net used in the forward pass
        activations (list): Cache from `forward_with_cache` (batched input)
        grad_out (np.ndarray): dL/d(output), shape (B, out)

    Returns:
        Mlp: Gradients with the same layout as `net`
    """
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    delta = np.asarray(grad_out, dtype=np.float64)
    last = len(net.weights) - 1
    for i in range(last, -1, -1):
        if i != last:
            # tanh'(z) = 1 - tanh(z)^2, and activations[i + 1] = tanh(z)
            delta = delta * (1.0 - activations[i + 1] ** 2)
        grads_w[i] = activations[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ net.weights[i].T
    return Mlp(sizes=tuple(net.sizes), weights=grads_w, biases=grads_b)


def soft_update(target, online, tau):
    """
    Polyak averaging: every parameter t' = (1 - tau) * t + tau * o.

    Raises:
        UsageError: If the two nets have different shapes
    """
    if tuple(target.sizes) != tuple(online.sizes):
        raise UsageError(f"Shape mismatch: target {target.sizes} vs online {online.sizes}")
    if tau == 1.0:
        return online.copy()
    return Mlp(
        sizes=tuple(target.sizes),
        weights=[(1.0 - tau) * t + tau * o for t, o in zip(target.weights, online.weights)],
        biases=[(1.0 - tau) * t + tau * o for t, o in zip(target.biases, online.biases)],
    )
