"""Dense feed-forward networks with analytic backpropagation.

The engine is deliberately small: fully connected layers, ReLU hidden
activations, a sigmoid or identity output, binary cross-entropy as the
only loss. Weights are Glorot-uniform initialized and biases start at
zero. A finite-difference gradient checker is included so the analytic
backward pass can be audited against a numeric one.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError, StateError

# Predictions are clamped into [EPS_CLAMP, 1 - EPS_CLAMP] before any
# logarithm so the loss stays finite for saturated outputs.
EPS_CLAMP = 1e-7

HIDDEN_ACTIVATIONS = ("relu",)
OUTPUT_ACTIVATIONS = ("sigmoid", "identity")


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    neg = ~pos
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[neg])
    out[neg] = ez / (1.0 + ez)
    # keep the open interval (0, 1) even when exp() underflows
    tiny = np.nextafter(out.dtype.type(0), out.dtype.type(1))
    top = np.nextafter(out.dtype.type(1), out.dtype.type(0))
    return np.clip(out, tiny, top)


def bce_loss(predictions, labels):
    """Mean binary cross-entropy with clamped predictions.

    Both arguments must have the same number of elements; labels are
    0/1. Returns a nonnegative float.
    """
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size != y.size:
        raise InputError(
            f"predictions ({p.size}) and labels ({y.size}) differ in length"
        )
    p = p.reshape(-1)
    y = y.reshape(-1)
    pc = np.clip(p, EPS_CLAMP, 1.0 - EPS_CLAMP)
    return float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))


def bce_output_delta(predictions, labels, output_activation="sigmoid"):
    """Gradient of the clamped mean BCE at the output pre-activation.

    For a sigmoid output the sigmoid derivative cancels and the delta is
    (p - y) / n; where the clamp is active the loss is locally constant
    so the delta is zero. The identity output keeps the raw dL/dp.
    """
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(p.shape)
    active = (p > EPS_CLAMP) & (p < 1.0 - EPS_CLAMP)
    if output_activation == "sigmoid":
        delta = np.where(active, p - y, 0.0)
    elif output_activation == "identity":
        pc = np.clip(p, EPS_CLAMP, 1.0 - EPS_CLAMP)
        delta = np.where(active, (p - y) / (pc * (1.0 - pc)), 0.0)
    else:
        raise ConfigurationError(f"unknown output activation {output_activation!r}")
    return delta / p.size


@dataclass
class GradientBundle:
    """Per-layer gradients, shape-congruent with the owning network."""

    weight_grads: list = field(default_factory=list)
    bias_grads: list = field(default_factory=list)

    def flat(self):
        """Interleaved [dW0, db0, dW1, db1, ...] matching parameters()."""
        out = []
        for dw, db in zip(self.weight_grads, self.bias_grads):
            out.append(dw)
            out.append(db)
        return out


class DenseNetwork:
    """A stack of dense layers with cached activations for backprop.

    `layer_sizes` lists input dim, hidden dims and output dim. Weight
    matrix k has shape (layer_sizes[k+1], layer_sizes[k]); forward maps
    row-major batches. `forward` caches intermediates for a subsequent
    backward pass; `predict` is the read-only variant safe to call on a
    shared instance.
    """

    def __init__(self, layer_sizes, output_activation="sigmoid",
                 hidden_activation="relu", seed=0, dtype=np.float64):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 1 or any(s <= 0 for s in sizes):
            raise ConfigurationError(f"layer sizes must be positive, got {sizes}")
        if hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigurationError(f"unsupported hidden activation {hidden_activation!r}")
        if output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigurationError(f"unsupported output activation {output_activation!r}")
        self.layer_sizes = tuple(sizes)
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(self.dtype)
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out, dtype=self.dtype))
        self._cache = None

    @property
    def num_layers(self):
        return len(self.weights)

    def parameters(self):
        """Interleaved [W0, b0, W1, b1, ...]; arrays are live references."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self):
        clone = DenseNetwork.__new__(DenseNetwork)
        clone.layer_sizes = self.layer_sizes
        clone.hidden_activation = self.hidden_activation
        clone.output_activation = self.output_activation
        clone.dtype = self.dtype
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        clone._cache = None
        return clone

    def _check_input(self, batch):
        x = np.asarray(batch, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.layer_sizes[0]:
            raise ConfigurationError(
                f"batch shape {x.shape} does not match input dim {self.layer_sizes[0]}"
            )
        if not np.all(np.isfinite(x)):
            raise InputError("batch contains non-finite entries")
        return x

    def _walk(self, x):
        zs = []
        acts = [x]
        a = x
        last = self.num_layers - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            if k < last:
                a = np.maximum(z, 0.0)
            elif self.output_activation == "sigmoid":
                a = _sigmoid(z)
            else:
                a = z
            zs.append(z)
            acts.append(a)
        return zs, acts

    def forward(self, batch):
        """Run the network and cache intermediates for backward."""
        x = self._check_input(batch)
        zs, acts = self._walk(x)
        self._cache = (zs, acts)
        return acts[-1]

    def predict(self, batch):
        """Forward pass without touching the backward cache."""
        x = self._check_input(batch)
        _, acts = self._walk(x)
        return acts[-1]

    def _require_cache(self):
        if self._cache is None:
            raise StateError("backward called before forward")
        return self._cache

    def _backprop(self, delta, want_param_grads=True, want_input_grad=False):
        zs, acts = self._require_cache()
        bundle = GradientBundle() if want_param_grads else None
        input_grad = None
        for k in range(self.num_layers - 1, -1, -1):
            if want_param_grads:
                bundle.weight_grads.insert(0, delta.T @ acts[k])
                bundle.bias_grads.insert(0, delta.sum(axis=0))
            if k > 0:
                delta = (delta @ self.weights[k]) * (zs[k - 1] > 0)
            elif want_input_grad:
                input_grad = delta @ self.weights[0]
        return bundle, input_grad

    def _bce_delta(self, labels):
        _, acts = self._require_cache()
        delta = bce_output_delta(acts[-1], labels, self.output_activation)
        return delta.astype(self.dtype, copy=False)

    def backward_bce(self, labels):
        """Gradients of the clamped mean BCE against 0/1 labels.

        Requires a preceding forward() on the batch the labels belong to.
        """
        bundle, _ = self._backprop(self._bce_delta(labels))
        return bundle

    def input_grad_bce(self, labels):
        """d(BCE)/d(input rows), skipping parameter gradients."""
        _, grad = self._backprop(
            self._bce_delta(labels), want_param_grads=False, want_input_grad=True
        )
        return grad

    def backward(self, grad_wrt_output):
        """Backprop an upstream gradient on the network output.

        `grad_wrt_output` has the output's shape; the output activation
        derivative is applied here, then the layers are walked.
        """
        zs, acts = self._require_cache()
        g = np.asarray(grad_wrt_output, dtype=self.dtype)
        if g.shape != acts[-1].shape:
            raise ConfigurationError(
                f"upstream gradient shape {g.shape} != output shape {acts[-1].shape}"
            )
        if self.output_activation == "sigmoid":
            p = acts[-1]
            delta = g * p * (1.0 - p)
        else:
            delta = g
        bundle, _ = self._backprop(delta)
        return bundle


def gradient_check(net, batch, labels, h=1e-5):
    """Max relative error between analytic and central-difference grads.

    The relative error of a parameter entry is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-12); the
    maximum over all entries is returned (0.0 for a parameterless net).
    """
    if h <= 0:
        raise InputError("finite-difference step h must be positive")
    net.forward(batch)
    analytic = net.backward_bce(labels).flat()
    worst = 0.0
    for param, grad in zip(net.parameters(), analytic):
        flat_p = param.reshape(-1)
        flat_g = grad.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = bce_loss(net.predict(batch), labels)
            flat_p[i] = orig - h
            down = bce_loss(net.predict(batch), labels)
            flat_p[i] = orig
            numeric = (up - down) / (2.0 * h)
            a = float(flat_g[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
            worst = max(worst, rel)
    return worst
