"""Per-parameter gradient-descent update rules: RMSProp and ADAM.

Both optimizers keep exponential moving averages per parameter entry
and update parameter arrays in place. ADAM ships in two variants:

* ``product`` (default): no bias correction, and the step multiplies the
  gradient average by the current gradient once more,
  ``dp = -eta * (nu / (sqrt(s) + eps)) * g``.
* ``canonical``: the familiar bias-corrected rule,
  ``dp = -eta * nu_hat / (sqrt(s_hat) + eps)``.

The variant in use is surfaced in run reports so results stay
attributable to the exact update rule.
"""

import numpy as np

from .errors import ConfigurationError

ADAM_VARIANTS = ("product", "canonical")


def _check_congruent(state, params, grads):
    if len(params) != len(grads):
        raise ConfigurationError(
            f"{len(params)} parameter arrays but {len(grads)} gradient arrays"
        )
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ConfigurationError(
                f"parameter shape {p.shape} does not match gradient shape {g.shape}"
            )
    if state is not None and len(state) != len(params):
        raise ConfigurationError("optimizer state does not match parameter count")


class RmsProp:
    """nu <- alpha*nu + (1-alpha)*g^2; p <- p - eta*g/(sqrt(nu)+eps)."""

    def __init__(self, eta=0.001, alpha=0.9, epsilon=1e-10):
        self.eta = eta
        self.alpha = alpha
        self.epsilon = epsilon
        self.nu = None

    def step(self, params, grads):
        if self.nu is None:
            self.nu = [np.zeros_like(p) for p in params]
        _check_congruent(self.nu, params, grads)
        for p, g, nu in zip(params, grads, self.nu):
            nu *= self.alpha
            nu += (1.0 - self.alpha) * g * g
            p -= self.eta * g / (np.sqrt(nu) + self.epsilon)


class Adam:
    """Moment-tracking update; see module docstring for the two variants."""

    def __init__(self, eta=0.001, beta1=0.9, beta2=0.999, epsilon=1e-10,
                 variant="product"):
        if variant not in ADAM_VARIANTS:
            raise ConfigurationError(f"unknown adam variant {variant!r}")
        self.eta = eta
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.variant = variant
        self.nu = None
        self.s = None
        self.step_count = 0

    def step(self, params, grads):
        if self.nu is None:
            self.nu = [np.zeros_like(p) for p in params]
            self.s = [np.zeros_like(p) for p in params]
        _check_congruent(self.nu, params, grads)
        self.step_count += 1
        t = self.step_count
        for p, g, nu, s in zip(params, grads, self.nu, self.s):
            nu *= self.beta1
            nu += (1.0 - self.beta1) * g
            s *= self.beta2
            s += (1.0 - self.beta2) * g * g
            if self.variant == "product":
                p -= self.eta * (nu / (np.sqrt(s) + self.epsilon)) * g
            else:
                nu_hat = nu / (1.0 - self.beta1 ** t)
                s_hat = s / (1.0 - self.beta2 ** t)
                p -= self.eta * nu_hat / (np.sqrt(s_hat) + self.epsilon)
