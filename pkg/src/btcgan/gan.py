"""Adversarial training of a generator/discriminator pair on tabular rows.

One epoch draws a fresh noise batch, produces synthetic rows through
the generator, updates the discriminator on batch-size real rows
(label 1) stacked with batch-size synthetic rows (label 0), then
updates the generator on the discriminator's response to a second
fresh synthetic batch. Every ``eval_period`` epochs the evaluation
phase samples ``eval_repetitions`` independent synthetic batches and
scores each by the fraction of discriminator outputs above ``thr1``;
training stops once every repetition's score exceeds ``thr2``.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError, TrainingDivergenceError
from .network import DenseNetwork, bce_loss
from .optim import Adam, RmsProp, ADAM_VARIANTS

OPTIMIZERS = ("rmsprop", "adam")
GENERATOR_LOSSES = ("non_saturating", "minmax")
DTYPES = ("float64", "float32")

GENERATOR_HIDDEN = (512, 256, 128)
DISCRIMINATOR_HIDDEN = (256, 512, 256)
DEFAULT_FEATURE_DIM = 5


@dataclass
class GanConfig:
    """Hyperparameters for one adversarial training run."""

    batch_size: int
    dataset_size: int
    optimizer: str = "adam"
    adam_variant: str = "product"
    learning_rate: float = 0.001
    noise_dim: int = 100
    eval_period: int = 1000
    eval_repetitions: int = 5
    thr1: float = 0.90
    thr2: float = 0.90
    max_epochs: int = 1_000_000
    rng_seed: int = 0
    generator_loss: str = "non_saturating"
    dtype: str = "float64"

    def validate(self):
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be positive")
        if self.dataset_size < self.batch_size:
            raise ConfigurationError(
                f"batch_size {self.batch_size} exceeds dataset_size {self.dataset_size}"
            )
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        if self.adam_variant not in ADAM_VARIANTS:
            raise ConfigurationError(f"unknown adam variant {self.adam_variant!r}")
        if self.generator_loss not in GENERATOR_LOSSES:
            raise ConfigurationError(f"unknown generator loss {self.generator_loss!r}")
        if self.dtype not in DTYPES:
            raise ConfigurationError(f"unknown dtype {self.dtype!r}")
        if not 0.0 < self.thr1 < 1.0:
            raise ConfigurationError("thr1 must lie strictly between 0 and 1")
        if not self.thr2 < 1.0:
            raise ConfigurationError("thr2 must be below 1")
        if self.noise_dim < 1 or self.eval_period < 1 or self.eval_repetitions < 1:
            raise ConfigurationError("noise_dim, eval_period and eval_repetitions must be positive")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be positive")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        return self

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


@dataclass
class GanModel:
    """Generator + discriminator and their optimizer states."""

    generator: DenseNetwork
    discriminator: DenseNetwork
    g_opt: object
    d_opt: object

    def __post_init__(self):
        g_out = self.generator.layer_sizes[-1]
        d_in = self.discriminator.layer_sizes[0]
        if g_out != d_in:
            raise ConfigurationError(
                f"generator output dim {g_out} != discriminator input dim {d_in}"
            )

    @property
    def feature_dim(self):
        return self.generator.layer_sizes[-1]


@dataclass
class EvalRecord:
    epoch: int
    accuracies: list
    passed: bool


@dataclass
class TrainOutcome:
    epochs_run: int
    converged: bool
    final_eval_accuracies: list
    wall_seconds: float
    eval_history: list = field(default_factory=list)


def _make_optimizer(config):
    if config.optimizer == "rmsprop":
        return RmsProp(eta=config.learning_rate)
    return Adam(eta=config.learning_rate, variant=config.adam_variant)


def build_gan(config, feature_dim=DEFAULT_FEATURE_DIM):
    """Construct a seeded generator/discriminator pair for the config."""
    config.validate()
    seeds = np.random.SeedSequence(config.rng_seed).spawn(2)
    gen = DenseNetwork(
        (config.noise_dim, *GENERATOR_HIDDEN, feature_dim),
        output_activation="sigmoid", seed=seeds[0], dtype=config.np_dtype,
    )
    disc = DenseNetwork(
        (feature_dim, *DISCRIMINATOR_HIDDEN, 1),
        output_activation="sigmoid", seed=seeds[1], dtype=config.np_dtype,
    )
    return GanModel(generator=gen, discriminator=disc,
                    g_opt=_make_optimizer(config), d_opt=_make_optimizer(config))


def _noise(rng, rows, config):
    return rng.standard_normal((rows, config.noise_dim), dtype=config.np_dtype)


def train_epoch(model, real_batch, config, rng, epoch=0):
    """One discriminator update followed by one generator update.

    Real rows carry label 1, synthetic rows label 0. The generator is
    updated through the discriminator without touching the
    discriminator's weights. Returns (d_loss, g_loss).
    """
    m = real_batch.shape[0]
    disc = model.discriminator
    gen = model.generator

    synth = gen.predict(_noise(rng, m, config))
    stacked = np.concatenate([real_batch, synth])
    labels = np.concatenate([np.ones(m), np.zeros(m)])
    preds = disc.forward(stacked)
    d_loss = bce_loss(preds, labels)
    model.d_opt.step(disc.parameters(), disc.backward_bce(labels).flat())

    synth2 = gen.forward(_noise(rng, m, config))
    preds2 = disc.forward(synth2)
    ones = np.ones(m)
    if config.generator_loss == "non_saturating":
        # push D(G(z)) toward 1
        g_loss = bce_loss(preds2, ones)
        grad_wrt_synth = disc.input_grad_bce(ones)
    else:
        # literal min-max objective: ascend the fake-label BCE
        zeros = np.zeros(m)
        g_loss = -bce_loss(preds2, zeros)
        grad_wrt_synth = -disc.input_grad_bce(zeros)
    model.g_opt.step(gen.parameters(), gen.backward(grad_wrt_synth).flat())

    if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
        raise TrainingDivergenceError(
            f"non-finite loss at epoch {epoch}: d={d_loss} g={g_loss}", epoch=epoch
        )
    return d_loss, g_loss


def evaluate_stop(model, config, rng):
    """One evaluation phase: n repetitions of score-and-threshold.

    Each repetition generates batch_size synthetic rows, scores them
    with the discriminator and computes the fraction above thr1. The
    phase passes only if every repetition's fraction exceeds thr2.
    Returns (passed, list of the n accuracies).
    """
    accuracies = []
    for _ in range(config.eval_repetitions):
        synth = model.generator.predict(_noise(rng, config.batch_size, config))
        scores = model.discriminator.predict(synth).ravel()
        accuracies.append(float(np.mean(scores > config.thr1)))
    passed = all(a > config.thr2 for a in accuracies)
    return passed, accuracies


def train(model, ground_truth, config, log=None):
    """Run the adversarial loop until the evaluation phase passes.

    ``ground_truth`` is a normalized (dataset_size, feature_dim) matrix
    in [0, 1]. Each epoch samples batch_size distinct real rows
    uniformly. Evaluation runs every eval_period epochs; on a pass the
    run stops converged, otherwise it ends at max_epochs. ``log``, when
    given, receives one dict per epoch and one per evaluation.
    """
    config.validate()
    x = np.asarray(ground_truth, dtype=config.np_dtype)
    if x.ndim != 2 or x.shape[1] != model.feature_dim:
        raise InputError(
            f"ground truth shape {x.shape} does not match feature dim {model.feature_dim}"
        )
    if x.shape[0] != config.dataset_size:
        raise InputError(
            f"ground truth has {x.shape[0]} rows, config.dataset_size is {config.dataset_size}"
        )
    if not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0:
        raise InputError("ground truth must be normalized into [0, 1]")

    seeds = np.random.SeedSequence(config.rng_seed).spawn(4)
    rng_train = np.random.default_rng(seeds[2])
    rng_eval = np.random.default_rng(seeds[3])

    start = time.perf_counter()
    history = []
    final_accs = []
    converged = False
    epochs_run = 0
    for epoch in range(1, config.max_epochs + 1):
        batch = x[rng_train.choice(x.shape[0], size=config.batch_size, replace=False)]
        d_loss, g_loss = train_epoch(model, batch, config, rng_train, epoch=epoch)
        epochs_run = epoch
        if log is not None:
            log({"epoch": epoch, "d_loss": d_loss, "g_loss": g_loss})
        if epoch % config.eval_period == 0:
            passed, accs = evaluate_stop(model, config, rng_eval)
            history.append(EvalRecord(epoch=epoch, accuracies=accs, passed=passed))
            final_accs = accs
            if log is not None:
                log({"epoch": epoch, "eval_accuracies": accs, "passed": passed})
            if passed:
                converged = True
                break
    return TrainOutcome(
        epochs_run=epochs_run,
        converged=converged,
        final_eval_accuracies=final_accs,
        wall_seconds=time.perf_counter() - start,
        eval_history=history,
    )


def generate(model, count, rng_seed=0, chunk=4096):
    """Sample ``count`` synthetic rows with a fresh seeded noise stream."""
    if count < 0:
        raise InputError("count must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    cfg_dtype = model.generator.dtype
    out = np.empty((count, model.feature_dim), dtype=cfg_dtype)
    done = 0
    while done < count:
        n = min(chunk, count - done)
        noise = rng.standard_normal((n, model.generator.layer_sizes[0]),
                                    dtype=cfg_dtype)
        out[done:done + n] = model.generator.predict(noise)
        done += n
    return out
