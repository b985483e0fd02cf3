"""Flat key=value config files driving the CLI and sweep harness.

Every tunable of the GAN, the sweep grid, the baseline forest and the
data source has a key with a documented default. Unknown keys are
rejected. The ``profile`` key switches between the full-scale grid
(``paper`` keeps dataset sizes 10000/5000/1000 and a one-million epoch
cap) and a ``desk`` profile that shrinks dataset sizes to 2000/1000/500
and the cap to 200000 so a complete sweep finishes on a workstation;
explicitly set keys always win over profile overrides.
"""

from dataclasses import dataclass, field

from .errors import ConfigurationError
from .forest import ForestHyperparams
from .gan import GanConfig


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text):
    return [int(p.strip()) for p in text.split(",") if p.strip()]


def _parse_str_list(text):
    return [p.strip() for p in text.split(",") if p.strip()]


# key -> (default, parser)
CONFIG_SCHEMA = {
    # data source
    "profile": ("paper", str),
    "data": ("", str),
    "scale": (0.025, float),
    "data_seed": (7, int),
    "split_fraction": (0.5, float),
    # sweep grid
    "optimizers": (["rmsprop", "adam"], _parse_str_list),
    "dataset_sizes": ([10000, 5000, 1000], _parse_int_list),
    "batch_sizes": ([400, 200, 100, 50], _parse_int_list),
    "repetitions": (3, int),
    "target_class": ("MiningPool", str),
    "base_seed": (42, int),
    "sample_count": (10000, int),
    # single-run GAN settings
    "optimizer": ("adam", str),
    "adam_variant": ("product", str),
    "generator_loss": ("non_saturating", str),
    "learning_rate": (0.001, float),
    "noise_dim": (100, int),
    "eval_period": (1000, int),
    "eval_repetitions": (5, int),
    "thr1": (0.90, float),
    "thr2": (0.90, float),
    "max_epochs": (1_000_000, int),
    "rng_seed": (0, int),
    "dataset_size": (1000, int),
    "batch_size": (400, int),
    "dtype": ("float64", str),
    # baseline forest
    "tree_count": (100, int),
    "max_depth": (16, int),
    "min_leaf_size": (5, int),
    "features_per_split": (0, int),
    "bootstrap": (True, _parse_bool),
}

PROFILE_OVERRIDES = {
    "paper": {},
    "desk": {"dataset_sizes": [2000, 1000, 500], "max_epochs": 200_000},
}


@dataclass
class Config:
    values: dict = field(default_factory=dict)
    explicit: set = field(default_factory=set)

    def __getitem__(self, key):
        return self.values[key]


def parse_config_text(text, source="<config>"):
    """Parse flat key=value text; apply defaults and profile overrides."""
    explicit = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}: line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigurationError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in explicit:
            raise ConfigurationError(f"{source}: line {lineno}: duplicate key {key!r}")
        _, parser = CONFIG_SCHEMA[key]
        try:
            explicit[key] = parser(value)
        except ValueError as exc:
            raise ConfigurationError(f"{source}: line {lineno}: {exc}") from exc

    values = {k: default for k, (default, _) in CONFIG_SCHEMA.items()}
    values.update(explicit)
    profile = values["profile"]
    if profile not in PROFILE_OVERRIDES:
        raise ConfigurationError(f"{source}: unknown profile {profile!r}")
    for key, override in PROFILE_OVERRIDES[profile].items():
        if key not in explicit:
            values[key] = override
    return Config(values=values, explicit=set(explicit))


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def default_config():
    return parse_config_text("")


def gan_config_from(cfg, **overrides):
    """Build a validated GanConfig from config values plus overrides."""
    kwargs = {
        "batch_size": cfg["batch_size"],
        "dataset_size": cfg["dataset_size"],
        "optimizer": cfg["optimizer"],
        "adam_variant": cfg["adam_variant"],
        "learning_rate": cfg["learning_rate"],
        "noise_dim": cfg["noise_dim"],
        "eval_period": cfg["eval_period"],
        "eval_repetitions": cfg["eval_repetitions"],
        "thr1": cfg["thr1"],
        "thr2": cfg["thr2"],
        "max_epochs": cfg["max_epochs"],
        "rng_seed": cfg["rng_seed"],
        "generator_loss": cfg["generator_loss"],
        "dtype": cfg["dtype"],
    }
    kwargs.update(overrides)
    return GanConfig(**kwargs).validate()


def forest_params_from(cfg):
    return ForestHyperparams(
        tree_count=cfg["tree_count"],
        max_depth=cfg["max_depth"],
        min_leaf_size=cfg["min_leaf_size"],
        features_per_split=cfg["features_per_split"],
        bootstrap=cfg["bootstrap"],
    )
