"""From-scratch random forest serving as the baseline address classifier.

Trees use axis-aligned splits chosen by exhaustive Gini-impurity search
over midpoints between consecutive distinct feature values, with a
random feature subset per node. Leaves store class-probability vectors;
the forest prediction is the argmax of the mean leaf distribution with
ties broken toward the lowest class index.

The module also implements the evaluation metrics used throughout and
the confidence-value protocol that scores synthetic samples by the
fraction a real-data-trained forest assigns to a target class.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError
from . import data as data_mod

FOREST_FILE_VERSION = 1


@dataclass
class ForestHyperparams:
    """Training knobs; features_per_split 0 means ceil(sqrt(n_features))."""

    tree_count: int = 100
    max_depth: int = 16
    min_leaf_size: int = 5
    features_per_split: int = 0
    bootstrap: bool = True

    def resolve_candidates(self, n_features):
        if self.features_per_split > 0:
            return min(self.features_per_split, n_features)
        return math.ceil(math.sqrt(n_features))


class Tree:
    """Array-encoded decision tree: feature -1 marks a leaf."""

    def __init__(self, feature, threshold, left, right, dist):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.dist = dist

    @property
    def node_count(self):
        return self.feature.size

    def predict_proba(self, x):
        node = np.zeros(x.shape[0], dtype=np.int32)
        rows = np.arange(x.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            sel = rows[active]
            nf = feat[active]
            go_left = x[sel, nf] <= self.threshold[node[active]]
            node[sel] = np.where(go_left, self.left[node[active]],
                                 self.right[node[active]])
        return self.dist[node]


def _leaf_dist(counts):
    total = counts.sum()
    return counts / total if total > 0 else counts.astype(np.float64)


def _best_split(x, y, idx, counts, n_node, candidates, min_leaf):
    """Exhaustive Gini search over the candidate features of one node.

    Returns (score, feature, threshold) where score is the split's
    sum of per-child (squared class counts / child size), to be
    maximized; None when no valid split exists. Candidates are scanned
    in ascending feature order and thresholds in ascending value order,
    keeping the first strict improvement, which fixes tie-breaking.
    """
    best = None
    for feat in candidates:
        vals = x[idx, feat]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        boundaries = np.nonzero(v[1:] > v[:-1])[0]
        if boundaries.size == 0:
            continue
        left_sizes = boundaries + 1
        valid = (left_sizes >= min_leaf) & (n_node - left_sizes >= min_leaf)
        if not valid.any():
            continue
        boundaries = boundaries[valid]
        left_sizes = left_sizes[valid].astype(np.float64)
        onehot = y[idx[order], None] == np.arange(counts.size)[None, :]
        cum = np.cumsum(onehot, axis=0)
        left_counts = cum[boundaries].astype(np.float64)
        right_counts = counts.astype(np.float64) - left_counts
        right_sizes = n_node - left_sizes
        score = ((left_counts ** 2).sum(axis=1) / left_sizes
                 + (right_counts ** 2).sum(axis=1) / right_sizes)
        k = int(np.argmax(score))
        if best is None or score[k] > best[0]:
            thr = (v[boundaries[k]] + v[boundaries[k] + 1]) / 2.0
            best = (float(score[k]), int(feat), float(thr))
    return best


def fit_tree(x, y, n_classes, hyperparams, rng):
    """Grow one tree on (x, y) with class indices in [0, n_classes)."""
    n_features = x.shape[1]
    k_cand = hyperparams.resolve_candidates(n_features)
    feature, threshold, left, right, dist = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        dist.append(np.zeros(n_classes))
        return len(feature) - 1

    stack = [(np.arange(x.shape[0]), 0, new_node())]
    while stack:
        idx, depth, node = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        n_node = idx.size
        pure = counts.max() == n_node
        if (pure or depth >= hyperparams.max_depth
                or n_node < 2 * hyperparams.min_leaf_size):
            dist[node] = _leaf_dist(counts)
            continue
        candidates = np.sort(rng.choice(n_features, size=k_cand, replace=False))
        best = _best_split(x, y, idx, counts, n_node, candidates,
                           hyperparams.min_leaf_size)
        # require a strict impurity decrease over leaving the node whole
        parent_score = float((counts.astype(np.float64) ** 2).sum()) / n_node
        if best is None or best[0] <= parent_score:
            dist[node] = _leaf_dist(counts)
            continue
        _, feat, thr = best
        go_left = x[idx, feat] <= thr
        feature[node] = feat
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((idx[go_left], depth + 1, left[node]))
        stack.append((idx[~go_left], depth + 1, right[node]))

    return Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        dist=np.vstack(dist),
    )


@dataclass
class ForestModel:
    """Immutable bundle of fitted trees plus the class vocabulary."""

    trees: list
    classes: tuple
    feature_count: int
    hyperparams: ForestHyperparams
    seed: int

    def class_index(self, label):
        try:
            return self.classes.index(label)
        except ValueError:
            raise ConfigurationError(f"model was not trained on class {label!r}") from None


def train_forest(records, hyperparams=None, seed=0):
    """Fit a forest on labelled records (single-class input is allowed)."""
    if not records:
        raise InputError("cannot train on an empty record list")
    hp = hyperparams or ForestHyperparams()
    x = data_mod.records_to_features(records)
    present = sorted({r.label for r in records},
                     key=lambda c: data_mod.CLASSES.index(c))
    classes = tuple(present)
    lookup = {c: i for i, c in enumerate(classes)}
    y = np.array([lookup[r.label] for r in records], dtype=np.int64)
    streams = np.random.SeedSequence(seed).spawn(hp.tree_count)
    trees = []
    n = x.shape[0]
    for child in streams:
        rng = np.random.default_rng(child)
        if hp.bootstrap:
            pick = rng.integers(0, n, size=n)
            trees.append(fit_tree(x[pick], y[pick], len(classes), hp, rng))
        else:
            trees.append(fit_tree(x, y, len(classes), hp, rng))
    return ForestModel(trees=trees, classes=classes, feature_count=x.shape[1],
                       hyperparams=hp, seed=seed)


def predict_proba_matrix(model, x):
    """(n, n_classes) mean leaf distribution across trees."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.feature_count:
        raise ConfigurationError(
            f"feature matrix shape {x.shape} does not match model "
            f"feature count {model.feature_count}"
        )
    acc = np.zeros((x.shape[0], len(model.classes)))
    for tree in model.trees:
        acc += tree.predict_proba(x)
    return acc / len(model.trees)


def predict_matrix(model, x):
    """Class indices for each row; ties break to the lowest index."""
    return np.argmax(predict_proba_matrix(model, x), axis=1)


def predict(model, record):
    """(label, probability vector) for one record."""
    x = data_mod.records_to_features([record])
    probs = predict_proba_matrix(model, x)[0]
    return model.classes[int(np.argmax(probs))], probs


@dataclass
class ClassMetrics:
    """Per-class recall (reported as accuracy), F1 and support.

    accuracy and f1 are None when the class has no test support.
    """

    accuracy: float | None
    f1: float | None
    support: int


@dataclass
class EvalReport:
    class_metrics: dict = field(default_factory=dict)

    @property
    def total_support(self):
        return sum(m.support for m in self.class_metrics.values())


def evaluate(model, records):
    """Per-class recall/F1/support of the model on labelled records."""
    if not records:
        raise InputError("cannot evaluate on an empty test set")
    x = data_mod.records_to_features(records)
    pred_idx = predict_matrix(model, x)
    predicted = [model.classes[i] for i in pred_idx]
    actual = data_mod.labels_of(records)
    labels = sorted(set(model.classes) | set(actual),
                    key=lambda c: data_mod.CLASSES.index(c))
    report = EvalReport()
    for label in labels:
        support = sum(1 for a in actual if a == label)
        tp = sum(1 for a, p in zip(actual, predicted) if a == label and p == label)
        n_pred = sum(1 for p in predicted if p == label)
        if support == 0:
            report.class_metrics[label] = ClassMetrics(None, None, 0)
            continue
        recall = tp / support
        precision = tp / n_pred if n_pred > 0 else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if (precision + recall) > 0 else 0.0)
        report.class_metrics[label] = ClassMetrics(recall, f1, support)
    return report


def confidence_value(model, synthetic, normparams, target_class):
    """Fraction of synthetic rows the model assigns to target_class.

    ``synthetic`` holds normalized generator outputs over the learned
    feature columns; rows are denormalized, the dependent features are
    reconstructed and all rows (plausible or not) are classified.
    """
    syn = np.asarray(synthetic, dtype=np.float64)
    if syn.ndim != 2 or syn.shape[0] == 0:
        raise InputError("synthetic sample matrix is empty")
    target_idx = model.class_index(target_class)
    denorm = data_mod.denormalize(syn, normparams)
    features, _ = data_mod.reconstruct_matrix(denorm)
    preds = predict_matrix(model, features)
    return float(np.mean(preds == target_idx))


def save_forest(model, path):
    """Persist a model as a versioned npz archive (exact round trip)."""
    offsets = np.zeros(len(model.trees) + 1, dtype=np.int64)
    for i, t in enumerate(model.trees):
        offsets[i + 1] = offsets[i] + t.node_count
    hp = model.hyperparams
    np.savez_compressed(
        path,
        version=np.array([FOREST_FILE_VERSION]),
        classes=np.array(model.classes),
        feature_count=np.array([model.feature_count]),
        seed=np.array([model.seed]),
        hyperparams=np.array([hp.tree_count, hp.max_depth, hp.min_leaf_size,
                              hp.features_per_split, int(hp.bootstrap)]),
        tree_offsets=offsets,
        node_feature=np.concatenate([t.feature for t in model.trees]),
        node_threshold=np.concatenate([t.threshold for t in model.trees]),
        node_left=np.concatenate([t.left for t in model.trees]),
        node_right=np.concatenate([t.right for t in model.trees]),
        node_dist=np.vstack([t.dist for t in model.trees]),
    )


def load_forest(path):
    with np.load(path, allow_pickle=False) as archive:
        version = int(archive["version"][0])
        if version != FOREST_FILE_VERSION:
            raise ConfigurationError(
                f"{path}: unsupported forest file version {version}"
            )
        offsets = archive["tree_offsets"]
        trees = []
        for i in range(offsets.size - 1):
            lo, hi = offsets[i], offsets[i + 1]
            trees.append(Tree(
                feature=archive["node_feature"][lo:hi],
                threshold=archive["node_threshold"][lo:hi],
                left=archive["node_left"][lo:hi],
                right=archive["node_right"][lo:hi],
                dist=archive["node_dist"][lo:hi],
            ))
        hp_arr = archive["hyperparams"]
        hp = ForestHyperparams(
            tree_count=int(hp_arr[0]), max_depth=int(hp_arr[1]),
            min_leaf_size=int(hp_arr[2]), features_per_split=int(hp_arr[3]),
            bootstrap=bool(hp_arr[4]),
        )
        return ForestModel(
            trees=trees,
            classes=tuple(str(c) for c in archive["classes"]),
            feature_count=int(archive["feature_count"][0]),
            hyperparams=hp,
            seed=int(archive["seed"][0]),
        )
