"""Address-record schema, normalization and dataset plumbing.

A record describes the behaviour of one Bitcoin address through seven
features plus an entity-class label. Two of the features are derived
from the others (amount sent from received and balance, uniqueness from
the receive count), so generative models learn only the five
independent columns listed in ``LEARNED_COLUMNS`` and the dependent
pair is rebuilt afterwards.

The module also ships a synthetic ground-truth generator that mirrors
the heavy class imbalance of public wallet-label datasets, so the whole
pipeline can run at desk scale without blockchain access.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError, ValidationError

CLASSES = ("Exchange", "Gambling", "Marketplace", "MiningPool", "Mixer", "Service")

# Address counts per class in the public wallet-label corpus the
# imbalance profile is modelled on; only the ratios matter here.
CLASS_ADDRESS_COUNTS = {
    "Exchange": 9_947_450,
    "Gambling": 3_050_899,
    "Marketplace": 2_349_111,
    "MiningPool": 85_887,
    "Mixer": 475_781,
    "Service": 250_788,
}

FEATURE_COLUMNS = (
    "rx_tx_count",
    "tx_tx_count",
    "btc_received",
    "btc_sent",
    "balance",
    "uniqueness",
    "sibling_count",
)

# The independent subset a generative model learns, in this fixed order.
LEARNED_COLUMNS = ("btc_received", "balance", "rx_tx_count", "tx_tx_count", "sibling_count")

CSV_HEADER = FEATURE_COLUMNS + ("label",)

_BALANCE_TOL = 1e-9


@dataclass(slots=True)
class AddressRecord:
    """One labelled address-behaviour row.

    Invariants: balance equals btc_received - btc_sent (within 1e-9),
    uniqueness is 1 exactly when rx_tx_count is 1, counts and amounts
    are nonnegative. ``label`` is None for generated, not-yet-classified
    records.
    """

    rx_tx_count: int
    tx_tx_count: int
    btc_received: float
    btc_sent: float
    balance: float
    uniqueness: int
    sibling_count: int
    label: str | None = None

    def validate(self):
        if self.rx_tx_count < 0 or self.tx_tx_count < 0 or self.sibling_count < 0:
            raise ValidationError(f"negative transaction or sibling count in {self}")
        if self.btc_received < 0 or self.btc_sent < 0:
            raise ValidationError(f"negative BTC amount in {self}")
        if abs(self.balance - (self.btc_received - self.btc_sent)) > _BALANCE_TOL:
            raise ValidationError(
                f"balance {self.balance} != received {self.btc_received} "
                f"- sent {self.btc_sent}"
            )
        if self.uniqueness != (1 if self.rx_tx_count == 1 else 0):
            raise ValidationError(
                f"uniqueness {self.uniqueness} inconsistent with "
                f"rx_tx_count {self.rx_tx_count}"
            )
        if self.label is not None and self.label not in CLASSES:
            raise ValidationError(f"unknown class label {self.label!r}")
        return self


def records_to_features(records):
    """(n, 7) float matrix in FEATURE_COLUMNS order."""
    out = np.empty((len(records), len(FEATURE_COLUMNS)))
    for i, r in enumerate(records):
        out[i] = (r.rx_tx_count, r.tx_tx_count, r.btc_received, r.btc_sent,
                  r.balance, r.uniqueness, r.sibling_count)
    return out


def records_to_learned(records):
    """(n, 5) float matrix in LEARNED_COLUMNS order."""
    out = np.empty((len(records), len(LEARNED_COLUMNS)))
    for i, r in enumerate(records):
        out[i] = (r.btc_received, r.balance, r.rx_tx_count, r.tx_tx_count,
                  r.sibling_count)
    return out


def labels_of(records):
    return [r.label for r in records]


@dataclass
class NormalizationParams:
    """Columnwise min/max fitted on a dataset; max >= min per column."""

    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def span(self):
        return self.maximum - self.minimum


def fit_normalizer(data):
    """Columnwise min and max of a nonempty matrix."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InputError("normalizer needs at least one data row")
    return NormalizationParams(minimum=x.min(axis=0), maximum=x.max(axis=0))


def normalize(x, params):
    """Map features into [0, 1] columnwise; constant columns map to 0.

    Values outside the fitted range clamp to the interval ends.
    """
    x = np.asarray(x, dtype=np.float64)
    span = params.span
    safe = np.where(span > 0, span, 1.0)
    y = (x - params.minimum) / safe
    y = np.where(span > 0, y, 0.0)
    return np.clip(y, 0.0, 1.0)


def denormalize(y, params):
    """Inverse of normalize; inputs are clamped into [0, 1] first."""
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0)
    return y * params.span + params.minimum


def reduce_features(record):
    """Project a valid record onto the five independent learned features."""
    record.validate()
    return np.array([record.btc_received, record.balance, record.rx_tx_count,
                     record.tx_tx_count, record.sibling_count])


def reconstruct_matrix(learned):
    """Rebuild full 7-feature rows from denormalized learned rows.

    Integer features are rounded to the nearest nonnegative integer,
    btc_sent is received minus balance, uniqueness is set from the
    rounded receive count. Rows whose reconstructed btc_sent is
    negative are kept but flagged in the returned mask.

    Returns (features matrix in FEATURE_COLUMNS order, implausible mask).
    """
    v = np.asarray(learned, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != len(LEARNED_COLUMNS):
        raise InputError(f"expected (n, {len(LEARNED_COLUMNS)}) matrix, got {v.shape}")
    recv = np.maximum(v[:, 0], 0.0)
    bal = v[:, 1]
    rx = np.rint(np.maximum(v[:, 2], 0.0))
    tx = np.rint(np.maximum(v[:, 3], 0.0))
    sib = np.rint(np.maximum(v[:, 4], 0.0))
    sent = recv - bal
    uniq = (rx == 1).astype(np.float64)
    out = np.column_stack([rx, tx, recv, sent, bal, uniq, sib])
    return out, sent < 0


def reconstruct_features(vector):
    """Single-row reconstruct_matrix returning (record, implausible)."""
    row, flag = reconstruct_matrix(np.asarray(vector, dtype=np.float64).reshape(1, -1))
    rx, tx, recv, sent, bal, uniq, sib = row[0]
    rec = AddressRecord(
        rx_tx_count=int(rx), tx_tx_count=int(tx), btc_received=float(recv),
        btc_sent=float(sent), balance=float(bal), uniqueness=int(uniq),
        sibling_count=int(sib), label=None,
    )
    return rec, bool(flag[0])


def stratified_split(records, fraction=0.5, seed=0):
    """Split records per class at the given fraction, seeded.

    Per-class counts on each side differ from fraction * class size by
    at most one; the two sides partition the input exactly. Every class
    must have at least two records.
    """
    by_label = {}
    for i, r in enumerate(records):
        by_label.setdefault(r.label, []).append(i)
    rng = np.random.default_rng(seed)
    first, second = [], []
    for label in sorted(by_label, key=lambda c: (CLASSES.index(c) if c in CLASSES else len(CLASSES), str(c))):
        idxs = np.array(by_label[label])
        if idxs.size < 2:
            raise InputError(f"class {label!r} has fewer than 2 records")
        perm = rng.permutation(idxs)
        take = int(round(fraction * idxs.size))
        take = min(max(take, 1), idxs.size - 1)
        first.extend(perm[:take].tolist())
        second.extend(perm[take:].tolist())
    first.sort()
    second.sort()
    return [records[i] for i in first], [records[i] for i in second]


# Parametric per-class feature families for the synthetic ground truth:
# log-normal BTC amounts (log-mean, log-sigma), geometric transaction
# counts (success probability; receive counts start at 1, send counts
# at 0), a Beta-distributed spent fraction applied when the address ever
# sent, and Poisson sibling counts. Parameters are class-distinct so a
# classifier can separate the classes.
CLASS_PROFILES = {
    #            recv_mu recv_sig p_rx     p_tx    spent_a spent_b sib_lam
    "Exchange":    (6.5,  0.6,   1 / 400, 1 / 350, 8.0, 2.0, 20.0),
    "Gambling":    (2.8,  0.5,   1 / 60,  1 / 50,  5.0, 3.0, 8.0),
    "Marketplace": (0.8,  0.5,   1 / 15,  1 / 12,  4.0, 4.0, 3.0),
    "MiningPool":  (4.8,  0.35,  1 / 150, 1 / 8,   6.0, 3.0, 1.0),
    "Mixer":       (-0.8, 0.4,   1 / 5,   1 / 4,   7.0, 2.0, 5.0),
    "Service":     (-2.8, 0.5,   0.4,     0.5,     3.0, 5.0, 0.5),
}

_MIN_CLASS_RECORDS = 50


def synth_ground_truth(scale, seed=0):
    """Generate a labelled dataset mirroring the reference imbalance.

    Per-class record counts are the reference address counts times
    ``scale`` (rounded); every class must end up with at least 50
    records. All records satisfy the schema invariants by construction.
    """
    if scale <= 0:
        raise InputError("scale must be positive")
    counts = {c: int(round(CLASS_ADDRESS_COUNTS[c] * scale)) for c in CLASSES}
    short = [c for c, n in counts.items() if n < _MIN_CLASS_RECORDS]
    if short:
        raise InputError(
            f"scale {scale} leaves classes below {_MIN_CLASS_RECORDS} records: {short}"
        )
    rng = np.random.default_rng(seed)
    records = []
    for label in CLASSES:
        n = counts[label]
        mu, sig, p_rx, p_tx, sa, sb, lam = CLASS_PROFILES[label]
        rx = rng.geometric(p_rx, n)
        tx = rng.geometric(p_tx, n) - 1
        recv = rng.lognormal(mu, sig, n)
        frac = rng.beta(sa, sb, n)
        sib = rng.poisson(lam, n)
        sent = np.where(tx > 0, frac * recv, 0.0)
        bal = recv - sent
        for i in range(n):
            records.append(AddressRecord(
                rx_tx_count=int(rx[i]), tx_tx_count=int(tx[i]),
                btc_received=float(recv[i]), btc_sent=float(sent[i]),
                balance=float(bal[i]), uniqueness=1 if rx[i] == 1 else 0,
                sibling_count=int(sib[i]), label=label,
            ))
    return records


def save_records(records, path):
    """Write records as CSV with the canonical header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([
                r.rx_tx_count, r.tx_tx_count, repr(r.btc_received),
                repr(r.btc_sent), repr(r.balance), r.uniqueness,
                r.sibling_count, r.label if r.label is not None else "",
            ])


def load_records(path):
    """Read and validate a records CSV; errors name the offending line."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected header row", line=1)
        if tuple(header) != CSV_HEADER:
            raise ParseError(
                f"{path}: line 1: header {header} != expected {list(CSV_HEADER)}",
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise ParseError(
                    f"{path}: line {lineno}: expected {len(CSV_HEADER)} columns, "
                    f"got {len(row)}",
                    line=lineno,
                )
            try:
                rec = AddressRecord(
                    rx_tx_count=_parse_int(row[0], "rx_tx_count"),
                    tx_tx_count=_parse_int(row[1], "tx_tx_count"),
                    btc_received=_parse_float(row[2], "btc_received"),
                    btc_sent=_parse_float(row[3], "btc_sent"),
                    balance=_parse_float(row[4], "balance"),
                    uniqueness=_parse_int(row[5], "uniqueness"),
                    sibling_count=_parse_int(row[6], "sibling_count"),
                    label=row[7] if row[7] else None,
                )
                rec.validate()
            except (ValueError, ValidationError) as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}", line=lineno) from exc
            records.append(rec)
    return records


def _parse_int(text, column):
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"column {column}: not an integer: {text!r}") from None


def _parse_float(text, column):
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"column {column}: not a number: {text!r}") from None
