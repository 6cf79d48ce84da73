"""Spy/not-spy decisions from similarity vectors.

Two classifier families: per-measure thresholds (cheap, tunable by F1
sweep) and a small feed-forward network over several measures at once.
Also the evaluation machinery: metrics, prefix-convergence curves,
cross-partition portability matrices and false-positive agreement.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    ClassImbalanceError,
    ParameterError,
    PartitionError,
    TrainingDivergedError,
)
from .similarity import MEASURES, SimilarityVector, similarity_vector
from .timeseries import ByteSeries, align

# Measures where larger means more similar classify spy at-or-above the
# threshold; distance/divergence measures at-or-below.
DIRECTION_BY_MEASURE = {
    "cc": "spy_if_at_least",
    "dtw": "spy_if_at_most",
    "kld": "spy_if_at_most",
    "jsd": "spy_if_at_most",
}

# Published operating points; sweep_threshold re-tunes per corpus.
DEFAULT_THRESHOLDS = {"cc": 0.21, "dtw": 12.51, "kld": 0.021, "jsd": 0.005}

# Stand-ins for undefined measures when a model needs a total feature
# vector; each imputed slot also gets an indicator input.
IMPUTED_VALUES = {"cc": 0.0, "dtw": 0.0, "kld": 10.0, "jsd": math.log(2)}
KLD_FEATURE_CAP = 10.0

CAMERA_REF_FEATURES = ("cc", "kld", "jsd")
PHONE_REF_FEATURES = ("dtw", "kld", "jsd")


@dataclass(frozen=True)
class ThresholdConfig:
    measure: str
    threshold: float
    direction: str

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ParameterError(f"unknown measure {self.measure!r}")
        if self.direction != DIRECTION_BY_MEASURE[self.measure]:
            raise ParameterError(
                f"direction for {self.measure} must be {DIRECTION_BY_MEASURE[self.measure]}"
            )

    @classmethod
    def for_measure(cls, measure: str, threshold: float) -> "ThresholdConfig":
        return cls(measure, threshold, DIRECTION_BY_MEASURE[measure])


def default_configs(measures: Iterable[str] = MEASURES) -> list[ThresholdConfig]:
    return [ThresholdConfig.for_measure(m, DEFAULT_THRESHOLDS[m]) for m in measures]


@dataclass(frozen=True)
class LabeledSample:
    features: SimilarityVector
    label: bool
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Verdict:
    """A boolean decision that remembers when it was forced by an
    undefined measure."""

    spy: bool
    indeterminate: bool = False

    def __bool__(self) -> bool:
        return self.spy


def imputed_measure(sv: SimilarityVector, measure: str) -> float:
    """The measure's value with undefined slots filled by their stand-in.

    kld is additionally capped so near-degenerate candidates cannot blow
    up feature scaling.
    """
    value = sv.measure(measure)
    if value is None:
        return IMPUTED_VALUES[measure]
    if measure == "kld":
        return min(value, KLD_FEATURE_CAP)
    return value


def threshold_classify(sv: SimilarityVector, cfg: ThresholdConfig, impute: bool = False) -> Verdict:
    """Compare one measure against its threshold.

    An undefined measure yields not-spy marked indeterminate unless
    ``impute`` substitutes the stand-in value first.
    """
    value = sv.measure(cfg.measure)
    if value is None:
        if not impute:
            return Verdict(spy=False, indeterminate=True)
        value = IMPUTED_VALUES[cfg.measure]
    if cfg.direction == "spy_if_at_least":
        return Verdict(spy=value >= cfg.threshold)
    return Verdict(spy=value <= cfg.threshold)


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: frozenset[str] = frozenset()

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def evaluate(predictions: Sequence[bool], labels: Sequence[bool]) -> Metrics:
    """Confusion counts plus accuracy/precision/recall/F1.

    Zero-denominator ratios come back as 0.0, named in ``undefined``.
    """
    if len(predictions) != len(labels):
        raise ParameterError(f"length mismatch: {len(predictions)} vs {len(labels)}")
    if len(labels) < 1:
        raise ParameterError("need at least one prediction")
    tp = fp = tn = fn = 0
    for pred, label in zip(predictions, labels):
        if pred and label:
            tp += 1
        elif pred and not label:
            fp += 1
        elif not pred and label:
            fn += 1
        else:
            tn += 1
    undefined = set()
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, undefined = 0.0, undefined | {"precision"}
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, undefined = 0.0, undefined | {"recall"}
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1, undefined = 0.0, undefined | {"f1"}
    accuracy = (tp + tn) / len(labels)
    return Metrics(tp, fp, tn, fn, accuracy, precision, recall, f1, frozenset(undefined))


def sweep_threshold(samples: Sequence[LabeledSample], measure: str) -> tuple[float, float]:
    """Best F1 threshold for one measure over a labeled corpus.

    Candidates are midpoints between consecutive distinct values plus
    +-inf sentinels; ties break toward the threshold admitting fewer
    positives.
    """
    if measure not in MEASURES:
        raise ParameterError(f"unknown measure {measure!r}")
    labels = [s.label for s in samples]
    if len(set(labels)) < 2:
        raise ClassImbalanceError("sweep needs both classes present")
    values = np.array([imputed_measure(s.features, measure) for s in samples])
    distinct = np.unique(values)
    candidates = [-math.inf] + [float((a + b) / 2) for a, b in zip(distinct, distinct[1:])] + [math.inf]
    at_least = DIRECTION_BY_MEASURE[measure] == "spy_if_at_least"
    if at_least:
        candidates = candidates[::-1]  # fewest positives first
    best_threshold, best_f1 = candidates[0], -1.0
    for threshold in candidates:
        preds = values >= threshold if at_least else values <= threshold
        f1 = evaluate(preds.tolist(), labels).f1
        if f1 > best_f1:
            best_threshold, best_f1 = threshold, f1
    return best_threshold, best_f1


# ---------------------------------------------------------------------------
# Feed-forward network
# ---------------------------------------------------------------------------

ACTIVATIONS = ("logistic", "tanh", "relu")
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpModel:
    layer_sizes: tuple[int, ...]  # input, hidden..., 1
    activation: str
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    feature_subset: tuple[str, ...]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    training_loss: float = math.nan

    @property
    def total_weights(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def feature_matrix(samples: Sequence[LabeledSample], subset: Sequence[str]) -> np.ndarray:
    """Measures plus per-measure undefined indicators, one row per sample."""
    rows = []
    for s in samples:
        vals = [imputed_measure(s.features, m) for m in subset]
        indicators = [1.0 if s.features.measure(m) is None else 0.0 for m in subset]
        rows.append(vals + indicators)
    return np.array(rows, dtype=np.float64)


def _feature_row(sv: SimilarityVector, subset: Sequence[str]) -> np.ndarray:
    vals = [imputed_measure(sv, m) for m in subset]
    indicators = [1.0 if sv.measure(m) is None else 0.0 for m in subset]
    return np.array(vals + indicators, dtype=np.float64)


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "logistic":
        return 1.0 / (1.0 + np.exp(-z))
    if kind == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_grad(a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "logistic":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    return (a > 0).astype(np.float64)


def _forward(model_weights, model_biases, activation: str, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    last = len(model_weights) - 1
    for i, (w, b) in enumerate(zip(model_weights, model_biases)):
        z = acts[-1] @ w + b
        acts.append(_act(z, "logistic" if i == last else activation))
    return acts


def mlp_train(
    train: Sequence[LabeledSample],
    layers: Sequence[int] = (13, 13, 13),
    activation: str = "logistic",
    seed: int = 0,
    max_iter: int = 400,
    alpha: float = 1e-4,
    feature_subset: Sequence[str] = CAMERA_REF_FEATURES,
) -> MlpModel:
    """Fit the network by full-batch Adam on logistic loss.

    Deterministic for a fixed seed; stops when the loss improves by less
    than 1e-6 or after ``max_iter`` iterations.
    """
    if activation not in ACTIVATIONS:
        raise ParameterError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    labels = np.array([s.label for s in train], dtype=np.float64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos < 10 or n_neg < 10:
        raise ClassImbalanceError(f"need >= 10 samples per class, got {n_pos} spy / {n_neg} other")

    x_raw = feature_matrix(train, tuple(feature_subset))
    mean = x_raw.mean(axis=0)
    std = x_raw.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    x = (x_raw - mean) / std
    y = labels.reshape(-1, 1)

    sizes = (x.shape[1], *layers, 1)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))

    n = x.shape[0]
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    lr, beta1, beta2, eps = 0.02, 0.9, 0.999, 1e-8

    prev_loss = math.inf
    loss = prev_loss
    for it in range(1, max_iter + 1):
        acts = _forward(weights, biases, activation, x)
        p = np.clip(acts[-1], 1e-12, 1 - 1e-12)
        loss = float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))
        loss += 0.5 * alpha * sum(float((w * w).sum()) for w in weights) / n
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"loss became non-finite at iteration {it}")
        if abs(prev_loss - loss) < 1e-6:
            break
        prev_loss = loss

        delta = (acts[-1] - y) / n  # logistic output + BCE
        for i in range(len(weights) - 1, -1, -1):
            gw = acts[i].T @ delta + alpha * weights[i] / n
            gb = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ weights[i].T) * _act_grad(acts[i], activation)
            m_w[i] = beta1 * m_w[i] + (1 - beta1) * gw
            v_w[i] = beta2 * v_w[i] + (1 - beta2) * gw * gw
            m_b[i] = beta1 * m_b[i] + (1 - beta1) * gb
            v_b[i] = beta2 * v_b[i] + (1 - beta2) * gb * gb
            corr1 = 1 - beta1**it
            corr2 = 1 - beta2**it
            weights[i] = weights[i] - lr * (m_w[i] / corr1) / (np.sqrt(v_w[i] / corr2) + eps)
            biases[i] = biases[i] - lr * (m_b[i] / corr1) / (np.sqrt(v_b[i] / corr2) + eps)

    for w in weights:
        w.setflags(write=False)
    for b in biases:
        b.setflags(write=False)
    mean.setflags(write=False)
    std.setflags(write=False)
    return MlpModel(
        layer_sizes=sizes,
        activation=activation,
        weights=tuple(weights),
        biases=tuple(biases),
        feature_subset=tuple(feature_subset),
        feature_mean=mean,
        feature_std=std,
        training_loss=loss,
    )


def mlp_predict(model: MlpModel, sv: SimilarityVector) -> float:
    """Spy probability in (0, 1) for one similarity vector."""
    return float(_mlp_predict_matrix(model, _feature_row(sv, model.feature_subset)[None, :])[0])


def _mlp_predict_matrix(model: MlpModel, x_raw: np.ndarray) -> np.ndarray:
    x = (x_raw - model.feature_mean) / model.feature_std
    return _forward(model.weights, model.biases, model.activation, x)[-1][:, 0]


def mlp_verdicts(model: MlpModel, samples: Sequence[LabeledSample]) -> list[bool]:
    x = feature_matrix(samples, model.feature_subset)
    return (_mlp_predict_matrix(model, x) >= 0.5).tolist()


def save_model(model: MlpModel, out: TextIO) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "weights": [w.reshape(-1).tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "feature_subset": list(model.feature_subset),
        "standardization": {
            "mean": model.feature_mean.tolist(),
            "std": model.feature_std.tolist(),
        },
        "training_loss": model.training_loss,
    }
    json.dump(payload, out, indent=2, sort_keys=True)
    out.write("\n")


def load_model(inp: TextIO) -> MlpModel:
    payload = json.load(inp)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ParameterError(f"unsupported model format version {version}")
    sizes = tuple(payload["layer_sizes"])
    weights = tuple(
        np.array(flat, dtype=np.float64).reshape(fan_in, fan_out)
        for flat, fan_in, fan_out in zip(payload["weights"], sizes, sizes[1:])
    )
    biases = tuple(np.array(b, dtype=np.float64) for b in payload["biases"])
    return MlpModel(
        layer_sizes=sizes,
        activation=payload["activation"],
        weights=weights,
        biases=biases,
        feature_subset=tuple(payload["feature_subset"]),
        feature_mean=np.array(payload["standardization"]["mean"], dtype=np.float64),
        feature_std=np.array(payload["standardization"]["std"], dtype=np.float64),
        training_loss=payload.get("training_loss", math.nan),
    )


# ---------------------------------------------------------------------------
# Grid search with stratified cross validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamGrid:
    layer_counts: tuple[int, ...] = (1, 2, 3)
    widths: tuple[int, ...] = (10, 11, 12, 13, 14, 15, 16, 17)
    activations: tuple[str, ...] = ("logistic", "tanh")
    alphas: tuple[float, ...] = tuple(float(a) for a in np.logspace(-5, 0.25, 16))

    def points(self) -> list["GridPoint"]:
        return [
            GridPoint(hidden_layers=(width,) * count, activation=act, alpha=alpha)
            for count, width, act, alpha in itertools.product(
                self.layer_counts, self.widths, self.activations, self.alphas
            )
        ]


@dataclass(frozen=True)
class GridPoint:
    hidden_layers: tuple[int, ...]
    activation: str
    alpha: float


def stratified_folds(labels: Sequence[bool], folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified fold assignment; returns index arrays."""
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    labels_arr = np.asarray(labels, dtype=bool)
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels_arr), dtype=np.int64)
    for cls in (True, False):
        idx = np.flatnonzero(labels_arr == cls)
        if idx.size < folds:
            raise ClassImbalanceError(
                f"class {cls} has {idx.size} samples, fewer than {folds} folds"
            )
        rng.shuffle(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return [np.flatnonzero(assignment == k) for k in range(folds)]


def cross_validate(
    samples: Sequence[LabeledSample],
    point: GridPoint,
    folds: int,
    seed: int,
    feature_subset: Sequence[str] = CAMERA_REF_FEATURES,
    max_iter: int = 300,
) -> float:
    """Mean held-out F1 of one hyperparameter point."""
    labels = [s.label for s in samples]
    fold_indices = stratified_folds(labels, folds, seed)
    scores = []
    for k, test_idx in enumerate(fold_indices):
        test_set = set(test_idx.tolist())
        train_split = [s for i, s in enumerate(samples) if i not in test_set]
        test_split = [samples[i] for i in test_idx]
        model = mlp_train(
            train_split,
            layers=point.hidden_layers,
            activation=point.activation,
            seed=seed + k,
            max_iter=max_iter,
            alpha=point.alpha,
            feature_subset=feature_subset,
        )
        preds = mlp_verdicts(model, test_split)
        scores.append(evaluate(preds, [s.label for s in test_split]).f1)
    return float(np.mean(scores))


def grid_search(
    samples: Sequence[LabeledSample],
    grid: ParamGrid | Sequence[GridPoint] | None = None,
    folds: int = 10,
    seed: int = 0,
    feature_subset: Sequence[str] = CAMERA_REF_FEATURES,
    max_iter: int = 300,
) -> tuple[GridPoint, float]:
    """Pick the hyperparameter point with the best mean CV F1.

    Exact F1 ties break toward the architecture with fewer weights.
    """
    if grid is None:
        grid = ParamGrid()
    points = grid.points() if isinstance(grid, ParamGrid) else list(grid)
    if not points:
        raise ParameterError("hyperparameter grid is empty")
    n_features = 2 * len(feature_subset)
    best: tuple[float, int, int] | None = None
    best_point = points[0]
    for order, point in enumerate(points):
        score = cross_validate(samples, point, folds, seed, feature_subset, max_iter)
        sizes = (n_features, *point.hidden_layers, 1)
        n_weights = sum((a + 1) * b for a, b in zip(sizes, sizes[1:]))
        key = (-score, n_weights, order)
        if best is None or key < best:
            best = key
            best_point = point
    return best_point, -best[0]


# ---------------------------------------------------------------------------
# Evaluation studies
# ---------------------------------------------------------------------------

def classify_sample(sv: SimilarityVector, model_or_cfg: MlpModel | ThresholdConfig) -> bool:
    if isinstance(model_or_cfg, MlpModel):
        return mlp_predict(model_or_cfg, sv) >= 0.5
    return bool(threshold_classify(sv, model_or_cfg))


def convergence_analysis(
    reference: ByteSeries,
    devices: Sequence,
    labels: Sequence[bool],
    model_or_cfg: MlpModel | ThresholdConfig,
) -> list[tuple[int, Metrics]]:
    """Metrics at every prefix length t = 2..T of the shared window.

    Each device is aligned with the reference once; at each t the
    similarity vectors are recomputed on the first t steps only.
    """
    if len(devices) != len(labels):
        raise ParameterError("devices and labels must have equal length")
    pairs = []
    for device in devices:
        series = device.series if hasattr(device, "series") else device
        pairs.append(align(reference, series))
    t_max = max(len(ref) for ref, _ in pairs)
    if t_max < 2:
        raise ParameterError("window must be at least 2 steps")
    results = []
    for t in range(2, t_max + 1):
        preds = []
        for ref, cand in pairs:
            n = min(t, len(ref))
            sv = similarity_vector(ref.prefix(n), cand.prefix(n))
            preds.append(classify_sample(sv, model_or_cfg))
        results.append((t, evaluate(preds, list(labels))))
    return results


def _split_tags(samples: Sequence[LabeledSample], partition_tag: str) -> dict[str, list[LabeledSample]]:
    prefix = partition_tag + "="
    groups: dict[str, list[LabeledSample]] = {}
    for s in samples:
        values = [t[len(prefix):] for t in s.tags if t.startswith(prefix)]
        if len(values) != 1:
            raise PartitionError(f"sample lacks a single {partition_tag}=... tag")
        groups.setdefault(values[0], []).append(s)
    return groups


def _holdout_split(
    samples: Sequence[LabeledSample], seed: int
) -> tuple[list[LabeledSample], list[LabeledSample]]:
    labels = [s.label for s in samples]
    rng = np.random.default_rng(seed)
    train: list[LabeledSample] = []
    test: list[LabeledSample] = []
    for cls in (True, False):
        idx = np.flatnonzero(np.asarray(labels, dtype=bool) == cls)
        rng.shuffle(idx)
        half = idx.size // 2
        train.extend(samples[i] for i in idx[:half])
        test.extend(samples[i] for i in idx[half:])
    return train, test


def _fit_and_score(
    train: Sequence[LabeledSample],
    test: Sequence[LabeledSample],
    trainer,
    seed: int,
    feature_subset: Sequence[str],
) -> float:
    if isinstance(trainer, ThresholdConfig):
        preds = [bool(threshold_classify(s.features, trainer)) for s in test]
    elif isinstance(trainer, str):
        threshold, _ = sweep_threshold(list(train), trainer)
        cfg = ThresholdConfig.for_measure(trainer, threshold)
        preds = [bool(threshold_classify(s.features, cfg, impute=True)) for s in test]
    elif isinstance(trainer, GridPoint):
        model = mlp_train(
            list(train),
            layers=trainer.hidden_layers,
            activation=trainer.activation,
            seed=seed,
            alpha=trainer.alpha,
            feature_subset=feature_subset,
        )
        preds = mlp_verdicts(model, list(test))
    else:
        raise ParameterError(f"unsupported trainer {trainer!r}")
    return evaluate(preds, [s.label for s in test]).f1


def portability_matrix(
    samples: Sequence[LabeledSample],
    partition_tag: str,
    trainer,
    seed: int = 0,
    feature_subset: Sequence[str] = CAMERA_REF_FEATURES,
) -> tuple[tuple[str, str, str], np.ndarray]:
    """F1 for train/test over two tagged partitions and their union.

    Tags of the form ``<partition_tag>=<value>`` split the corpus; the
    matrix rows are training sets (A, B, both) and columns test sets.
    Diagonal cells use a held-out half; off-diagonal cells train and
    test on the full partitions, as is conventional for portability
    studies.
    """
    groups = _split_tags(samples, partition_tag)
    if len(groups) != 2:
        raise PartitionError(
            f"portability needs exactly two {partition_tag}=... values, got {sorted(groups)}"
        )
    name_a, name_b = sorted(groups)
    parts = {name_a: groups[name_a], name_b: groups[name_b], "both": list(samples)}
    for name, part in parts.items():
        labels = {s.label for s in part}
        if len(labels) < 2:
            raise PartitionError(f"partition {name!r} lacks one of the classes")
    order = (name_a, name_b, "both")
    matrix = np.zeros((3, 3))
    for i, train_name in enumerate(order):
        for j, test_name in enumerate(order):
            if train_name == test_name:
                train, test = _holdout_split(parts[train_name], seed)
            else:
                train, test = parts[train_name], parts[test_name]
            matrix[i, j] = _fit_and_score(train, test, trainer, seed, feature_subset)
    return order, matrix


@dataclass(frozen=True)
class AgreementReport:
    """How many measures were simultaneously wrong on each false positive."""

    total_false_positives: int
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def distribution(self) -> dict[int, float]:
        if self.total_false_positives == 0:
            return {}
        return {k: v / self.total_false_positives for k, v in sorted(self.counts.items())}


def measure_agreement(
    samples: Sequence[LabeledSample], configs: Sequence[ThresholdConfig]
) -> AgreementReport:
    """Distribution of simultaneous false positives across measures."""
    if not any(not s.label for s in samples):
        raise ParameterError("agreement analysis needs at least one negative sample")
    counts: dict[int, int] = {}
    total = 0
    for s in samples:
        if s.label:
            continue
        wrong = sum(1 for cfg in configs if bool(threshold_classify(s.features, cfg)))
        if wrong > 0:
            counts[wrong] = counts.get(wrong, 0) + 1
            total += 1
    return AgreementReport(total_false_positives=total, counts=counts)


# ---------------------------------------------------------------------------
# Labeled-sample serialization (feature rows joined with ground truth)
# ---------------------------------------------------------------------------

def write_samples_json(samples: Sequence[LabeledSample], out: TextIO) -> None:
    payload = [
        {
            "cc": s.features.cc,
            "dtw": s.features.dtw,
            "kld": s.features.kld,
            "jsd": s.features.jsd,
            "flags": sorted(s.features.flags),
            "label": s.label,
            "tags": sorted(s.tags),
        }
        for s in samples
    ]
    json.dump(payload, out, indent=2, sort_keys=True)
    out.write("\n")


def read_samples_json(inp: TextIO) -> list[LabeledSample]:
    samples = []
    for row in json.load(inp):
        sv = SimilarityVector(
            cc=row["cc"],
            dtw=row["dtw"],
            kld=row["kld"],
            jsd=row["jsd"],
            flags=frozenset(row.get("flags", [])),
        )
        samples.append(
            LabeledSample(features=sv, label=bool(row["label"]), tags=frozenset(row.get("tags", [])))
        )
    return samples
