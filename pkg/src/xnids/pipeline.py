"""Dataset pipeline: parse NSL-KDD text into records, encode and scale the
41 features, split train/test, and reshape matrices for each model family.

Encoders and the min-max scaler are always fitted on the training partition
only; test rows are transformed with the fitted parameters and clamped into
[0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .schema import (
    AttackClass,
    CLASS_NAMES,
    FeatureSchema,
    FIELDS_PER_LINE,
    NUM_FEATURES,
    default_schema,
    map_attack_label,
)


class PipelineError(Exception):
    """Base class for dataset-pipeline failures."""


class FieldCountMismatch(PipelineError):
    def __init__(self, line_no: int, found: int):
        super().__init__(f"line {line_no}: expected {FIELDS_PER_LINE} fields, found {found}")
        self.line_no = line_no
        self.found = found


class NonNumericDifficulty(PipelineError):
    def __init__(self, line_no: int, token: str):
        super().__init__(f"line {line_no}: difficulty column is not an integer: {token!r}")
        self.line_no = line_no
        self.token = token


class EmptyTrainingSet(PipelineError):
    pass


class UnseenCategory(PipelineError):
    def __init__(self, feature: str, value: str):
        super().__init__(f"feature {feature!r}: value {value!r} was not seen during fitting")
        self.feature = feature
        self.value = value


class NonNumericToken(PipelineError):
    def __init__(self, feature: str, line_no: int, token: str):
        super().__init__(f"feature {feature!r}, record {line_no}: non-numeric token {token!r}")
        self.feature = feature
        self.line_no = line_no
        self.token = token


class ShapeMismatch(PipelineError):
    pass


class DegenerateSplit(PipelineError):
    pass


class WrongFeatureCount(PipelineError):
    def __init__(self, found: int):
        super().__init__(f"expected {NUM_FEATURES} feature columns, found {found}")
        self.found = found


@dataclass(frozen=True)
class RawRecord:
    """One parsed NSL-KDD line: 41 raw tokens, attack label, difficulty score."""

    feature_values: tuple[str, ...]
    attack_label: str
    difficulty: int


@dataclass(frozen=True)
class EncoderParams:
    """Per categorical feature: lexicographically ordered category list.

    The integer code of a category is its index in the list, so codes are
    contiguous from 0 and the encoding is injective per feature.
    """

    categories: dict[str, tuple[str, ...]]

    def code(self, feature: str, value: str) -> int:
        try:
            return self.categories[feature].index(value)
        except ValueError:
            raise UnseenCategory(feature, value) from None

    def to_jsonable(self) -> dict:
        return {k: list(v) for k, v in self.categories.items()}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "EncoderParams":
        return cls(categories={k: tuple(v) for k, v in obj.items()})


@dataclass(frozen=True)
class ScalerParams:
    """Column-wise min/max fitted on the training matrix (all 41 columns,
    categorical codes included)."""

    col_min: np.ndarray
    col_max: np.ndarray

    def to_jsonable(self) -> dict:
        return {"min": self.col_min.tolist(), "max": self.col_max.tolist()}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "ScalerParams":
        return cls(np.asarray(obj["min"], dtype=np.float64), np.asarray(obj["max"], dtype=np.float64))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


@dataclass
class EncodedDataset:
    """Scaled 41-column matrix with 5-class integer labels and the fitted
    transform parameters that produced it."""

    matrix: np.ndarray  # N x 41 float64 in [0, 1]
    labels: np.ndarray  # N int64 in 0..4
    encoder_params: EncoderParams
    scaler_params: ScalerParams
    provenance: str  # "train" | "test"

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] != NUM_FEATURES:
            raise WrongFeatureCount(self.matrix.shape[-1] if self.matrix.ndim else 0)
        if not np.all(np.isfinite(self.matrix)):
            raise PipelineError("encoded matrix contains non-finite values")
        if self.labels.shape != (self.matrix.shape[0],):
            raise ShapeMismatch("labels length does not match matrix rows")


# ---------------------------------------------------------------------------
# Parsing


def parse_nslkdd(stream: bytes | str | IO) -> list[RawRecord]:
    """Parse comma-separated NSL-KDD text (no header, 43 fields per line).

    The difficulty column is captured on the record but plays no role in any
    downstream transform.
    """
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        raw = stream.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != FIELDS_PER_LINE:
            raise FieldCountMismatch(line_no, len(fields))
        try:
            difficulty = int(fields[-1])
        except ValueError:
            raise NonNumericDifficulty(line_no, fields[-1]) from None
        records.append(
            RawRecord(
                feature_values=tuple(fields[:NUM_FEATURES]),
                attack_label=fields[NUM_FEATURES],
                difficulty=difficulty,
            )
        )
    return records


def load_nslkdd(path: str | Path) -> list[RawRecord]:
    return parse_nslkdd(Path(path).read_bytes())


def encode_labels(records: Sequence[RawRecord]) -> np.ndarray:
    return np.array([int(map_attack_label(r.attack_label)) for r in records], dtype=np.int64)


# ---------------------------------------------------------------------------
# Encoding and scaling


def fit_encoders(train: Sequence[RawRecord], schema: FeatureSchema | None = None) -> EncoderParams:
    """Map each categorical feature's distinct training values, sorted
    lexicographically, to codes 0..k-1."""
    if not train:
        raise EmptyTrainingSet("cannot fit encoders on an empty training set")
    schema = schema or default_schema()
    categories = {}
    for idx in schema.categorical_indices:
        name = schema.names[idx]
        categories[name] = tuple(sorted({r.feature_values[idx] for r in train}))
    return EncoderParams(categories=categories)


def apply_encoding(
    records: Sequence[RawRecord],
    encoder_params: EncoderParams,
    schema: FeatureSchema | None = None,
    unseen: str = "error",
) -> np.ndarray:
    """Replace categorical tokens by their integer codes and parse numeric
    tokens as reals, yielding an N x 41 float matrix.

    ``unseen`` controls out-of-vocabulary categorical values: ``"error"``
    raises :class:`UnseenCategory`; ``"clamp"`` assigns the code one past the
    last fitted category (min-max clamping later pins it to 1.0). The clamp
    policy exists for test partitions whose rare categories did not land in
    the training split.
    """
    if unseen not in ("error", "clamp"):
        raise ValueError(f"unseen policy must be 'error' or 'clamp', got {unseen!r}")
    schema = schema or default_schema()
    code_maps = {
        idx: {v: c for c, v in enumerate(encoder_params.categories[schema.names[idx]])}
        for idx in schema.categorical_indices
    }
    matrix = np.empty((len(records), NUM_FEATURES), dtype=np.float64)
    for row, record in enumerate(records):
        for col, token in enumerate(record.feature_values):
            if col in code_maps:
                code = code_maps[col].get(token)
                if code is None:
                    if unseen == "error":
                        raise UnseenCategory(schema.names[col], token)
                    code = len(code_maps[col])
                matrix[row, col] = float(code)
            else:
                try:
                    matrix[row, col] = float(token)
                except ValueError:
                    raise NonNumericToken(schema.names[col], row + 1, token) from None
    return matrix


def fit_minmax(train_matrix: np.ndarray) -> ScalerParams:
    if train_matrix.ndim != 2 or train_matrix.shape[1] != NUM_FEATURES:
        raise ShapeMismatch(f"expected N x {NUM_FEATURES} matrix, got {train_matrix.shape}")
    return ScalerParams(
        col_min=train_matrix.min(axis=0).astype(np.float64),
        col_max=train_matrix.max(axis=0).astype(np.float64),
    )


def apply_minmax(matrix: np.ndarray, params: ScalerParams, clamp: bool = True) -> np.ndarray:
    """Scale columns to x' = (x - min) / (max - min).

    Constant columns map to 0. With ``clamp`` (the default, intended for
    rows outside the fitting partition) results are pinned into [0, 1].
    """
    if matrix.ndim != 2 or matrix.shape[1] != params.col_min.shape[0]:
        raise ShapeMismatch(f"matrix shape {matrix.shape} does not match scaler")
    span = params.col_max - params.col_min
    safe_span = np.where(span == 0.0, 1.0, span)
    scaled = (matrix - params.col_min) / safe_span
    scaled[:, span == 0.0] = 0.0
    if clamp:
        np.clip(scaled, 0.0, 1.0, out=scaled)
    return scaled


def invert_minmax(scaled: np.ndarray, params: ScalerParams) -> np.ndarray:
    """Inverse of :func:`apply_minmax` for non-degenerate columns; constant
    columns reconstruct as their fitted minimum."""
    if scaled.ndim != 2 or scaled.shape[1] != params.col_min.shape[0]:
        raise ShapeMismatch(f"matrix shape {scaled.shape} does not match scaler")
    span = params.col_max - params.col_min
    return scaled * span + params.col_min


# ---------------------------------------------------------------------------
# Splitting and reshaping


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled train/test index split; |train| = floor(f * n)."""
    if n < 2:
        raise DegenerateSplit(f"need at least 2 rows to split, got {n}")
    n_train = int(np.floor(spec.train_fraction * n))
    if n_train == 0 or n_train == n:
        raise DegenerateSplit(f"split of {n} rows at fraction {spec.train_fraction} leaves an empty partition")
    if spec.shuffle:
        order = np.random.Generator(np.random.PCG64(spec.seed)).permutation(n)
    else:
        order = np.arange(n)
    return order[:n_train], order[n_train:]


def split_records(
    records: Sequence[RawRecord], spec: SplitSpec
) -> tuple[list[RawRecord], list[RawRecord]]:
    train_idx, test_idx = split_indices(len(records), spec)
    return [records[i] for i in train_idx], [records[i] for i in test_idx]


def reshape(matrix: np.ndarray, layout: str) -> np.ndarray:
    """Lay out a flat N x 41 matrix for a model family.

    ``"cnn"`` yields (N, 41, 1): features as a length-41 single-channel
    sequence. ``"lstm"`` yields (N, 1, 41): one time step of 41 inputs.
    Values are placed in matrix traversal order, bit-identical.
    """
    if matrix.ndim != 2 or matrix.shape[1] != NUM_FEATURES:
        raise WrongFeatureCount(matrix.shape[-1] if matrix.ndim else 0)
    if layout == "cnn":
        return matrix.reshape(matrix.shape[0], NUM_FEATURES, 1)
    if layout == "lstm":
        return matrix.reshape(matrix.shape[0], 1, NUM_FEATURES)
    raise ValueError(f"unknown layout {layout!r}, expected 'cnn' or 'lstm'")


def class_distribution(labels: np.ndarray) -> dict[str, int]:
    """Count samples per attack class; five non-negative counts summing to N."""
    counts = np.bincount(labels.astype(np.int64), minlength=len(AttackClass))
    return {CLASS_NAMES[cls.value]: int(counts[cls.value]) for cls in AttackClass}


# ---------------------------------------------------------------------------
# Dataset bundle (matrix + labels + JSON sidecar on disk)


@dataclass
class DatasetBundle:
    train: EncodedDataset
    test: EncodedDataset
    split_spec: SplitSpec
    distribution: dict[str, dict[str, int]] = field(default_factory=dict)
    unseen_category_rows: int = 0


def build_bundle(
    records: Sequence[RawRecord],
    split_spec: SplitSpec,
    schema: FeatureSchema | None = None,
) -> DatasetBundle:
    """Split, fit transforms on the training partition, and encode both
    partitions. Test rows with categories absent from the training partition
    are kept under the clamp policy and counted."""
    schema = schema or default_schema()
    train_records, test_records = split_records(records, split_spec)

    encoders = fit_encoders(train_records, schema)
    train_matrix = apply_encoding(train_records, encoders, schema)
    test_matrix = apply_encoding(test_records, encoders, schema, unseen="clamp")

    unseen_rows = 0
    for idx in schema.categorical_indices:
        k = len(encoders.categories[schema.names[idx]])
        unseen_rows += int(np.sum(test_matrix[:, idx] >= k))

    scaler = fit_minmax(train_matrix)
    train_scaled = apply_minmax(train_matrix, scaler, clamp=False)
    test_scaled = apply_minmax(test_matrix, scaler, clamp=True)

    train_labels = encode_labels(train_records)
    test_labels = encode_labels(test_records)

    train_ds = EncodedDataset(train_scaled, train_labels, encoders, scaler, "train")
    test_ds = EncodedDataset(test_scaled, test_labels, encoders, scaler, "test")
    distribution = {
        "train": class_distribution(train_labels),
        "test": class_distribution(test_labels),
        "full": class_distribution(np.concatenate([train_labels, test_labels])),
    }
    return DatasetBundle(train_ds, test_ds, split_spec, distribution, unseen_rows)


def save_bundle(bundle: DatasetBundle, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(out / "train.npz", matrix=bundle.train.matrix, labels=bundle.train.labels)
    np.savez_compressed(out / "test.npz", matrix=bundle.test.matrix, labels=bundle.test.labels)
    sidecar = {
        "version": 1,
        "encoder_params": bundle.train.encoder_params.to_jsonable(),
        "scaler_params": bundle.train.scaler_params.to_jsonable(),
        "split_spec": {
            "train_fraction": bundle.split_spec.train_fraction,
            "seed": bundle.split_spec.seed,
            "shuffle": bundle.split_spec.shuffle,
        },
        "class_distribution": bundle.distribution,
        "unseen_category_rows": bundle.unseen_category_rows,
        "rows": {"train": int(bundle.train.matrix.shape[0]), "test": int(bundle.test.matrix.shape[0])},
    }
    (out / "dataset.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return out


def load_bundle(bundle_dir: str | Path) -> DatasetBundle:
    bundle_dir = Path(bundle_dir)
    sidecar = json.loads((bundle_dir / "dataset.json").read_text())
    encoders = EncoderParams.from_jsonable(sidecar["encoder_params"])
    scaler = ScalerParams.from_jsonable(sidecar["scaler_params"])
    spec = SplitSpec(**sidecar["split_spec"])
    with np.load(bundle_dir / "train.npz") as z:
        train = EncodedDataset(z["matrix"], z["labels"], encoders, scaler, "train")
    with np.load(bundle_dir / "test.npz") as z:
        test = EncodedDataset(z["matrix"], z["labels"], encoders, scaler, "test")
    return DatasetBundle(train, test, spec, sidecar["class_distribution"], sidecar["unseen_category_rows"])
