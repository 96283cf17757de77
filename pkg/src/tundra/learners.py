"""The transfer-learning head and its surroundings.

Logistic regression trains with full-batch gradient descent: per-partition
partial gradients (float64) reduced in partition-index order, so the fitted
model is a deterministic function of the data and the ParamMap. Metrics,
burst assignment, grouped score averaging, and the camera-based split all
live here too.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .dataframe import Dataset, DType, Schema
from .engine import get_engine
from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    MissingColumn,
    NonBinaryLabel,
    RaggedVector,
    UnknownColumn,
)
from .hashing import fnv1a64
from .pipeline import Estimator, ParamSpec, Transformer, register_stage


def _column_index(schema: Schema, col: str, stage: str) -> int:
    try:
        return schema.index_of(col)
    except UnknownColumn as exc:
        raise MissingColumn(f"{stage}: {exc}") from exc


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function (float64 in, float64 out)."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray,
             l2: float) -> float:
    """Regularized mean log-loss; the independent objective the gradient check
    differentiates numerically."""
    z = x @ w + b
    margins = np.where(y > 0.5, z, -z)
    nll = float(np.logaddexp(0.0, -margins).sum()) / len(y)
    return nll + 0.5 * l2 * float(w @ w)


def lr_gradient(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray,
                l2: float) -> tuple[np.ndarray, float]:
    """Analytic gradient of log_loss wrt (w, b)."""
    r = sigmoid(x @ w + b) - y
    gw = (x.T @ r) / len(y) + l2 * w
    gb = float(r.sum()) / len(y)
    return gw, gb


class LogisticRegressionModel(Transformer):
    """Fitted binary LR; appends sigma(w.x + b) as the score column."""

    stage_name = "LogisticRegressionModel"
    param_specs = (
        ParamSpec("featuresCol", "column", doc="FloatVector feature column."),
        ParamSpec("scoreCol", "column", default="score",
                  doc="Float64 column to append with the positive-class probability."),
    )

    def __init__(self, **params):
        super().__init__(**params)
        self.weights = np.zeros(0, dtype=np.float64)
        self.bias = 0.0

    def _state_bytes(self) -> bytes:
        return (struct.pack("<q", len(self.weights))
                + self.weights.astype("<f8").tobytes()
                + struct.pack("<d", self.bias))

    def _load_state_bytes(self, data: bytes) -> None:
        (dim,) = struct.unpack_from("<q", data, 0)
        self.weights = np.frombuffer(data, dtype="<f8", count=dim, offset=8).copy()
        (self.bias,) = struct.unpack_from("<d", data, 8 + 8 * dim)

    def transform(self, ds: Dataset) -> Dataset:
        feat_col, score_col = self._require_params("featuresCol", "scoreCol")
        fidx = _column_index(ds.schema, feat_col, self.stage_name)
        if ds.schema.dtype_of(feat_col) != DType.FLOAT_VECTOR:
            raise MissingColumn(f"{feat_col!r} is not a FloatVector column")
        w, b = self.weights, self.bias
        dim = len(w)

        if score_col in ds.schema.names:
            out_idx = ds.schema.index_of(score_col)
            cols = list(ds.schema.columns)
            cols[out_idx] = (score_col, DType.FLOAT64)
            out_schema = Schema(tuple(cols))
        else:
            out_idx = None
            out_schema = ds.schema.with_column(score_col, DType.FLOAT64)

        def fn(rows):
            if not rows:
                return []
            for r in rows:
                if r[fidx].shape[0] != dim:
                    raise DimensionMismatch(
                        f"feature size {r[fidx].shape[0]} != model dimension {dim}")
            x = np.stack([r[fidx] for r in rows]).astype(np.float64)
            scores = sigmoid(x @ w + b)
            out = []
            for r, s in zip(rows, scores):
                if out_idx is None:
                    out.append(r + (float(s),))
                else:
                    cells = list(r)
                    cells[out_idx] = float(s)
                    out.append(tuple(cells))
            return out

        return ds.map_partitions(fn, out_schema, name=self.stage_name)


register_stage(LogisticRegressionModel)


@register_stage
class LogisticRegression(Estimator):
    """Full-batch gradient descent on regularized log-loss."""

    stage_name = "LogisticRegression"
    param_specs = (
        ParamSpec("featuresCol", "column", doc="FloatVector feature column."),
        ParamSpec("labelCol", "column", doc="Int64 column holding 0/1 labels."),
        ParamSpec("scoreCol", "column", default="score",
                  doc="Score column the fitted model appends."),
        ParamSpec("learningRate", "float", default=0.1, doc="GD step size (> 0)."),
        ParamSpec("epochs", "int", default=100, doc="Full-batch GD steps (>= 1)."),
        ParamSpec("l2", "float", default=1e-4, doc="L2 penalty on weights (>= 0)."),
        ParamSpec("seed", "int", default=42,
                  doc="Determinism-contract seed; zero-init GD does not consume it."),
    )

    def fit(self, ds: Dataset, engine=None) -> LogisticRegressionModel:
        feat_col, label_col, score_col = self._require_params(
            "featuresCol", "labelCol", "scoreCol")
        lr, epochs, l2 = self._require_params("learningRate", "epochs", "l2")
        if lr <= 0 or epochs < 1 or l2 < 0:
            raise ValueError("need learningRate > 0, epochs >= 1, l2 >= 0")
        fidx = _column_index(ds.schema, feat_col, self.stage_name)
        lidx = _column_index(ds.schema, label_col, self.stage_name)
        if ds.schema.dtype_of(feat_col) != DType.FLOAT_VECTOR:
            raise MissingColumn(f"{feat_col!r} is not a FloatVector column")

        eng = engine if engine is not None else get_engine()
        parts = ds.collect_partitions(eng)
        xs, ys = [], []
        dim = None
        for rows in parts:
            if not rows:
                continue
            for r in rows:
                if r[lidx] not in (0, 1):
                    raise NonBinaryLabel(f"label {r[lidx]!r} is not in {{0, 1}}")
                if dim is None:
                    dim = r[fidx].shape[0]
                elif r[fidx].shape[0] != dim:
                    raise DimensionMismatch(
                        f"feature size {r[fidx].shape[0]} != first-seen size {dim}")
            xs.append(np.stack([r[fidx] for r in rows]).astype(np.float64))
            ys.append(np.array([float(r[lidx]) for r in rows], dtype=np.float64))
        n = sum(len(y) for y in ys)
        if n == 0 or dim is None:
            raise NonBinaryLabel("cannot fit on an empty dataset")

        w = np.zeros(dim, dtype=np.float64)
        b = 0.0
        for _ in range(epochs):
            wb = (w, b)

            def partial(i, wb=wb):
                x, y = xs[i], ys[i]
                r = sigmoid(x @ wb[0] + wb[1]) - y
                return x.T @ r, float(r.sum())

            partials = eng.map(partial, range(len(xs)))
            gw = np.zeros(dim, dtype=np.float64)
            gb = 0.0
            for pw, pb in partials:  # fixed partition-index reduction order
                gw += pw
                gb += pb
            w = w - lr * (gw / n + l2 * w)
            b = b - lr * (gb / n)

        model = LogisticRegressionModel(featuresCol=feat_col, scoreCol=score_col)
        model.weights = w
        model.bias = b
        return model


# --- vector assembly ---

@register_stage
class VectorAssembler(Transformer):
    """Concatenate Float64/FloatVector columns into one FloatVector, single pass."""

    stage_name = "VectorAssembler"
    param_specs = (
        ParamSpec("inputCols", "stringList", doc="Columns to concatenate, in order."),
        ParamSpec("outputCol", "column", doc="FloatVector column to append."),
    )

    def __init__(self, **params):
        super().__init__(**params)
        if "inputCols" in self._params and not self._params["inputCols"]:
            raise ValueError("inputCols must not be empty")

    def transform(self, ds: Dataset) -> Dataset:
        cols, out_col = self._require_params("inputCols", "outputCol")
        if not cols:
            raise ValueError("inputCols must not be empty")
        idxs = []
        kinds = []
        for c in cols:
            idxs.append(_column_index(ds.schema, c, self.stage_name))
            dt = ds.schema.dtype_of(c)
            if dt not in (DType.FLOAT64, DType.FLOAT_VECTOR):
                raise MissingColumn(
                    f"{self.stage_name}: column {c!r} must be Float64 or FloatVector")
            kinds.append(dt)
        out_schema = ds.schema.with_column(out_col, DType.FLOAT_VECTOR)

        def fn(rows):
            if not rows:
                return []
            # offsets fixed by the first row; deviations are ragged data
            widths = []
            for i, dt in zip(idxs, kinds):
                widths.append(1 if dt == DType.FLOAT64 else rows[0][i].shape[0])
            total = sum(widths)
            out = []
            for rn, r in enumerate(rows):
                buf = np.empty(total, dtype=np.float32)
                pos = 0
                for i, dt, width in zip(idxs, kinds, widths):
                    if dt == DType.FLOAT64:
                        buf[pos] = np.float32(r[i])
                        pos += 1
                    else:
                        v = r[i]
                        if v.shape[0] != width:
                            raise RaggedVector(
                                f"row {rn}: column width {v.shape[0]} != "
                                f"first-seen width {width}")
                        buf[pos:pos + width] = v
                        pos += width
                out.append(r + (buf,))
            return out

        return ds.map_partitions(fn, out_schema, name=self.stage_name)


# --- evaluation metrics ---

@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float, float], ...]  # (threshold, fpr, tpr)
    auc: float


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int
    normalized: tuple[tuple[float, float], tuple[float, float]]
    degenerate_rows: tuple[int, ...] = ()


def _scores_labels(ds: Dataset, score_col: str, label_col: str, engine=None):
    sidx = _column_index(ds.schema, score_col, "metrics")
    lidx = _column_index(ds.schema, label_col, "metrics")
    rows = ds.collect(engine)
    scores = np.array([r[sidx] for r in rows], dtype=np.float64)
    labels = np.array([int(r[lidx]) for r in rows], dtype=np.int64)
    for lab in labels:
        if lab not in (0, 1):
            raise NonBinaryLabel(f"label {lab} is not in {{0, 1}}")
    return scores, labels


def compute_roc(ds: Dataset, score_col: str, label_col: str, engine=None) -> RocCurve:
    """Threshold sweep over distinct scores, ties grouped; trapezoidal AUC."""
    scores, labels = _scores_labels(ds, score_col, label_col, engine)
    return roc_from_arrays(scores, labels)


def roc_from_arrays(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    pos = int(labels.sum())
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise DegenerateLabels(f"need both classes, got {pos} positives / {neg} negatives")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    points = []
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            tp += int(y[j])
            fp += 1 - int(y[j])
            j += 1
        points.append((float(s[i]), fp / neg, tp / pos))
        i = j
    auc = 0.0
    prev_fpr = prev_tpr = 0.0
    for _, fpr, tpr in points:
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        prev_fpr, prev_tpr = fpr, tpr
    return RocCurve(points=tuple(points), auc=auc)


def confusion_matrix(ds: Dataset, score_col: str, label_col: str,
                     threshold: float = 0.5, engine=None) -> ConfusionMatrix:
    scores, labels = _scores_labels(ds, score_col, label_col, engine)
    return confusion_from_arrays(scores, labels, threshold)


def confusion_from_arrays(scores: np.ndarray, labels: np.ndarray,
                          threshold: float = 0.5) -> ConfusionMatrix:
    pred = scores >= threshold  # fixed tie rule: score == threshold predicts positive
    tp = int(np.sum(pred & (labels == 1)))
    fp = int(np.sum(pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    tn = int(np.sum(~pred & (labels == 0)))
    degenerate = []
    rows = []
    for actual, (a, b) in enumerate(((tn, fp), (fn, tp))):
        support = a + b
        if support == 0:
            degenerate.append(actual)
            rows.append((0.0, 0.0))
        else:
            rows.append((a / support, b / support))
    return ConfusionMatrix(tn=tn, fp=fp, fn=fn, tp=tp,
                           normalized=(rows[0], rows[1]),
                           degenerate_rows=tuple(degenerate))


def metrics_document(roc: RocCurve, cm: ConfusionMatrix) -> dict:
    return {
        "auc": roc.auc,
        "rocPoints": [{"threshold": t, "fpr": f, "tpr": r} for t, f, r in roc.points],
        "confusion": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
        "normalized": [list(cm.normalized[0]), list(cm.normalized[1])],
        "degenerateRows": list(cm.degenerate_rows),
    }


def roc_csv(roc: RocCurve) -> str:
    lines = ["threshold,fpr,tpr"]
    for t, f, r in roc.points:
        lines.append(f"{t!r},{f!r},{r!r}")
    return "\n".join(lines) + "\n"


# --- bursts, grouped averaging, camera split ---

@register_stage
class BurstAssigner(Transformer):
    """Assign burstId = cameraId '#' ordinal; a gap over gapSeconds starts a new burst."""

    stage_name = "BurstAssigner"
    param_specs = (
        ParamSpec("cameraCol", "column", doc="String column with the camera id."),
        ParamSpec("timestampCol", "column", doc="Timestamp column (UTC seconds)."),
        ParamSpec("outputCol", "column", default="burstId",
                  doc="String column to append."),
        ParamSpec("gapSeconds", "float", default=60.0,
                  doc="Gap above which a new burst starts."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        cam_col, ts_col, out_col, gap = self._require_params(
            "cameraCol", "timestampCol", "outputCol", "gapSeconds")
        _column_index(ds.schema, cam_col, self.stage_name)
        tidx = _column_index(ds.schema, ts_col, self.stage_name)
        out_schema = ds.schema.with_column(out_col, DType.STRING)
        grouped = ds.group_by_key(cam_col)

        def fn(groups):
            out = []
            for camera, rows in groups:
                ordered = sorted(range(len(rows)), key=lambda i: (rows[i][tidx], i))
                ordinal = 0
                prev_ts = None
                for i in ordered:
                    ts = rows[i][tidx]
                    if prev_ts is not None and ts - prev_ts > gap:
                        ordinal += 1
                    prev_ts = ts
                    out.append(rows[i] + (f"{camera}#{ordinal}",))
            return out

        return grouped.map_partitions(fn, out_schema, name=self.stage_name)


def assign_bursts(ds: Dataset, camera_col: str, timestamp_col: str,
                  gap_seconds: float = 60.0, output_col: str = "burstId") -> Dataset:
    return BurstAssigner(cameraCol=camera_col, timestampCol=timestamp_col,
                         outputCol=output_col, gapSeconds=gap_seconds).transform(ds)


@register_stage
class GroupedScoreAverager(Transformer):
    """Replace each row's score with the mean over all rows sharing its key."""

    stage_name = "GroupedScoreAverager"
    param_specs = (
        ParamSpec("keyCol", "column", doc="Grouping key (burstId, originId, ...)."),
        ParamSpec("scoreCol", "column", doc="Float64 score column to average in place."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        key_col, score_col = self._require_params("keyCol", "scoreCol")
        _column_index(ds.schema, key_col, self.stage_name)
        sidx = _column_index(ds.schema, score_col, self.stage_name)
        out_schema = ds.schema
        grouped = ds.group_by_key(key_col)

        def fn(groups):
            out = []
            for _, rows in groups:
                total = 0.0
                for r in rows:  # group arrival order is deterministic
                    total += r[sidx]
                mean = total / len(rows)
                for r in rows:
                    cells = list(r)
                    cells[sidx] = mean
                    out.append(tuple(cells))
            return out

        return grouped.map_partitions(fn, out_schema, name=self.stage_name)


def average_by_key(ds: Dataset, key_col: str, score_col: str) -> Dataset:
    return GroupedScoreAverager(keyCol=key_col, scoreCol=score_col).transform(ds)


def camera_in_test_split(camera_id: str, test_fraction: float, seed: int) -> bool:
    """Deterministic camera -> split assignment; row order never matters."""
    h = fnv1a64(camera_id.encode("utf-8") + (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
    return (h % 1_000_000) < test_fraction * 1_000_000


def split_by_camera(ds: Dataset, camera_col: str, test_fraction: float = 0.2,
                    seed: int = 0) -> tuple[Dataset, Dataset]:
    """Whole cameras go to one side, preventing burst leakage across the split."""
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"testFraction must be in (0, 1), got {test_fraction}")
    cidx = _column_index(ds.schema, camera_col, "splitByCamera")
    train = ds.filter(lambda r: not camera_in_test_split(r[cidx], test_fraction, seed))
    test = ds.filter(lambda r: camera_in_test_split(r[cidx], test_fraction, seed))
    return train, test
