"""Dataset ingestion, scaling, splitting, synthetic generation, and metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

SCALER_KINDS = ("zscore", "minmax", "identity")

#: Synthetic generator families registered for :func:`synth_generate`.
GENERATOR_FAMILIES = ("additive-1d", "coupled-2d", "full-d", "gp-sample")


class ParseError(ValueError):
    """CSV parsing failure, carrying the offending 1-based row (and column)."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class ScalingError(ValueError):
    """A column cannot be scaled (zero span or zero standard deviation)."""


@dataclass
class Dataset:
    """Inputs X (M x D), targets y (M,), and provenance metadata.

    ``y_true`` optionally holds noise-free target values at the same points;
    ``truth_fn`` optionally evaluates the ground truth at new points.  Both
    are filled by the synthetic generators.
    """

    X: np.ndarray
    y: np.ndarray
    column_names: Optional[list[str]] = None
    provenance: str = ""
    y_true: Optional[np.ndarray] = None
    truth_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {self.X.shape}")
        m, d = self.X.shape
        if m < 1 or d < 1:
            raise ValueError(f"need at least one row and one column, got shape {self.X.shape}")
        if self.y.shape != (m,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({m},)")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("X contains non-finite entries")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y contains non-finite entries")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


@dataclass
class Scaler:
    """Affine per-column transform for inputs and target.

    scaled = (value - offset) / scale, inverted exactly; ``kind`` records how
    the parameters were fitted ("zscore": mean/std, "minmax": min/span,
    "identity": no-op).
    """

    kind: str
    x_offset: np.ndarray
    x_scale: np.ndarray
    y_offset: float
    y_scale: float

    def transform_x(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.x_offset) / self.x_scale

    def inverse_x(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.x_scale + self.x_offset

    def transform_y(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_offset) / self.y_scale

    def inverse_y(self, y):
        return np.asarray(y, dtype=np.float64) * self.y_scale + self.y_offset


def identity_scaler(dim: int) -> Scaler:
    return Scaler("identity", np.zeros(dim), np.ones(dim), 0.0, 1.0)


def fit_scaler(dataset: Dataset, kind: str) -> Scaler:
    """Fit per-column scaling parameters for inputs and target.

    "zscore" maps each column to mean 0 / population standard deviation 1;
    "minmax" maps to [0, 1].  A degenerate (constant) column raises
    :class:`ScalingError` naming the column.
    """
    if kind not in SCALER_KINDS:
        raise ValueError(f"unknown scaler kind {kind!r}; expected one of {SCALER_KINDS}")
    if kind == "identity":
        return identity_scaler(dataset.n_features)
    if kind == "zscore":
        x_offset = dataset.X.mean(axis=0)
        x_scale = dataset.X.std(axis=0)
        y_offset = float(dataset.y.mean())
        y_scale = float(dataset.y.std())
    else:
        x_offset = dataset.X.min(axis=0)
        x_scale = dataset.X.max(axis=0) - x_offset
        y_offset = float(dataset.y.min())
        y_scale = float(dataset.y.max()) - y_offset
    for j, s in enumerate(x_scale):
        if s == 0.0:
            name = dataset.column_names[j] if dataset.column_names else f"column {j}"
            raise ScalingError(f"cannot scale constant input column {name!r}")
    if y_scale == 0.0:
        raise ScalingError("cannot scale constant target column")
    return Scaler(kind, x_offset, x_scale, y_offset, float(y_scale))


@dataclass(frozen=True)
class SplitSpec:
    """Uniform-without-replacement train/test split sizes and seed."""

    train_size: int
    test_size: int
    seed: int = 0

    def __post_init__(self):
        if self.train_size < 1 or self.test_size < 0:
            raise ValueError("train_size must be >= 1 and test_size >= 0")


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Disjoint random train/test subsets, deterministic under the seed."""
    total = spec.train_size + spec.test_size
    if total > dataset.n_samples:
        raise ValueError(
            f"train_size + test_size = {total} exceeds dataset size {dataset.n_samples}"
        )
    perm = np.random.default_rng(spec.seed).permutation(dataset.n_samples)
    idx_train = perm[: spec.train_size]
    idx_test = perm[spec.train_size : total]

    def take(idx, tag):
        return replace(
            dataset,
            X=dataset.X[idx],
            y=dataset.y[idx],
            y_true=None if dataset.y_true is None else dataset.y_true[idx],
            provenance=f"{dataset.provenance}[{tag} split seed={spec.seed}]",
        )

    return take(idx_train, "train"), take(idx_test, "test")


def rmse(pred, truth) -> float:
    """Root-mean-square error between paired value arrays."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape or pred.size < 1:
        raise ValueError(f"need equally sized nonempty arrays, got {pred.shape}, {truth.shape}")
    diff = pred - truth
    return float(np.sqrt(np.mean(diff * diff)))


def pearson_r(pred, truth) -> float:
    """Pearson correlation coefficient; rejects zero-variance inputs."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape or pred.size < 2:
        raise ValueError("need two equally sized arrays with at least 2 entries")
    dp = pred - pred.mean()
    dt = truth - truth.mean()
    sp = float(np.sqrt(np.dot(dp, dp)))
    st = float(np.sqrt(np.dot(dt, dt)))
    if sp == 0.0 or st == 0.0:
        raise ValueError("correlation undefined for zero-variance input")
    return float(np.dot(dp, dt) / (sp * st))


def load_table(path) -> tuple[np.ndarray, Optional[list[str]]]:
    """Read a numeric CSV table, auto-detecting an optional header row.

    Accepts scientific notation.  Ragged rows, non-numeric cells, and empty
    files raise :class:`ParseError` with the 1-based row (and column)
    location.  Returns the value matrix and the header names (or None).
    """
    with open(path, newline="") as handle:
        rows = [row for row in csv.reader(handle)]
    rows = [row for row in rows if row and not all(cell.strip() == "" for cell in row)]
    if not rows:
        raise ParseError(f"{path}: empty file")

    def parse_row(row, number):
        values = []
        for j, cell in enumerate(row):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric value {cell!r} at row {number}, column {j + 1}",
                    row=number,
                    column=j + 1,
                ) from None
        return values

    names = None
    first = 0
    try:
        parse_row(rows[0], 1)
    except ParseError:
        names = [cell.strip() for cell in rows[0]]
        first = 1
    if first >= len(rows):
        raise ParseError(f"{path}: no data rows after header", row=1)

    width = len(rows[first])
    data = []
    for i in range(first, len(rows)):
        number = i + 1
        if len(rows[i]) != width:
            raise ParseError(
                f"{path}: ragged row {number} has {len(rows[i])} cells, expected {width}",
                row=number,
            )
        data.append(parse_row(rows[i], number))
    if names is not None and len(names) != width:
        raise ParseError(f"{path}: header has {len(names)} cells, data rows have {width}", row=1)
    return np.asarray(data, dtype=np.float64), names


def load_csv(path) -> Dataset:
    """Read a dataset from CSV: last column is the target, the rest features."""
    arr, names = load_table(path)
    if arr.shape[1] < 2:
        raise ParseError(f"{path}: need at least one feature column and one target column")
    return Dataset(arr[:, :-1], arr[:, -1], column_names=names, provenance=str(path))


def save_csv(dataset: Dataset, path, with_truth: bool = False) -> None:
    """Write a dataset as CSV with 17 significant digits (lossless round trip)."""
    names = dataset.column_names
    if names is None:
        names = [f"x{j + 1}" for j in range(dataset.n_features)] + ["y"]
    names = list(names)
    columns = [dataset.X[:, j] for j in range(dataset.n_features)] + [dataset.y]
    if with_truth:
        if dataset.y_true is None:
            raise ValueError("dataset has no ground-truth values to export")
        names.append("y_true")
        columns.append(dataset.y_true)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for i in range(dataset.n_samples):
            writer.writerow([f"{col[i]:.17g}" for col in columns])


# --- synthetic generators --------------------------------------------------

_SHAPES = (
    lambda t: np.sin(2.0 * np.pi * t),
    lambda t: 4.0 * (t - 0.5) ** 2,
    lambda t: np.cos(np.pi * t),
    lambda t: t**3,
)


def _additive_truth(dim: int, active) -> Callable[[np.ndarray], np.ndarray]:
    active = tuple(range(dim)) if active is None else tuple(int(i) for i in active)
    if any(i < 0 or i >= dim for i in active):
        raise ValueError(f"active indices {active} outside [0, {dim})")

    def truth(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros(X.shape[0])
        for i in active:
            out += _SHAPES[i % len(_SHAPES)](X[:, i])
        return out

    return truth


def _coupled_truth(dim: int) -> Callable[[np.ndarray], np.ndarray]:
    if dim < 2:
        raise ValueError("coupled-2d requires dim >= 2")

    def truth(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.sin(2.0 * np.pi * X[:, 0]) * np.sin(2.0 * np.pi * X[:, 1])
        for i in range(2, X.shape[1]):
            out += _SHAPES[i % len(_SHAPES)](X[:, i])
        return out

    return truth


def _product_truth(dim: int, coupling: float) -> Callable[[np.ndarray], np.ndarray]:
    def truth(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.prod(1.0 + coupling * np.cos(np.pi * X), axis=1)

    return truth


def synth_generate(
    family: str,
    dim: int,
    size: int,
    noise: float = 0.0,
    seed: int = 0,
    **params,
) -> Dataset:
    """Generate a synthetic dataset from a registered family, deterministic under seed.

    Families
    --------
    additive-1d : sum of fixed one-dimensional shape functions; ``active``
        optionally lists the contributing coordinates (others are ignored by
        the target, i.e. dummy variables).
    coupled-2d : product coupling on the pair {0, 1} plus an additive tail.
    full-d : non-decomposable product target prod_i (1 + a cos(pi x_i)) with
        ``coupling`` = a (default 0.8); every interaction order contributes.
    gp-sample : a draw from a squared-exponential GP with length scale
        ``length`` (default 0.5); has no closed-form truth function.

    Inputs are uniform on [0, 1]^dim; Gaussian noise of standard deviation
    ``noise`` is added to the targets.
    """
    if dim < 1 or size < 1:
        raise ValueError("dim and size must be >= 1")
    if noise < 0.0 or not math.isfinite(noise):
        raise ValueError(f"noise must be a finite nonnegative real, got {noise}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(size, dim))
    truth_fn: Optional[Callable] = None

    if family == "additive-1d":
        truth_fn = _additive_truth(dim, params.pop("active", None))
        y_true = truth_fn(X)
    elif family == "coupled-2d":
        truth_fn = _coupled_truth(dim)
        y_true = truth_fn(X)
    elif family == "full-d":
        truth_fn = _product_truth(dim, float(params.pop("coupling", 0.8)))
        y_true = truth_fn(X)
    elif family == "gp-sample":
        from .hdmr import kernel_matrix, uniform_spec
        from .kernels import BaseKernel

        length = float(params.pop("length", 0.5))
        spec = uniform_spec(dim, dim, BaseKernel("se", length))
        gram = kernel_matrix(spec, X, X, symmetric=True)
        gram[np.diag_indices_from(gram)] += 1e-10
        y_true = np.linalg.cholesky(gram) @ rng.standard_normal(size)
    else:
        raise ValueError(
            f"unknown generator family {family!r}; expected one of {GENERATOR_FAMILIES}"
        )
    if params:
        raise ValueError(f"unknown generator parameters {sorted(params)} for family {family!r}")

    y = y_true + rng.standard_normal(size) * noise if noise > 0.0 else y_true.copy()
    names = [f"x{j + 1}" for j in range(dim)] + ["y"]
    return Dataset(
        X,
        y,
        column_names=names,
        provenance=f"synth:{family}(dim={dim}, size={size}, noise={noise}, seed={seed})",
        y_true=y_true,
        truth_fn=truth_fn,
    )
