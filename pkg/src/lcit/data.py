"""Dataset container, CSV ingestion and the preprocessing pipeline."""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files or degenerate columns."""


@dataclass(frozen=True)
class Dataset:
    """Samples of scalar ``x`` and ``y`` and an ``(n, d)`` conditioning matrix ``z``."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    x_name: str = "x"
    y_name: str = "y"
    z_names: tuple = ()
    standardized: bool = False
    clipped: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(len(x), -1) if z.size else np.empty((len(x), 0))
        if len(y) != len(x) or z.shape[0] != len(x):
            raise DataError(f"inconsistent lengths: x={len(x)}, y={len(y)}, z={z.shape[0]}")
        names = tuple(self.z_names) or tuple(f"z{j + 1}" for j in range(z.shape[1]))
        if len(names) != z.shape[1]:
            raise DataError("z_names does not match the number of z columns")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "z_names", names)

    @property
    def n(self):
        return len(self.x)

    @property
    def d(self):
        return self.z.shape[1]

    def columns(self):
        """All columns as one ``(n, 2 + d)`` matrix ordered ``x, y, z...``."""
        return np.column_stack([self.x, self.y, self.z])

    def _with_columns(self, mat, **flags):
        return replace(self, x=mat[:, 0], y=mat[:, 1], z=mat[:, 2:], **flags)

    def take(self, idx):
        idx = np.asarray(idx)
        return replace(self, x=self.x[idx], y=self.y[idx], z=self.z[idx])


def load_csv(path, x_col, y_col, z_cols=()):
    """Read the named columns of a headed, comma-separated file.

    Raises
    ------
    DataError
        If a column is missing, a cell does not parse as a finite real, or a
        cell is empty. The message names the offending row and column.
    """
    z_cols = list(z_cols)
    wanted = [x_col, y_col, *z_cols]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        missing = [c for c in wanted if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s): {', '.join(missing)}")
        pos = [header.index(c) for c in wanted]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            vals = []
            for col, p in zip(wanted, pos):
                cell = row[p].strip() if p < len(row) else ""
                if cell == "":
                    raise DataError(f"{path}: missing value at row {lineno}, column {col!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: cannot parse {cell!r} at row {lineno}, column {col!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: non-finite value {cell!r} at row {lineno}, column {col!r}")
                vals.append(v)
            rows.append(vals)
    mat = np.array(rows, dtype=float).reshape(len(rows), len(wanted))
    return Dataset(mat[:, 0], mat[:, 1], mat[:, 2:], x_name=x_col, y_name=y_col,
                   z_names=tuple(z_cols))


def write_csv(dataset, path_or_file):
    """Write ``x, y, z...`` with a header row; floats use shortest round-trip repr."""
    header = [dataset.x_name, dataset.y_name, *dataset.z_names]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in dataset.columns():
            w.writerow([repr(float(v)) for v in row])
    finally:
        if own:
            fh.close()


def standardize(dataset):
    """Center every column and scale it to unit population variance."""
    mat = dataset.columns()
    mean = mat.mean(axis=0)
    std = mat.std(axis=0)
    names = [dataset.x_name, dataset.y_name, *dataset.z_names]
    const = [nm for nm, s, m in zip(names, std, mean) if not s > 1e-12 * max(1.0, abs(m))]
    if const:
        raise DataError(f"constant column(s) cannot be standardized: {', '.join(const)}")
    return dataset._with_columns((mat - mean) / std, standardized=True)


def clip_quantiles(dataset, lo=0.025, hi=0.975, method="linear"):
    """Clamp each column to its ``[lo, hi]`` empirical quantile band.

    Quantiles interpolate linearly between the closest order statistics by
    default. ``method`` is passed to :func:`numpy.quantile`; order-statistic
    methods such as ``"nearest"`` make the clip exactly idempotent, whereas
    a second linear clip can pull the tails in slightly further.
    """
    if not 0.0 <= lo < hi <= 1.0:
        raise DataError("need 0 <= lo < hi <= 1")
    mat = dataset.columns()
    if mat.shape[0] == 0:
        return replace(dataset, clipped=True)
    q_lo, q_hi = np.quantile(mat, [lo, hi], axis=0, method=method)
    return dataset._with_columns(np.clip(mat, q_lo, q_hi), clipped=True)


def preprocess(dataset, lo=0.025, hi=0.975, order="standardize-clip"):
    """Standardize then clip (the default), or the reverse with ``order="clip-standardize"``."""
    if order == "standardize-clip":
        out = clip_quantiles(standardize(dataset), lo, hi)
        assert out.standardized and out.clipped
        return out
    if order == "clip-standardize":
        return standardize(clip_quantiles(dataset, lo, hi))
    raise DataError(f"unknown preprocessing order {order!r}")


def split_indices(n, val_fraction=0.30, seed=None, min_train=2):
    """Shuffle ``range(n)`` and hold out ``floor(n * val_fraction)`` indices."""
    if not 0.0 < val_fraction < 1.0:
        raise DataError("val_fraction must lie in (0, 1)")
    n_val = int(math.floor(n * val_fraction))
    if n_val < 1 or n - n_val < min_train:
        raise DataError(f"n={n} is too small to split with val_fraction={val_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[n_val:], perm[:n_val]


def split(dataset, val_fraction=0.30, seed=None):
    """Return ``(train, validation)`` datasets."""
    tr, va = split_indices(dataset.n, val_fraction, seed)
    return dataset.take(tr), dataset.take(va)
