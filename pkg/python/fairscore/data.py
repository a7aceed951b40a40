# This file is part of fairscore.
#
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This software is dual licensed under the GNU General Public License and also
# under a 3-clause BSD license. Recipients may choose which of these licenses
# to use; please see the files gpl-3.0.txt and/or bsd_license.txt,
# respectively.  If you choose the GPL option then the following text applies
# (but note that there is still no warranty even if you opt for BSD instead):
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

"""Ingestion of tabular credit data, splits and cross-validation folds."""

from __future__ import annotations

__all__ = [
    "ColumnConfig",
    "ColumnEncoding",
    "Dataset",
    "EncodingReport",
    "FoldPlan",
    "IngestionConfig",
    "SensitiveConfig",
    "SplitPlan",
    "derive_sensitive",
    "ingest_frame",
    "load_csv",
    "load_ingestion_config",
    "make_folds",
    "split_train_test",
]

import dataclasses
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import lsst.pex.config as pexConfig
import numpy as np
import pandas as pd
import pydantic

from .configIO import config_from_toml
from .errors import (
    DegenerateStratum,
    EmptyDataset,
    IngestionError,
    InvalidAge,
    InvalidTarget,
    MissingColumn,
    SplitError,
    TooManyFolds,
)

_LOG = logging.getLogger(__name__)

MISSING_LEVEL = "<missing>"


class SensitiveConfig(pexConfig.Config):
    """Derivation of the binary sensitive attribute."""

    column = pexConfig.Field(dtype=str, default="age", doc="Age column, or the sensitive column if explicit.")
    threshold = pexConfig.Field(dtype=float, default=25.0, doc="Age below which a row is unprivileged.")
    inclusive = pexConfig.Field(
        dtype=bool, default=False, doc="Treat age equal to the threshold as unprivileged."
    )
    explicit = pexConfig.Field(
        dtype=bool, default=False, doc="Column already holds the 0/1 sensitive attribute."
    )


class ColumnConfig(pexConfig.Config):
    """Encoding of a single feature column."""

    kind = pexConfig.ChoiceField(
        dtype=str,
        default="numeric",
        allowed={
            "numeric": "Passed through, median-imputed.",
            "categorical": "One-hot, first level dropped.",
        },
        doc="Column kind.",
    )


class IngestionConfig(pexConfig.Config):
    """Schema of a credit data CSV file."""

    target = pexConfig.Field(dtype=str, default="credit_risk", doc="Target column, 1 = repaid.")
    target_map = pexConfig.DictField(
        keytype=str, itemtype=int, default={}, doc="Mapping of raw target codes to 0/1, empty for none."
    )
    sensitive = pexConfig.ConfigField(dtype=SensitiveConfig, doc="Sensitive attribute derivation.")
    columns = pexConfig.ConfigDictField(
        keytype=str, itemtype=ColumnConfig, default={}, doc="Feature columns and their kinds."
    )


def load_ingestion_config(path: str | Path) -> IngestionConfig:
    """Read an ingestion schema from a TOML file.

    Parameters
    ----------
    path : `str` or `~pathlib.Path`
        TOML file.

    Returns
    -------
    schema : `IngestionConfig`
        Validated schema.

    Raises
    ------
    IngestionError
        Raised if the schema has invalid keys or values.
    """
    schema, violations = config_from_toml(IngestionConfig(), path)
    if violations:
        raise IngestionError(f"Invalid ingestion schema {path}: " + "; ".join(violations))
    schema.validate()
    return schema


class ColumnEncoding(pydantic.BaseModel):
    """Transformation applied to one source column."""

    source: str
    kind: str
    outputs: list[str]
    dropped_level: str | None = None
    n_missing: int = 0
    imputed_value: float | None = None
    indicator: str | None = None


class EncodingReport(pydantic.BaseModel):
    """Record of every transformation applied during ingestion."""

    columns: list[ColumnEncoding] = pydantic.Field(default_factory=list)
    dropped_rows: int = 0
    sensitive_rule: str = ""

    def numeric_outputs(self) -> list[str]:
        """Return names of features produced by numeric columns.

        Missingness indicators are not included.
        """
        return [name for column in self.columns if column.kind == "numeric" for name in column.outputs]


def _frozen(array: Any, dtype: Any) -> np.ndarray:
    result = np.array(array, dtype=dtype, copy=True)
    result.setflags(write=False)
    return result


@dataclasses.dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with labels, sensitive attribute and weights.

    Labels use 1 for repaid and 0 for default; sensitive uses 1 for the
    unprivileged group.  Instances are immutable.
    """

    features: np.ndarray
    labels: np.ndarray
    sensitive: np.ndarray
    weights: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()
    encoding_report: EncodingReport | None = None

    def __post_init__(self) -> None:
        features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        n, k = features.shape
        if n < 1 or k < 1:
            raise ValueError(f"Dataset needs at least one row and one feature, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise ValueError("Dataset features contain non-finite values")
        labels = np.asarray(self.labels)
        sensitive = np.asarray(self.sensitive)
        weights = np.ones(n) if self.weights is None else np.asarray(self.weights, dtype=np.float64)
        for name, values in (("labels", labels), ("sensitive", sensitive), ("weights", weights)):
            if values.shape != (n,):
                raise ValueError(f"Dataset {name} has shape {values.shape}, expected ({n},)")
        if not np.all(np.isin(labels, (0, 1))) or not np.all(np.isin(sensitive, (0, 1))):
            raise ValueError("Dataset labels and sensitive values must be 0 or 1")
        if not np.all(np.isfinite(weights)) or not np.all(weights > 0):
            raise ValueError("Dataset weights must be positive and finite")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(k))
        if len(names) != k:
            raise ValueError(f"Got {len(names)} feature names for {k} features")
        object.__setattr__(self, "features", _frozen(features, np.float64))
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "sensitive", _frozen(sensitive, np.int64))
        object.__setattr__(self, "weights", _frozen(weights, np.float64))
        object.__setattr__(self, "feature_names", names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.sensitive, other.sensitive)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n(self) -> int:
        """Number of rows (`int`)."""
        return self.features.shape[0]

    @property
    def k(self) -> int:
        """Number of features (`int`)."""
        return self.features.shape[1]

    def subset(self, indices: Sequence[int] | np.ndarray) -> Dataset:
        """Return the rows at the given indices, in that order."""
        idx = np.asarray(indices, dtype=np.int64)
        return dataclasses.replace(
            self,
            features=self.features[idx],
            labels=self.labels[idx],
            sensitive=self.sensitive[idx],
            weights=self.weights[idx],
        )

    def with_weights(self, weights: Sequence[float] | np.ndarray) -> Dataset:
        """Return a copy with replaced instance weights."""
        return dataclasses.replace(self, weights=np.asarray(weights, dtype=np.float64))

    def with_features(self, features: np.ndarray) -> Dataset:
        """Return a copy with a replaced feature matrix of the same shape."""
        if np.shape(features) != self.features.shape:
            raise ValueError(f"Feature shape {np.shape(features)} differs from {self.features.shape}")
        return dataclasses.replace(self, features=features)

    def numeric_feature_indices(self) -> list[int]:
        """Return column indices of numeric (rankable) features."""
        if self.encoding_report is None:
            return list(range(self.k))
        numeric = set(self.encoding_report.numeric_outputs())
        return [i for i, name in enumerate(self.feature_names) if name in numeric]


def derive_sensitive(ages: Sequence[float] | np.ndarray, psi: float, inclusive: bool = False) -> np.ndarray:
    """Derive the sensitive attribute from ages.

    Parameters
    ----------
    ages : sequence of `float`
        Applicant ages.
    psi : `float`
        Age threshold; younger applicants are unprivileged.
    inclusive : `bool`, optional
        If `True` an age equal to ``psi`` is also unprivileged.

    Returns
    -------
    sensitive : `numpy.ndarray`
        1 for the unprivileged group, 0 otherwise.

    Raises
    ------
    InvalidAge
        Raised if any age is not finite.
    """
    values = np.asarray(ages, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values))
        raise InvalidAge(f"Non-finite age at rows {bad[:10].tolist()}")
    below = values <= psi if inclusive else values < psi
    return below.astype(np.int64)


def _to_numeric(values: pd.Series, name: str) -> pd.Series:
    numeric = pd.to_numeric(values, errors="coerce")
    bad = values.notna() & numeric.isna()
    if bad.any():
        raise IngestionError(f"Non-numeric value {values[bad].iloc[0]!r} in numeric column {name!r}")
    return numeric.astype(np.float64)


def _map_target(values: pd.Series, schema: IngestionConfig) -> pd.Series:
    present = values.notna()
    if schema.target_map:
        mapping = dict(schema.target_map)
        mapped = values[present].map(lambda v: mapping.get(str(v).strip()))
        unmapped = mapped.isna()
        if unmapped.any():
            raise InvalidTarget(
                f"Target value {values[present][unmapped].iloc[0]!r} has no entry in target_map"
            )
        result = pd.Series(np.nan, index=values.index)
        result[present] = mapped.astype(np.float64)
        return result
    numeric = pd.to_numeric(values, errors="coerce")
    invalid = present & ~numeric.isin((0, 1))
    if invalid.any():
        raise InvalidTarget(f"Target value {values[invalid].iloc[0]!r} is not 0 or 1")
    return numeric


def ingest_frame(frame: pd.DataFrame, schema: IngestionConfig) -> Dataset:
    """Encode a data frame into a `Dataset` following a schema.

    Parameters
    ----------
    frame : `pandas.DataFrame`
        Raw table, one applicant per row.
    schema : `IngestionConfig`
        Column roles and kinds.

    Returns
    -------
    dataset : `Dataset`
        Encoded dataset with its encoding report.

    Raises
    ------
    MissingColumn
        Raised if a declared column is absent.
    InvalidTarget
        Raised if target values are not 0/1 after mapping.
    InvalidAge
        Raised if the age column has non-finite values.
    EmptyDataset
        Raised if no rows remain.
    """
    declared = [schema.target, schema.sensitive.column, *schema.columns.keys()]
    missing = [name for name in declared if name not in frame.columns]
    if missing:
        raise MissingColumn(f"Columns declared in the schema are missing: {', '.join(sorted(set(missing)))}")
    if len(frame) == 0:
        raise EmptyDataset("Input table has no rows")

    target = _map_target(frame[schema.target], schema)
    keep = target.notna().to_numpy()
    dropped = int((~keep).sum())
    if dropped:
        _LOG.info("Dropping %d rows with missing target %r", dropped, schema.target)
    frame = frame.loc[keep].reset_index(drop=True)
    if len(frame) == 0:
        raise EmptyDataset("No rows with a target value")
    labels = target[keep].to_numpy().astype(np.int64)

    raw_sensitive = _to_numeric(frame[schema.sensitive.column], schema.sensitive.column).to_numpy()
    if schema.sensitive.explicit:
        if not np.all(np.isin(raw_sensitive, (0, 1))):
            raise IngestionError(f"Sensitive column {schema.sensitive.column!r} must hold 0 or 1")
        sensitive = raw_sensitive.astype(np.int64)
        rule = f"{schema.sensitive.column} given explicitly"
    else:
        sensitive = derive_sensitive(raw_sensitive, schema.sensitive.threshold, schema.sensitive.inclusive)
        op = "<=" if schema.sensitive.inclusive else "<"
        rule = f"{schema.sensitive.column} {op} {schema.sensitive.threshold:g}"

    blocks: list[np.ndarray] = []
    names: list[str] = []
    indicators: list[tuple[str, np.ndarray]] = []
    encodings: list[ColumnEncoding] = []
    for name in frame.columns:
        if name not in schema.columns or name == schema.target:
            continue
        kind = schema.columns[name].kind
        if kind == "numeric":
            values = _to_numeric(frame[name], name)
            n_missing = int(values.isna().sum())
            imputed = None
            indicator = None
            if n_missing:
                if n_missing == len(values):
                    raise IngestionError(f"Numeric column {name!r} has no values")
                imputed = float(values.median())
                indicators.append((f"{name}__missing", values.isna().to_numpy(dtype=np.float64)))
                indicator = f"{name}__missing"
                values = values.fillna(imputed)
            blocks.append(values.to_numpy()[:, np.newaxis])
            names.append(name)
            encodings.append(
                ColumnEncoding(
                    source=name,
                    kind=kind,
                    outputs=[name],
                    n_missing=n_missing,
                    imputed_value=imputed,
                    indicator=indicator,
                )
            )
        else:
            levels_series = frame[name].map(lambda v: MISSING_LEVEL if pd.isna(v) else str(v).strip())
            levels = sorted(levels_series.unique())
            outputs = [f"{name}={level}" for level in levels[1:]]
            if outputs:
                codes = levels_series.to_numpy()
                blocks.append(np.column_stack([codes == level for level in levels[1:]]).astype(np.float64))
                names.extend(outputs)
            encodings.append(
                ColumnEncoding(
                    source=name,
                    kind=kind,
                    outputs=outputs,
                    dropped_level=levels[0],
                    n_missing=int((levels_series == MISSING_LEVEL).sum()),
                )
            )
    for indicator_name, column in indicators:
        blocks.append(column[:, np.newaxis])
        names.append(indicator_name)
    if not blocks:
        raise IngestionError("Schema produces no feature columns")

    report = EncodingReport(columns=encodings, dropped_rows=dropped, sensitive_rule=rule)
    return Dataset(
        features=np.hstack(blocks),
        labels=labels,
        sensitive=sensitive,
        feature_names=tuple(names),
        encoding_report=report,
    )


def load_csv(path: str | Path, schema: IngestionConfig | str | Path) -> Dataset:
    """Read a credit data CSV file.

    Parameters
    ----------
    path : `str` or `~pathlib.Path`
        CSV file with a header row, comma separated, UTF-8.
    schema : `IngestionConfig`, `str` or `~pathlib.Path`
        Schema, or the TOML file it is read from.

    Returns
    -------
    dataset : `Dataset`
        Encoded dataset.

    Raises
    ------
    EmptyDataset
        Raised if the file is empty.
    MissingColumn
        Raised if a declared column is absent.
    InvalidTarget
        Raised if target values are not 0/1 after mapping.
    """
    if not isinstance(schema, IngestionConfig):
        schema = load_ingestion_config(schema)
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, na_values=[""], skipinitialspace=True, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise EmptyDataset(f"File {path} is empty") from None
    return ingest_frame(frame, schema)


@dataclasses.dataclass(frozen=True)
class SplitPlan:
    """Disjoint train and test row indices."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    train_fraction: float


@dataclasses.dataclass(frozen=True)
class FoldPlan:
    """Assignment of training rows to cross-validation folds."""

    k: int
    assignments: np.ndarray
    seed: int

    def fold_indices(self, fold: int) -> np.ndarray:
        """Return positions assigned to a fold."""
        return np.flatnonzero(self.assignments == fold)

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (training, validation) positions for a held-out fold."""
        held_out = self.assignments == fold
        return np.flatnonzero(~held_out), np.flatnonzero(held_out)


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def split_train_test(ds: Dataset, fraction: float, seed: int) -> SplitPlan:
    """Split rows into train and test, stratified by (label, sensitive).

    Parameters
    ----------
    ds : `Dataset`
        Dataset to split.
    fraction : `float`
        Training fraction in (0, 1).
    seed : `int`
        Seed of the shuffle.

    Returns
    -------
    plan : `SplitPlan`
        Sorted train and test indices.

    Raises
    ------
    DegenerateStratum
        Raised if a stratification cell has fewer than two rows.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"Train fraction {fraction} not in (0, 1)")
    rng = np.random.default_rng(seed)
    cells = 2 * ds.labels + ds.sensitive
    train: list[np.ndarray] = []
    test: list[np.ndarray] = []
    for cell in range(4):
        members = np.flatnonzero(cells == cell)
        if len(members) < 2:
            raise DegenerateStratum(
                f"Cell label={cell // 2}, sensitive={cell % 2} has {len(members)} rows, need at least 2"
            )
        # Both sides of every cell stay non-empty.
        m = min(max(_round_half_up(fraction * len(members)), 1), len(members) - 1)
        shuffled = rng.permutation(members)
        train.append(shuffled[:m])
        test.append(shuffled[m:])
    return SplitPlan(
        train_indices=np.sort(np.concatenate(train)),
        test_indices=np.sort(np.concatenate(test)),
        seed=seed,
        train_fraction=fraction,
    )


def make_folds(n_train: int, k: int, strata: Sequence[Any] | np.ndarray, seed: int) -> FoldPlan:
    """Assign rows to stratified folds.

    Rows of each stratum are shuffled and dealt round-robin; the dealing
    position carries over between strata, so fold sizes differ by at most
    one both per stratum and overall.

    Parameters
    ----------
    n_train : `int`
        Number of rows.
    k : `int`
        Number of folds, at least 2.
    strata : sequence
        Stratum label of every row.
    seed : `int`
        Seed of the shuffle.

    Returns
    -------
    plan : `FoldPlan`
        Fold assignments.

    Raises
    ------
    TooManyFolds
        Raised if ``k`` exceeds ``n_train``.
    """
    if k < 2:
        raise SplitError(f"Need at least 2 folds, got {k}")
    if k > n_train:
        raise TooManyFolds(f"Cannot make {k} folds from {n_train} rows")
    labels = np.asarray(strata)
    if labels.shape != (n_train,):
        raise ValueError(f"Strata have shape {labels.shape}, expected ({n_train},)")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n_train, dtype=np.int64)
    offset = 0
    for value in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == value))
        assignments[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    assignments.setflags(write=False)
    return FoldPlan(k=k, assignments=assignments, seed=seed)
