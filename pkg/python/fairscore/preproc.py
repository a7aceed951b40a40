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

"""Pre-processors transforming training data before learning."""

from __future__ import annotations

__all__ = ["REPAIR_LEVELS", "di_remove", "resample", "reweigh"]

import logging
from collections.abc import Sequence

import numpy as np
from scipy.stats import rankdata

from .data import Dataset
from .errors import EmptyCell, GroupTooSmall

_LOG = logging.getLogger(__name__)

REPAIR_LEVELS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
"""Default grid of repair levels."""


def reweigh(labels: Sequence[int] | np.ndarray, sensitive: Sequence[int] | np.ndarray) -> np.ndarray:
    """Return weights making the sensitive attribute independent of labels.

    Every instance in cell ``(a, y)`` gets ``P(a) P(y) / P(a, y)``.

    Parameters
    ----------
    labels : sequence of `int`
        Labels, 0 or 1.
    sensitive : sequence of `int`
        Sensitive attribute, 0 or 1.

    Returns
    -------
    weights : `numpy.ndarray`
        Instance weights.

    Raises
    ------
    EmptyCell
        Raised if some (sensitive, label) cell is empty.
    """
    y = np.asarray(labels)
    a = np.asarray(sensitive)
    n = len(y)
    weights = np.empty(n, dtype=np.float64)
    for group in (0, 1):
        for label in (0, 1):
            cell = (a == group) & (y == label)
            n_cell = int(np.count_nonzero(cell))
            if n_cell == 0:
                raise EmptyCell(group, label)
            n_group = int(np.count_nonzero(a == group))
            n_label = int(np.count_nonzero(y == label))
            weights[cell] = (n_group * n_label) / (n * n_cell)
    return weights


def resample(ds: Dataset, weights: Sequence[float] | np.ndarray, seed: int) -> Dataset:
    """Draw a bootstrap sample with probabilities proportional to weights.

    Parameters
    ----------
    ds : `Dataset`
        Source rows.
    weights : sequence of `float`
        Positive sampling weights.
    seed : `int`
        Seed of the draw.

    Returns
    -------
    sample : `Dataset`
        ``n`` rows drawn with replacement, unit weights.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (ds.n,) or not np.all(w > 0) or not np.all(np.isfinite(w)):
        raise ValueError("Resampling weights must be positive, finite and one per row")
    rng = np.random.default_rng(seed)
    rows = rng.choice(ds.n, size=ds.n, replace=True, p=w / w.sum())
    return ds.subset(rows).with_weights(np.ones(ds.n))


def _plotting_positions(values: np.ndarray) -> np.ndarray:
    # Ties share their average rank.
    return (rankdata(values, method="average") - 0.5) / len(values)


def _repair_column(values: np.ndarray, sensitive: np.ndarray, level: float) -> np.ndarray:
    groups = [np.flatnonzero(sensitive == g) for g in (0, 1)]
    positions = [_plotting_positions(values[idx]) for idx in groups]
    grid = np.unique(np.concatenate(positions))
    quantiles = []
    for idx, pos in zip(groups, positions):
        order = np.argsort(pos, kind="stable")
        quantiles.append(np.interp(grid, pos[order], values[idx][order]))
    median = np.median(np.vstack(quantiles), axis=0)
    repaired = values.copy()
    for idx, pos in zip(groups, positions):
        repaired[idx] = np.interp(pos, grid, median)
    return (1.0 - level) * values + level * repaired


def di_remove(ds: Dataset, level: float, numeric_columns: Sequence[int] | None = None) -> Dataset:
    """Move numeric features towards the median group distribution.

    Each value's within-group quantile is mapped through the pointwise
    median of the group quantile functions.  The result is
    ``(1 - level) * original + level * repaired``.

    Parameters
    ----------
    ds : `Dataset`
        Data to repair.
    level : `float`
        Repair level in [0, 1].
    numeric_columns : sequence of `int`, optional
        Feature indices to repair; default is every numeric feature.

    Returns
    -------
    repaired : `Dataset`
        Dataset with repaired features; labels, sensitive attribute and
        weights unchanged.

    Raises
    ------
    GroupTooSmall
        Raised if a sensitive group has fewer than two rows.
    """
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"Repair level {level} not in [0, 1]")
    for group in (0, 1):
        size = int(np.count_nonzero(ds.sensitive == group))
        if size < 2:
            raise GroupTooSmall(f"Sensitive group {group} has {size} rows, need at least 2")
    columns = ds.numeric_feature_indices() if numeric_columns is None else list(numeric_columns)
    if level == 0.0 or not columns:
        return ds
    features = np.array(ds.features, copy=True)
    for column in columns:
        features[:, column] = _repair_column(ds.features[:, column], ds.sensitive, level)
    _LOG.debug("Repaired %d columns at level %g", len(columns), level)
    return ds.with_features(features)
