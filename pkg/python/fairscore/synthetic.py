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

"""Synthetic credit data with a built-in group bias."""

from __future__ import annotations

__all__ = ["SyntheticConfig", "generate_dataset", "generate_frame", "synthetic_schema"]

import logging

import lsst.pex.config as pexConfig
import numpy as np
import pandas as pd

from .data import ColumnConfig, Dataset, IngestionConfig, ingest_frame

_LOG = logging.getLogger(__name__)

_HOUSING = ("own", "rent", "free")
_PURPOSE = ("car", "education", "furniture", "business", "other")


class SyntheticConfig(pexConfig.Config):
    """Parameters of the synthetic biased credit generator."""

    n_rows = pexConfig.RangeField(dtype=int, default=2000, min=8, doc="Number of applicants.")
    seed = pexConfig.Field(dtype=int, default=0, doc="Generator seed.")
    repay_rate = pexConfig.RangeField(
        dtype=float, default=0.75, min=0.0, max=1.0, doc="Repayment rate of the privileged group."
    )
    base_rate_gap = pexConfig.RangeField(
        dtype=float,
        default=0.25,
        min=0.0,
        max=1.0,
        doc="Repayment rate of the privileged group minus that of the unprivileged group.",
    )
    unprivileged_share = pexConfig.RangeField(
        dtype=float,
        default=0.25,
        min=0.0,
        max=1.0,
        inclusiveMin=False,
        inclusiveMax=False,
        doc="Expected share of applicants younger than the age threshold.",
    )
    signal = pexConfig.RangeField(
        dtype=float, default=1.0, min=0.0, doc="Shift of informative features between classes."
    )
    age_threshold = pexConfig.Field(dtype=float, default=25.0, doc="Age separating the groups.")

    def validate(self) -> None:
        super().validate()
        if self.base_rate_gap > self.repay_rate:
            raise pexConfig.FieldValidationError(
                type(self).base_rate_gap, self, "base_rate_gap exceeds repay_rate"
            )


def generate_frame(config: SyntheticConfig) -> pd.DataFrame:
    """Draw a raw applicant table.

    Age is a proxy of the group; ``income`` and ``savings`` carry the label
    signal, ``duration`` and ``amount`` are weakly informative and
    ``housing`` depends on age.

    Parameters
    ----------
    config : `SyntheticConfig`
        Generator parameters.

    Returns
    -------
    frame : `pandas.DataFrame`
        Table with a ``credit_risk`` target (1 = repaid).
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_rows
    young = rng.random(n) < config.unprivileged_share
    age = np.where(
        young,
        rng.integers(18, int(config.age_threshold), size=n),
        rng.integers(int(config.age_threshold), 76, size=n),
    )
    repay = np.where(young, config.repay_rate - config.base_rate_gap, config.repay_rate)
    label = (rng.random(n) < repay).astype(np.int64)
    shift = config.signal * (label - 0.5)
    income = np.round(np.exp(7.5 + 0.3 * shift + 0.004 * (age - 40) + 0.35 * rng.standard_normal(n)), 2)
    savings = np.round(np.maximum(0.0, 1000.0 * (1.0 + shift + rng.standard_normal(n))), 2)
    duration = np.clip(np.round(24.0 - 4.0 * shift + 8.0 * rng.standard_normal(n)), 4, 72).astype(np.int64)
    amount = np.round(np.exp(8.0 - 0.1 * shift + 0.6 * rng.standard_normal(n)), 2)
    housing_p = np.where(young[:, np.newaxis], [0.2, 0.6, 0.2], [0.6, 0.3, 0.1])
    housing_index = (rng.random(n)[:, np.newaxis] > housing_p[:, :-1].cumsum(axis=1)).sum(axis=1)
    housing = np.array(_HOUSING)[housing_index]
    purpose = np.array(_PURPOSE)[rng.integers(0, len(_PURPOSE), size=n)]
    frame = pd.DataFrame(
        {
            "age": age,
            "income": income,
            "savings": savings,
            "duration": duration,
            "amount": amount,
            "housing": housing,
            "purpose": purpose,
            "credit_risk": label,
        }
    )
    _LOG.debug(
        "Generated %d applicants, %d unprivileged, repayment rate %.3f", n, young.sum(), label.mean()
    )
    return frame


def synthetic_schema(config: SyntheticConfig | None = None) -> IngestionConfig:
    """Return the ingestion schema of `generate_frame` tables."""
    schema = IngestionConfig()
    schema.target = "credit_risk"
    schema.sensitive.column = "age"
    if config is not None:
        schema.sensitive.threshold = config.age_threshold
    for name in ("age", "income", "savings", "duration", "amount"):
        schema.columns[name] = ColumnConfig()
    for name in ("housing", "purpose"):
        schema.columns[name] = ColumnConfig()
        schema.columns[name].kind = "categorical"
    return schema


def generate_dataset(config: SyntheticConfig | None = None) -> Dataset:
    """Generate and encode a synthetic dataset."""
    if config is None:
        config = SyntheticConfig()
    config.validate()
    return ingest_frame(generate_frame(config), synthetic_schema(config))
