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

from __future__ import annotations

__all__ = [
    "AnalysisError",
    "DegenerateFM",
    "DegenerateStratum",
    "DimensionMismatch",
    "EmptyCell",
    "EmptyDataset",
    "EmptyGroup",
    "EmptyGroupClass",
    "EmptyValidation",
    "ExperimentConfigError",
    "FairScoreError",
    "GroupTooSmall",
    "InfeasibleTarget",
    "IngestionError",
    "InvalidAge",
    "InvalidTarget",
    "MetricError",
    "MissingBaseline",
    "MissingColumn",
    "NoAccepted",
    "NonFiniteLoss",
    "OneClassOnly",
    "ProcessorError",
    "SchemaMismatch",
    "SplitError",
    "TooFewRecords",
    "TooManyFolds",
    "TrainingError",
    "UnknownGroup",
]

from collections.abc import Iterable


class FairScoreError(Exception):
    """Base class for all errors raised by this package."""


class IngestionError(FairScoreError):
    """Raised when a credit data file cannot be turned into a dataset."""


class MissingColumn(IngestionError):
    """A column declared in the ingestion schema is absent from the file."""


class InvalidAge(IngestionError):
    """An age value used to derive the sensitive attribute is not finite."""


class InvalidTarget(IngestionError):
    """Target values fall outside {0, 1} after mapping."""


class EmptyDataset(IngestionError):
    """The input file has no usable rows."""


class SplitError(FairScoreError):
    """Raised when a split or fold plan cannot be built."""


class DegenerateStratum(SplitError):
    """A (label, sensitive) stratification cell has fewer than two rows."""


class TooManyFolds(SplitError):
    """More folds requested than there are rows."""


class MetricError(FairScoreError):
    """Raised when a metric is undefined for the given scores."""


class EmptyGroup(MetricError):
    """One of the sensitive groups has no instances."""


class EmptyGroupClass(MetricError):
    """A sensitive group lacks positive or negative instances."""


class NoAccepted(MetricError):
    """A sensitive group has no instance scored above the cutoff.

    Parameters
    ----------
    group : `int`
        Sensitive group without acceptances.
    """

    def __init__(self, group: int):
        super().__init__(f"No accepted instances in sensitive group {group}")
        self.group = group


class OneClassOnly(MetricError):
    """Labels contain a single class."""


class TrainingError(FairScoreError):
    """Raised when a model cannot be trained or applied."""


class NonFiniteLoss(TrainingError):
    """Training objective became non-finite, usually a divergent step."""


class DimensionMismatch(TrainingError):
    """Feature matrix does not match the model input width."""


class DegenerateFM(TrainingError):
    """A smoothed fairness statistic has a vanishing denominator."""


class ProcessorError(FairScoreError):
    """Raised when a fairness processor cannot be fitted or applied."""


class EmptyCell(ProcessorError):
    """A (sensitive, label) cell is empty.

    Parameters
    ----------
    group : `int`
        Sensitive group of the cell.
    label : `int`
        Label of the cell.
    """

    def __init__(self, group: int, label: int):
        super().__init__(f"Empty cell for sensitive={group}, label={label}")
        self.group = group
        self.label = label


class GroupTooSmall(ProcessorError):
    """A sensitive group has too few rows for quantile repair."""


class EmptyValidation(ProcessorError):
    """Validation data for a post-processor is empty."""


class InfeasibleTarget(ProcessorError):
    """No common operating point exists for the group ROC hulls."""


class UnknownGroup(ProcessorError):
    """Data contains a sensitive group not covered by a fitted rule."""


class AnalysisError(FairScoreError):
    """Raised by aggregation of benchmark records."""


class MissingBaseline(AnalysisError):
    """Records lack the unconstrained baseline for some cell."""


class TooFewRecords(AnalysisError):
    """Too few records to compute a rank correlation."""


class SchemaMismatch(AnalysisError):
    """A records file does not follow the expected layout."""


class ExperimentConfigError(FairScoreError):
    """Experiment configuration has one or more violations.

    Parameters
    ----------
    violations : `~collections.abc.Iterable` [`str`]
        Messages, each prefixed with the dotted configuration key.
    """

    def __init__(self, violations: Iterable[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
