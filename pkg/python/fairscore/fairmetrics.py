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

"""Group fairness criteria, AUC and acceptance rates at a cutoff.

Acceptance is always the strict comparison ``score > tau``; a score equal
to the cutoff is rejected.
"""

from __future__ import annotations

__all__ = [
    "AcceptanceRates",
    "GroupConfusion",
    "GroupCounts",
    "ScoreSet",
    "acceptance_rate",
    "auc",
    "confusion",
    "independence",
    "separation",
    "separation_components",
    "signed_statistic",
    "sufficiency",
]

import dataclasses
from collections.abc import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyGroup, EmptyGroupClass, NoAccepted, OneClassOnly


def _frozen(values: Sequence[float] | np.ndarray, dtype: type) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True, eq=False)
class ScoreSet:
    """Scores aligned with labels and the sensitive attribute."""

    scores: np.ndarray
    labels: np.ndarray
    sensitive: np.ndarray

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels)
        sensitive = np.asarray(self.sensitive)
        if scores.ndim != 1 or labels.shape != scores.shape or sensitive.shape != scores.shape:
            raise ValueError(
                f"Score set arrays differ in shape: {scores.shape}, {labels.shape}, {sensitive.shape}"
            )
        if not np.all(np.isfinite(scores)) or np.any(scores < 0.0) or np.any(scores > 1.0):
            raise ValueError("Scores must be finite and within [0, 1]")
        if not np.all(np.isin(labels, (0, 1))) or not np.all(np.isin(sensitive, (0, 1))):
            raise ValueError("Labels and sensitive values must be 0 or 1")
        object.__setattr__(self, "scores", _frozen(scores, np.float64))
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "sensitive", _frozen(sensitive, np.int64))

    def __len__(self) -> int:
        return len(self.scores)

    def with_scores(self, scores: Sequence[float] | np.ndarray) -> ScoreSet:
        """Return a copy with replaced scores."""
        return ScoreSet(scores, self.labels, self.sensitive)

    def subset(self, indices: Sequence[int] | np.ndarray) -> ScoreSet:
        """Return the instances at the given indices."""
        idx = np.asarray(indices, dtype=np.int64)
        return ScoreSet(self.scores[idx], self.labels[idx], self.sensitive[idx])


def _ratio(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator > 0 else None


@dataclasses.dataclass(frozen=True)
class GroupCounts:
    """Confusion counts of one sensitive group.

    Derived rates are `None` when their denominator is zero.
    """

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def size(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def fpr(self) -> float | None:
        return _ratio(self.fp, self.fp + self.tn)

    @property
    def fnr(self) -> float | None:
        return _ratio(self.fn, self.fn + self.tp)

    @property
    def ppv(self) -> float | None:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def acceptance(self) -> float | None:
        return _ratio(self.tp + self.fp, self.size)


@dataclasses.dataclass(frozen=True)
class GroupConfusion:
    """Confusion counts of both sensitive groups at a cutoff."""

    group0: GroupCounts
    group1: GroupCounts
    tau: float

    def __getitem__(self, group: int) -> GroupCounts:
        if group == 0:
            return self.group0
        if group == 1:
            return self.group1
        raise KeyError(group)


@dataclasses.dataclass(frozen=True)
class AcceptanceRates:
    """Overall and per-group acceptance rates."""

    overall: float
    group0: float
    group1: float


def _counts(accepted: np.ndarray, labels: np.ndarray) -> GroupCounts:
    positive = labels == 1
    return GroupCounts(
        tp=int(np.count_nonzero(accepted & positive)),
        fp=int(np.count_nonzero(accepted & ~positive)),
        tn=int(np.count_nonzero(~accepted & ~positive)),
        fn=int(np.count_nonzero(~accepted & positive)),
    )


def confusion(s: ScoreSet, tau: float) -> GroupConfusion:
    """Count per-group confusion at a cutoff.

    Parameters
    ----------
    s : `ScoreSet`
        Scores to evaluate.
    tau : `float`
        Cutoff in [0, 1]; instances with score above it are accepted.

    Returns
    -------
    confusion : `GroupConfusion`
        Counts for both groups.

    Raises
    ------
    EmptyGroup
        Raised if a sensitive group has no instances.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"Cutoff {tau} not in [0, 1]")
    accepted = s.scores > tau
    groups = []
    for group in (0, 1):
        members = s.sensitive == group
        if not members.any():
            raise EmptyGroup(f"Sensitive group {group} is empty")
        groups.append(_counts(accepted[members], s.labels[members]))
    return GroupConfusion(group0=groups[0], group1=groups[1], tau=tau)


def acceptance_rate(s: ScoreSet, tau: float) -> AcceptanceRates:
    """Return overall and per-group acceptance rates at a cutoff.

    Raises
    ------
    EmptyGroup
        Raised if a sensitive group has no instances.
    """
    counts = confusion(s, tau)
    return AcceptanceRates(
        overall=float(np.count_nonzero(s.scores > tau)) / len(s),
        group0=counts.group0.acceptance,  # type: ignore[arg-type]
        group1=counts.group1.acceptance,  # type: ignore[arg-type]
    )


def independence(s: ScoreSet, tau: float) -> float:
    """Return the absolute gap of group acceptance rates.

    Raises
    ------
    EmptyGroup
        Raised if a sensitive group has no instances.
    """
    rates = acceptance_rate(s, tau)
    return abs(rates.group0 - rates.group1)


def _class_rates(s: ScoreSet, tau: float) -> tuple[float, float, float, float]:
    counts = confusion(s, tau)
    for group in (0, 1):
        c = counts[group]
        if c.tp + c.fn == 0 or c.fp + c.tn == 0:
            raise EmptyGroupClass(f"Sensitive group {group} lacks positive or negative instances")
    return (
        counts.group0.fpr,  # type: ignore[return-value]
        counts.group0.fnr,
        counts.group1.fpr,
        counts.group1.fnr,
    )


def separation_components(s: ScoreSet, tau: float) -> tuple[float, float]:
    """Return the signed gaps (FPR1 - FPR0, FNR1 - FNR0).

    The two gaps may cancel inside `separation`; this diagnostic exposes
    them separately.

    Raises
    ------
    EmptyGroupClass
        Raised if a group lacks positives or negatives.
    """
    fpr0, fnr0, fpr1, fnr1 = _class_rates(s, tau)
    return fpr1 - fpr0, fnr1 - fnr0


def separation(s: ScoreSet, tau: float) -> float:
    """Return half the absolute signed sum of group FPR and FNR gaps.

    Raises
    ------
    EmptyGroupClass
        Raised if a group lacks positives or negatives.
    """
    d_fpr, d_fnr = separation_components(s, tau)
    return 0.5 * abs(d_fpr + d_fnr)


def _ppvs(s: ScoreSet, tau: float) -> tuple[float, float]:
    counts = confusion(s, tau)
    ppv = []
    for group in (0, 1):
        value = counts[group].ppv
        if value is None:
            raise NoAccepted(group)
        ppv.append(value)
    return ppv[0], ppv[1]


def sufficiency(s: ScoreSet, tau: float) -> float:
    """Return the absolute gap of group positive predictive values.

    Raises
    ------
    NoAccepted
        Raised if a group has no accepted instance.
    """
    ppv0, ppv1 = _ppvs(s, tau)
    return abs(ppv0 - ppv1)


def signed_statistic(s: ScoreSet, tau: float, criterion: str) -> float:
    """Return a criterion's statistic signed as unprivileged minus privileged.

    Parameters
    ----------
    s : `ScoreSet`
        Scores to evaluate.
    tau : `float`
        Cutoff.
    criterion : `str`
        One of ``independence``, ``separation`` or ``sufficiency``.

    Returns
    -------
    statistic : `float`
        Signed statistic; its absolute value is the criterion.
    """
    if criterion == "independence":
        rates = acceptance_rate(s, tau)
        return rates.group1 - rates.group0
    if criterion == "separation":
        d_fpr, d_fnr = separation_components(s, tau)
        return 0.5 * (d_fpr + d_fnr)
    if criterion == "sufficiency":
        ppv0, ppv1 = _ppvs(s, tau)
        return ppv1 - ppv0
    raise ValueError(f"Unknown fairness criterion {criterion!r}")


def auc(s: ScoreSet) -> float:
    """Return the area under the ROC curve, ties counted one half.

    Raises
    ------
    OneClassOnly
        Raised if labels contain one class only.
    """
    positive = s.labels == 1
    n1 = int(np.count_nonzero(positive))
    n0 = len(s) - n1
    if n1 == 0 or n0 == 0:
        raise OneClassOnly("AUC needs both positive and negative instances")
    ranks = rankdata(s.scores, method="average")
    return float((ranks[positive].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))
