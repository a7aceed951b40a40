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

"""Profit model of lending decisions.

The fractional loss ``B`` of a defaulted loan has point masses ``p0`` at 0
and ``p1`` at 1 with the remainder spread uniformly on (0, 1).  A repaid
loan earns the return ``roi`` (``C``); rejecting a good applicant forgoes
it.
"""

from __future__ import annotations

__all__ = [
    "CostModel",
    "ExpectedProfit",
    "ProfitPerEur",
    "expected_profit",
    "operating_cutoff",
    "profit_at",
    "profit_per_eur",
]

import dataclasses

import numpy as np
import pydantic

from .errors import OneClassOnly
from .fairmetrics import ScoreSet


class CostModel(pydantic.BaseModel):
    """Parameters of the profit model."""

    model_config = pydantic.ConfigDict(frozen=True)

    roi: float = pydantic.Field(default=0.2664, gt=0.0)
    """Return on a repaid loan per unit issued (`float`)."""

    p0: float = pydantic.Field(default=0.55, ge=0.0, le=1.0)
    """Probability of no loss given default (`float`)."""

    p1: float = pydantic.Field(default=0.10, ge=0.0, le=1.0)
    """Probability of full loss given default (`float`)."""

    quadrature_points: int = pydantic.Field(default=1001, ge=2)
    """Trapezoid nodes for the uniform part of the loss (`int`)."""

    @pydantic.model_validator(mode="after")
    def _check_masses(self) -> CostModel:
        if self.p0 + self.p1 > 1.0:
            raise ValueError(f"p0 + p1 = {self.p0 + self.p1} exceeds 1")
        return self

    @property
    def expected_loss(self) -> float:
        """Mean fractional loss of a default, E[B] (`float`)."""
        return self.p1 + (1.0 - self.p0 - self.p1) / 2.0


def _class_priors(s: ScoreSet) -> tuple[float, float]:
    pi1 = float(np.mean(s.labels == 1))
    return 1.0 - pi1, pi1


def _accepted_fractions(s: ScoreSet, cutoffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fraction of each class scored above every cutoff."""
    result = []
    for label in (0, 1):
        scores = np.sort(s.scores[s.labels == label])
        if len(scores) == 0:
            result.append(np.zeros(len(cutoffs)))
            continue
        above = len(scores) - np.searchsorted(scores, cutoffs, side="right")
        result.append(above / len(scores))
    return result[0], result[1]


def profit_at(s: ScoreSet, tau: float, b: float, cm: CostModel) -> float:
    """Return profit per unit issued at a fixed cutoff and loss.

    Parameters
    ----------
    s : `ScoreSet`
        Scores and labels; the sensitive attribute is ignored.
    tau : `float`
        Cutoff; instances scored above it are accepted.
    b : `float`
        Fractional loss of a default, in [0, 1].
    cm : `CostModel`
        Profit parameters.

    Returns
    -------
    profit : `float`
        ``C (pi1 (1 - F1) - pi1 F1) - b pi0 (1 - F0)`` where ``F_i`` is the
        fraction of class ``i`` rejected.
    """
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"Loss {b} not in [0, 1]")
    pi0, pi1 = _class_priors(s)
    a0, a1 = _accepted_fractions(s, np.array([tau], dtype=np.float64))
    accepted0, accepted1 = float(a0[0]), float(a1[0])
    return cm.roi * (pi1 * accepted1 - pi1 * (1.0 - accepted1)) - b * pi0 * accepted0


@dataclasses.dataclass(frozen=True)
class ExpectedProfit:
    """Expected profit with the optimal cutoff at every loss node."""

    value: float
    nodes: np.ndarray
    cutoffs: np.ndarray
    zero_loss_cutoff: float
    full_loss_cutoff: float


def _candidate_cutoffs(scores: np.ndarray) -> np.ndarray:
    distinct = np.unique(scores)
    midpoints = (distinct[:-1] + distinct[1:]) / 2.0
    return np.unique(np.concatenate(([0.0, 1.0], midpoints)))


def expected_profit(s: ScoreSet, cm: CostModel) -> ExpectedProfit:
    """Return profit integrated over the loss distribution.

    At every loss value the cutoff maximizing profit is chosen among the
    midpoints between adjacent distinct scores, 0 and 1.  The point masses
    are evaluated exactly and the uniform part by the composite trapezoid
    rule on ``cm.quadrature_points`` nodes.

    Parameters
    ----------
    s : `ScoreSet`
        Scores and labels.
    cm : `CostModel`
        Profit parameters.

    Returns
    -------
    result : `ExpectedProfit`
        Value and per-node optimal cutoffs; ties pick the smallest cutoff.

    Raises
    ------
    OneClassOnly
        Raised if labels contain one class only.
    """
    pi0, pi1 = _class_priors(s)
    if pi0 == 0.0 or pi1 == 0.0:
        raise OneClassOnly("Expected profit needs both classes")
    cutoffs = _candidate_cutoffs(s.scores)
    a0, a1 = _accepted_fractions(s, cutoffs)
    gain = cm.roi * pi1 * (2.0 * a1 - 1.0)
    exposure = pi0 * a0

    def best(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        profits = gain[np.newaxis, :] - b[:, np.newaxis] * exposure[np.newaxis, :]
        index = np.argmax(profits, axis=1)
        return profits[np.arange(len(b)), index], cutoffs[index]

    nodes = np.linspace(0.0, 1.0, cm.quadrature_points)
    node_profit, node_cutoffs = best(nodes)
    h = 1.0 / (cm.quadrature_points - 1)
    integral = h * (np.sum(node_profit[1:-1]) + 0.5 * (node_profit[0] + node_profit[-1]))
    (zero_profit, full_profit), (zero_cutoff, full_cutoff) = best(np.array([0.0, 1.0]))
    value = cm.p0 * zero_profit + cm.p1 * full_profit + (1.0 - cm.p0 - cm.p1) * integral
    return ExpectedProfit(
        value=float(value),
        nodes=nodes,
        cutoffs=node_cutoffs,
        zero_loss_cutoff=float(zero_cutoff),
        full_loss_cutoff=float(full_cutoff),
    )


def operating_cutoff(cm: CostModel) -> float:
    """Return the cutoff above which accepting beats rejecting on average.

    Parameters
    ----------
    cm : `CostModel`
        Profit parameters.

    Returns
    -------
    tau : `float`
        ``E[B] / (2 C + E[B])``.
    """
    expected = cm.expected_loss
    return expected / (2.0 * cm.roi + expected)


@dataclasses.dataclass(frozen=True)
class ProfitPerEur:
    """Profit at the operating cutoff, raw and per accepted applicant."""

    raw: float
    normalized: float | None
    acceptance_rate: float
    cutoff: float


def profit_per_eur(s: ScoreSet, cm: CostModel, tau: float | None = None) -> ProfitPerEur:
    """Return profit at the operating cutoff with the mean loss.

    Parameters
    ----------
    s : `ScoreSet`
        Scores and labels.
    cm : `CostModel`
        Profit parameters.
    tau : `float`, optional
        Cutoff; defaults to `operating_cutoff`.

    Returns
    -------
    profit : `ProfitPerEur`
        Raw profit and profit divided by the acceptance rate, `None` when
        nothing is accepted.
    """
    cutoff = operating_cutoff(cm) if tau is None else tau
    # Profit is linear in the loss, so the mean loss gives the integral.
    raw = profit_at(s, cutoff, cm.expected_loss, cm)
    acceptance = float(np.count_nonzero(s.scores > cutoff)) / len(s)
    normalized = raw / acceptance if acceptance > 0.0 else None
    return ProfitPerEur(raw=raw, normalized=normalized, acceptance_rate=acceptance, cutoff=cutoff)
