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

"""Post-processors adjusting the scores of an already trained model."""

from __future__ import annotations

__all__ = [
    "CalibrationMap",
    "CriticalRegion",
    "GroupDecisionRule",
    "GroupRoc",
    "GroupThresholds",
    "RejectOptionFit",
    "calibration_from_json",
    "calibration_to_json",
    "equalized_odds_apply",
    "equalized_odds_fit",
    "equalized_odds_probabilities",
    "expected_calibration_error",
    "group_roc",
    "platt_apply",
    "platt_fit",
    "reject_option_apply",
    "reject_option_tune",
    "rule_from_json",
    "rule_to_json",
]

import dataclasses
import logging
import math
from collections.abc import Sequence

import numpy as np
import pydantic
from scipy.special import expit

from .errors import EmptyGroupClass, EmptyValidation, InfeasibleTarget, MetricError, UnknownGroup
from .fairmetrics import ScoreSet, signed_statistic
from .profit import CostModel, expected_profit, operating_cutoff

_LOG = logging.getLogger(__name__)

POSTPROC_FORMAT_VERSION = 1


@dataclasses.dataclass(frozen=True)
class CriticalRegion:
    """Band of uncertain scores ``[1 - theta, theta]``."""

    theta: float

    def __post_init__(self) -> None:
        if not 0.5 < self.theta < 1.0:
            raise ValueError(f"theta {self.theta} not in (0.5, 1)")

    @property
    def band(self) -> tuple[float, float]:
        return 1.0 - self.theta, self.theta

    def contains(self, scores: np.ndarray) -> np.ndarray:
        """Return a mask of scores with ``max(s, 1 - s) <= theta``."""
        return np.maximum(scores, 1.0 - scores) <= self.theta


def reject_option_apply(s: ScoreSet, theta: float) -> ScoreSet:
    """Overwrite scores inside the critical region in favor of group 1.

    Parameters
    ----------
    s : `ScoreSet`
        Scores to adjust.
    theta : `float`
        Region half width, in (0.5, 1).

    Returns
    -------
    adjusted : `ScoreSet`
        In-region scores become 1 for the unprivileged group and 0 for the
        privileged group; other scores are unchanged.
    """
    inside = CriticalRegion(theta).contains(s.scores)
    scores = s.scores.copy()
    scores[inside] = (s.sensitive[inside] == 1).astype(np.float64)
    return s.with_scores(scores)


@dataclasses.dataclass(frozen=True)
class RejectOptionFit:
    """Outcome of reject option tuning."""

    theta: float
    satisfied: bool
    """False when no grid value met the bound and the closest was taken."""
    statistic: float | None
    profit: float
    margin: float | None = None
    """Statistic level whose nearest grid value was selected, if any."""


def _distance(value: float, bound: tuple[float, float]) -> float:
    low, high = bound
    if value < low:
        return low - value
    if value > high:
        return value - high
    return 0.0


def reject_option_tune(
    validation: ScoreSet,
    bound: tuple[float, float],
    criterion: str,
    cm: CostModel,
    n_thetas: int = 100,
    tau: float | None = None,
    n_margins: int | None = None,
) -> RejectOptionFit:
    """Select the critical region by grid search on validation scores.

    The grid is ``0.5 + 0.5 * j / (n_thetas + 1)`` for ``j = 1..n_thetas``.
    Among values whose signed statistic after adjustment lies inside
    ``bound`` the most profitable one wins, smallest ``theta`` on ties.
    Without a feasible value the one closest to the bound is returned with
    ``satisfied`` false.

    With ``n_margins`` the scan runs over (theta, margin) pairs: margins are
    ``n_margins`` equally spaced statistic levels spanning ``bound`` (its
    midpoint if one) and each margin keeps the feasible grid value whose
    statistic is nearest to it.  Profit then decides among the kept
    values.

    Parameters
    ----------
    validation : `ScoreSet`
        Validation scores with labels.
    bound : `tuple` [`float`, `float`]
        Interval ``(low, high)`` for the signed statistic.
    criterion : `str`
        Fairness criterion of the statistic.
    cm : `CostModel`
        Profit parameters.
    n_thetas : `int`, optional
        Grid size.
    tau : `float`, optional
        Cutoff of the statistic; defaults to `operating_cutoff`.
    n_margins : `int`, optional
        Number of statistic levels scanned with ``theta``; every grid value
        is a candidate if `None`.

    Returns
    -------
    fit : `RejectOptionFit`
        Selected region.

    Raises
    ------
    EmptyValidation
        Raised if ``validation`` is empty.
    """
    if len(validation) == 0:
        raise EmptyValidation("Reject option tuning needs validation scores")
    if bound[0] > bound[1]:
        raise ValueError(f"Empty fairness bound {bound}")
    if n_margins is not None and n_margins < 1:
        raise ValueError(f"Number of margins {n_margins} must be at least 1")
    cutoff = operating_cutoff(cm) if tau is None else tau
    grid: list[RejectOptionFit] = []
    for j in range(1, n_thetas + 1):
        theta = 0.5 + 0.5 * j / (n_thetas + 1)
        adjusted = reject_option_apply(validation, theta)
        try:
            statistic: float | None = signed_statistic(adjusted, cutoff, criterion)
        except MetricError:
            statistic = None
        profit = expected_profit(adjusted, cm).value
        grid.append(RejectOptionFit(theta=theta, satisfied=True, statistic=statistic, profit=profit))

    candidates = grid
    if n_margins is not None:
        if n_margins == 1:
            margins = [(bound[0] + bound[1]) / 2.0]
        else:
            margins = [float(m) for m in np.linspace(bound[0], bound[1], n_margins)]
        feasible = [
            (fit.statistic, fit)
            for fit in grid
            if fit.statistic is not None and _distance(fit.statistic, bound) == 0.0
        ]
        kept: dict[float, RejectOptionFit] = {}
        for margin in margins:
            if not feasible:
                break
            # Nearest statistic, then higher profit, then smaller theta.
            _, nearest = min(
                feasible, key=lambda item: (abs(item[0] - margin), -item[1].profit, item[1].theta)
            )
            kept.setdefault(nearest.theta, dataclasses.replace(nearest, margin=margin))
        candidates = sorted(kept.values(), key=lambda fit: fit.theta)

    best: RejectOptionFit | None = None
    for candidate in candidates:
        if candidate.statistic is not None and _distance(candidate.statistic, bound) == 0.0:
            if best is None or candidate.profit > best.profit:
                best = candidate
    closest: tuple[float, RejectOptionFit] | None = None
    for candidate in grid:
        distance = math.inf if candidate.statistic is None else _distance(candidate.statistic, bound)
        if distance > 0.0 and (closest is None or distance < closest[0]):
            closest = (distance, candidate)
    if best is not None:
        return best
    assert closest is not None
    _LOG.warning(
        "No critical region meets %s bound %s, closest theta %.4f has statistic %s",
        criterion,
        bound,
        closest[1].theta,
        closest[1].statistic,
    )
    return dataclasses.replace(closest[1], satisfied=False)


@dataclasses.dataclass(frozen=True)
class GroupRoc:
    """Upper ROC hull of one group.

    Vertices run from (0, 0) to (1, 1); ``thresholds[i]`` realizes vertex
    ``i`` by accepting scores above it.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def height(self, x: np.ndarray | float) -> np.ndarray:
        """Return the hull TPR at the given FPR values."""
        return np.interp(x, self.fpr, self.tpr)


def _cross(o: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def group_roc(scores: np.ndarray, labels: np.ndarray) -> GroupRoc:
    """Return the upper convex hull of a group's ROC curve.

    Raises
    ------
    EmptyGroupClass
        Raised if the group lacks positives or negatives.
    """
    positive = labels == 1
    n1 = int(np.count_nonzero(positive))
    n0 = len(labels) - n1
    if n1 == 0 or n0 == 0:
        raise EmptyGroupClass("ROC needs positive and negative instances")
    thresholds = np.unique(np.concatenate([scores, [-1.0, 1.0]]))[::-1]
    points = [
        (np.count_nonzero(scores[~positive] > t) / n0, np.count_nonzero(scores[positive] > t) / n1, t)
        for t in thresholds
    ]
    hull: list[tuple[float, float, float]] = []
    for point in points:
        while len(hull) >= 2 and _cross(hull[-2][:2], hull[-1][:2], point[:2]) >= 0.0:
            hull.pop()
        hull.append(point)
    # Keep the highest vertex of a vertical run so FPR is strictly increasing.
    vertices: list[tuple[float, float, float]] = []
    for vertex in hull:
        if vertices and vertex[0] == vertices[-1][0]:
            if vertex[1] > vertices[-1][1]:
                vertices[-1] = vertex
        else:
            vertices.append(vertex)
    fpr, tpr, cut = (np.array(values) for values in zip(*vertices))
    return GroupRoc(fpr=fpr, tpr=tpr, thresholds=cut)


class _RuleModel(pydantic.BaseModel):
    lower: str
    upper: str
    mixing: str
    ignore_probability: str = (0.0).hex()
    constant_rate: str = (0.0).hex()


class _RuleFile(pydantic.BaseModel):
    format: str = "fairscore-equalized-odds"
    version: int = POSTPROC_FORMAT_VERSION
    seed: int
    groups: dict[str, _RuleModel]
    target_fpr: str
    target_tpr: str


@dataclasses.dataclass(frozen=True)
class GroupThresholds:
    """Randomized cutoff rule of one group.

    Scores above ``upper`` are accepted, scores not above ``lower`` are
    rejected and scores in between are accepted with probability
    ``mixing``.  With probability ``ignore_probability`` the score is
    ignored and the instance accepted with probability ``constant_rate``.
    """

    lower: float
    upper: float
    mixing: float
    ignore_probability: float = 0.0
    constant_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError(f"Lower cutoff {self.lower} above upper cutoff {self.upper}")
        for name in ("mixing", "ignore_probability", "constant_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value} not in [0, 1]")

    def probabilities(self, scores: np.ndarray) -> np.ndarray:
        """Return the acceptance probability of every score."""
        threshold = np.where(scores > self.upper, 1.0, np.where(scores > self.lower, self.mixing, 0.0))
        return (1.0 - self.ignore_probability) * threshold + self.ignore_probability * self.constant_rate


@dataclasses.dataclass(frozen=True)
class GroupDecisionRule:
    """Group-specific randomized cutoffs equalizing FPR and TPR."""

    groups: dict[int, GroupThresholds]
    seed: int = 0
    target_fpr: float = 0.0
    target_tpr: float = 0.0


def _realize(roc: GroupRoc, x: float, y: float) -> GroupThresholds:
    """Build thresholds of one group reaching the operating point (x, y)."""
    i = int(np.searchsorted(roc.fpr, x, side="right")) - 1
    i = min(max(i, 0), len(roc.fpr) - 1)
    if roc.fpr[i] == x or i == len(roc.fpr) - 1:
        upper = lower = float(roc.thresholds[i])
        mixing = 0.0
    else:
        upper = float(roc.thresholds[i])
        lower = float(roc.thresholds[i + 1])
        mixing = float((x - roc.fpr[i]) / (roc.fpr[i + 1] - roc.fpr[i]))
    height = float(roc.height(x))
    ignore = 0.0
    if height > x and y < height:
        ignore = float(np.clip((height - y) / (height - x), 0.0, 1.0))
    return GroupThresholds(
        lower=lower, upper=upper, mixing=mixing, ignore_probability=ignore, constant_rate=float(x)
    )


def _hull_crossings(rocs: Sequence[GroupRoc]) -> list[float]:
    xs = np.unique(np.concatenate([roc.fpr for roc in rocs]))
    gap = rocs[0].height(xs) - rocs[1].height(xs)
    crossings = []
    for left in range(len(xs) - 1):
        if gap[left] * gap[left + 1] < 0.0:
            # Both hulls are linear between neighbouring vertices.
            t = gap[left] / (gap[left] - gap[left + 1])
            crossings.append(float(xs[left] + t * (xs[left + 1] - xs[left])))
    return crossings


def equalized_odds_fit(
    validation: ScoreSet, cm: CostModel, epsilon: float = 0.02, grid_size: int = 100, seed: int = 0
) -> GroupDecisionRule:
    """Fit group-specific randomized cutoffs with equal FPR and TPR.

    A common operating point ``(fpr, tpr)`` is chosen below both group ROC
    hulls and on or above the diagonal, minimizing
    ``E[B] * pi0 * fpr + C * pi1 * (1 - tpr)``.  Candidates are a regular
    grid plus the hull vertices and crossings, ties broken
    lexicographically.

    Parameters
    ----------
    validation : `ScoreSet`
        Validation scores with labels.
    cm : `CostModel`
        Supplies the misclassification losses.
    epsilon : `float`, optional
        Largest allowed group gap of the expected FPR and FNR.
    grid_size : `int`, optional
        Number of grid steps per axis.
    seed : `int`, optional
        Seed stored with the rule for `equalized_odds_apply`.

    Returns
    -------
    rule : `GroupDecisionRule`
        Fitted rule.

    Raises
    ------
    EmptyValidation
        Raised if ``validation`` is empty.
    EmptyGroupClass
        Raised if a group lacks positives or negatives.
    InfeasibleTarget
        Raised if the realized rates differ by more than ``epsilon``.
    """
    if len(validation) == 0:
        raise EmptyValidation("Equalized odds needs validation scores")
    rocs = []
    for group in (0, 1):
        member = validation.sensitive == group
        if not member.any():
            raise EmptyGroupClass(f"Sensitive group {group} is empty")
        rocs.append(group_roc(validation.scores[member], validation.labels[member]))

    grid = np.linspace(0.0, 1.0, grid_size + 1)
    xs = np.unique(np.concatenate([grid, rocs[0].fpr, rocs[1].fpr, _hull_crossings(rocs)]))
    candidates_x = []
    candidates_y = []
    for x in xs:
        top = float(min(roc.height(x) for roc in rocs))
        if top < x:
            continue
        ys = np.concatenate([grid[(grid >= x) & (grid <= top)], [top]])
        candidates_x.extend([x] * len(ys))
        candidates_y.extend(ys)
    if not candidates_x:
        raise InfeasibleTarget("Group ROC hulls have no common operating point")
    cx = np.array(candidates_x)
    cy = np.array(candidates_y)
    pi1 = float(np.mean(validation.labels == 1))
    cost = cm.expected_loss * (1.0 - pi1) * cx + cm.roi * pi1 * (1.0 - cy)
    order = np.lexsort((cy, cx))
    best = order[int(np.argmin(cost[order]))]
    x, y = float(cx[best]), float(cy[best])

    rule = GroupDecisionRule(
        groups={group: _realize(roc, x, y) for group, roc in zip((0, 1), rocs)},
        seed=seed,
        target_fpr=x,
        target_tpr=y,
    )
    rates = []
    for group in (0, 1):
        member = validation.sensitive == group
        p = rule.groups[group].probabilities(validation.scores[member])
        labels = validation.labels[member]
        rates.append((p[labels == 0].mean(), 1.0 - p[labels == 1].mean()))
    gap_fpr = abs(rates[0][0] - rates[1][0])
    gap_fnr = abs(rates[0][1] - rates[1][1])
    if gap_fpr > epsilon or gap_fnr > epsilon:
        raise InfeasibleTarget(f"Realized rate gaps FPR {gap_fpr:.4g}, FNR {gap_fnr:.4g} exceed {epsilon}")
    _LOG.debug("Equalized odds target FPR %.4f TPR %.4f", x, y)
    return rule


def equalized_odds_probabilities(rule: GroupDecisionRule, s: ScoreSet) -> np.ndarray:
    """Return every instance's acceptance probability under a rule.

    Raises
    ------
    UnknownGroup
        Raised if the data has a group without thresholds.
    """
    probabilities = np.zeros(len(s))
    for group in np.unique(s.sensitive):
        if int(group) not in rule.groups:
            raise UnknownGroup(f"No thresholds for sensitive group {group}")
        member = s.sensitive == group
        probabilities[member] = rule.groups[int(group)].probabilities(s.scores[member])
    return probabilities


def equalized_odds_apply(rule: GroupDecisionRule, s: ScoreSet, seed: int | None = None) -> np.ndarray:
    """Draw accept (1) or reject (0) decisions from a rule.

    Parameters
    ----------
    rule : `GroupDecisionRule`
        Fitted rule.
    s : `ScoreSet`
        Scores to decide on.
    seed : `int`, optional
        Seed of the coin flips; defaults to the rule's seed.

    Returns
    -------
    decisions : `numpy.ndarray`
        Integer decisions.

    Raises
    ------
    UnknownGroup
        Raised if the data has a group without thresholds.
    """
    probabilities = equalized_odds_probabilities(rule, s)
    rng = np.random.default_rng(rule.seed if seed is None else seed)
    return (rng.random(len(s)) < probabilities).astype(np.int64)


def rule_to_json(rule: GroupDecisionRule) -> str:
    """Serialize a decision rule with hexadecimal floats."""
    return _RuleFile(
        seed=rule.seed,
        groups={
            str(group): _RuleModel(
                lower=t.lower.hex(),
                upper=t.upper.hex(),
                mixing=t.mixing.hex(),
                ignore_probability=t.ignore_probability.hex(),
                constant_rate=t.constant_rate.hex(),
            )
            for group, t in sorted(rule.groups.items())
        },
        target_fpr=rule.target_fpr.hex(),
        target_tpr=rule.target_tpr.hex(),
    ).model_dump_json(indent=2)


def rule_from_json(text: str) -> GroupDecisionRule:
    """Deserialize a rule written by `rule_to_json`."""
    document = _RuleFile.model_validate_json(text)
    if document.version != POSTPROC_FORMAT_VERSION:
        raise ValueError(f"Unsupported decision rule version {document.version}")
    return GroupDecisionRule(
        groups={
            int(group): GroupThresholds(
                lower=float.fromhex(t.lower),
                upper=float.fromhex(t.upper),
                mixing=float.fromhex(t.mixing),
                ignore_probability=float.fromhex(t.ignore_probability),
                constant_rate=float.fromhex(t.constant_rate),
            )
            for group, t in document.groups.items()
        },
        seed=document.seed,
        target_fpr=float.fromhex(document.target_fpr),
        target_tpr=float.fromhex(document.target_tpr),
    )


@dataclasses.dataclass(frozen=True)
class CalibrationMap:
    """Per-group sigmoid ``1 / (1 + exp(a * s + b))``."""

    parameters: dict[int, tuple[float, float]]

    def __post_init__(self) -> None:
        for group, (a, b) in self.parameters.items():
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError(f"Calibration of group {group} is not finite: {(a, b)}")


def _platt_loss(params: np.ndarray, scores: np.ndarray, labels: np.ndarray) -> float:
    f = params[0] * scores + params[1]
    return float(np.sum(np.logaddexp(0.0, f) - (1.0 - labels) * f))


def _platt_group(
    scores: np.ndarray, labels: np.ndarray, max_iterations: int, ridge: float
) -> tuple[float, float]:
    n1 = float(np.count_nonzero(labels == 1))
    n0 = len(labels) - n1
    params = np.array([0.0, math.log((n0 + 1.0) / (n1 + 1.0))])
    y = labels.astype(np.float64)
    loss = _platt_loss(params, scores, y)
    for _ in range(max_iterations):
        p = expit(-(params[0] * scores + params[1]))
        residual = y - p
        gradient = np.array([np.dot(residual, scores), residual.sum()])
        if np.max(np.abs(gradient)) < 1e-10:
            break
        curvature = p * (1.0 - p)
        hessian = np.array(
            [
                [np.dot(curvature, scores * scores) + ridge, np.dot(curvature, scores)],
                [np.dot(curvature, scores), curvature.sum() + ridge],
            ]
        )
        direction = -np.linalg.solve(hessian, gradient)
        step = 1.0
        while step > 1e-10:
            trial = params + step * direction
            trial_loss = _platt_loss(trial, scores, y)
            if trial_loss < loss + 1e-4 * step * np.dot(gradient, direction):
                break
            step /= 2.0
        else:
            break
        params, loss = trial, trial_loss
    return float(params[0]), float(params[1])


def platt_fit(validation: ScoreSet, max_iterations: int = 100, ridge: float = 1e-6) -> CalibrationMap:
    """Fit a sigmoid per sensitive group by damped Newton iterations.

    Parameters
    ----------
    validation : `ScoreSet`
        Validation scores with labels.
    max_iterations : `int`, optional
        Newton iteration cap.
    ridge : `float`, optional
        Added to the Hessian diagonal.

    Returns
    -------
    mapping : `CalibrationMap`
        Parameters ``(a, b)`` per group.

    Raises
    ------
    EmptyValidation
        Raised if ``validation`` is empty.
    EmptyGroupClass
        Raised if a group lacks positives or negatives.
    """
    if len(validation) == 0:
        raise EmptyValidation("Platt scaling needs validation scores")
    parameters = {}
    for group in (0, 1):
        member = validation.sensitive == group
        labels = validation.labels[member]
        if not np.any(labels == 0) or not np.any(labels == 1):
            raise EmptyGroupClass(f"Sensitive group {group} lacks positive or negative instances")
        parameters[group] = _platt_group(validation.scores[member], labels, max_iterations, ridge)
    return CalibrationMap(parameters)


def platt_apply(mapping: CalibrationMap, s: ScoreSet) -> ScoreSet:
    """Replace scores by their group's calibrated values.

    Raises
    ------
    UnknownGroup
        Raised if the data has a group without parameters.
    """
    scores = np.empty(len(s))
    for group in np.unique(s.sensitive):
        if int(group) not in mapping.parameters:
            raise UnknownGroup(f"No calibration for sensitive group {group}")
        a, b = mapping.parameters[int(group)]
        member = s.sensitive == group
        scores[member] = expit(-(a * s.scores[member] + b))
    return s.with_scores(scores)


class _CalibrationFile(pydantic.BaseModel):
    format: str = "fairscore-calibration"
    version: int = POSTPROC_FORMAT_VERSION
    groups: dict[str, tuple[str, str]]


def calibration_to_json(mapping: CalibrationMap) -> str:
    """Serialize a calibration map with hexadecimal floats."""
    return _CalibrationFile(
        groups={str(group): (a.hex(), b.hex()) for group, (a, b) in sorted(mapping.parameters.items())}
    ).model_dump_json(indent=2)


def calibration_from_json(text: str) -> CalibrationMap:
    """Deserialize a map written by `calibration_to_json`."""
    document = _CalibrationFile.model_validate_json(text)
    if document.version != POSTPROC_FORMAT_VERSION:
        raise ValueError(f"Unsupported calibration version {document.version}")
    return CalibrationMap(
        {int(group): (float.fromhex(a), float.fromhex(b)) for group, (a, b) in document.groups.items()}
    )


def expected_calibration_error(
    scores: Sequence[float] | np.ndarray, labels: Sequence[int] | np.ndarray, n_bins: int = 10
) -> float:
    """Return the expected calibration error over equal-width bins."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if len(s) == 0:
        return 0.0
    bins = np.minimum((s * n_bins).astype(np.int64), n_bins - 1)
    error = 0.0
    for b in np.unique(bins):
        member = bins == b
        error += np.count_nonzero(member) * abs(y[member].mean() - s[member].mean())
    return float(error / len(s))
