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

"""In-processors training fair models directly."""

from __future__ import annotations

__all__ = [
    "AdversarialSpec",
    "AdversaryFit",
    "MetaFairFit",
    "MetaFairSpec",
    "PrejudiceSpec",
    "adversarial_predictor_gradient",
    "adversary_objective",
    "fairness_ratio",
    "fit_adversary",
    "meta_fair_objective",
    "prejudice_index",
    "prejudice_objective",
    "smoothed_group_statistics",
    "train_adversarial",
    "train_meta_fair",
    "train_prejudice_remover",
]

import dataclasses
import logging
from collections.abc import Sequence

import numpy as np
from scipy.special import expit, logit, xlogy

from .data import Dataset
from .errors import DegenerateFM, EmptyGroup
from .learners import (
    LearnerSpec,
    TrainedModel,
    TrainingDiagnostics,
    gradient_descent,
    logistic_model,
    logistic_objective,
    network_backprop,
    network_forward,
    network_model,
    prepare_training,
    run_network_epochs,
)
from .profit import CostModel, operating_cutoff

_LOG = logging.getLogger(__name__)

PREJUDICE_ETAS = (1.0, 5.0, 15.0, 30.0, 50.0, 70.0, 100.0, 150.0)
ADVERSARIAL_ALPHAS = (0.1, 0.01, 0.001)
META_FAIR_SIGMAS = (0.95, 0.90, 0.85, 0.80, 0.75, 0.70)

_EPS = 1e-12


def _group_masks(sensitive: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    masks = (sensitive == 0, sensitive == 1)
    for group, mask in enumerate(masks):
        if not mask.any():
            raise EmptyGroup(f"Sensitive group {group} is empty")
    return masks


def _mutual_information(means: Sequence[float], shares: Sequence[float]) -> float:
    p1 = sum(share * mean for share, mean in zip(shares, means))
    p0 = 1.0 - p1
    value = 0.0
    for share, mean in zip(shares, means):
        joint1 = share * mean
        joint0 = share * (1.0 - mean)
        if joint1 > 0.0:
            value += joint1 * np.log(joint1 / (p1 * share))
        if joint0 > 0.0:
            value += joint0 * np.log(joint0 / (p0 * share))
    return max(float(value), 0.0)


def prejudice_index(
    scores: Sequence[float] | np.ndarray,
    sensitive: Sequence[int] | np.ndarray,
    hard: bool = False,
    tau: float = 0.5,
) -> float:
    """Return the mutual information between decisions and the group.

    Parameters
    ----------
    scores : sequence of `float`
        Model scores.
    sensitive : sequence of `int`
        Sensitive attribute.
    hard : `bool`, optional
        Use hard decisions ``score > tau`` instead of the scores as soft
        acceptance probabilities.
    tau : `float`, optional
        Cutoff for hard decisions.

    Returns
    -------
    index : `float`
        Prejudice index in nats, non-negative.

    Raises
    ------
    EmptyGroup
        Raised if a sensitive group is empty.
    """
    s = np.asarray(scores, dtype=np.float64)
    a = np.asarray(sensitive)
    masks = _group_masks(a)
    values = (s > tau).astype(np.float64) if hard else s
    means = [float(values[mask].mean()) for mask in masks]
    shares = [float(mask.mean()) for mask in masks]
    return _mutual_information(means, shares)


def _soft_index_gradient(
    s: np.ndarray, masks: tuple[np.ndarray, np.ndarray], design: np.ndarray
) -> tuple[float, np.ndarray]:
    """Soft prejudice index of logistic scores and its parameter gradient."""
    shares = [float(mask.mean()) for mask in masks]
    means = [float(s[mask].mean()) for mask in masks]
    value = _mutual_information(means, shares)
    p1 = np.clip(sum(share * mean for share, mean in zip(shares, means)), _EPS, 1.0 - _EPS)
    slope = s * (1.0 - s)
    gradient = np.zeros(design.shape[1])
    for mask, share, mean in zip(masks, shares, means):
        d_mean = design[mask].T @ slope[mask] / np.count_nonzero(mask)
        gradient += share * (logit(np.clip(mean, _EPS, 1.0 - _EPS)) - logit(p1)) * d_mean
    return value, gradient


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


@dataclasses.dataclass(frozen=True)
class PrejudiceSpec:
    """Prejudice remover meta-parameters."""

    eta: float = 1.0
    learner: LearnerSpec = LearnerSpec(kind="logistic")

    def __post_init__(self) -> None:
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")


def prejudice_objective(
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    sensitive: np.ndarray,
    l2_decay: float,
    eta: float,
) -> tuple[float, np.ndarray]:
    """Return the logistic objective plus ``eta`` times the soft index.

    Parameters
    ----------
    theta : `numpy.ndarray`
        Coefficients followed by the intercept.
    X : `numpy.ndarray`
        Standardized features.
    y : `numpy.ndarray`
        Labels.
    w : `numpy.ndarray`
        Instance weights.
    sensitive : `numpy.ndarray`
        Sensitive attribute.
    l2_decay : `float`
        Logistic weight decay.
    eta : `float`
        Weight of the prejudice index.

    Returns
    -------
    value : `float`
        Objective value.
    gradient : `numpy.ndarray`
        Gradient with respect to ``theta``.
    """
    value, gradient = logistic_objective(theta, X, y, w, l2_decay)
    if eta:
        design = _with_intercept(X)
        index, index_gradient = _soft_index_gradient(expit(design @ theta), _group_masks(sensitive), design)
        value += eta * index
        gradient = gradient + eta * index_gradient
    return value, gradient


def train_prejudice_remover(ds: Dataset, spec: PrejudiceSpec) -> TrainedModel:
    """Train logistic regression regularized by the prejudice index.

    With ``eta = 0`` this is plain `~fairscore.learners.train_logistic`.

    Parameters
    ----------
    ds : `Dataset`
        Training data.
    spec : `PrejudiceSpec`
        Meta-parameters.

    Returns
    -------
    model : `TrainedModel`
        Logistic model.

    Raises
    ------
    OneClassOnly
        Raised if the training labels have one class.
    EmptyGroup
        Raised if a sensitive group is empty.
    """
    learner = spec.learner
    X, mean, scale = prepare_training(ds, learner)
    _group_masks(ds.sensitive)
    y = ds.labels.astype(np.float64)

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        return prejudice_objective(theta, X, y, ds.weights, ds.sensitive, learner.l2_decay, spec.eta)

    theta, diagnostics = gradient_descent(
        objective, np.zeros(ds.k + 1), learner.learning_rate, learner.max_iterations, learner.tolerance
    )
    return logistic_model(
        theta,
        mean,
        scale,
        diagnostics,
        learner.seed,
        "prejudice_remover",
        {"eta": spec.eta, "l2_decay": learner.l2_decay},
    )


@dataclasses.dataclass(frozen=True)
class AdversarialSpec:
    """Adversarial debiasing meta-parameters."""

    alpha: float = 0.1
    epochs: int = 50
    batch_size: int = 128
    hidden_size: int = 16
    learning_rate: float = 0.5
    adversary_learning_rate: float = 0.5
    decay: float = 0.0
    seed: int = 0

    def predictor_spec(self) -> LearnerSpec:
        """Return the network specification of the predictor."""
        return LearnerSpec(
            kind="network",
            l2_decay=self.decay,
            hidden_size=self.hidden_size,
            max_iterations=self.epochs,
            learning_rate=self.learning_rate,
            seed=self.seed,
            batch_size=self.batch_size,
        )


def _adversary_inputs(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return np.column_stack([scores, labels, np.ones(len(scores))])


def adversary_objective(
    c: np.ndarray, scores: np.ndarray, labels: np.ndarray, sensitive: np.ndarray, w: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Return the adversary log-loss of predicting the group from (score, label).

    Parameters
    ----------
    c : `numpy.ndarray`
        Adversary coefficients for score, label and intercept.
    scores : `numpy.ndarray`
        Predictor scores.
    labels : `numpy.ndarray`
        True labels.
    sensitive : `numpy.ndarray`
        Sensitive attribute to predict.
    w : `numpy.ndarray`
        Instance weights.

    Returns
    -------
    value : `float`
        Weighted mean log-loss.
    gradient : `numpy.ndarray`
        Gradient with respect to ``c``.
    score_gradient : `numpy.ndarray`
        Gradient with respect to every score.
    """
    inputs = _adversary_inputs(scores, labels)
    z = inputs @ c
    total = w.sum()
    value = np.dot(w, np.logaddexp(0.0, z) - sensitive * z) / total
    residual = w * (expit(z) - sensitive) / total
    return float(value), inputs.T @ residual, residual * c[0]


def adversarial_predictor_gradient(
    theta: np.ndarray,
    c: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    sensitive: np.ndarray,
    w: np.ndarray,
    hidden_size: int,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Return the adversary loss and its gradients on a batch.

    Returns
    -------
    value : `float`
        Adversary loss.
    theta_gradient : `numpy.ndarray`
        Gradient of the adversary loss with respect to the predictor.
    c_gradient : `numpy.ndarray`
        Gradient with respect to the adversary coefficients.
    """
    hidden, z = network_forward(theta, X, hidden_size)
    scores = expit(z)
    value, c_gradient, score_gradient = adversary_objective(c, scores, y, sensitive, w)
    residual = score_gradient * scores * (1.0 - scores)
    return value, network_backprop(theta, X, hidden, residual, hidden_size), c_gradient


def train_adversarial(ds: Dataset, spec: AdversarialSpec) -> TrainedModel:
    """Train a network predictor against a logistic adversary.

    The adversary predicts the sensitive attribute from the predictor's
    score and the true label.  For every mini-batch the predictor follows
    ``grad L_P - alpha * grad L_A`` and the adversary then takes a step
    on its own loss.  With ``alpha = 0`` the predictor is trained exactly
    as `~fairscore.learners.train_network` would with the same seed.

    Parameters
    ----------
    ds : `Dataset`
        Training data.
    spec : `AdversarialSpec`
        Meta-parameters.

    Returns
    -------
    model : `TrainedModel`
        The predictor network.

    Raises
    ------
    NonFiniteLoss
        Raised if the predictor objective becomes non-finite.
    """
    learner = spec.predictor_spec()
    X, mean, scale = prepare_training(ds, learner)
    y = ds.labels.astype(np.float64)
    a = ds.sensitive.astype(np.float64)
    adversary = np.zeros(3)

    def hook(theta: np.ndarray, batch: np.ndarray, gradient: np.ndarray) -> np.ndarray:
        nonlocal adversary
        _, theta_gradient, c_gradient = adversarial_predictor_gradient(
            theta, adversary, X[batch], y[batch], a[batch], ds.weights[batch], learner.hidden_size
        )
        adversary = adversary - spec.adversary_learning_rate * c_gradient
        if spec.alpha:
            return gradient - spec.alpha * theta_gradient
        return gradient

    rng = np.random.default_rng(learner.seed)
    theta, diagnostics = run_network_epochs(X, y, ds.weights, learner, rng, learner.max_iterations, hook)
    _LOG.debug("Adversarial training finished with adversary coefficients %s", adversary)
    return network_model(
        theta,
        ds.k,
        mean,
        scale,
        diagnostics,
        learner,
        "adversarial",
        {"alpha": spec.alpha, "hidden_size": spec.hidden_size},
    )


@dataclasses.dataclass(frozen=True)
class AdversaryFit:
    """Adversary trained on fixed scores."""

    coefficients: np.ndarray
    loss_trace: tuple[float, ...]
    probabilities: np.ndarray


def fit_adversary(
    scores: Sequence[float] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    sensitive: Sequence[int] | np.ndarray,
    epochs: int = 50,
    learning_rate: float = 0.5,
    batch_size: int = 128,
    seed: int = 0,
) -> AdversaryFit:
    """Train only the adversary on frozen predictor scores.

    Measures how much group information the scores carry.

    Parameters
    ----------
    scores : sequence of `float`
        Frozen predictor scores.
    labels : sequence of `int`
        True labels.
    sensitive : sequence of `int`
        Sensitive attribute.
    epochs : `int`, optional
        Passes over the data.
    learning_rate : `float`, optional
        Step size.
    batch_size : `int`, optional
        Mini-batch size.
    seed : `int`, optional
        Shuffle seed.

    Returns
    -------
    fit : `AdversaryFit`
        Coefficients, full-data loss after every epoch (first entry before
        training) and fitted group probabilities.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    a = np.asarray(sensitive, dtype=np.float64)
    w = np.ones(len(s))
    rng = np.random.default_rng(seed)
    c = np.zeros(3)
    trace = [adversary_objective(c, s, y, a, w)[0]]
    for _ in range(epochs):
        order = rng.permutation(len(s))
        for start in range(0, len(s), batch_size):
            batch = order[start : start + batch_size]
            _, gradient, _ = adversary_objective(c, s[batch], y[batch], a[batch], w[batch])
            c = c - learning_rate * gradient
        trace.append(adversary_objective(c, s, y, a, w)[0])
    return AdversaryFit(
        coefficients=c, loss_trace=tuple(trace), probabilities=expit(_adversary_inputs(s, y) @ c)
    )


@dataclasses.dataclass(frozen=True)
class MetaFairSpec:
    """Meta-fair penalty trainer meta-parameters."""

    criterion: str = "independence"
    sigma: float = 0.8
    temperature: float = 0.05
    penalty_weight: float = 1.0
    stages: int = 5
    cutoff: float = dataclasses.field(default_factory=lambda: operating_cutoff(CostModel()))
    learner: LearnerSpec = LearnerSpec(kind="logistic")

    def __post_init__(self) -> None:
        if self.criterion not in ("independence", "separation", "sufficiency"):
            raise ValueError(f"Unknown fairness criterion {self.criterion!r}")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma {self.sigma} not in [0, 1]")
        if self.temperature <= 0 or self.stages < 1 or self.penalty_weight <= 0:
            raise ValueError(f"Invalid meta-fair specification {self}")


def smoothed_group_statistics(
    scores: np.ndarray,
    labels: np.ndarray,
    sensitive: np.ndarray,
    criterion: str,
    tau: float,
    temperature: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Return smoothed per-group fairness statistics and their derivatives.

    Acceptance indicators are replaced by ``expit((s - tau) / temperature)``.

    Parameters
    ----------
    scores : `numpy.ndarray`
        Model scores.
    labels : `numpy.ndarray`
        Labels.
    sensitive : `numpy.ndarray`
        Sensitive attribute.
    criterion : `str`
        ``independence`` (acceptance rate), ``separation`` (one minus the
        mean of FPR and FNR) or ``sufficiency`` (PPV).
    tau : `float`
        Cutoff.
    temperature : `float`
        Smoothing temperature on the score scale.

    Returns
    -------
    statistics : `numpy.ndarray`
        Statistic of group 0 and group 1.
    derivatives : `numpy.ndarray`
        Array of shape (2, n), derivative of each statistic with respect
        to every score.

    Raises
    ------
    DegenerateFM
        Raised if a statistic's denominator vanishes.
    """
    soft = expit((scores - tau) / temperature)
    slope = soft * (1.0 - soft) / temperature
    statistics = np.zeros(2)
    derivatives = np.zeros((2, len(scores)))
    for group in (0, 1):
        member = sensitive == group
        if not member.any():
            raise DegenerateFM(f"Sensitive group {group} is empty")
        if criterion == "independence":
            statistics[group] = soft[member].mean()
            derivatives[group, member] = slope[member] / np.count_nonzero(member)
        elif criterion == "separation":
            negatives = member & (labels == 0)
            positives = member & (labels == 1)
            n_neg, n_pos = np.count_nonzero(negatives), np.count_nonzero(positives)
            if n_neg == 0 or n_pos == 0:
                raise DegenerateFM(f"Sensitive group {group} lacks a class")
            fpr = soft[negatives].sum() / n_neg
            fnr = (1.0 - soft[positives]).sum() / n_pos
            statistics[group] = 1.0 - 0.5 * (fpr + fnr)
            derivatives[group, negatives] = -0.5 * slope[negatives] / n_neg
            derivatives[group, positives] = 0.5 * slope[positives] / n_pos
        elif criterion == "sufficiency":
            accepted = soft[member].sum()
            if accepted < _EPS:
                raise DegenerateFM(f"Sensitive group {group} has no soft acceptances")
            hits = (soft[member] * labels[member]).sum()
            statistics[group] = hits / accepted
            derivatives[group, member] = slope[member] * (labels[member] * accepted - hits) / accepted**2
        else:
            raise ValueError(f"Unknown fairness criterion {criterion!r}")
    return statistics, derivatives


def fairness_ratio(
    scores: Sequence[float] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    sensitive: Sequence[int] | np.ndarray,
    criterion: str,
    tau: float,
) -> float:
    """Return min/max of the hard group statistics of a criterion.

    Equal zero statistics give 1; an undefined statistic gives 0.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    a = np.asarray(sensitive)
    accepted = s > tau
    values = []
    for group in (0, 1):
        member = a == group
        if criterion == "independence":
            values.append(accepted[member].mean() if member.any() else np.nan)
        elif criterion == "separation":
            neg, pos = member & (y == 0), member & (y == 1)
            if not neg.any() or not pos.any():
                values.append(np.nan)
            else:
                values.append(1.0 - 0.5 * (accepted[neg].mean() + (~accepted[pos]).mean()))
        else:
            n_accepted = np.count_nonzero(accepted & member)
            hits = np.count_nonzero(accepted & member & (y == 1))
            values.append(hits / n_accepted if n_accepted else np.nan)
    low, high = min(values), max(values)
    if np.isnan(low) or np.isnan(high):
        return 0.0
    if high == 0.0:
        return 1.0
    return float(low / high)


def meta_fair_objective(
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    sensitive: np.ndarray,
    spec: MetaFairSpec,
    mu: float,
) -> tuple[float, np.ndarray]:
    """Return the logistic objective plus the quadratic fairness penalty.

    The penalty is ``mu * max(0, sigma - ratio)^2`` with ``ratio`` the
    min/max ratio of the smoothed group statistics.

    Returns
    -------
    value : `float`
        Objective value.
    gradient : `numpy.ndarray`
        Gradient with respect to ``theta``.

    Raises
    ------
    DegenerateFM
        Raised if a smoothed statistic is undefined or both vanish.
    """
    value, gradient = logistic_objective(theta, X, y, w, spec.learner.l2_decay)
    design = _with_intercept(X)
    scores = expit(design @ theta)
    statistics, derivatives = smoothed_group_statistics(
        scores, y, sensitive, spec.criterion, spec.cutoff, spec.temperature
    )
    low, high = (0, 1) if statistics[0] <= statistics[1] else (1, 0)
    if statistics[high] <= 0.0:
        raise DegenerateFM("Both smoothed fairness statistics vanish")
    ratio = statistics[low] / statistics[high]
    shortfall = max(0.0, spec.sigma - ratio)
    if shortfall > 0.0:
        top = statistics[high]
        d_ratio = derivatives[low] / top - statistics[low] * derivatives[high] / top**2
        d_theta = design.T @ (d_ratio * scores * (1.0 - scores))
        value += mu * shortfall**2
        gradient = gradient - 2.0 * mu * shortfall * d_theta
    return value, gradient


@dataclasses.dataclass(frozen=True)
class MetaFairFit:
    """Meta-fair model with the hard ratio reached after every stage."""

    model: TrainedModel
    hard_ratio: float
    stage_ratios: tuple[float, ...]


def train_meta_fair(ds: Dataset, spec: MetaFairSpec) -> MetaFairFit:
    """Train logistic regression under a fairness-ratio penalty.

    The penalty weight starts at ``spec.penalty_weight`` and doubles for
    every stage, warm-starting from the previous stage.  A stage whose hard
    ratio on the training data is below the best so far is discarded, so
    the reported ratios never decrease.  With ``sigma = 0`` the penalty is
    inactive and training equals plain logistic regression.

    Parameters
    ----------
    ds : `Dataset`
        Training data.
    spec : `MetaFairSpec`
        Meta-parameters.

    Returns
    -------
    fit : `MetaFairFit`
        Final model and achieved hard ratios.

    Raises
    ------
    DegenerateFM
        Raised if a smoothed statistic is undefined.
    """
    learner = spec.learner
    X, mean, scale = prepare_training(ds, learner)
    y = ds.labels.astype(np.float64)
    design = _with_intercept(X)

    def hard_ratio(theta: np.ndarray) -> float:
        return fairness_ratio(expit(design @ theta), ds.labels, ds.sensitive, spec.criterion, spec.cutoff)

    def descend(theta: np.ndarray, mu: float | None) -> tuple[np.ndarray, TrainingDiagnostics]:
        def objective(t: np.ndarray) -> tuple[float, np.ndarray]:
            if mu is None:
                return logistic_objective(t, X, y, ds.weights, learner.l2_decay)
            return meta_fair_objective(t, X, y, ds.weights, ds.sensitive, spec, mu)

        return gradient_descent(
            objective, theta, learner.learning_rate, learner.max_iterations, learner.tolerance
        )

    theta, diagnostics = descend(np.zeros(ds.k + 1), None)
    best = hard_ratio(theta)
    ratios = [best]
    if spec.sigma > 0.0:
        ratios = []
        for stage in range(spec.stages):
            mu = spec.penalty_weight * 2.0**stage
            candidate, candidate_diagnostics = descend(theta, mu)
            ratio = hard_ratio(candidate)
            if not ratios or ratio >= best:
                theta, diagnostics, best = candidate, candidate_diagnostics, ratio
            else:
                _LOG.debug("Stage %d lowered the ratio to %g, keeping the previous model", stage, ratio)
            ratios.append(best)
    model = logistic_model(
        theta,
        mean,
        scale,
        diagnostics,
        learner.seed,
        "meta_fair",
        {"criterion": spec.criterion, "sigma": spec.sigma},
    )
    return MetaFairFit(model=model, hard_ratio=best, stage_ratios=tuple(ratios))
