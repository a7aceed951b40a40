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
    "BenchCell",
    "CellExecutor",
    "PreparedDataset",
    "SingleCellExecutor",
    "evaluate_scores",
    "score_dataset",
    "tune_learner",
]

import dataclasses
import time
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from typing import Any, TypeVar

import numpy as np
from lsst.utils.logging import getLogger
from lsst.utils.timer import time_this

from .data import Dataset, FoldPlan, SplitPlan, make_folds
from .errors import FairScoreError, MetricError
from .experimentConfig import POST_PROCESSORS, PRE_PROCESSORS, ExperimentConfig
from .fairmetrics import ScoreSet, auc, independence, separation, sufficiency
from .inproc import (
    AdversarialSpec,
    MetaFairSpec,
    PrejudiceSpec,
    train_adversarial,
    train_meta_fair,
    train_prejudice_remover,
)
from .learners import LearnerSpec, TrainedModel, predict, train
from .postproc import (
    equalized_odds_apply,
    equalized_odds_fit,
    platt_apply,
    platt_fit,
    reject_option_apply,
    reject_option_tune,
)
from .preproc import di_remove, resample, reweigh
from .profit import CostModel, expected_profit, operating_cutoff, profit_per_eur
from .reports import CellReport, ExecutionStatus, ResultRecord

_LOG = getLogger(__name__)

_C = TypeVar("_C")
_R = TypeVar("_R")

BASELINE = "unconstrained"
SELF_LEARNER = "self"


@dataclasses.dataclass(frozen=True)
class PreparedDataset:
    """Dataset with its train/test split and training folds."""

    dataset: Dataset
    split: SplitPlan
    folds: FoldPlan

    def fold_data(self, fold: int) -> tuple[Dataset, Dataset, Dataset]:
        """Return (training, validation, test) data of a fold."""
        train_ds = self.dataset.subset(self.split.train_indices)
        fit, held_out = self.folds.split(fold)
        return train_ds.subset(fit), train_ds.subset(held_out), self.dataset.subset(self.split.test_indices)


@dataclasses.dataclass(frozen=True)
class BenchCell:
    """Unit of benchmark work.

    A learner cell trains the unconstrained model of one learner and
    applies every pre- and post-processor to it; an in-processor cell
    trains one in-processor.
    """

    dataset: str
    fold: int
    learner: str
    """Learner name, or ``self`` for an in-processor cell."""

    processors: tuple[str, ...]
    """Processor names producing records, in record order."""

    @property
    def label(self) -> str:
        name = self.processors[0] if self.learner == SELF_LEARNER else self.learner
        return f"{self.dataset}/fold{self.fold}/{name}"

    def failed_records(self, exception: BaseException, seed: int) -> list[ResultRecord]:
        """Return a failed record for every processor of the cell."""
        return [
            ResultRecord.from_exception(exception, self.dataset, processor, self.learner, self.fold, seed)
            for processor in self.processors
        ]


class CellExecutor(ABC):
    """Class which abstracts execution of a single benchmark cell.

    Execution always happens in-process; multi-process scheduling is done
    by `~fairscore.mpCellExecutor.MPCellExecutor`.
    """

    @abstractmethod
    def execute(self, cell: BenchCell) -> tuple[list[ResultRecord], CellReport]:
        """Execute single cell.

        Parameters
        ----------
        cell : `BenchCell`
            Cell to execute.

        Returns
        -------
        records : `list` [`ResultRecord`]
            One record per processor of the cell, failed records included.
        report : `CellReport`
            Structure describing the status of the execution.

        Notes
        -----
        Errors of individual processors are recorded in their records;
        other exceptions propagate to the caller.
        """
        raise NotImplementedError()


def score_dataset(model: TrainedModel, ds: Dataset) -> ScoreSet:
    """Return a model's scores on a dataset."""
    return ScoreSet(predict(model, ds.features), ds.labels, ds.sensitive)


def evaluate_scores(
    s: ScoreSet, cm: CostModel, tau: float | None = None
) -> tuple[dict[str, float | None], dict[str, str]]:
    """Compute every record metric at a cutoff, the operating one by default.

    Returns
    -------
    metrics : `dict` [`str`, `float` or `None`]
        Metric values, `None` when undefined.
    undefined : `dict` [`str`, `str`]
        Name of the error making a metric undefined.
    """
    if tau is None:
        tau = operating_cutoff(cm)
    metrics: dict[str, float | None] = {}
    undefined: dict[str, str] = {}

    def attempt(name: str, compute: Callable[[], float]) -> None:
        try:
            metrics[name] = float(compute())
        except MetricError as exc:
            metrics[name] = None
            undefined[name] = type(exc).__name__

    attempt("auc", lambda: auc(s))
    metrics["emp"] = expected_profit(s, cm).value
    profit = profit_per_eur(s, cm, tau)
    metrics["profit_raw"] = profit.raw
    metrics["profit_normalized"] = profit.normalized
    if profit.normalized is None:
        undefined["profit_normalized"] = "NoAccepted"
    metrics["acceptance_rate"] = profit.acceptance_rate
    attempt("ind", lambda: independence(s, tau))
    attempt("sp", lambda: separation(s, tau))
    attempt("sf", lambda: sufficiency(s, tau))
    return metrics, undefined


def _select(candidates: Sequence[_C], fit: Callable[[_C], _R], score: Callable[[_R], float]) -> tuple[_C, _R]:
    """Return the candidate whose fit scores highest, first one on ties."""
    best: tuple[float, _C, _R] | None = None
    error: FairScoreError | None = None
    for candidate in candidates:
        try:
            result = fit(candidate)
            value = score(result)
        except FairScoreError as exc:
            _LOG.debug("Candidate %s failed: %s", candidate, exc)
            error = exc
            continue
        if best is None or value > best[0]:
            best = (value, candidate, result)
    if best is None:
        if error is not None:
            raise error
        raise ValueError("No candidates to select from")
    return best[1], best[2]


def tune_learner(
    train_ds: Dataset, grid: Sequence[LearnerSpec], inner_folds: int, seed: int, cm: CostModel
) -> LearnerSpec:
    """Select learner meta-parameters by nested cross-validation.

    Every specification is trained on all but one inner fold and scored
    by expected profit on the held-out fold; the highest mean wins.

    Parameters
    ----------
    train_ds : `Dataset`
        Training data of the outer fold.
    grid : `~collections.abc.Sequence` [`LearnerSpec`]
        Candidate specifications.
    inner_folds : `int`
        Number of inner folds.
    seed : `int`
        Seed of the inner fold assignment.
    cm : `CostModel`
        Profit parameters.

    Returns
    -------
    spec : `LearnerSpec`
        Best specification.
    """
    if len(grid) == 1:
        return grid[0]
    folds = make_folds(train_ds.n, inner_folds, 2 * train_ds.labels + train_ds.sensitive, seed)

    def mean_profit(spec: LearnerSpec) -> float:
        values = []
        for fold in range(inner_folds):
            fit, held_out = folds.split(fold)
            model = train(train_ds.subset(fit), spec)
            values.append(expected_profit(score_dataset(model, train_ds.subset(held_out)), cm).value)
        return float(np.mean(values))

    spec, _ = _select(grid, lambda spec: spec, mean_profit)
    return spec


class SingleCellExecutor(CellExecutor):
    """Executor class which runs one benchmark cell at a time.

    Parameters
    ----------
    config : `ExperimentConfig`
        Experiment configuration.
    datasets : `~collections.abc.Mapping` [`str`, `PreparedDataset`]
        Prepared datasets by identifier.
    """

    def __init__(self, config: ExperimentConfig, datasets: Mapping[str, PreparedDataset]):
        self.config = config
        self.datasets = dict(datasets)
        self.cost = config.cost.to_cost_model()

    def execute(self, cell: BenchCell) -> tuple[list[ResultRecord], CellReport]:
        # Docstring inherited from CellExecutor.execute
        startTime = time.time()
        with time_this(log=_LOG, msg="Cell %s", args=(cell.label,)):
            records = self._execute(cell)
        nFailed = sum(not record.ok for record in records)
        report = CellReport(
            cell=cell.label,
            status=ExecutionStatus.FAILURE if nFailed else ExecutionStatus.SUCCESS,
            nRecords=len(records),
            nFailed=nFailed,
            seconds=time.time() - startTime,
        )
        return records, report

    def _execute(self, cell: BenchCell) -> list[ResultRecord]:
        """Execute the cell, internal implementation of `execute()`."""
        prepared = self.datasets[cell.dataset]
        train_ds, validation, test = prepared.fold_data(cell.fold)
        if cell.learner == SELF_LEARNER:
            record = self._run_processor(
                cell, cell.processors[0], lambda: self._inproc(cell, train_ds, validation, test)
            )
            return [record]

        try:
            grid = self.config.learners.grid(cell.learner, self.config.seed)
            spec = tune_learner(train_ds, grid, self.config.split.inner_folds, self.config.seed, self.cost)
            baseline = train(train_ds, spec)
        except FairScoreError as exc:
            _LOG.error("Unconstrained %s failed for cell %s: %s", cell.learner, cell.label, exc)
            return cell.failed_records(exc, self.config.seed)
        learner_parameters = {
            "l2_decay": spec.l2_decay,
            **({"hidden_size": spec.hidden_size} if spec.kind == "network" else {}),
        }
        validation_scores = score_dataset(baseline, validation)
        test_scores = score_dataset(baseline, test)

        records = []
        for processor in cell.processors:
            if processor == BASELINE:
                records.append(self._record(cell, processor, test_scores, learner_parameters))
            elif processor in PRE_PROCESSORS:
                records.append(
                    self._run_processor(
                        cell, processor, lambda: self._preproc(processor, spec, train_ds, validation, test)
                    )
                )
            elif processor in POST_PROCESSORS:
                records.append(
                    self._run_processor(
                        cell, processor, lambda: self._postproc(processor, validation_scores, test_scores)
                    )
                )
            else:
                raise ValueError(f"Processor {processor!r} cannot run in a learner cell")
        return records

    def _run_processor(
        self, cell: BenchCell, processor: str, run: Callable[[], tuple[ScoreSet, dict[str, Any]]]
    ) -> ResultRecord:
        try:
            scores, parameters = run()
        except FairScoreError as exc:
            _LOG.error("Processor %s failed for cell %s: %s", processor, cell.label, exc)
            return ResultRecord.from_exception(
                exc, cell.dataset, processor, cell.learner, cell.fold, self.config.seed
            )
        return self._record(cell, processor, scores, parameters)

    def _record(
        self, cell: BenchCell, processor: str, scores: ScoreSet, parameters: Mapping[str, Any]
    ) -> ResultRecord:
        metrics, undefined = evaluate_scores(scores, self.cost)
        return ResultRecord(
            dataset=cell.dataset,
            processor=processor,
            learner=cell.learner,
            fold=cell.fold,
            seed=self.config.seed,
            parameters=dict(parameters),
            undefined=undefined,
            **metrics,
        )

    def _emp(self, scores: ScoreSet) -> float:
        return expected_profit(scores, self.cost).value

    def _repair_columns(self, ds: Dataset) -> list[int]:
        names = self.config.preproc.di.columns
        if names is None:
            return ds.numeric_feature_indices()
        unknown = [name for name in names if name not in ds.feature_names]
        if unknown:
            raise ValueError(f"Unknown repair columns: {', '.join(unknown)}")
        return [ds.feature_names.index(name) for name in names]

    def _preproc(
        self, processor: str, spec: LearnerSpec, train_ds: Dataset, validation: Dataset, test: Dataset
    ) -> tuple[ScoreSet, dict[str, Any]]:
        if processor == "reweighing":
            weights = reweigh(train_ds.labels, train_ds.sensitive)
            mode = self.config.preproc.reweighing.mode
            if mode == "weights":
                weighted = train_ds.with_weights(weights)
            else:
                weighted = resample(train_ds, weights, self.config.seed)
            return score_dataset(train(weighted, spec), test), {"mode": mode}

        columns = self._repair_columns(train_ds)

        def fit(level: float) -> tuple[TrainedModel, ScoreSet]:
            model = train(di_remove(train_ds, level, columns), spec)
            return model, score_dataset(model, di_remove(validation, level, columns))

        level, (model, _) = _select(
            self.config.preproc.di.repair_level, fit, lambda result: self._emp(result[1])
        )
        return score_dataset(model, di_remove(test, level, columns)), {"lambda": level}

    def _postproc(
        self, processor: str, validation: ScoreSet, test: ScoreSet
    ) -> tuple[ScoreSet, dict[str, Any]]:
        postproc = self.config.postproc
        if processor == "reject_option":
            options = postproc.reject_option
            best = None
            for bound in options.bounds():
                fit = reject_option_tune(
                    validation,
                    bound,
                    options.criterion,
                    self.cost,
                    options.n_thetas,
                    n_margins=options.n_margins,
                )
                if best is None or (fit.satisfied, fit.profit) > (best[1].satisfied, best[1].profit):
                    best = (bound, fit)
            assert best is not None
            bound, fit = best
            parameters = {
                "theta": fit.theta,
                "lower": bound[0],
                "upper": bound[1],
                "satisfied": fit.satisfied,
            }
            return reject_option_apply(test, fit.theta), parameters
        if processor == "equalized_odds":
            options = postproc.equalized_odds
            rule = equalized_odds_fit(
                validation, self.cost, options.epsilon, options.grid_size, seed=self.config.seed
            )
            decisions = equalized_odds_apply(rule, test)
            parameters = {"target_fpr": rule.target_fpr, "target_tpr": rule.target_tpr, "seed": rule.seed}
            return test.with_scores(decisions.astype(np.float64)), parameters
        mapping = platt_fit(validation, postproc.platt.max_iterations, postproc.platt.ridge)
        parameters = {}
        for group, (a, b) in sorted(mapping.parameters.items()):
            parameters[f"a{group}"] = a
            parameters[f"b{group}"] = b
        return platt_apply(mapping, test), parameters

    def _logistic_spec(self, l2_decay: float) -> LearnerSpec:
        logistic = self.config.learners.logistic
        return LearnerSpec(
            kind="logistic",
            l2_decay=l2_decay,
            learning_rate=logistic.learning_rate,
            max_iterations=logistic.max_iterations,
            seed=self.config.seed,
        )

    def _inproc(
        self, cell: BenchCell, train_ds: Dataset, validation: Dataset, test: Dataset
    ) -> tuple[ScoreSet, dict[str, Any]]:
        inproc = self.config.inproc
        processor = cell.processors[0]
        seed = self.config.seed

        def by_validation(
            candidates: Sequence[float], fit: Callable[[float], TrainedModel]
        ) -> tuple[float, TrainedModel]:
            return _select(candidates, fit, lambda model: self._emp(score_dataset(model, validation)))

        if processor == "prejudice_remover":
            learner = self._logistic_spec(inproc.prejudice.l2_decay)
            eta, model = by_validation(
                inproc.prejudice.eta,
                lambda eta: train_prejudice_remover(train_ds, PrejudiceSpec(eta, learner)),
            )
            return score_dataset(model, test), {"eta": eta}
        if processor == "adversarial":
            options = inproc.adversarial

            def fit_adversarial(alpha: float) -> TrainedModel:
                spec = AdversarialSpec(
                    alpha=alpha,
                    epochs=options.epochs,
                    batch_size=options.batch_size,
                    hidden_size=options.hidden_size,
                    learning_rate=options.learning_rate,
                    adversary_learning_rate=options.adversary_learning_rate,
                    seed=seed,
                )
                return train_adversarial(train_ds, spec)

            alpha, model = by_validation(options.alpha, fit_adversarial)
            return score_dataset(model, test), {"alpha": alpha}
        if processor == "meta_fair":
            options = inproc.metafair
            learner = self._logistic_spec(options.l2_decay)
            ratios: dict[float, float] = {}

            def fit_meta_fair(sigma: float) -> TrainedModel:
                spec = MetaFairSpec(
                    criterion=options.criterion,
                    sigma=sigma,
                    temperature=options.temperature,
                    penalty_weight=options.penalty_weight,
                    stages=options.stages,
                    cutoff=operating_cutoff(self.cost),
                    learner=learner,
                )
                fit = train_meta_fair(train_ds, spec)
                ratios[sigma] = fit.hard_ratio
                return fit.model

            sigma, model = by_validation(options.sigma, fit_meta_fair)
            parameters = {"sigma": sigma, "criterion": options.criterion, "train_ratio": ratios[sigma]}
            return score_dataset(model, test), parameters
        raise ValueError(f"Processor {processor!r} is not an in-processor")
