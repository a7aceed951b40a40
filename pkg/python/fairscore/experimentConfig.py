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

"""Configuration tree of a benchmark experiment."""

from __future__ import annotations

__all__ = [
    "IN_PROCESSORS",
    "POST_PROCESSORS",
    "PRE_PROCESSORS",
    "PROCESSORS",
    "CostConfig",
    "DatasetConfig",
    "ExperimentConfig",
    "LearnersConfig",
    "load_experiment_config",
    "config_summary",
    "processor_stage",
]

import itertools
import math
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path
from typing import Any

import lsst.pex.config as pexConfig
from lsst.utils.logging import getLogger

from .configIO import assign_mapping, config_from_toml, override_mapping, parse_override
from .errors import ExperimentConfigError
from .learners import LearnerSpec
from .profit import CostModel
from .synthetic import SyntheticConfig

_LOG = getLogger(__name__)

PRE_PROCESSORS = ("reweighing", "di_remover")
IN_PROCESSORS = ("prejudice_remover", "adversarial", "meta_fair")
POST_PROCESSORS = ("reject_option", "equalized_odds", "platt_scaling")
PROCESSORS = PRE_PROCESSORS + IN_PROCESSORS + POST_PROCESSORS
LEARNERS = ("logistic", "network")
CRITERIA = ("independence", "separation", "sufficiency")

# Bundled schema names usable as ``datasets.<name>.schema``.
BUNDLED_SCHEMAS = ("german",)


def processor_stage(name: str) -> str:
    """Return ``pre``, ``in`` or ``post`` for a processor name.

    Raises
    ------
    ValueError
        Raised for an unknown processor.
    """
    if name in PRE_PROCESSORS:
        return "pre"
    if name in IN_PROCESSORS:
        return "in"
    if name in POST_PROCESSORS:
        return "post"
    raise ValueError(f"Unknown processor {name!r}")


class SplitConfig(pexConfig.Config):
    """Train/test split and cross-validation."""

    train_fraction = pexConfig.RangeField(
        dtype=float, default=0.6, min=0.0, max=1.0, inclusiveMin=False, doc="Share of rows used for training."
    )
    n_folds = pexConfig.RangeField(dtype=int, default=5, min=2, doc="Folds of training data.")
    inner_folds = pexConfig.RangeField(dtype=int, default=4, min=2, doc="Folds of nested learner tuning.")


class DatasetConfig(pexConfig.Config):
    """Source of one benchmark dataset."""

    source = pexConfig.ChoiceField(
        dtype=str,
        default="csv",
        allowed={"csv": "CSV file with an ingestion schema.", "synthetic": "Bundled biased generator."},
        doc="Where rows come from.",
    )
    path = pexConfig.Field(dtype=str, default=None, optional=True, doc="CSV file for ``csv`` sources.")
    schema = pexConfig.Field(
        dtype=str, default="german", doc="Ingestion schema TOML file or bundled schema name."
    )
    synthetic = pexConfig.ConfigField(dtype=SyntheticConfig, doc="Generator parameters.")


class CostConfig(pexConfig.Config):
    """Profit model parameters."""

    roi = pexConfig.Field(dtype=float, default=0.2664, doc="Return on a repaid loan.")
    p0 = pexConfig.Field(dtype=float, default=0.55, doc="Probability of no loss given default.")
    p1 = pexConfig.Field(dtype=float, default=0.10, doc="Probability of full loss given default.")
    quadrature_points = pexConfig.Field(dtype=int, default=1001, doc="Trapezoid nodes of the loss integral.")

    def to_cost_model(self) -> CostModel:
        return CostModel(roi=self.roi, p0=self.p0, p1=self.p1, quadrature_points=self.quadrature_points)


class LogisticConfig(pexConfig.Config):
    l2_decay = pexConfig.ListField(dtype=float, default=[0.001], doc="Weight decay grid.")
    learning_rate = pexConfig.Field(dtype=float, default=1.0, doc="Initial step size.")
    max_iterations = pexConfig.Field(dtype=int, default=1000, doc="Gradient step limit.")


class NetworkConfig(pexConfig.Config):
    hidden_size = pexConfig.ListField(dtype=int, default=[5, 10, 15], doc="Hidden layer width grid.")
    decay = pexConfig.ListField(dtype=float, default=[0.1, 0.5, 1.0, 1.5, 2.0], doc="Weight decay grid.")
    learning_rate = pexConfig.Field(dtype=float, default=0.5, doc="Step size.")
    batch_size = pexConfig.Field(dtype=int, default=128, doc="Mini-batch size.")
    epochs = pexConfig.Field(dtype=int, default=1000, doc="Epoch limit.")


class LearnersConfig(pexConfig.Config):
    """Base classifiers and their tuning grids."""

    names = pexConfig.ListField(dtype=str, default=list(LEARNERS), doc="Learners to benchmark.")
    logistic = pexConfig.ConfigField(dtype=LogisticConfig, doc="Logistic regression.")
    network = pexConfig.ConfigField(dtype=NetworkConfig, doc="Feed-forward network.")

    def grid(self, name: str, seed: int) -> list[LearnerSpec]:
        """Return every meta-parameter combination of a learner."""
        if name == "logistic":
            return [
                LearnerSpec(
                    kind="logistic",
                    l2_decay=decay,
                    learning_rate=self.logistic.learning_rate,
                    max_iterations=self.logistic.max_iterations,
                    seed=seed,
                )
                for decay in self.logistic.l2_decay
            ]
        return [
            LearnerSpec(
                kind="network",
                l2_decay=decay,
                hidden_size=size,
                learning_rate=self.network.learning_rate,
                max_iterations=self.network.epochs,
                batch_size=self.network.batch_size,
                seed=seed,
            )
            for size, decay in itertools.product(self.network.hidden_size, self.network.decay)
        ]


class ReweighingConfig(pexConfig.Config):
    mode = pexConfig.ChoiceField(
        dtype=str,
        default="weights",
        allowed={"weights": "Pass weights to the learner.", "resample": "Draw a weighted resample."},
        doc="How weights reach the learner.",
    )


class DiRemoverConfig(pexConfig.Config):
    repair_level = pexConfig.ListField(
        dtype=float, default=[0.5, 0.6, 0.7, 0.8, 0.9, 1.0], doc="Repair level grid (TOML key ``lambda``)."
    )
    columns = pexConfig.ListField(
        dtype=str, default=None, optional=True, doc="Feature names to repair; all numeric ones if unset."
    )


class PreprocConfig(pexConfig.Config):
    reweighing = pexConfig.ConfigField(dtype=ReweighingConfig, doc="Reweighing.")
    di = pexConfig.ConfigField(dtype=DiRemoverConfig, doc="Disparate impact remover.")


class PrejudiceConfig(pexConfig.Config):
    eta = pexConfig.ListField(
        dtype=float,
        default=[1.0, 5.0, 15.0, 30.0, 50.0, 70.0, 100.0, 150.0],
        doc="Prejudice index weight grid.",
    )
    l2_decay = pexConfig.Field(dtype=float, default=0.001, doc="Logistic weight decay.")


class AdversarialConfig(pexConfig.Config):
    alpha = pexConfig.ListField(dtype=float, default=[0.1, 0.01, 0.001], doc="Adversary loss weight grid.")
    epochs = pexConfig.Field(dtype=int, default=50, doc="Training epochs.")
    batch_size = pexConfig.Field(dtype=int, default=128, doc="Mini-batch size.")
    hidden_size = pexConfig.Field(dtype=int, default=16, doc="Predictor hidden layer width.")
    learning_rate = pexConfig.Field(dtype=float, default=0.5, doc="Predictor step size.")
    adversary_learning_rate = pexConfig.Field(dtype=float, default=0.5, doc="Adversary step size.")


class MetaFairConfig(pexConfig.Config):
    criterion = pexConfig.ChoiceField(
        dtype=str,
        default="independence",
        allowed={name: f"Ratio of group {name} statistics." for name in CRITERIA},
        doc="Fairness statistic constrained by the ratio.",
    )
    sigma = pexConfig.ListField(
        dtype=float, default=[0.95, 0.90, 0.85, 0.80, 0.75, 0.70], doc="Minimum ratio grid."
    )
    temperature = pexConfig.Field(dtype=float, default=0.05, doc="Smoothing temperature.")
    penalty_weight = pexConfig.Field(dtype=float, default=1.0, doc="Penalty weight of the first stage.")
    stages = pexConfig.Field(dtype=int, default=5, doc="Penalty doubling stages.")
    l2_decay = pexConfig.Field(dtype=float, default=0.001, doc="Logistic weight decay.")


class InprocConfig(pexConfig.Config):
    prejudice = pexConfig.ConfigField(dtype=PrejudiceConfig, doc="Prejudice remover.")
    adversarial = pexConfig.ConfigField(dtype=AdversarialConfig, doc="Adversarial debiasing.")
    metafair = pexConfig.ConfigField(dtype=MetaFairConfig, doc="Meta-fair penalty trainer.")


class RejectOptionConfig(pexConfig.Config):
    lower_bounds = pexConfig.ListField(dtype=float, default=[-0.1, -0.2, -0.3], doc="Lower fairness bounds.")
    upper_bounds = pexConfig.ListField(dtype=float, default=[0.1, 0.2, 0.3], doc="Upper fairness bounds.")
    n_thetas = pexConfig.Field(dtype=int, default=100, doc="Critical region grid size.")
    n_margins = pexConfig.Field(
        dtype=int, default=50, doc="Statistic levels inside each bound scanned with the region grid."
    )
    criterion = pexConfig.ChoiceField(
        dtype=str,
        default="independence",
        allowed={name: f"Bound the signed {name} statistic." for name in CRITERIA},
        doc="Criterion kept inside the bounds.",
    )

    def bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.lower_bounds, self.upper_bounds))


class EqualizedOddsConfig(pexConfig.Config):
    epsilon = pexConfig.Field(dtype=float, default=0.02, doc="Allowed group gap of FPR and FNR.")
    grid_size = pexConfig.Field(dtype=int, default=100, doc="Operating point grid steps per axis.")


class PlattConfig(pexConfig.Config):
    max_iterations = pexConfig.Field(dtype=int, default=100, doc="Newton iteration cap.")
    ridge = pexConfig.Field(dtype=float, default=1e-6, doc="Hessian ridge.")


class PostprocConfig(pexConfig.Config):
    reject_option = pexConfig.ConfigField(dtype=RejectOptionConfig, doc="Reject option classification.")
    equalized_odds = pexConfig.ConfigField(dtype=EqualizedOddsConfig, doc="Equalized odds.")
    platt = pexConfig.ConfigField(dtype=PlattConfig, doc="Group-wise Platt scaling.")


def _grid_violations(
    key: str, values: Sequence[float] | None, low: float, high: float = math.inf
) -> Iterator[str]:
    if not values:
        yield f"{key}: grid is empty"
        return
    for value in values:
        if not low <= value <= high:
            yield f"{key}: {value:g} out of [{low:g},{high:g}]"


class ExperimentConfig(pexConfig.Config):
    """Root configuration of a benchmark run."""

    seed = pexConfig.Field(dtype=int, default=42, doc="Seed of splits and training.")
    output = pexConfig.Field(dtype=str, default="fairscore-out", doc="Report directory.")
    split = pexConfig.ConfigField(dtype=SplitConfig, doc="Splitting.")
    datasets = pexConfig.ConfigDictField(
        keytype=str, itemtype=DatasetConfig, default={}, doc="Datasets by identifier."
    )
    cost = pexConfig.ConfigField(dtype=CostConfig, doc="Profit model.")
    learners = pexConfig.ConfigField(dtype=LearnersConfig, doc="Base classifiers.")
    processors = pexConfig.ListField(dtype=str, default=list(PROCESSORS), doc="Fairness processors to run.")
    preproc = pexConfig.ConfigField(dtype=PreprocConfig, doc="Pre-processors.")
    inproc = pexConfig.ConfigField(dtype=InprocConfig, doc="In-processors.")
    postproc = pexConfig.ConfigField(dtype=PostprocConfig, doc="Post-processors.")

    def iter_violations(self, check_paths: bool = False) -> Iterator[str]:
        """Yield every semantic violation as ``dotted.key: message``.

        Parameters
        ----------
        check_paths : `bool`, optional
            Also require dataset and schema files to exist.
        """
        if not self.datasets:
            yield "datasets: no dataset configured"
        for name, dataset in sorted(self.datasets.items()):
            if dataset.source == "csv":
                if not dataset.path:
                    yield f"datasets.{name}.path: required for csv sources"
                elif check_paths and not Path(dataset.path).is_file():
                    yield f"datasets.{name}.path: file {dataset.path} not found"
                if (
                    check_paths
                    and dataset.schema not in BUNDLED_SCHEMAS
                    and not Path(dataset.schema).is_file()
                ):
                    yield f"datasets.{name}.schema: file {dataset.schema} not found"
            else:
                try:
                    dataset.synthetic.validate()
                except pexConfig.FieldValidationError as exc:
                    yield f"datasets.{name}.synthetic: {exc}"

        try:
            self.cost.to_cost_model()
        except ValueError as exc:
            yield f"cost: {exc}".replace("\n", " ")

        if not self.learners.names:
            yield "learners.names: no learner configured"
        for learner in self.learners.names:
            if learner not in LEARNERS:
                yield f"learners.names: unknown learner {learner!r}"
        yield from _grid_violations("learners.logistic.l2_decay", self.learners.logistic.l2_decay, 0.0)
        yield from _grid_violations("learners.network.decay", self.learners.network.decay, 0.0)
        yield from _grid_violations("learners.network.hidden_size", self.learners.network.hidden_size, 1)
        for key, value in (
            ("learners.logistic.learning_rate", self.learners.logistic.learning_rate),
            ("learners.network.learning_rate", self.learners.network.learning_rate),
            ("inproc.adversarial.learning_rate", self.inproc.adversarial.learning_rate),
            ("inproc.adversarial.adversary_learning_rate", self.inproc.adversarial.adversary_learning_rate),
            ("inproc.metafair.temperature", self.inproc.metafair.temperature),
            ("inproc.metafair.penalty_weight", self.inproc.metafair.penalty_weight),
        ):
            if not value > 0:
                yield f"{key}: {value:g} must be positive"
        for key, count in (
            ("learners.logistic.max_iterations", self.learners.logistic.max_iterations),
            ("learners.network.epochs", self.learners.network.epochs),
            ("learners.network.batch_size", self.learners.network.batch_size),
            ("inproc.adversarial.epochs", self.inproc.adversarial.epochs),
            ("inproc.adversarial.batch_size", self.inproc.adversarial.batch_size),
            ("inproc.adversarial.hidden_size", self.inproc.adversarial.hidden_size),
            ("inproc.metafair.stages", self.inproc.metafair.stages),
            ("postproc.reject_option.n_thetas", self.postproc.reject_option.n_thetas),
            ("postproc.reject_option.n_margins", self.postproc.reject_option.n_margins),
            ("postproc.equalized_odds.grid_size", self.postproc.equalized_odds.grid_size),
            ("postproc.platt.max_iterations", self.postproc.platt.max_iterations),
        ):
            if count < 1:
                yield f"{key}: {count} must be at least 1"

        if not self.processors:
            yield "processors: no processor configured"
        for processor in self.processors:
            if processor not in PROCESSORS:
                yield f"processors: unknown processor {processor!r}"
        yield from _grid_violations("preproc.di.lambda", self.preproc.di.repair_level, 0.0, 1.0)
        yield from _grid_violations("inproc.prejudice.eta", self.inproc.prejudice.eta, 0.0)
        yield from _grid_violations("inproc.adversarial.alpha", self.inproc.adversarial.alpha, 0.0)
        yield from _grid_violations("inproc.metafair.sigma", self.inproc.metafair.sigma, 0.0, 1.0)
        for key, decay in (
            ("inproc.prejudice.l2_decay", self.inproc.prejudice.l2_decay),
            ("inproc.metafair.l2_decay", self.inproc.metafair.l2_decay),
        ):
            if not decay >= 0:
                yield f"{key}: {decay:g} must not be negative"
        reject = self.postproc.reject_option
        if len(reject.lower_bounds) != len(reject.upper_bounds) or not reject.lower_bounds:
            yield "postproc.reject_option: lower_bounds and upper_bounds need equal non-empty lengths"
        for low, high in reject.bounds():
            if low > high:
                yield f"postproc.reject_option: bound [{low:g},{high:g}] is empty"
        if not 0.0 <= self.postproc.equalized_odds.epsilon <= 1.0:
            yield f"postproc.equalized_odds.epsilon: {self.postproc.equalized_odds.epsilon:g} out of [0,1]"
        if self.postproc.platt.ridge < 0:
            yield f"postproc.platt.ridge: {self.postproc.platt.ridge:g} must be non-negative"

    def validate(self) -> None:
        """Validate fields and semantics.

        Raises
        ------
        ExperimentConfigError
            Raised with every violation found.
        """
        try:
            super().validate()
        except pexConfig.FieldValidationError as exc:
            raise ExperimentConfigError([str(exc)]) from None
        violations = list(self.iter_violations())
        if violations:
            raise ExperimentConfigError(violations)


def _resolve(path: str | None, base: Path) -> str | None:
    if path is None or Path(path).is_absolute():
        return path
    return str(base / path)


def load_experiment_config(
    path: str | Path | None = None, overrides: Iterable[str] = (), check_paths: bool = False
) -> ExperimentConfig:
    """Build an experiment configuration from TOML and overrides.

    Relative dataset and schema paths are resolved against the directory
    of the TOML file.

    Parameters
    ----------
    path : `str` or `~pathlib.Path`, optional
        TOML file; defaults only if not given.
    overrides : `~collections.abc.Iterable` [`str`]
        ``key=value`` strings applied after the file.
    check_paths : `bool`, optional
        Also require dataset files to exist.

    Returns
    -------
    config : `ExperimentConfig`
        Validated configuration.

    Raises
    ------
    ExperimentConfigError
        Raised with every violation found.
    OSError
        Raised if the file cannot be read.
    """
    config = ExperimentConfig()
    violations: list[str] = []
    if path is not None:
        _, violations = config_from_toml(config, path)
        base = Path(path).parent
        for dataset in config.datasets.values():
            dataset.path = _resolve(dataset.path, base)
            if dataset.schema not in BUNDLED_SCHEMAS:
                dataset.schema = _resolve(dataset.schema, base)
    for text in overrides:
        try:
            key, value = parse_override(text)
        except ValueError as exc:
            violations.append(f"{text}: {exc}")
            continue
        violations.extend(assign_mapping(config, override_mapping(key, value)))
    try:
        pexConfig.Config.validate(config)
    except pexConfig.FieldValidationError as exc:
        violations.append(str(exc))
    violations.extend(config.iter_violations(check_paths=check_paths))
    if violations:
        raise ExperimentConfigError(violations)
    _LOG.verbose("Loaded experiment configuration from %s", path or "defaults")
    return config


def config_summary(config: ExperimentConfig) -> dict[str, Any]:
    """Return the effective settings as nested plain values."""
    return config.toDict()
