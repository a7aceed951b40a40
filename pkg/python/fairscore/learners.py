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

"""Base scorecard learners trained from scratch.

Both learners minimize an instance-weighted log-loss divided by the total
instance weight, so step sizes do not depend on the number of rows.
Features are standardized with statistics of the training rows.
"""

from __future__ import annotations

__all__ = [
    "LearnerSpec",
    "TrainedModel",
    "TrainingDiagnostics",
    "gradient_descent",
    "init_network",
    "load_model",
    "logistic_model",
    "logistic_objective",
    "model_from_json",
    "model_to_json",
    "network_backprop",
    "network_forward",
    "network_model",
    "network_objective",
    "predict",
    "prepare_training",
    "run_network_epochs",
    "save_model",
    "standardization_stats",
    "train",
    "train_logistic",
    "train_network",
]

import dataclasses
import logging
import math
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any

import numpy as np
import pydantic
from scipy.special import expit

from .data import Dataset
from .errors import DimensionMismatch, NonFiniteLoss, OneClassOnly

_LOG = logging.getLogger(__name__)

MODEL_FORMAT = "fairscore-model"
MODEL_FORMAT_VERSION = 1

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclasses.dataclass(frozen=True)
class LearnerSpec:
    """Learner kind and meta-parameters."""

    kind: str = "logistic"
    """Either ``logistic`` or ``network``."""

    l2_decay: float = 0.0
    """Weight decay; halved squared norm for logistic, squared norm for
    the network."""

    hidden_size: int = 10
    """Width of the hidden layer (network only)."""

    max_iterations: int = 1000
    """Gradient steps for logistic, epochs for the network."""

    learning_rate: float = 1.0
    """Initial (logistic) or fixed (network) step size."""

    seed: int = 0
    """Seed of initialization and shuffling."""

    standardize: bool = True
    """Standardize features with training statistics."""

    batch_size: int = 128
    """Mini-batch size (network only)."""

    tolerance: float = 1e-6
    """Convergence threshold on the largest absolute gradient component."""

    def __post_init__(self) -> None:
        if self.kind not in ("logistic", "network"):
            raise ValueError(f"Unknown learner kind {self.kind!r}")
        if self.l2_decay < 0 or self.hidden_size < 1 or self.max_iterations < 0 or self.batch_size < 1:
            raise ValueError(f"Invalid learner specification {self}")
        if not self.learning_rate > 0:
            raise ValueError(f"Learning rate must be positive, got {self.learning_rate}")


@dataclasses.dataclass(frozen=True)
class TrainingDiagnostics:
    """Outcome of an optimization run."""

    final_loss: float
    iterations: int
    converged: bool
    loss_trace: tuple[float, ...] = ()


@dataclasses.dataclass(frozen=True, eq=False)
class TrainedModel:
    """Score function with its parameters and provenance."""

    kind: str
    parameters: Mapping[str, np.ndarray]
    mean: np.ndarray
    scale: np.ndarray
    diagnostics: TrainingDiagnostics
    seed: int
    trainer: str = ""
    meta_parameters: Mapping[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.mean)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrainedModel):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.trainer == other.trainer
            and self.seed == other.seed
            and dict(self.meta_parameters) == dict(other.meta_parameters)
            and self.parameters.keys() == other.parameters.keys()
            and all(np.array_equal(self.parameters[k], other.parameters[k]) for k in self.parameters)
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.scale, other.scale)
        )

    __hash__ = None  # type: ignore[assignment]


def standardization_stats(features: np.ndarray, standardize: bool) -> tuple[np.ndarray, np.ndarray]:
    """Return per-feature mean and scale of training rows.

    Constant features get scale 1.
    """
    k = features.shape[1]
    if not standardize:
        return np.zeros(k), np.ones(k)
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    scale[scale == 0.0] = 1.0
    return mean, scale


def _log_loss_terms(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    # log(1 + exp(z)) - y z, stable for large |z|.
    return np.logaddexp(0.0, z) - y * z


def logistic_objective(
    theta: np.ndarray, X: np.ndarray, y: np.ndarray, w: np.ndarray, l2_decay: float
) -> tuple[float, np.ndarray]:
    """Return the weighted logistic objective and its gradient.

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
    l2_decay : `float`
        Penalty ``l2_decay / 2 * |coef|^2``; the intercept is not penalized.

    Returns
    -------
    value : `float`
        ``(sum w loss + l2_decay / 2 |coef|^2) / sum w``.
    gradient : `numpy.ndarray`
        Gradient with respect to ``theta``.
    """
    coef, intercept = theta[:-1], theta[-1]
    total = w.sum()
    z = X @ coef + intercept
    value = (np.dot(w, _log_loss_terms(z, y)) + 0.5 * l2_decay * np.dot(coef, coef)) / total
    residual = w * (expit(z) - y)
    gradient = np.empty_like(theta)
    gradient[:-1] = (X.T @ residual + l2_decay * coef) / total
    gradient[-1] = residual.sum() / total
    return float(value), gradient


def _unpack_network(theta: np.ndarray, k: int, h: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    W1 = theta[: k * h].reshape(k, h)
    b1 = theta[k * h : k * h + h]
    w2 = theta[k * h + h : k * h + 2 * h]
    return W1, b1, w2, float(theta[-1])


def _network_size(k: int, h: int) -> int:
    return k * h + 2 * h + 1


def network_forward(theta: np.ndarray, X: np.ndarray, hidden_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Return hidden activations and output logits of a flat network."""
    W1, b1, w2, b2 = _unpack_network(theta, X.shape[1], hidden_size)
    hidden = expit(X @ W1 + b1)
    return hidden, hidden @ w2 + b2


def network_backprop(
    theta: np.ndarray, X: np.ndarray, hidden: np.ndarray, residual: np.ndarray, hidden_size: int
) -> np.ndarray:
    """Return the gradient of ``sum(residual * logit)`` with respect to a
    flat network's parameters.
    """
    _, _, w2, _ = _unpack_network(theta, X.shape[1], hidden_size)
    delta = np.outer(residual, w2) * hidden * (1.0 - hidden)
    return np.concatenate([(X.T @ delta).ravel(), delta.sum(axis=0), hidden.T @ residual, [residual.sum()]])


def network_objective(
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    decay: float,
    hidden_size: int,
    total_weight: float | None = None,
) -> tuple[float, np.ndarray]:
    """Return the network objective on a batch and its gradient.

    Parameters
    ----------
    theta : `numpy.ndarray`
        Flat parameters: hidden weights (k x h, row major), hidden biases,
        output weights, output bias.
    X : `numpy.ndarray`
        Standardized batch features.
    y : `numpy.ndarray`
        Batch labels.
    w : `numpy.ndarray`
        Batch instance weights.
    decay : `float`
        Penalty on the squared norm of all weights (biases excluded).
    hidden_size : `int`
        Width of the hidden layer.
    total_weight : `float`, optional
        Total instance weight of the training set, scaling the penalty.
        Defaults to the batch weight.

    Returns
    -------
    value : `float`
        ``sum w loss / sum w + decay |W|^2 / total_weight``.
    gradient : `numpy.ndarray`
        Gradient with respect to ``theta``.
    """
    k = X.shape[1]
    W1, _, w2, _ = _unpack_network(theta, k, hidden_size)
    batch_weight = w.sum()
    total = batch_weight if total_weight is None else total_weight
    hidden, z = network_forward(theta, X, hidden_size)
    value = np.dot(w, _log_loss_terms(z, y)) / batch_weight + decay * (
        np.sum(W1 * W1) + np.dot(w2, w2)
    ) / total
    residual = w * (expit(z) - y) / batch_weight
    gradient = network_backprop(theta, X, hidden, residual, hidden_size)
    gradient[: k * hidden_size] += 2.0 * decay * W1.ravel() / total
    gradient[k * hidden_size + hidden_size : k * hidden_size + 2 * hidden_size] += 2.0 * decay * w2 / total
    return float(value), gradient


def gradient_descent(
    objective: Objective,
    theta0: np.ndarray,
    learning_rate: float,
    max_iterations: int,
    tolerance: float,
) -> tuple[np.ndarray, TrainingDiagnostics]:
    """Minimize a smooth objective by full-batch gradient descent.

    A step that would increase the objective is rejected and the step size
    halved, so the accepted objective values never increase.

    Parameters
    ----------
    objective : `~collections.abc.Callable`
        Returns value and gradient at a parameter vector.
    theta0 : `numpy.ndarray`
        Starting point.
    learning_rate : `float`
        Initial step size.
    max_iterations : `int`
        Maximum number of accepted steps.
    tolerance : `float`
        Stop when the largest absolute gradient component is below it.

    Returns
    -------
    theta : `numpy.ndarray`
        Final parameters.
    diagnostics : `TrainingDiagnostics`
        Final objective, accepted steps and objective trace.

    Raises
    ------
    NonFiniteLoss
        Raised if the objective is not finite at the starting point.
    """
    theta = np.array(theta0, dtype=np.float64, copy=True)
    value, gradient = objective(theta)
    if not math.isfinite(value):
        raise NonFiniteLoss(f"Objective is {value} at the starting point")
    trace = [value]
    step = learning_rate
    min_step = learning_rate * 2.0**-60
    iterations = 0
    while iterations < max_iterations and np.max(np.abs(gradient)) >= tolerance:
        candidate = theta - step * gradient
        candidate_value, candidate_gradient = objective(candidate)
        if not math.isfinite(candidate_value) or candidate_value > value:
            step /= 2.0
            if step < min_step:
                _LOG.debug("Step size underflow after %d iterations", iterations)
                break
            continue
        theta, value, gradient = candidate, candidate_value, candidate_gradient
        trace.append(value)
        iterations += 1
    converged = bool(np.max(np.abs(gradient)) < tolerance)
    return theta, TrainingDiagnostics(
        final_loss=value, iterations=iterations, converged=converged, loss_trace=tuple(trace)
    )


def _check_classes(ds: Dataset) -> None:
    n1 = int(np.count_nonzero(ds.labels == 1))
    if n1 == 0 or n1 == ds.n:
        raise OneClassOnly("Training data contains a single class")


def prepare_training(ds: Dataset, spec: LearnerSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Validate training data and return standardized features with stats."""
    _check_classes(ds)
    mean, scale = standardization_stats(ds.features, spec.standardize)
    return (ds.features - mean) / scale, mean, scale


def logistic_model(
    theta: np.ndarray,
    mean: np.ndarray,
    scale: np.ndarray,
    diagnostics: TrainingDiagnostics,
    seed: int,
    trainer: str,
    meta_parameters: Mapping[str, Any],
) -> TrainedModel:
    """Package logistic parameters as a `TrainedModel`."""
    return TrainedModel(
        kind="logistic",
        parameters={"coef": theta[:-1].copy(), "intercept": theta[-1:].copy()},
        mean=mean,
        scale=scale,
        diagnostics=diagnostics,
        seed=seed,
        trainer=trainer,
        meta_parameters=dict(meta_parameters),
    )


def train_logistic(ds: Dataset, spec: LearnerSpec) -> TrainedModel:
    """Train a weighted L2-penalized logistic regression.

    Weights start at zero; training is deterministic.

    Parameters
    ----------
    ds : `Dataset`
        Training data with instance weights.
    spec : `LearnerSpec`
        Meta-parameters.

    Returns
    -------
    model : `TrainedModel`
        Trained model.

    Raises
    ------
    OneClassOnly
        Raised if the training labels have one class.
    NonFiniteLoss
        Raised if the objective is not finite.
    """
    X, mean, scale = prepare_training(ds, spec)
    y = ds.labels.astype(np.float64)

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        return logistic_objective(theta, X, y, ds.weights, spec.l2_decay)

    theta, diagnostics = gradient_descent(
        objective, np.zeros(ds.k + 1), spec.learning_rate, spec.max_iterations, spec.tolerance
    )
    _LOG.debug(
        "Logistic training stopped after %d iterations, loss %g, converged=%s",
        diagnostics.iterations,
        diagnostics.final_loss,
        diagnostics.converged,
    )
    return logistic_model(
        theta, mean, scale, diagnostics, spec.seed, "logistic", {"l2_decay": spec.l2_decay}
    )


def init_network(k: int, hidden_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw initial network parameters uniform in +-1/sqrt(fan_in).

    Biases start at zero.
    """
    W1 = rng.uniform(-1.0 / math.sqrt(k), 1.0 / math.sqrt(k), size=(k, hidden_size))
    w2 = rng.uniform(-1.0 / math.sqrt(hidden_size), 1.0 / math.sqrt(hidden_size), size=hidden_size)
    return np.concatenate([W1.ravel(), np.zeros(hidden_size), w2, [0.0]])


BatchHook = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def run_network_epochs(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    spec: LearnerSpec,
    rng: np.random.Generator,
    epochs: int,
    hook: BatchHook | None = None,
    theta0: np.ndarray | None = None,
) -> tuple[np.ndarray, TrainingDiagnostics]:
    """Run seeded mini-batch gradient descent on the network objective.

    Parameters
    ----------
    X : `numpy.ndarray`
        Standardized features.
    y : `numpy.ndarray`
        Labels.
    w : `numpy.ndarray`
        Instance weights.
    spec : `LearnerSpec`
        Network meta-parameters.
    rng : `numpy.random.Generator`
        Generator for initialization and shuffling.
    epochs : `int`
        Maximum number of passes over the data.
    hook : `~collections.abc.Callable`, optional
        Called as ``hook(theta, batch_indices, gradient)`` for every batch,
        returning the gradient to apply.
    theta0 : `numpy.ndarray`, optional
        Starting parameters; drawn from ``rng`` if not given.

    Returns
    -------
    theta : `numpy.ndarray`
        Final parameters.
    diagnostics : `TrainingDiagnostics`
        Objective after every epoch.

    Raises
    ------
    NonFiniteLoss
        Raised if the objective becomes non-finite.
    """
    n, k = X.shape
    h = spec.hidden_size
    theta = init_network(k, h, rng) if theta0 is None else np.array(theta0, dtype=np.float64)
    total = w.sum()
    value, gradient = network_objective(theta, X, y, w, spec.l2_decay, h)
    trace = [value]
    epoch = 0
    while epoch < epochs and np.max(np.abs(gradient)) >= spec.tolerance:
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            batch = order[start : start + spec.batch_size]
            _, batch_gradient = network_objective(
                theta, X[batch], y[batch], w[batch], spec.l2_decay, h, total_weight=total
            )
            if hook is not None:
                batch_gradient = hook(theta, batch, batch_gradient)
            theta = theta - spec.learning_rate * batch_gradient
        value, gradient = network_objective(theta, X, y, w, spec.l2_decay, h)
        if not math.isfinite(value):
            raise NonFiniteLoss(f"Network objective became {value} in epoch {epoch}; reduce the step size")
        trace.append(value)
        epoch += 1
    converged = bool(np.max(np.abs(gradient)) < spec.tolerance)
    return theta, TrainingDiagnostics(
        final_loss=value, iterations=epoch, converged=converged, loss_trace=tuple(trace)
    )


def network_model(
    theta: np.ndarray,
    k: int,
    mean: np.ndarray,
    scale: np.ndarray,
    diagnostics: TrainingDiagnostics,
    spec: LearnerSpec,
    trainer: str,
    meta_parameters: Mapping[str, Any],
) -> TrainedModel:
    """Package flat network parameters as a `TrainedModel`."""
    W1, b1, w2, b2 = _unpack_network(theta, k, spec.hidden_size)
    return TrainedModel(
        kind="network",
        parameters={"W1": W1.copy(), "b1": b1.copy(), "w2": w2.copy(), "b2": np.array([b2])},
        mean=mean,
        scale=scale,
        diagnostics=diagnostics,
        seed=spec.seed,
        trainer=trainer,
        meta_parameters=dict(meta_parameters),
    )


def train_network(ds: Dataset, spec: LearnerSpec) -> TrainedModel:
    """Train a one-hidden-layer sigmoid network.

    Parameters
    ----------
    ds : `Dataset`
        Training data with instance weights.
    spec : `LearnerSpec`
        Meta-parameters; ``max_iterations`` counts epochs.

    Returns
    -------
    model : `TrainedModel`
        Trained model.

    Raises
    ------
    OneClassOnly
        Raised if the training labels have one class.
    NonFiniteLoss
        Raised if the objective becomes non-finite.
    """
    X, mean, scale = prepare_training(ds, spec)
    rng = np.random.default_rng(spec.seed)
    theta, diagnostics = run_network_epochs(
        X, ds.labels.astype(np.float64), ds.weights, spec, rng, spec.max_iterations
    )
    _LOG.debug("Network training ran %d epochs, loss %g", diagnostics.iterations, diagnostics.final_loss)
    return network_model(
        theta,
        ds.k,
        mean,
        scale,
        diagnostics,
        spec,
        "network",
        {"hidden_size": spec.hidden_size, "decay": spec.l2_decay},
    )


def train(ds: Dataset, spec: LearnerSpec) -> TrainedModel:
    """Train the learner named by ``spec.kind``."""
    if spec.kind == "logistic":
        return train_logistic(ds, spec)
    return train_network(ds, spec)


def predict(m: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Return scores of a model.

    Parameters
    ----------
    m : `TrainedModel`
        Trained model.
    features : `numpy.ndarray`
        Raw (unstandardized) features, one row per instance.

    Returns
    -------
    scores : `numpy.ndarray`
        Scores in [0, 1].

    Raises
    ------
    DimensionMismatch
        Raised if the column count differs from the training data.
    """
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[1] != m.n_features:
        raise DimensionMismatch(f"Model expects {m.n_features} features, got {X.shape[1]}")
    X = (X - m.mean) / m.scale
    if m.kind == "logistic":
        return expit(X @ m.parameters["coef"] + m.parameters["intercept"][0])
    hidden = expit(X @ m.parameters["W1"] + m.parameters["b1"])
    return expit(hidden @ m.parameters["w2"] + m.parameters["b2"][0])


class _ArrayModel(pydantic.BaseModel):
    """Array stored as shape and hexadecimal floats."""

    shape: list[int]
    data: list[str]

    @classmethod
    def from_array(cls, array: np.ndarray) -> _ArrayModel:
        values = np.asarray(array, dtype=np.float64)
        return cls(shape=list(values.shape), data=[float(v).hex() for v in values.ravel()])

    def to_array(self) -> np.ndarray:
        return np.array([float.fromhex(v) for v in self.data], dtype=np.float64).reshape(self.shape)


class _ModelFile(pydantic.BaseModel):
    """Serialized form of `TrainedModel`."""

    format: str = MODEL_FORMAT
    version: int = MODEL_FORMAT_VERSION
    kind: str
    trainer: str
    seed: int
    meta_parameters: dict[str, float | int | str] = pydantic.Field(default_factory=dict)
    mean: _ArrayModel
    scale: _ArrayModel
    parameters: dict[str, _ArrayModel]
    final_loss: str
    iterations: int
    converged: bool


def model_to_json(m: TrainedModel) -> str:
    """Serialize a model; floats are written in hexadecimal form."""
    return _ModelFile(
        kind=m.kind,
        trainer=m.trainer,
        seed=m.seed,
        meta_parameters=dict(m.meta_parameters),
        mean=_ArrayModel.from_array(m.mean),
        scale=_ArrayModel.from_array(m.scale),
        parameters={name: _ArrayModel.from_array(value) for name, value in m.parameters.items()},
        final_loss=float(m.diagnostics.final_loss).hex(),
        iterations=m.diagnostics.iterations,
        converged=m.diagnostics.converged,
    ).model_dump_json(indent=2)


def model_from_json(text: str) -> TrainedModel:
    """Deserialize a model written by `model_to_json`.

    Raises
    ------
    ValueError
        Raised if the document has another format or version.
    """
    document = _ModelFile.model_validate_json(text)
    if document.format != MODEL_FORMAT or document.version != MODEL_FORMAT_VERSION:
        raise ValueError(f"Unsupported model file {document.format!r} version {document.version}")
    return TrainedModel(
        kind=document.kind,
        parameters={name: value.to_array() for name, value in document.parameters.items()},
        mean=document.mean.to_array(),
        scale=document.scale.to_array(),
        diagnostics=TrainingDiagnostics(
            final_loss=float.fromhex(document.final_loss),
            iterations=document.iterations,
            converged=document.converged,
        ),
        seed=document.seed,
        trainer=document.trainer,
        meta_parameters=document.meta_parameters,
    )


def save_model(m: TrainedModel, path: str | Path) -> None:
    """Write a model to a JSON file."""
    Path(path).write_text(model_to_json(m), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    """Read a model from a JSON file."""
    return model_from_json(Path(path).read_text(encoding="utf-8"))
