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


__all__ = [
    "FairscoreCommand",
    "echo_json",
    "flatten_mapping",
    "load_config",
    "load_cost_model",
]

import importlib.resources
import json
import tomllib
from collections.abc import Iterator, Mapping, Sequence
from typing import Any

import click
from lsst.daf.butler.cli.utils import MWCommand

from ..configIO import assign_mapping, override_mapping, parse_override
from ..errors import ExperimentConfigError
from ..experimentConfig import CostConfig, ExperimentConfig, load_experiment_config
from ..profit import CostModel

DEMO_CONFIG = "synthetic.toml"


class FairscoreCommand(MWCommand):
    """Command subclass with fairscore-command specific overrides."""

    extra_epilog = "See 'fairscore --help' for more options."


def echo_json(data: Any) -> None:
    """Print data as indented JSON with sorted keys.

    Parameters
    ----------
    data : `typing.Any`
        JSON-serializable data; non-finite floats must already be `None`.
    """
    click.echo(json.dumps(data, indent=2, sort_keys=True, allow_nan=False))


def flatten_mapping(mapping: Mapping[str, Any], prefix: str = "") -> Iterator[tuple[str, Any]]:
    """Yield ``(dotted.key, value)`` pairs of a nested mapping in key order.

    Parameters
    ----------
    mapping : `~collections.abc.Mapping`
        Nested mapping.
    prefix : `str`, optional
        Prefix of every key.

    Yields
    ------
    key : `str`
        Dotted key.
    value : `typing.Any`
        Leaf value.
    """
    for key in sorted(mapping):
        value = mapping[key]
        if isinstance(value, Mapping):
            yield from flatten_mapping(value, f"{prefix}{key}.")
        else:
            yield f"{prefix}{key}", value


def load_config(
    config: str | None, overrides: Sequence[str], seed: int | None = None, check_paths: bool = False
) -> ExperimentConfig:
    """Load an experiment configuration for a command.

    Parameters
    ----------
    config : `str` or `None`
        TOML file; the bundled synthetic experiment if `None`.
    overrides : `~collections.abc.Sequence` [`str`]
        ``key=value`` overrides.
    seed : `int`, optional
        Seed applied after the overrides.
    check_paths : `bool`, optional
        Require dataset files to exist.

    Returns
    -------
    config : `ExperimentConfig`
        Validated configuration.

    Raises
    ------
    ExperimentConfigError
        Raised with every violation found.
    """
    overrides = list(overrides)
    if seed is not None:
        overrides.append(f"seed={seed}")
    if config is None:
        resource = importlib.resources.files("fairscore.resources") / DEMO_CONFIG
        with importlib.resources.as_file(resource) as path:
            return load_experiment_config(path, overrides, check_paths=check_paths)
    return load_experiment_config(config, overrides, check_paths=check_paths)


def load_cost_model(config: str | None, overrides: Sequence[str]) -> CostModel:
    """Build the cost model from the ``cost`` table of a configuration.

    Only ``cost.*`` overrides are accepted.

    Raises
    ------
    ExperimentConfigError
        Raised with every violation found.
    """
    cost = CostConfig()
    violations: list[str] = []
    if config is not None:
        with open(config, "rb") as stream:
            mapping = tomllib.load(stream)
        section = mapping.get("cost", {})
        if isinstance(section, Mapping):
            violations.extend(assign_mapping(cost, section, "cost."))
        else:
            violations.append("cost: expected a table")
    for text in overrides:
        try:
            key, value = parse_override(text)
        except ValueError as exc:
            violations.append(f"{text}: {exc}")
            continue
        if not key.startswith("cost."):
            violations.append(f"{key}: only cost settings apply here")
            continue
        violations.extend(assign_mapping(cost, override_mapping(key.removeprefix("cost."), value), "cost."))
    if not violations:
        try:
            return cost.to_cost_model()
        except ValueError as exc:
            violations.append(f"cost: {exc}".replace("\n", " "))
    raise ExperimentConfigError(violations)
