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


import json
from collections.abc import Sequence

import click

from ...errors import ExperimentConfigError
from ...experimentConfig import config_summary
from ..utils import echo_json, flatten_mapping, load_config


def validate(
    config: str | None, overrides: Sequence[str], seed: int | None, as_json: bool, **kwargs: object
) -> int:
    """Implement the command line interface ``fairscore validate``.

    Parameters
    ----------
    config : `str` or `None`
        Experiment TOML file, the bundled synthetic experiment if `None`.
    overrides : `~collections.abc.Sequence` [`str`]
        ``key=value`` overrides.
    seed : `int` or `None`
        Seed override.
    as_json : `bool`
        Print JSON instead of text.
    **kwargs : `dict`
        Ignored.

    Returns
    -------
    exitCode : `int`
        0 if the configuration is valid, 1 otherwise.
    """
    try:
        experiment = load_config(config, overrides, seed, check_paths=True)
    except ExperimentConfigError as exc:
        if as_json:
            echo_json({"status": "invalid", "violations": exc.violations})
            return 1
        raise click.ClickException(
            f"Configuration has {len(exc.violations)} violation(s):\n" + "\n".join(exc.violations)
        ) from None
    settings = config_summary(experiment)
    if as_json:
        echo_json({"status": "ok", "config": settings})
    else:
        click.echo("OK")
        for key, value in flatten_mapping(settings):
            click.echo(f"{key} = {json.dumps(value)}")
    return 0
