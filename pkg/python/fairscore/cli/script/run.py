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


from collections.abc import Sequence

import click
from lsst.utils.logging import getLogger
from lsst.utils.timer import profile as profile_context

from ...bench import DEFAULT_TIMEOUT, emit_report, run_experiment, summary_rows, summary_table
from ...errors import ExperimentConfigError, FairScoreError
from ..utils import echo_json, load_config

_LOG = getLogger(__name__)


def run(
    config: str | None,
    overrides: Sequence[str],
    seed: int | None,
    output: str | None,
    as_json: bool,
    jobs: int,
    timeout: int | None,
    start_method: str | None,
    fail_fast: bool,
    pdb: str | None,
    profile: str | None,
    summary: str | None,
    **kwargs: object,
) -> int:
    """Implement the command line interface ``fairscore run``.

    Parameters
    ----------
    config : `str` or `None`
        Experiment TOML file, the bundled synthetic experiment if `None`.
    overrides : `~collections.abc.Sequence` [`str`]
        ``key=value`` overrides.
    seed : `int` or `None`
        Seed override.
    output : `str` or `None`
        Report directory overriding the configured one.
    as_json : `bool`
        Print the summary as JSON instead of a table.
    jobs : `int`
        The number of processes to use.
    timeout : `int` or `None`
        Per-cell timeout for multiprocessing (sec).
    start_method : `str` or `None`
        Start method from `multiprocessing` module.
    fail_fast : `bool`
        If true then stop processing at first error, otherwise process as
        many cells as possible.
    pdb : `str` or `None`
        Debugger to launch for exceptions.
    profile : `str` or `None`
        File name to dump cProfile information to.
    summary : `str` or `None`
        File path to store the execution report in JSON format.
    **kwargs : `dict`
        Ignored.

    Returns
    -------
    exitCode : `int`
        0 if every record succeeded, 2 if some records failed.
    """
    try:
        experiment = load_config(config, overrides, seed)
    except ExperimentConfigError as exc:
        raise click.ClickException(
            f"Configuration has {len(exc.violations)} violation(s):\n" + "\n".join(exc.violations)
        ) from None
    if output is not None:
        experiment.output = output

    try:
        with profile_context(profile, _LOG):
            result = run_experiment(
                experiment,
                numProc=jobs,
                timeout=DEFAULT_TIMEOUT if timeout is None else float(timeout),
                failFast=fail_fast,
                startMethod=start_method,  # type: ignore[arg-type]
                pdb=pdb,
                summary=summary,
            )
        emit_report(result.records, experiment.output)
    except (FairScoreError, OSError) as exc:
        raise click.ClickException(str(exc)) from None

    if as_json:
        echo_json(
            {
                "output": experiment.output,
                "records": len(result.records),
                "failed": result.n_failed,
                "summary": summary_rows(result.records),
            }
        )
    else:
        click.echo("\n".join(summary_table(result.records).pformat(max_lines=-1, max_width=-1)))
    if result.n_failed:
        _LOG.warning("%d of %d records failed, see the records files", result.n_failed, len(result.records))
        return 2
    return 0
