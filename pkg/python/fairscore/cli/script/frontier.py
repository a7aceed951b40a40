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


import dataclasses

import click
from lsst.utils.logging import getLogger

from ...bench import frontier_frame, pareto_frontier, read_frontier_points, write_frontier
from ...errors import SchemaMismatch
from ..utils import echo_json

_LOG = getLogger(__name__)


def frontier(records: str, output: str | None, as_json: bool, **kwargs: object) -> int:
    """Implement the command line interface ``fairscore frontier``.

    Parameters
    ----------
    records : `str`
        Records or frontier CSV file.
    output : `str` or `None`
        Frontier CSV file; printed to standard output if `None`.
    as_json : `bool`
        Print the frontier and counts as JSON instead of CSV.
    **kwargs : `dict`
        Ignored.

    Returns
    -------
    exitCode : `int`
        0, or 3 if the file holds no usable point.
    """
    try:
        points = read_frontier_points(records)
    except SchemaMismatch as exc:
        raise click.ClickException(str(exc)) from None
    front = pareto_frontier(points)
    nDominated = len(points) - len(front)
    if output is not None:
        try:
            write_frontier(front, output)
        except OSError as exc:
            raise click.ClickException(f"Cannot write {output}: {exc}") from None

    if as_json:
        echo_json(
            {
                "points": len(points),
                "dominated": nDominated,
                "frontier": [dataclasses.asdict(point) for point in front],
            }
        )
    elif output is not None:
        click.echo(f"{len(front)} of {len(points)} points on the frontier, {nDominated} dominated")
    else:
        click.echo(frontier_frame(front).to_csv(index=False, lineterminator="\n"), nl=False)
        _LOG.info("%d of %d points on the frontier, %d dominated", len(front), len(points), nDominated)
    if not points:
        _LOG.warning("No successful record with profit and separation in %s", records)
        return 3
    return 0
