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
    "config_option",
    "cutoff_option",
    "fail_fast_option",
    "jobs_option",
    "json_option",
    "output_option",
    "pdb_option",
    "profile_option",
    "seed_option",
    "set_option",
    "start_method_option",
    "summary_option",
    "timeout_option",
]

import click
from lsst.daf.butler.cli.utils import MWOptionDecorator, MWPath, unwrap

config_option = MWOptionDecorator(
    "-c",
    "--config",
    help="Experiment configuration in TOML format.",
    type=MWPath(exists=True, file_okay=True, dir_okay=False, readable=True),
)


set_option = MWOptionDecorator(
    "--set",
    "overrides",
    help=unwrap(
        """Override a configuration value, e.g. --set cost.roi=0.3. The value
        is parsed as a TOML literal; may be given multiple times."""
    ),
    metavar="KEY=VALUE",
    multiple=True,
)


jobs_option = MWOptionDecorator(
    "-j",
    "--jobs",
    default=1,
    envvar="FAIRSCORE_JOBS",
    show_envvar=True,
    help="Number of processes executing benchmark cells.",
    type=click.IntRange(min=1),
)


json_option = MWOptionDecorator(
    "--json", "as_json", help="Print machine-readable JSON instead of a table.", is_flag=True
)


seed_option = MWOptionDecorator(
    "--seed", help="Seed of splits and training, same as --set seed=N.", type=int, default=None
)


cutoff_option = MWOptionDecorator(
    "--cutoff",
    default="auto",
    help="Score cutoff in [0,1], or 'auto' for the operating cutoff of the cost model.",
    metavar="TAU|auto",
)


output_option = MWOptionDecorator(
    "-o",
    "--output",
    help="Output location; overrides the configured report directory for 'run'.",
    type=MWPath(file_okay=True, dir_okay=True, writable=True),
)


summary_option = MWOptionDecorator(
    "--summary",
    help=(
        "Location for storing execution summary (JSON file). Note that the"
        " structure of this file may not be stable."
    ),
    type=MWPath(dir_okay=False, file_okay=True, writable=True),
)


profile_option = MWOptionDecorator(
    "--profile", help="Dump cProfile statistics to file name.", type=MWPath(file_okay=True, dir_okay=False)
)


pdb_option = MWOptionDecorator(
    "--pdb",
    help="Post-mortem debugger to launch for exceptions (defaults to pdb if unspecified; requires a tty).",
    is_flag=False,
    flag_value="pdb",
    default=None,
)


timeout_option = MWOptionDecorator(
    "--timeout", type=click.IntRange(min=0), help="Timeout of a cell with multiprocessing (sec)."
)


start_method_option = MWOptionDecorator(
    "--start-method",
    default=None,
    type=click.Choice(choices=["spawn", "forkserver"]),
    help="Multiprocessing start method, default is spawn.",
)


fail_fast_option = MWOptionDecorator(
    "--fail-fast",
    help="Stop processing at first error, default is to process as many cells as possible.",
    is_flag=True,
)
