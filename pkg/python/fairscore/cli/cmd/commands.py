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


import sys
from typing import Any

import click
from lsst.daf.butler.cli.utils import catch_and_exit, unwrap

from .. import opt as fairscoreOpts
from .. import script
from ..utils import FairscoreCommand

epilog = unwrap(
    """Notes:

Without --config the bundled synthetic experiment is used. --set can appear
multiple times; overrides apply in order left to right, after the file and
before --seed.
"""
)


@click.command(cls=FairscoreCommand, epilog=epilog, short_help="Check an experiment configuration.")
@fairscoreOpts.config_options()
@fairscoreOpts.json_option()
@catch_and_exit
def validate(**kwargs: Any) -> None:
    """Validate an experiment configuration.

    Every violation is listed with its dotted key; a valid configuration
    prints OK followed by the effective settings, defaults included.
    """
    sys.exit(script.validate(**kwargs))


@click.command(cls=FairscoreCommand, epilog=epilog, short_help="Run the benchmark.")
@fairscoreOpts.config_options()
@fairscoreOpts.output_option(help="Report directory, overrides the configured output.")
@fairscoreOpts.json_option(help="Print the run summary as JSON instead of a table.")
@fairscoreOpts.execution_options()
@catch_and_exit
def run(**kwargs: Any) -> None:
    """Run the benchmark and write the report files.

    Exits with 2 if some records failed.
    """
    sys.exit(script.run(**kwargs))


@click.command(cls=FairscoreCommand, short_help="Evaluate a score file.")
@fairscoreOpts.scores_argument(required=True)
@fairscoreOpts.cutoff_option()
@fairscoreOpts.config_option(help="TOML file whose [cost] table sets the profit model.")
@fairscoreOpts.set_option(help="Override a cost setting, e.g. --set cost.roi=0.3.")
@fairscoreOpts.json_option()
@catch_and_exit
def audit(**kwargs: Any) -> None:
    """Report fairness, AUC and profit of externally produced scores.

    SCORES is a CSV file with the header score,label,sensitive.
    """
    script.audit(**kwargs)


@click.command(cls=FairscoreCommand, short_help="Compute the profit/separation frontier.")
@fairscoreOpts.records_argument(required=True)
@fairscoreOpts.output_option(help="Frontier CSV file, printed to standard output if not given.")
@fairscoreOpts.json_option()
@catch_and_exit
def frontier(**kwargs: Any) -> None:
    """Select results not dominated in profit and separation.

    RECORDS is a records or frontier CSV file written by 'fairscore run'.
    Exits with 3 if the file holds no usable result.
    """
    sys.exit(script.frontier(**kwargs))
