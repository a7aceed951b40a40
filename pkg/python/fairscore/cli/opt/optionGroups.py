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


__all__ = ("config_options", "execution_options")

from lsst.daf.butler.cli.utils import OptionGroup, option_section

from . import options as fairscoreOpts


class config_options(OptionGroup):  # noqa: N801
    """Decorator to add options to a command function for building an
    experiment configuration.
    """

    def __init__(self) -> None:
        self.decorators = [
            option_section(sectionText="Configuration options:"),
            fairscoreOpts.config_option(),
            fairscoreOpts.set_option(),
            fairscoreOpts.seed_option(),
        ]


class execution_options(OptionGroup):  # noqa: N801
    """Decorator to add options to a command function for executing the
    benchmark.
    """

    def __init__(self) -> None:
        self.decorators = [
            option_section(sectionText="Execution options:"),
            fairscoreOpts.jobs_option(),
            fairscoreOpts.timeout_option(),
            fairscoreOpts.start_method_option(),
            fairscoreOpts.fail_fast_option(),
            fairscoreOpts.pdb_option(),
            fairscoreOpts.profile_option(),
            fairscoreOpts.summary_option(),
        ]
