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


"""Unit tests for the fairscore CLI validate subcommand."""

import json
import os
import unittest

from fairscore.cli.fairscore import cli as fairscore_cli
from lsst.daf.butler.cli.utils import LogCliRunner, clickResultMsg
from lsst.daf.butler.tests.utils import makeTestTempDir, removeTestTempDir

TESTDIR = os.path.abspath(os.path.dirname(__file__))

QUIET = ["--log-level", "fairscore=WARNING"]

BAD_EXPERIMENT = """
[datasets.synthetic]
source = "synthetic"

[preproc.di]
lambda = [0.5, 1.3]

[inproc.metafair]
sigma = []
"""


class ValidateTest(unittest.TestCase):
    """Test executing "fairscore validate" command."""

    def setUp(self) -> None:
        self.runner = LogCliRunner()
        self.root = makeTestTempDir(TESTDIR)

    def tearDown(self) -> None:
        removeTestTempDir(self.root)

    def write(self, text: str) -> str:
        path = os.path.join(self.root, "experiment.toml")
        with open(path, "w") as stream:
            stream.write(text)
        return path

    def test_bundled(self):
        """Validate the bundled synthetic experiment."""
        result = self.runner.invoke(fairscore_cli, QUIET + ["validate"])
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        lines = result.output.splitlines()
        self.assertEqual(lines[0], "OK")
        self.assertIn("seed = 42", lines)
        self.assertIn("split.n_folds = 3", lines)
        self.assertIn('datasets.synthetic.source = "synthetic"', lines)

    def test_overrides(self):
        """Overrides apply left to right, --seed last."""
        result = self.runner.invoke(
            fairscore_cli, QUIET + ["validate", "--set", "seed=5", "--set", "cost.roi=0.3", "--json"]
        )
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        document = json.loads(result.output)
        self.assertEqual(document["status"], "ok")
        self.assertEqual(document["config"]["seed"], 5)
        self.assertEqual(document["config"]["cost"]["roi"], 0.3)

        result = self.runner.invoke(fairscore_cli, QUIET + ["validate", "--set", "seed=5", "--seed", "9"])
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        self.assertIn("seed = 9", result.output.splitlines())

    def test_violations(self):
        """Every violation is listed with its dotted key."""
        path = self.write(BAD_EXPERIMENT)
        result = self.runner.invoke(fairscore_cli, QUIET + ["validate", "-c", path])
        self.assertEqual(result.exit_code, 1, clickResultMsg(result))
        self.assertIn("Configuration has 2 violation(s)", result.output)
        self.assertIn("preproc.di.lambda: 1.3 out of [0,1]", result.output)
        self.assertIn("inproc.metafair.sigma: grid is empty", result.output)

        result = self.runner.invoke(fairscore_cli, QUIET + ["validate", "-c", path, "--json"])
        self.assertEqual(result.exit_code, 1, clickResultMsg(result))
        document = json.loads(result.output)
        self.assertEqual(document["status"], "invalid")
        self.assertEqual(len(document["violations"]), 2)

    def test_missing_dataset_file(self):
        """Dataset files are required to exist."""
        path = self.write('[datasets.credit]\nsource = "csv"\npath = "german.csv"\n')
        result = self.runner.invoke(fairscore_cli, QUIET + ["validate", "-c", path])
        self.assertEqual(result.exit_code, 1, clickResultMsg(result))
        self.assertIn("datasets.credit.path: file", result.output)

    def test_missing_config(self):
        """A configuration file that does not exist is a usage error."""
        result = self.runner.invoke(
            fairscore_cli, QUIET + ["validate", "-c", os.path.join(self.root, "missing.toml")]
        )
        self.assertEqual(result.exit_code, 2, clickResultMsg(result))


if __name__ == "__main__":
    unittest.main()
