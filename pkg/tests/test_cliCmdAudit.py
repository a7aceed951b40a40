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


"""Unit tests for the fairscore CLI audit subcommand."""

import json
import os
import unittest

from fairscore.cli.fairscore import cli as fairscore_cli
from lsst.daf.butler.cli.utils import LogCliRunner, clickResultMsg

TESTDIR = os.path.abspath(os.path.dirname(__file__))
DATADIR = os.path.join(TESTDIR, "data")

QUIET = ["--log-level", "fairscore=WARNING"]

# Operating cutoff of the default cost model.
TAU = 0.275 / 0.8078


class AuditTest(unittest.TestCase):
    """Test executing "fairscore audit" command."""

    def setUp(self) -> None:
        self.runner = LogCliRunner()

    def audit(self, name: str, *args: str):
        return self.runner.invoke(fairscore_cli, QUIET + ["audit", os.path.join(DATADIR, name), *args])

    def test_json(self):
        """Audit the score fixture at the operating cutoff."""
        result = self.audit("audit_scores.csv", "--json")
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        document = json.loads(result.output)
        self.assertEqual(document["n"], 8)
        self.assertAlmostEqual(document["cutoff"], TAU, places=4)
        metrics = document["metrics"]
        self.assertAlmostEqual(metrics["ind"], 0.25)
        self.assertAlmostEqual(metrics["sp"], 0.25)
        self.assertAlmostEqual(metrics["sf"], 0.5)
        self.assertAlmostEqual(metrics["auc"], 11.5 / 16)
        self.assertAlmostEqual(metrics["acceptance_rate"], 0.375)
        self.assertAlmostEqual(metrics["profit_raw"], -0.034375)

    def test_fair(self):
        """Equal acceptance and error rates give zero unfairness."""
        result = self.audit("audit_fair.csv", "--json")
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        metrics = json.loads(result.output)["metrics"]
        for name in ("ind", "sp", "sf"):
            self.assertAlmostEqual(metrics[name], 0.0, msg=name)

    def test_table(self):
        result = self.audit("audit_scores.csv")
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        self.assertIn("Metric", result.output)
        lines = [line.split() for line in result.output.splitlines()]
        self.assertIn(["IND", "0.250000"], lines)
        self.assertIn(["Rows", "8"], lines)

    def test_cutoff(self):
        """Explicit cutoff and cost overrides."""
        result = self.audit("audit_scores.csv", "--cutoff", "0.95", "--json")
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        document = json.loads(result.output)
        self.assertEqual(document["cutoff"], 0.95)
        self.assertEqual(document["metrics"]["acceptance_rate"], 0.0)

        result = self.audit("audit_scores.csv", "--set", "cost.roi=0.5", "--json")
        self.assertEqual(result.exit_code, 0, clickResultMsg(result))
        self.assertAlmostEqual(json.loads(result.output)["cutoff"], 0.275 / 1.275, places=4)

    def test_errors(self):
        result = self.audit("audit_bad.csv")
        self.assertEqual(result.exit_code, 1, clickResultMsg(result))
        self.assertIn("line 7: score out of [0,1]", result.output)

        result = self.audit("audit_scores.csv", "--cutoff", "1.5")
        self.assertEqual(result.exit_code, 1, clickResultMsg(result))
        self.assertIn("Cutoff 1.5 out of [0,1]", result.output)

        result = self.audit("audit_scores.csv", "--set", "seed=3")
        self.assertEqual(result.exit_code, 1, clickResultMsg(result))
        self.assertIn("seed: only cost settings apply here", result.output)

        result = self.audit("no_such_file.csv")
        self.assertEqual(result.exit_code, 2, clickResultMsg(result))


if __name__ == "__main__":
    unittest.main()
