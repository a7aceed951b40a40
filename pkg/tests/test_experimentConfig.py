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


"""Unit tests for experiment configuration loading."""

import importlib.resources
import os
import unittest

from fairscore.configIO import override_mapping, parse_override
from fairscore.errors import ExperimentConfigError
from fairscore.experimentConfig import (
    PROCESSORS,
    ExperimentConfig,
    config_summary,
    load_experiment_config,
    processor_stage,
)
from lsst.daf.butler.tests.utils import makeTestTempDir, removeTestTempDir

TESTDIR = os.path.abspath(os.path.dirname(__file__))

MINIMAL = """
seed = 7

[datasets.credit]
source = "csv"
path = "credit.csv"
schema = "schema.toml"

[cost]
roi = 0.3
"""


class ExperimentConfigTestCase(unittest.TestCase):
    """Tests for TOML loading, overrides and validation."""

    def setUp(self) -> None:
        self.root = makeTestTempDir(TESTDIR)

    def tearDown(self) -> None:
        removeTestTempDir(self.root)

    def write(self, text: str, name: str = "experiment.toml") -> str:
        path = os.path.join(self.root, name)
        with open(path, "w") as stream:
            stream.write(text)
        return path

    def assertViolation(self, text: str, overrides: list[str], expected: str) -> None:
        with self.assertRaises(ExperimentConfigError) as cm:
            load_experiment_config(self.write(text), overrides)
        self.assertIn(expected, cm.exception.violations)

    def test_bundled_demo(self) -> None:
        resource = importlib.resources.files("fairscore.resources").joinpath("synthetic.toml")
        with importlib.resources.as_file(resource) as path:
            config = load_experiment_config(path)
        self.assertEqual(config.seed, 42)
        self.assertEqual(config.split.n_folds, 3)
        self.assertEqual(list(config.processors), list(PROCESSORS))
        self.assertEqual(config.datasets["synthetic"].source, "synthetic")
        self.assertEqual(list(config.preproc.di.repair_level), [0.5, 1.0])
        self.assertEqual(len(config.learners.grid("network", 1)), 1)

    def test_relative_paths(self) -> None:
        config = load_experiment_config(self.write(MINIMAL))
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.datasets["credit"].path, os.path.join(self.root, "credit.csv"))
        self.assertEqual(config.datasets["credit"].schema, os.path.join(self.root, "schema.toml"))
        self.assertEqual(config.cost.to_cost_model().roi, 0.3)
        self.assertEqual(config_summary(config)["seed"], 7)

    def test_check_paths(self) -> None:
        with self.assertRaises(ExperimentConfigError) as cm:
            load_experiment_config(self.write(MINIMAL), check_paths=True)
        self.assertEqual(len(cm.exception.violations), 2)
        self.write("", "credit.csv")
        self.write("", "schema.toml")
        load_experiment_config(os.path.join(self.root, "experiment.toml"), check_paths=True)

    def test_overrides(self) -> None:
        path = self.write(MINIMAL)
        config = load_experiment_config(path, ["seed=11", "cost.p0=0.5", "preproc.di.lambda=0.75"])
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.cost.p0, 0.5)
        self.assertEqual(list(config.preproc.di.repair_level), [0.75])

    def test_violations(self) -> None:
        self.assertViolation(MINIMAL, ["preproc.di.lambda=[0.5, 1.3]"], "preproc.di.lambda: 1.3 out of [0,1]")
        self.assertViolation(MINIMAL, ["inproc.metafair.sigma=[]"], "inproc.metafair.sigma: grid is empty")
        self.assertViolation(MINIMAL, ["processors=['fancy']"], "processors: unknown processor 'fancy'")
        self.assertViolation(MINIMAL + "colour = 1\n", [], "colour: unknown key")
        self.assertViolation(MINIMAL, ["bogus"], "bogus: Override 'bogus' is not of the form key=value")
        self.assertViolation(
            MINIMAL,
            ["postproc.reject_option.lower_bounds=[0.2]", "postproc.reject_option.upper_bounds=[0.1]"],
            "postproc.reject_option: bound [0.2,0.1] is empty",
        )
        self.assertViolation(
            "[datasets.credit]\nsource = 'csv'\n", [], "datasets.credit.path: required for csv sources"
        )

    def test_all_violations_reported(self) -> None:
        with self.assertRaises(ExperimentConfigError) as cm:
            load_experiment_config(
                self.write(MINIMAL), ["inproc.prejudice.eta=[-1]", "learners.names=['forest']"]
            )
        self.assertEqual(len(cm.exception.violations), 2)
        self.assertIn("learners.names: unknown learner 'forest'", cm.exception.violations)

    def test_defaults_need_dataset(self) -> None:
        with self.assertRaises(ExperimentConfigError) as cm:
            load_experiment_config()
        self.assertEqual(cm.exception.violations, ["datasets: no dataset configured"])
        with self.assertRaises(ExperimentConfigError):
            ExperimentConfig().validate()

    def test_cost_violation(self) -> None:
        with self.assertRaises(ExperimentConfigError) as cm:
            load_experiment_config(self.write(MINIMAL), ["cost.p0=0.95"])
        self.assertTrue(cm.exception.violations[0].startswith("cost: "))

    def test_parse_override(self) -> None:
        self.assertEqual(parse_override("cost.roi = 0.25"), ("cost.roi", 0.25))
        self.assertEqual(parse_override("output=reports"), ("output", "reports"))
        self.assertEqual(parse_override("learners.names=['logistic']"), ("learners.names", ["logistic"]))
        with self.assertRaises(ValueError):
            parse_override("=3")
        self.assertEqual(override_mapping("a.b.c", 1), {"a": {"b": {"c": 1}}})

    def test_processor_stage(self) -> None:
        self.assertEqual(processor_stage("reweighing"), "pre")
        self.assertEqual(processor_stage("meta_fair"), "in")
        self.assertEqual(processor_stage("platt_scaling"), "post")
        with self.assertRaises(ValueError):
            processor_stage("baseline")


if __name__ == "__main__":
    unittest.main()
