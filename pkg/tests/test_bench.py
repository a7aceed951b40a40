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


"""Unit tests for aggregation and report files of benchmark records."""

import itertools
import json
import os
import unittest

import numpy as np
from fairscore.bench import (
    FrontierPoint,
    aggregate_gains,
    emit_report,
    pareto_frontier,
    rank_correlation,
    read_frontier_points,
    read_records,
    run_experiment,
    sort_records,
    summary_rows,
    summary_table,
)
from fairscore.errors import MissingBaseline, SchemaMismatch, TooFewRecords
from fairscore.experimentConfig import load_experiment_config
from fairscore.reports import ExecutionStatus, ResultRecord
from lsst.daf.butler.tests.utils import makeTestTempDir, removeTestTempDir

TESTDIR = os.path.abspath(os.path.dirname(__file__))


def rec(
    processor: str, learner: str = "logistic", fold: int = 0, dataset: str = "d", **metrics
) -> ResultRecord:
    """Return a successful record with the given metrics."""
    return ResultRecord(dataset=dataset, processor=processor, learner=learner, fold=fold, seed=1, **metrics)


def failed(processor: str, learner: str = "logistic", fold: int = 0) -> ResultRecord:
    return ResultRecord.from_exception(ValueError("expected failure"), "d", processor, learner, fold, 1)


def dominated(p: FrontierPoint, q: FrontierPoint) -> bool:
    """Return whether ``q`` dominates ``p``."""
    at_least = q.profit_raw >= p.profit_raw and q.sp <= p.sp
    return at_least and (q.profit_raw > p.profit_raw or q.sp < p.sp)


class GainsTestCase(unittest.TestCase):
    """Tests for relative gains."""

    def test_relative(self) -> None:
        records = [
            rec("unconstrained", auc=0.8, sp=0.2, ind=0.0),
            rec("reweighing", auc=0.72, sp=0.1, ind=0.05),
            rec("unconstrained", fold=1, auc=0.5, sp=0.4, ind=0.0),
            rec("reweighing", fold=1, auc=0.55, sp=0.4, ind=0.0),
        ]
        rows = {row.processor: row for row in aggregate_gains(records)}
        self.assertEqual(list(rows), ["unconstrained", "reweighing"])
        row = rows["reweighing"]
        self.assertEqual(row.n_cells, 2)
        self.assertEqual(row.n_excluded, 0)
        # IND baselines are zero in both folds.
        self.assertEqual(row.n_absolute, 2)
        self.assertAlmostEqual(row.gains["auc"], 0.0, places=12)
        self.assertAlmostEqual(row.gains["sp"], 0.25, places=12)
        self.assertAlmostEqual(row.gains["ind"], -0.025, places=12)
        self.assertIsNone(row.gains["sf"])
        self.assertEqual(rows["unconstrained"].gains["auc"], 0.0)

    def test_inprocessor_baseline(self) -> None:
        records = [
            rec("unconstrained", "logistic", auc=0.8),
            rec("unconstrained", "network", auc=0.6),
            rec("meta_fair", "self", auc=0.77),
            failed("meta_fair", "self", fold=1),
            failed("platt_scaling"),
        ]
        rows = {row.processor: row for row in aggregate_gains(records)}
        self.assertAlmostEqual(rows["meta_fair"].gains["auc"], 0.1, places=12)
        self.assertEqual(rows["meta_fair"].n_excluded, 1)
        self.assertEqual(rows["platt_scaling"].n_cells, 0)
        self.assertEqual(rows["platt_scaling"].n_excluded, 1)
        self.assertIsNone(rows["platt_scaling"].gains["auc"])

    def test_missing_baseline(self) -> None:
        with self.assertRaises(MissingBaseline):
            aggregate_gains([rec("reweighing", auc=0.7)])
        with self.assertRaises(MissingBaseline):
            aggregate_gains([failed("unconstrained"), rec("adversarial", "self", auc=0.7)])


class CorrelationTestCase(unittest.TestCase):
    """Tests for rank correlations."""

    def test_spearman(self) -> None:
        records = [
            rec("unconstrained", fold=i, auc=0.6 + i / 20, profit_raw=i / 100, sp=i / 10, ind=0.3 - i / 10)
            for i in range(4)
        ]
        names, matrix = rank_correlation(records, ("auc", "profit_raw", "sp", "ind", "sf"))
        self.assertEqual(names, ("auc", "profit_raw", "sp", "ind", "sf"))
        self.assertAlmostEqual(matrix[0, 0], 1.0)
        self.assertAlmostEqual(matrix[0, 1], 1.0)
        # Higher SP is worse, so rising SP correlates negatively.
        self.assertAlmostEqual(matrix[0, 2], -1.0)
        self.assertAlmostEqual(matrix[0, 3], 1.0)
        self.assertTrue(np.isnan(matrix[0, 4]))
        np.testing.assert_allclose(matrix[:4, :4], matrix[:4, :4].T)

    def test_average_over_datasets(self) -> None:
        records = [rec("unconstrained", fold=i, dataset="a", auc=i, profit_raw=i) for i in range(3)]
        records += [rec("unconstrained", fold=i, dataset="b", auc=i, profit_raw=-i) for i in range(3)]
        _, matrix = rank_correlation(records, ("auc", "profit_raw"))
        self.assertAlmostEqual(matrix[0, 1], 0.0)

    def test_too_few(self) -> None:
        with self.assertRaises(TooFewRecords):
            rank_correlation([rec("unconstrained", auc=0.5), rec("reweighing", auc=0.6), failed("platt")])


class FrontierTestCase(unittest.TestCase):
    """Tests for the profit/separation frontier."""

    def test_brute_force(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 25))
            points = [
                FrontierPoint("d", "p", "l", i, float(profit) / 10, float(sp) / 10)
                for i, (profit, sp) in enumerate(rng.integers(0, 6, size=(n, 2)))
            ]
            frontier = pareto_frontier(points)
            expected = [p for p in points if not any(dominated(p, q) for q in points)]
            self.assertCountEqual(frontier, expected)
            keys = [(-p.profit_raw, p.sp) for p in frontier]
            self.assertEqual(keys, sorted(keys))
            self.assertEqual(pareto_frontier(frontier), frontier)

    def test_records(self) -> None:
        records = [
            rec("unconstrained", profit_raw=0.1, sp=0.2),
            rec("reweighing", profit_raw=0.05, sp=0.3),
            rec("platt_scaling", profit_raw=0.02, sp=0.05),
            rec("di_remover", profit_raw=0.3),
            failed("meta_fair"),
        ]
        frontier = pareto_frontier(records)
        self.assertEqual([p.processor for p in frontier], ["unconstrained", "platt_scaling"])
        self.assertEqual(pareto_frontier([]), [])

    def test_identical_points(self) -> None:
        a = FrontierPoint("d", "a", "l", 0, 0.1, 0.1)
        b = FrontierPoint("d", "b", "l", 0, 0.1, 0.1)
        self.assertEqual(pareto_frontier([b, a]), [a, b])


class ReportFilesTestCase(unittest.TestCase):
    """Tests for writing and reading report files."""

    def setUp(self) -> None:
        self.root = makeTestTempDir(TESTDIR)
        self.records = [
            rec(
                "unconstrained",
                auc=0.75,
                profit_raw=0.0123456789,
                sp=0.2,
                ind=0.1,
                sf=None,
                parameters={"l2_decay": 0.001},
                undefined={"sf": "DegenerateFM"},
            ),
            rec("unconstrained", fold=1, auc=0.7, profit_raw=0.01, sp=0.25, ind=0.12, sf=0.05),
            rec("reweighing", auc=0.74, profit_raw=0.02, sp=0.1, ind=0.0, sf=0.07, parameters={"mode": "w"}),
            rec(
                "reject_option",
                auc=0.6,
                profit_raw=0.015,
                sp=0.05,
                ind=0.01,
                sf=0.03,
                parameters={"theta": 0.7, "satisfied": True},
            ),
            failed("di_remover", fold=1),
        ]

    def tearDown(self) -> None:
        removeTestTempDir(self.root)

    def test_round_trip(self) -> None:
        paths = emit_report(self.records, os.path.join(self.root, "out"))
        for path in paths.values():
            self.assertTrue(path.is_file(), path)
        self.assertEqual(read_records(paths["records_csv"]), self.records)
        self.assertEqual(read_records(paths["records_json"]), self.records)
        with open(paths["records_json"]) as stream:
            self.assertEqual(json.load(stream)["schema_version"], 1)

        points = read_frontier_points(paths["records_csv"])
        self.assertEqual(len(points), 4)
        frontier = read_frontier_points(paths["frontier"])
        self.assertEqual(frontier, pareto_frontier(self.records))
        self.assertEqual([p.processor for p in frontier], ["reweighing", "reject_option"])

    def test_header_only(self) -> None:
        output = os.path.join(self.root, "out")
        with self.assertLogs("fairscore.bench", level="WARNING") as cm:
            paths = emit_report([rec("reweighing", auc=0.7)], output)
        self.assertEqual(len(cm.output), 2)
        with open(paths["gains"]) as stream:
            self.assertEqual(len(stream.read().splitlines()), 1)
        with open(paths["correlations"]) as stream:
            self.assertEqual(stream.readline().strip(), "metric,auc,profit_raw,ind,sp,sf")

    def test_write_error(self) -> None:
        blocker = os.path.join(self.root, "file")
        with open(blocker, "w") as stream:
            stream.write("x")
        with self.assertRaisesRegex(OSError, "Cannot write report file"):
            emit_report(self.records, blocker)

    def test_schema_mismatch(self) -> None:
        path = os.path.join(self.root, "bad.csv")
        with open(path, "w") as stream:
            stream.write("dataset,processor\nd,p\n")
        with self.assertRaises(SchemaMismatch):
            read_records(path)
        with self.assertRaises(SchemaMismatch):
            read_frontier_points(path)

        path = os.path.join(self.root, "bad.json")
        with open(path, "w") as stream:
            stream.write('{"schema_version": 2, "records": []}')
        with self.assertRaises(SchemaMismatch):
            read_records(path)

        path = os.path.join(self.root, "empty.csv")
        open(path, "w").close()
        with self.assertRaises(SchemaMismatch):
            read_records(path)


class SummaryTestCase(unittest.TestCase):
    """Tests for ordering and summaries of records."""

    def test_sort(self) -> None:
        records = [
            rec("platt_scaling"),
            rec("unconstrained", fold=1),
            rec("reweighing", "network"),
            rec("unconstrained"),
            rec("reweighing", "logistic", dataset="a"),
        ]
        keys = [r.key for r in sort_records(records)]
        self.assertEqual(
            keys,
            [
                ("a", "reweighing", "logistic", 0),
                ("d", "unconstrained", "logistic", 0),
                ("d", "unconstrained", "logistic", 1),
                ("d", "reweighing", "network", 0),
                ("d", "platt_scaling", "logistic", 0),
            ],
        )
        for permutation in itertools.permutations(records):
            self.assertEqual(sort_records(permutation), sort_records(records))

    def test_summary(self) -> None:
        records = [
            rec("unconstrained", auc=0.7, sp=0.1),
            rec("unconstrained", fold=1, auc=0.8, sp=None),
            failed("unconstrained", fold=2),
        ]
        (row,) = summary_rows(records)
        self.assertEqual(row["Processor"], "unconstrained")
        self.assertEqual(row["Cells"], 2)
        self.assertEqual(row["Failed"], 1)
        self.assertEqual(row["AUC"], 0.75)
        self.assertEqual(row["SP"], 0.1)
        self.assertIsNone(row["SF"])
        table = summary_table(records)
        self.assertEqual(len(table), 1)
        self.assertTrue(np.isnan(table["SF"][0]))
        self.assertEqual(len(summary_table([])), 0)


class RunExperimentTestCase(unittest.TestCase):
    """End-to-end run of a small synthetic benchmark."""

    def setUp(self) -> None:
        self.root = makeTestTempDir(TESTDIR)

    def tearDown(self) -> None:
        removeTestTempDir(self.root)

    def test_run(self) -> None:
        config = load_experiment_config(
            None,
            [
                "datasets.synth.source=synthetic",
                "datasets.synth.synthetic.n_rows=300",
                "split.n_folds=2",
                "learners.names=['logistic']",
                "learners.logistic.max_iterations=200",
                "processors=['di_remover', 'meta_fair', 'platt_scaling']",
                "preproc.di.lambda=[1.0]",
                "inproc.metafair.sigma=[0.8]",
                "inproc.metafair.stages=2",
            ],
        )
        summary = os.path.join(self.root, "summary.json")
        result = run_experiment(config, summary=summary)
        self.assertEqual(len(result.records), 8)
        self.assertEqual(result.records, sort_records(result.records))
        self.assertEqual(result.n_failed, 0, [r.exceptionInfo for r in result.records if not r.ok])
        self.assertEqual(result.report.status, ExecutionStatus.SUCCESS)
        self.assertEqual(result.report.nCells, 4)
        with open(summary) as stream:
            self.assertEqual(json.load(stream)["nRecords"], 8)
        processors = [r.processor for r in result.records if r.fold == 0]
        self.assertEqual(processors, ["unconstrained", "di_remover", "meta_fair", "platt_scaling"])

        again = run_experiment(config)
        self.assertEqual(again.records, result.records)


if __name__ == "__main__":
    unittest.main()
