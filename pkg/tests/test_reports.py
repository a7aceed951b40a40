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


import unittest

from fairscore.errors import GroupTooSmall
from fairscore.reports import (
    CellReport,
    ExecutionStatus,
    RecordSet,
    ResultRecord,
    RunReport,
)


class ReportsTestCase(unittest.TestCase):
    """A test case for reports module."""

    def test_cellReport(self):
        """Test for CellReport class."""
        cell = "synthetic/logistic/fold0"

        cr = CellReport(cell=cell)
        self.assertEqual(cr.status, ExecutionStatus.SUCCESS)
        self.assertEqual(cr.cell, cell)
        self.assertIsNone(cr.exitCode)
        self.assertIsNone(cr.exceptionInfo)

        cr = CellReport(status=ExecutionStatus.TIMEOUT, cell=cell)
        self.assertEqual(cr.status, ExecutionStatus.TIMEOUT)

        cr = CellReport.from_exception(exception=RuntimeError("runtime error"), cell=cell)
        self.assertEqual(cr.status, ExecutionStatus.FAILURE)
        self.assertIsNone(cr.exitCode)
        self.assertEqual(cr.exceptionInfo.className, "RuntimeError")
        self.assertEqual(cr.exceptionInfo.message, "runtime error")

        cr = CellReport.from_exit_code(exitCode=0, cell=cell)
        self.assertEqual(cr.status, ExecutionStatus.SUCCESS)
        self.assertEqual(cr.exitCode, 0)

        cr = CellReport.from_exit_code(exitCode=-9, cell=cell)
        self.assertEqual(cr.status, ExecutionStatus.FAILURE)
        self.assertEqual(cr.exitCode, -9)
        self.assertIsNone(cr.exceptionInfo)

    def test_resultRecord(self):
        """Test for ResultRecord class."""
        record = ResultRecord(
            dataset="synthetic", processor="reweighing", learner="logistic", fold=1, seed=3, auc=0.7
        )
        self.assertTrue(record.ok)
        self.assertEqual(record.key, ("synthetic", "reweighing", "logistic", 1))
        self.assertEqual(record.metric("auc"), 0.7)
        self.assertIsNone(record.metric("sf"))
        with self.assertRaises(KeyError):
            record.metric("accuracy")

        record = ResultRecord.from_exception(
            GroupTooSmall("group 1 has 1 row"), "synthetic", "di_remover", "network", 0, 3
        )
        self.assertFalse(record.ok)
        self.assertEqual(record.status, ExecutionStatus.FAILURE)
        self.assertEqual(record.exceptionInfo.className, "fairscore.errors.GroupTooSmall")
        self.assertIsNone(record.auc)

    def test_runReport(self):
        """Test for RunReport class."""
        report = RunReport()
        self.assertEqual(report.status, ExecutionStatus.SUCCESS)
        self.assertIsNotNone(report.cmdLine)
        self.assertIsNone(report.exceptionInfo)

        report = RunReport(status=ExecutionStatus.FAILURE, nCells=1)
        report.set_exception(RuntimeError("runtime error"))
        report.cellReports.append(CellReport.from_exit_code(exitCode=1, cell="cell"))
        self.assertEqual(report.exceptionInfo.className, "RuntimeError")
        self.assertEqual(len(report.cellReports), 1)

    def test_json(self):
        """Test for conversion to/from JSON."""
        report = RunReport(status=ExecutionStatus.FAILURE, nCells=2, nRecords=5, nFailedRecords=1)
        report.set_exception(RuntimeError("runtime error"))
        report.cellReports.append(CellReport.from_exception(RuntimeError("runtime error"), cell="cell"))
        json = report.model_dump_json(exclude_none=True, indent=2)
        self.assertIsInstance(json, str)

        report = RunReport.model_validate_json(json)
        self.assertEqual(report.status, ExecutionStatus.FAILURE)
        self.assertEqual(report.nFailedRecords, 1)
        self.assertEqual(report.exceptionInfo.message, "runtime error")
        cr = report.cellReports[0]
        self.assertEqual(cr.cell, "cell")
        self.assertIsNone(cr.exitCode)
        self.assertEqual(cr.exceptionInfo.className, "RuntimeError")

        records = RecordSet(
            records=[
                ResultRecord(
                    dataset="d",
                    processor="unconstrained",
                    learner="logistic",
                    fold=0,
                    seed=1,
                    parameters={"l2_decay": 0.001},
                    sf=None,
                    undefined={"sf": "DegenerateFM"},
                )
            ]
        )
        restored = RecordSet.model_validate_json(records.model_dump_json())
        self.assertEqual(restored, records)
        self.assertEqual(restored.schema_version, 1)


if __name__ == "__main__":
    unittest.main()
