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
    "RECORDS_SCHEMA_VERSION",
    "CellReport",
    "ExceptionInfo",
    "ExecutionStatus",
    "RecordSet",
    "ResultRecord",
    "RunReport",
]

import enum
import sys
from typing import Any

import pydantic
from lsst.utils.introspection import get_full_type_name

RECORDS_SCHEMA_VERSION = 1

METRIC_NAMES = ("auc", "emp", "profit_raw", "profit_normalized", "acceptance_rate", "ind", "sp", "sf")


class ExecutionStatus(enum.Enum):
    """Possible values for cell execution status.

    Status `FAILURE` is set if one or more cells failed. Status `TIMEOUT` is
    set if there are no failures but one or more cells timed out. Timeouts
    can only be detected in multi-process mode, the child process is killed
    on timeout.
    """

    SUCCESS = "success"
    FAILURE = "failure"
    TIMEOUT = "timeout"
    SKIPPED = "skipped"


class ExceptionInfo(pydantic.BaseModel):
    """Information about exception."""

    className: str
    """Fully qualified name of the exception class."""

    message: str
    """Exception message."""

    @classmethod
    def from_exception(cls, exception: BaseException) -> ExceptionInfo:
        """Construct instance from an exception.

        Parameters
        ----------
        exception : `Exception`
            Exception to wrap.

        Returns
        -------
        info : `ExceptionInfo`
            Information about the exception.
        """
        return cls(className=get_full_type_name(exception), message=str(exception))


class ResultRecord(pydantic.BaseModel):
    """Test-set evaluation of one (dataset, processor, learner, fold) cell.

    Metrics are `None` when undefined; the name of the error making them
    undefined is kept in `undefined`.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    dataset: str
    processor: str
    """Processor name, ``unconstrained`` for the baseline."""

    learner: str
    """Learner name, ``self`` for in-processors."""

    fold: int
    seed: int
    status: ExecutionStatus = ExecutionStatus.SUCCESS
    parameters: dict[str, float | int | str | bool] = pydantic.Field(default_factory=dict)
    """Selected meta-parameters."""

    auc: float | None = None
    emp: float | None = None
    profit_raw: float | None = None
    profit_normalized: float | None = None
    acceptance_rate: float | None = None
    ind: float | None = None
    sp: float | None = None
    sf: float | None = None
    undefined: dict[str, str] = pydantic.Field(default_factory=dict)
    exceptionInfo: ExceptionInfo | None = None

    @property
    def key(self) -> tuple[str, str, str, int]:
        return self.dataset, self.processor, self.learner, self.fold

    @property
    def ok(self) -> bool:
        return self.status == ExecutionStatus.SUCCESS

    def metric(self, name: str) -> float | None:
        """Return a metric by name."""
        if name not in METRIC_NAMES:
            raise KeyError(f"Unknown metric {name!r}")
        return getattr(self, name)

    @classmethod
    def from_exception(
        cls, exception: BaseException, dataset: str, processor: str, learner: str, fold: int, seed: int
    ) -> ResultRecord:
        """Construct a failed record from an exception."""
        return cls(
            dataset=dataset,
            processor=processor,
            learner=learner,
            fold=fold,
            seed=seed,
            status=ExecutionStatus.FAILURE,
            exceptionInfo=ExceptionInfo.from_exception(exception),
        )


class RecordSet(pydantic.BaseModel):
    """Versioned collection of records, the JSON report layout."""

    schema_version: int = RECORDS_SCHEMA_VERSION
    records: list[ResultRecord] = []


class CellReport(pydantic.BaseModel):
    """Execution report of a single benchmark cell.

    Parameters
    ----------
    cell : `str`
        Cell label.
    status : `ExecutionStatus`
        Status of this cell execution.
    exitCode : `int` or `None`, optional
        Exit code of the sub-process executing this cell, `None` for
        in-process execution. Negative if process was killed by a signal.
    exceptionInfo : `ExceptionInfo` or `None`, optional
        Exception information if an exception was raised.
    """

    cell: str
    status: ExecutionStatus = ExecutionStatus.SUCCESS
    nRecords: int = 0
    nFailed: int = 0
    exitCode: int | None = None
    exceptionInfo: ExceptionInfo | None = None
    seconds: float | None = None

    @classmethod
    def from_exception(
        cls, exception: BaseException, cell: str, *, exitCode: int | None = None
    ) -> CellReport:
        """Construct report instance from an exception.

        Parameters
        ----------
        exception : `Exception`
            Exception caught from processing the cell.
        cell : `str`
            Cell label.
        exitCode : `int`, optional
            Exit code for the process, if known.
        """
        return cls(
            cell=cell,
            status=ExecutionStatus.FAILURE,
            exitCode=exitCode,
            exceptionInfo=ExceptionInfo.from_exception(exception),
        )

    @classmethod
    def from_exit_code(cls, exitCode: int, cell: str) -> CellReport:
        """Construct report instance from the exit code of a sub-process."""
        return cls(
            cell=cell,
            status=ExecutionStatus.SUCCESS if exitCode == 0 else ExecutionStatus.FAILURE,
            exitCode=exitCode,
        )


class RunReport(pydantic.BaseModel):
    """Execution report of a whole benchmark run."""

    status: ExecutionStatus = ExecutionStatus.SUCCESS
    """Run status."""

    cmdLine: list[str] | None = None
    """Command line for the whole run."""

    nCells: int = 0
    nRecords: int = 0
    nFailedRecords: int = 0

    exceptionInfo: ExceptionInfo | None = None
    """Exception information if exception was raised."""

    cellReports: list[CellReport] = []
    """Per-cell reports, ordering is not specified."""

    # Always want to validate the default value for cmdLine so
    # use a model_validator.
    @pydantic.model_validator(mode="before")
    @classmethod
    def _set_cmdLine(cls, data: Any) -> Any:
        if data.get("cmdLine") is None:
            data["cmdLine"] = sys.argv
        return data

    def set_exception(self, exception: BaseException) -> None:
        """Update exception information from an exception object.

        Parameters
        ----------
        exception : `Exception`
            Exception to use to extract information from.
        """
        self.exceptionInfo = ExceptionInfo.from_exception(exception)
