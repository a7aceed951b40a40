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

__all__ = ["MPCellExecutor", "MPCellExecutorError", "MPTimeoutError"]

import importlib
import multiprocessing
import pickle
import signal
import sys
import threading
import time
from collections.abc import Iterable
from enum import Enum
from typing import Literal

from lsst.daf.butler.cli.cliLog import CliLog
from lsst.utils.logging import getLogger
from lsst.utils.threads import disable_implicit_threading

from .cellExecutor import BenchCell, CellExecutor
from .reports import CellReport, ExecutionStatus, ResultRecord, RunReport

_LOG = getLogger(__name__)


# Possible states for the executing cell:
#  - PENDING: job has not started yet
#  - RUNNING: job is currently executing
#  - FINISHED: job finished successfully
#  - FAILED: job execution failed (process returned non-zero status)
#  - TIMED_OUT: job is killed due to too long execution time
JobState = Enum("JobState", "PENDING RUNNING FINISHED FAILED TIMED_OUT")


class _Job:
    """Class representing a job running a single cell.

    Parameters
    ----------
    cell : `BenchCell`
        Cell to execute.
    """

    def __init__(self, cell: BenchCell):
        self.cell = cell
        self.process: multiprocessing.process.BaseProcess | None = None
        self._state = JobState.PENDING
        self.started: float = 0.0
        self._rcv_conn: multiprocessing.connection.Connection | None = None
        self._terminated = False
        self.records: list[ResultRecord] | None = None
        self._payload: tuple[list[ResultRecord] | None, CellReport] | None = None

    @property
    def state(self) -> JobState:
        """Job processing state (JobState)."""
        return self._state

    @property
    def terminated(self) -> bool:
        """Return `True` if job was killed by stop() method and negative exit
        code is returned from child process (`bool`).
        """
        if self._terminated:
            assert self.process is not None, "Process must be started"
            if self.process.exitcode is not None:
                return self.process.exitcode < 0
        return False

    def start(
        self,
        cellExecutor: CellExecutor,
        startMethod: Literal["spawn"] | Literal["forkserver"],
    ) -> None:
        """Start process which runs the cell.

        Parameters
        ----------
        cellExecutor : `CellExecutor`
            Executor for single cell.
        startMethod : `str`, optional
            Start method from `multiprocessing` module.
        """
        # Logging has to be set up before unpickling anything that can
        # generate messages, this is why things are pickled manually here.
        executor_pickle = pickle.dumps(cellExecutor)
        cell_pickle = pickle.dumps(self.cell)
        self._rcv_conn, snd_conn = multiprocessing.Pipe(False)
        logConfigState = CliLog.configState

        mp_ctx = multiprocessing.get_context(startMethod)
        self.process = mp_ctx.Process(  # type: ignore[attr-defined]
            target=_Job._executeJob,
            args=(executor_pickle, cell_pickle, logConfigState, snd_conn),
            name=f"cell-{self.cell.label}",
        )
        # mypy is getting confused by multiprocessing.
        assert self.process is not None
        self.process.start()
        self.started = time.time()
        self._state = JobState.RUNNING

    @staticmethod
    def _executeJob(
        executor_pickle: bytes,
        cell_pickle: bytes,
        logConfigState: list,
        snd_conn: multiprocessing.connection.Connection,
    ) -> None:
        """Execute a job with arguments.

        Parameters
        ----------
        executor_pickle : `bytes`
            Executor for single cell, pickled.
        cell_pickle : `bytes`
            Cell to execute, pickled.
        logConfigState : `list`
            Logging state from parent process.
        snd_conn : `multiprocessing.Connection`
            Connection to send records and report to parent process.
        """
        # Workaround for https://github.com/python/cpython/issues/102512.
        thread = threading.current_thread()
        if isinstance(thread, threading._DummyThread):
            if getattr(thread, "_tstate_lock", "") is None:
                thread._set_tstate_lock()  # type: ignore[attr-defined]

        if logConfigState and not CliLog.configState:
            # means that we are in a new spawned Python process and we have to
            # re-initialize logging
            CliLog.replayConfigState(logConfigState)

        disable_implicit_threading()
        cellExecutor: CellExecutor = pickle.loads(executor_pickle)
        cell: BenchCell = pickle.loads(cell_pickle)
        payload: tuple[list[ResultRecord] | None, CellReport] | None = None
        try:
            records, report = cellExecutor.execute(cell)
            payload = (records, report)
        except Exception as exc:
            _LOG.debug("exception from cell %s: %s", cell.label, exc)
            payload = (None, CellReport.from_exception(exc, cell.label))
            raise
        finally:
            if payload is not None:
                # If sending fails we do not want this new exception to be
                # exposed.
                try:
                    _LOG.debug("sending report for cell %s", cell.label)
                    snd_conn.send(payload)
                except Exception:
                    pass

    def stop(self) -> None:
        """Stop the process."""
        assert self.process is not None, "Process must be started"
        self.process.terminate()
        # give it 1 second to finish or KILL
        for _ in range(10):
            time.sleep(0.1)
            if not self.process.is_alive():
                break
        else:
            _LOG.debug("Killing process %s", self.process.name)
            self.process.kill()
        self._terminated = True

    def cleanup(self) -> None:
        """Release processes resources, has to be called for each finished
        process.
        """
        if self.process and not self.process.is_alive():
            self.process.close()
            self.process = None
            self._rcv_conn = None

    def receive(self) -> None:
        """Read the records and report if the child has sent them.

        Reading while the child runs keeps it from blocking on a full pipe.
        """
        if self._payload is None and self._rcv_conn is not None and self._rcv_conn.poll():
            self._payload = self._rcv_conn.recv()

    def report(self) -> CellReport:
        """Return cell report, should be called after process finishes and
        before cleanup(). Records sent by the child are kept in `records`.
        """
        assert self.process is not None, "Process must be started"
        assert self._rcv_conn is not None, "Process must be started"
        try:
            self.receive()
            if self._payload is None:
                raise EOFError("no report received")
            self.records, report = self._payload
            report.exitCode = self.process.exitcode
        except Exception:
            # Likely due to the process killed, but there may be other reasons.
            exitcode = self.process.exitcode if self.process.exitcode is not None else -1
            report = CellReport.from_exit_code(exitCode=exitcode, cell=self.cell.label)
        if self.terminated:
            # Means it was killed, assume it's due to timeout
            report.status = ExecutionStatus.TIMEOUT
        return report

    def failMessage(self) -> str:
        """Return a message describing cell failure."""
        assert self.process is not None, "Process must be started"
        assert self.process.exitcode is not None, "Process has to finish"
        exitcode = self.process.exitcode
        if exitcode < 0:
            # Negative exit code means it is killed by signal
            signum = -exitcode
            msg = f"Cell {self} failed, killed by signal {signum}"
            # Just in case this is some very odd signal, expect ValueError
            try:
                strsignal = signal.strsignal(signum)
                msg = f"{msg} ({strsignal})"
            except ValueError:
                pass
        elif exitcode > 0:
            msg = f"Cell {self} failed, exit code={exitcode}"
        else:
            msg = ""
        return msg

    def __str__(self) -> str:
        return f"<{self.cell.label}>"


class _JobList:
    """Simple list of _Job instances with few convenience methods.

    Parameters
    ----------
    iterable : iterable of `BenchCell`
        Cells to execute.
    """

    def __init__(self, iterable: Iterable[BenchCell]):
        self.jobs = [_Job(cell) for cell in iterable]
        self.pending = self.jobs[:]
        self.running: list[_Job] = []
        self.finished: list[_Job] = []
        self.failed: list[_Job] = []
        self.timedOut: list[_Job] = []

    def submit(
        self,
        job: _Job,
        cellExecutor: CellExecutor,
        startMethod: Literal["spawn"] | Literal["forkserver"],
    ) -> None:
        """Submit one more job for execution.

        Parameters
        ----------
        job : `_Job`
            Job to submit.
        cellExecutor : `CellExecutor`
            Executor for single cell.
        startMethod : `str`, optional
            Start method from `multiprocessing` module.
        """
        # this will raise if job is not in pending list
        self.pending.remove(job)
        job.start(cellExecutor, startMethod)
        self.running.append(job)

    def setJobState(self, job: _Job, state: JobState) -> None:
        """Update job state.

        Parameters
        ----------
        job : `_Job`
            Job to update.
        state : `JobState`
            New job state, note that only FINISHED, FAILED or TIMED_OUT state
            is acceptable.
        """
        allowedStates = (JobState.FINISHED, JobState.FAILED, JobState.TIMED_OUT)
        assert state in allowedStates, f"State {state} not allowed here"

        # remove job from pending/running lists
        if job.state == JobState.PENDING:
            self.pending.remove(job)
        elif job.state == JobState.RUNNING:
            self.running.remove(job)

        job._state = state
        if state == JobState.FINISHED:
            self.finished.append(job)
        elif state == JobState.FAILED:
            self.failed.append(job)
        else:
            self.failed.append(job)
            self.timedOut.append(job)

    def cleanup(self) -> None:
        """Do periodic cleanup for jobs that did not finish correctly.

        If timed out jobs are killed but take too long to stop then regular
        cleanup will not work for them. Here we check all timed out jobs
        periodically and do cleanup if they managed to die by this time.
        """
        for job in self.jobs:
            if job.state == JobState.TIMED_OUT and job.process is not None:
                job.cleanup()


class MPCellExecutorError(Exception):
    """Exception class for errors raised by MPCellExecutor."""

    pass


class MPTimeoutError(MPCellExecutorError):
    """Exception raised when cell execution times out."""

    pass


class MPCellExecutor:
    """Execute benchmark cells in this process or in a pool of
    same-host sub-processes.

    Cells whose processors fail still produce records (marked failed); a
    cell that crashes or times out produces failed records for all of its
    processors.  Records are returned in canonical order so the result does
    not depend on the number of processes.

    Parameters
    ----------
    numProc : `int`
        Number of processes to use for executing cells.
    timeout : `float`
        Time in seconds to wait for a cell to finish (multi-process only).
    cellExecutor : `CellExecutor`
        Executor for single cell. For multiprocess-style execution when
        ``numProc`` is greater than one this instance must support pickle.
    startMethod : `str`, optional
        Start method from `multiprocessing` module, `None` selects ``spawn``.
    failFast : `bool`, optional
        If set to ``True`` then stop processing on first failed record.
    pdb : `str`, optional
        Debugger to import and use (via the ``post_mortem`` function) in the
        event of an exception in single-process mode.
    seed : `int`, optional
        Seed stored in records synthesized for crashed cells.
    """

    def __init__(
        self,
        numProc: int,
        timeout: float,
        cellExecutor: CellExecutor,
        *,
        startMethod: Literal["spawn"] | Literal["forkserver"] | None = None,
        failFast: bool = False,
        pdb: str | None = None,
        seed: int = 0,
    ):
        self.numProc = numProc
        self.timeout = timeout
        self.cellExecutor = cellExecutor
        self.failFast = failFast
        self.pdb = pdb
        self.seed = seed
        self.report: RunReport | None = None

        # We set default start method as spawn for all platforms.
        if startMethod is None:
            startMethod = "spawn"
        self.startMethod = startMethod

    def execute(self, cells: Iterable[BenchCell]) -> list[ResultRecord]:
        """Execute all cells.

        Parameters
        ----------
        cells : `~collections.abc.Iterable` [`BenchCell`]
            Cells to execute.

        Returns
        -------
        records : `list` [`ResultRecord`]
            Records of all cells in cell order.

        Raises
        ------
        MPCellExecutorError
            Raised on the first failure if ``failFast`` is set.
        """
        cells = list(cells)
        self.report = RunReport(nCells=len(cells))
        results: dict[int, list[ResultRecord]] = {}
        try:
            if self.numProc > 1:
                self._executeCellsMP(cells, results, self.report)
            else:
                self._executeCellsInProcess(cells, results, self.report)
        except Exception as exc:
            self.report.set_exception(exc)
            if self.report.status == ExecutionStatus.SUCCESS:
                self.report.status = ExecutionStatus.FAILURE
            raise
        records = [record for index in sorted(results) for record in results[index]]
        self.report.nRecords = len(records)
        self.report.nFailedRecords = sum(not record.ok for record in records)
        if self.report.nFailedRecords and self.report.status == ExecutionStatus.SUCCESS:
            self.report.status = ExecutionStatus.FAILURE
        return records

    def _checkFailFast(self, cell: BenchCell, records: list[ResultRecord]) -> None:
        if self.failFast and any(not record.ok for record in records):
            raise MPCellExecutorError(f"Cell {cell.label} failed.")

    def _executeCellsInProcess(
        self, cells: list[BenchCell], results: dict[int, list[ResultRecord]], report: RunReport
    ) -> None:
        """Execute all cells in current process.

        Parameters
        ----------
        cells : `list` [`BenchCell`]
            Cells to execute.
        results : `dict` [`int`, `list` [`ResultRecord`]]
            Records by cell index, updated.
        report : `RunReport`
            Object for reporting execution status.
        """
        successCount, failedCount, totalCount = 0, 0, len(cells)
        for index, cell in enumerate(cells):
            _LOG.debug("Executing %s", cell.label)
            try:
                records, cell_report = self.cellExecutor.execute(cell)
            except Exception as exc:
                cell_report = CellReport.from_exception(exc, cell.label)
                records = cell.failed_records(exc, self.seed)
                if self.pdb and sys.stdin.isatty() and sys.stdout.isatty():
                    _LOG.error("Cell %s failed; dropping into pdb.", cell.label, exc_info=exc)
                    try:
                        pdb = importlib.import_module(self.pdb)
                    except ImportError as imp_exc:
                        raise MPCellExecutorError(
                            f"Unable to import specified debugger module ({self.pdb}): {imp_exc}"
                        ) from exc
                    if not hasattr(pdb, "post_mortem"):
                        raise MPCellExecutorError(
                            f"Specified debugger module ({self.pdb}) can't debug with post_mortem",
                        ) from exc
                    pdb.post_mortem(exc.__traceback__)
                if self.failFast:
                    report.cellReports.append(cell_report)
                    raise MPCellExecutorError(f"Cell {cell.label} failed.") from exc
                _LOG.error(
                    "Cell %s failed; processing will continue for remaining cells.",
                    cell.label,
                    exc_info=exc,
                )
            report.cellReports.append(cell_report)
            results[index] = records
            if cell_report.status == ExecutionStatus.SUCCESS:
                successCount += 1
            else:
                failedCount += 1
            self._checkFailFast(cell, records)

            _LOG.info(
                "Executed %d cells successfully, %d failed and %d remain out of total %d cells.",
                successCount,
                failedCount,
                totalCount - successCount - failedCount,
                totalCount,
            )

    def _executeCellsMP(
        self, cells: list[BenchCell], results: dict[int, list[ResultRecord]], report: RunReport
    ) -> None:
        """Execute all cells in separate processes.

        Parameters
        ----------
        cells : `list` [`BenchCell`]
            Cells to execute.
        results : `dict` [`int`, `list` [`ResultRecord`]]
            Records by cell index, updated.
        report : `RunReport`
            Object for reporting execution status.
        """
        disable_implicit_threading()  # To prevent thread contention

        _LOG.debug("Using %r for multiprocessing start method", self.startMethod)

        jobs = _JobList(cells)
        index_of = {id(job): index for index, job in enumerate(jobs.jobs)}

        finishedCount, failedCount = 0, 0
        while jobs.pending or jobs.running:
            _LOG.debug("#pendingJobs: %s", len(jobs.pending))
            _LOG.debug("#runningJobs: %s", len(jobs.running))

            # See if any jobs have finished
            for job in list(jobs.running):
                assert job.process is not None, "Process cannot be None"
                if not job.process.is_alive():
                    _LOG.debug("finished: %s", job)
                    exitcode = job.process.exitcode
                    cell_report = job.report()
                    report.cellReports.append(cell_report)
                    if exitcode == 0 and job.records is not None:
                        results[index_of[id(job)]] = job.records
                        jobs.setJobState(job, JobState.FINISHED)
                        job.cleanup()
                        _LOG.debug("success: %s took %.3f seconds", job, time.time() - job.started)
                        if self.failFast and cell_report.nFailed:
                            for stopJob in jobs.running:
                                stopJob.stop()
                            raise MPCellExecutorError(f"Cell {job.cell.label} failed.")
                        continue

                    if job.terminated:
                        # Was killed due to timeout.
                        if report.status == ExecutionStatus.SUCCESS:
                            # Do not override global FAILURE status
                            report.status = ExecutionStatus.TIMEOUT
                        message = f"Timeout ({self.timeout} sec) for cell {job}, cell is killed"
                        error: MPCellExecutorError = MPTimeoutError(message)
                        jobs.setJobState(job, JobState.TIMED_OUT)
                    else:
                        report.status = ExecutionStatus.FAILURE
                        # failMessage() has to be called before cleanup()
                        message = job.failMessage()
                        error = MPCellExecutorError(message or f"Cell {job} failed.")
                        jobs.setJobState(job, JobState.FAILED)
                    results[index_of[id(job)]] = job.cell.failed_records(error, self.seed)

                    job.cleanup()
                    _LOG.debug("failed: %s", job)
                    if self.failFast:
                        # stop all running jobs
                        for stopJob in jobs.running:
                            if stopJob is not job:
                                stopJob.stop()
                        raise error
                    else:
                        _LOG.error("%s; processing will continue for remaining cells.", message)
                else:
                    job.receive()
                    # check for timeout
                    now = time.time()
                    if now - job.started > self.timeout:
                        # Try to kill it, and there is a chance that it
                        # finishes successfully before it gets killed. Exit
                        # status is handled by the code above on next
                        # iteration.
                        _LOG.debug("Terminating job %s due to timeout", job)
                        job.stop()

            # see if we can start more jobs
            while jobs.pending and len(jobs.running) < self.numProc:
                job = jobs.pending[0]
                _LOG.debug("Submitting %s", job)
                jobs.submit(job, self.cellExecutor, self.startMethod)

            # Do cleanup for timed out jobs if necessary.
            jobs.cleanup()

            # Print progress message if something changed.
            newFinished, newFailed = len(jobs.finished), len(jobs.failed)
            if (finishedCount, failedCount) != (newFinished, newFailed):
                finishedCount, failedCount = newFinished, newFailed
                totalCount = len(jobs.jobs)
                _LOG.info(
                    "Executed %d cells successfully, %d failed and %d remain out of total %d cells.",
                    finishedCount,
                    failedCount,
                    totalCount - finishedCount - failedCount,
                    totalCount,
                )

            # Here we want to wait until one of the running jobs completes
            # but multiprocessing does not provide an API for that, for now
            # just sleep a little bit and go back to the loop.
            if jobs.running:
                time.sleep(0.1)

        if jobs.failed:
            # print list of failed jobs
            _LOG.error("Failed cells:")
            for job in jobs.jobs:
                if job.state != JobState.FINISHED:
                    _LOG.error("  - %s: %s", job.state.name, job)

    def getReport(self) -> RunReport:
        """Return execution report from last call to `execute`.

        Raises
        ------
        RuntimeError
            Raised if this method is called before `execute`.
        """
        if self.report is None:
            raise RuntimeError("getReport() called before execute()")
        return self.report
