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

"""Benchmark protocol, aggregation of its records and report files."""

from __future__ import annotations

__all__ = [
    "ExperimentResult",
    "FrontierPoint",
    "GainRow",
    "aggregate_gains",
    "build_cells",
    "emit_report",
    "frontier_frame",
    "frontier_points",
    "load_dataset",
    "pareto_frontier",
    "prepare_datasets",
    "rank_correlation",
    "read_frontier_points",
    "read_records",
    "run_experiment",
    "sort_records",
    "summary_rows",
    "summary_table",
    "write_frontier",
]

import dataclasses
import importlib.resources
import json
import math
import warnings
from collections import defaultdict
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
from astropy.table import Table
from lsst.utils.logging import getLogger
from lsst.utils.threads import disable_implicit_threading
from scipy import stats

from .cellExecutor import BASELINE, SELF_LEARNER, BenchCell, PreparedDataset, SingleCellExecutor
from .data import Dataset, load_csv, make_folds, split_train_test
from .errors import AnalysisError, MissingBaseline, SchemaMismatch, TooFewRecords
from .experimentConfig import (
    BUNDLED_SCHEMAS,
    IN_PROCESSORS,
    POST_PROCESSORS,
    PRE_PROCESSORS,
    PROCESSORS,
    DatasetConfig,
    ExperimentConfig,
)
from .mpCellExecutor import MPCellExecutor
from .reports import (
    METRIC_NAMES,
    RECORDS_SCHEMA_VERSION,
    ExceptionInfo,
    ExecutionStatus,
    RecordSet,
    ResultRecord,
    RunReport,
)
from .synthetic import generate_dataset

_LOG = getLogger(__name__)

PROCESSOR_ORDER = (BASELINE,) + PROCESSORS
FAIRNESS_METRICS = ("ind", "sp", "sf")
CORRELATION_METRICS = ("auc", "profit_raw", "ind", "sp", "sf")
GAIN_METRICS = METRIC_NAMES
ABSOLUTE_GAIN_THRESHOLD = 1e-6
DEFAULT_TIMEOUT = 86400.0
SUMMARY_COLUMNS = (
    ("auc", "AUC"),
    ("profit_raw", "Profit"),
    ("acceptance_rate", "AR"),
    ("ind", "IND"),
    ("sp", "SP"),
    ("sf", "SF"),
)

RECORDS_CSV_COLUMNS = (
    "schema_version",
    "dataset",
    "processor",
    "learner",
    "fold",
    "seed",
    "status",
    *METRIC_NAMES,
    "parameters",
    "undefined",
    "exception_class",
    "exception_message",
)
FRONTIER_COLUMNS = ("dataset", "processor", "learner", "fold", "profit_raw", "sp")


def load_dataset(config: DatasetConfig) -> Dataset:
    """Load or generate the dataset described by a configuration."""
    if config.source == "synthetic":
        return generate_dataset(config.synthetic)
    if config.schema in BUNDLED_SCHEMAS:
        resource = importlib.resources.files("fairscore.resources") / f"{config.schema}.toml"
        with importlib.resources.as_file(resource) as schema_path:
            return load_csv(config.path, schema_path)
    return load_csv(config.path, config.schema)


def prepare_datasets(config: ExperimentConfig) -> dict[str, PreparedDataset]:
    """Load every dataset and build its split and fold plans.

    Raises
    ------
    IngestionError
        Raised if a dataset cannot be read.
    SplitError
        Raised if a dataset cannot be split.
    """
    prepared = {}
    for name, dataset_config in sorted(config.datasets.items()):
        ds = load_dataset(dataset_config)
        split = split_train_test(ds, config.split.train_fraction, config.seed)
        labels = ds.labels[split.train_indices]
        sensitive = ds.sensitive[split.train_indices]
        folds = make_folds(len(labels), config.split.n_folds, 2 * labels + sensitive, config.seed)
        _LOG.info(
            "Dataset %s: %d rows, %d features, %d train, %d test",
            name,
            ds.n,
            ds.k,
            len(labels),
            len(split.test_indices),
        )
        prepared[name] = PreparedDataset(dataset=ds, split=split, folds=folds)
    return prepared


def build_cells(config: ExperimentConfig, datasets: Iterable[str]) -> list[BenchCell]:
    """Return the benchmark cells in canonical order."""
    selected = set(config.processors)
    pre = [name for name in PRE_PROCESSORS if name in selected]
    post = [name for name in POST_PROCESSORS if name in selected]
    inproc = [name for name in IN_PROCESSORS if name in selected]
    cells = []
    for dataset in sorted(datasets):
        for fold in range(config.split.n_folds):
            for learner in dict.fromkeys(config.learners.names):
                cells.append(BenchCell(dataset, fold, learner, (BASELINE, *pre, *post)))
            for name in inproc:
                cells.append(BenchCell(dataset, fold, SELF_LEARNER, (name,)))
    return cells


def sort_records(records: Iterable[ResultRecord]) -> list[ResultRecord]:
    """Sort records by dataset, processor, learner and fold."""
    order = {name: index for index, name in enumerate(PROCESSOR_ORDER)}
    return sorted(
        records, key=lambda r: (r.dataset, order.get(r.processor, len(order)), r.processor, r.learner, r.fold)
    )


@dataclasses.dataclass
class ExperimentResult:
    """Records of a benchmark run with its execution report."""

    records: list[ResultRecord]
    report: RunReport

    @property
    def n_failed(self) -> int:
        return sum(not record.ok for record in self.records)


def run_experiment(
    config: ExperimentConfig,
    *,
    numProc: int = 1,
    timeout: float = DEFAULT_TIMEOUT,
    failFast: bool = False,
    startMethod: Literal["spawn"] | Literal["forkserver"] | None = None,
    pdb: str | None = None,
    summary: str | Path | None = None,
) -> ExperimentResult:
    """Run the benchmark protocol.

    For every dataset the rows are split into train and test and the
    training rows into folds.  For every fold each learner is tuned by
    nested cross-validation and trained unconstrained; pre-processors
    retrain it, post-processors are fit on its validation-fold scores and
    in-processors train their own models.  Everything is evaluated on the
    common test rows.

    Parameters
    ----------
    config : `ExperimentConfig`
        Validated configuration.
    numProc : `int`, optional
        Number of processes.
    timeout : `float`, optional
        Per-cell timeout in seconds for multi-process execution.
    failFast : `bool`, optional
        Stop at the first failed record.
    startMethod : `str`, optional
        Start method of worker processes.
    pdb : `str`, optional
        Debugger module for post-mortem debugging of crashed cells.
    summary : `str` or `~pathlib.Path`, optional
        File receiving the execution report as JSON, also written when
        execution stops early.

    Returns
    -------
    result : `ExperimentResult`
        Records in canonical order and the execution report.

    Raises
    ------
    IngestionError
        Raised if a dataset cannot be read.
    MPCellExecutorError
        Raised on the first failure if ``failFast`` is set.
    """
    # Thread pools of numerical libraries would make results depend on
    # scheduling.
    disable_implicit_threading()
    datasets = prepare_datasets(config)
    cells = build_cells(config, datasets)
    _LOG.info("Running %d cells with %d process(es)", len(cells), numProc)
    executor = MPCellExecutor(
        numProc=numProc,
        timeout=timeout,
        cellExecutor=SingleCellExecutor(config, datasets),
        startMethod=startMethod,
        failFast=failFast,
        pdb=pdb,
        seed=config.seed,
    )
    try:
        records = executor.execute(cells)
    finally:
        if summary and executor.report is not None:
            with open(summary, "w") as out:
                # Do not save fields that are not set.
                out.write(executor.report.model_dump_json(exclude_none=True, indent=2))
    return ExperimentResult(records=sort_records(records), report=executor.getReport())


@dataclasses.dataclass(frozen=True)
class GainRow:
    """Mean relative gains of one processor over the unconstrained model.

    Positive values are improvements: fairness metrics have their sign
    flipped.
    """

    processor: str
    n_cells: int
    n_excluded: int
    """Failed records left out."""

    n_absolute: int
    """Comparisons reported as absolute differences (baseline near zero)."""

    gains: dict[str, float | None]


def aggregate_gains(records: Sequence[ResultRecord]) -> list[GainRow]:
    """Average the relative change of every metric against the baseline.

    A record is compared with the unconstrained record of the same
    dataset, learner and fold; in-processor records are compared with the
    mean of the unconstrained records of their dataset and fold.  Baselines
    with magnitude below 1e-6 give absolute differences.

    Parameters
    ----------
    records : `~collections.abc.Sequence` [`ResultRecord`]
        Benchmark records.

    Returns
    -------
    gains : `list` [`GainRow`]
        One row per processor in canonical order.

    Raises
    ------
    MissingBaseline
        Raised if a successful record has no baseline.
    """
    baselines: dict[tuple[str, str, int], ResultRecord] = {}
    by_fold: dict[tuple[str, int], list[ResultRecord]] = defaultdict(list)
    for record in records:
        if record.ok and record.processor == BASELINE:
            baselines[(record.dataset, record.learner, record.fold)] = record
            by_fold[(record.dataset, record.fold)].append(record)

    def baseline_value(record: ResultRecord, metric: str) -> float | None:
        if record.learner == SELF_LEARNER:
            values = [b.metric(metric) for b in by_fold.get((record.dataset, record.fold), [])]
            defined = [v for v in values if v is not None]
            return float(np.mean(defined)) if defined else None
        return baselines[(record.dataset, record.learner, record.fold)].metric(metric)

    cells: dict[str, list[dict[str, float | None]]] = defaultdict(list)
    excluded: dict[str, int] = defaultdict(int)
    absolute: dict[str, int] = defaultdict(int)
    for record in records:
        if not record.ok:
            excluded[record.processor] += 1
            continue
        if record.learner == SELF_LEARNER:
            if (record.dataset, record.fold) not in by_fold:
                raise MissingBaseline(f"No unconstrained records for {record.dataset} fold {record.fold}")
        elif (record.dataset, record.learner, record.fold) not in baselines:
            raise MissingBaseline(
                f"No unconstrained record for {record.dataset}/{record.learner} fold {record.fold}"
            )
        gains: dict[str, float | None] = {}
        for metric in GAIN_METRICS:
            value = record.metric(metric)
            base = baseline_value(record, metric)
            if value is None or base is None:
                gains[metric] = None
                continue
            if abs(base) < ABSOLUTE_GAIN_THRESHOLD:
                gain = value - base
                absolute[record.processor] += 1
            else:
                gain = (value - base) / abs(base)
            gains[metric] = -gain if metric in FAIRNESS_METRICS else gain
        cells[record.processor].append(gains)

    rows = []
    for processor in PROCESSOR_ORDER + tuple(sorted(set(cells) - set(PROCESSOR_ORDER))):
        if processor not in cells and processor not in excluded:
            continue
        entries = cells.get(processor, [])
        means: dict[str, float | None] = {}
        for metric in GAIN_METRICS:
            values = [entry[metric] for entry in entries if entry[metric] is not None]
            means[metric] = float(np.mean(values)) if values else None
        rows.append(
            GainRow(
                processor=processor,
                n_cells=len(entries),
                n_excluded=excluded.get(processor, 0),
                n_absolute=absolute.get(processor, 0),
                gains=means,
            )
        )
    return rows


def rank_correlation(
    records: Sequence[ResultRecord], metrics: Sequence[str] = CORRELATION_METRICS
) -> tuple[tuple[str, ...], np.ndarray]:
    """Return the Spearman correlation matrix of record metrics.

    Correlations use midranks for ties; they are computed per dataset over
    its successful records and averaged across datasets.  Fairness metrics
    are negated first so that all metrics read "higher is better".

    Parameters
    ----------
    records : `~collections.abc.Sequence` [`ResultRecord`]
        Benchmark records.
    metrics : `~collections.abc.Sequence` [`str`], optional
        Metric names.

    Returns
    -------
    metrics : `tuple` [`str`, ...]
        Row and column names.
    matrix : `numpy.ndarray`
        Correlations, NaN where no dataset defines one.

    Raises
    ------
    TooFewRecords
        Raised if no dataset has at least three successful records.
    """
    names = tuple(metrics)
    datasets: dict[str, list[ResultRecord]] = defaultdict(list)
    for record in records:
        if record.ok:
            datasets[record.dataset].append(record)
    usable = {name: rows for name, rows in datasets.items() if len(rows) >= 3}
    if not usable:
        raise TooFewRecords("Rank correlation needs at least three successful records of a dataset")

    sums = np.zeros((len(names), len(names)))
    counts = np.zeros((len(names), len(names)))
    for dataset in sorted(usable):
        table = np.array(
            [[np.nan if (v := r.metric(m)) is None else v for m in names] for r in usable[dataset]],
            dtype=np.float64,
        )
        for j, name in enumerate(names):
            if name in FAIRNESS_METRICS:
                table[:, j] = -table[:, j]
        for a in range(len(names)):
            for b in range(len(names)):
                both = ~np.isnan(table[:, a]) & ~np.isnan(table[:, b])
                if np.count_nonzero(both) < 3:
                    continue
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", stats.ConstantInputWarning)
                    rho = stats.spearmanr(table[both, a], table[both, b]).statistic
                if not math.isnan(rho):
                    sums[a, b] += rho
                    counts[a, b] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        matrix = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return names, matrix


@dataclasses.dataclass(frozen=True)
class FrontierPoint:
    """Profit and separation of one result."""

    dataset: str
    processor: str
    learner: str
    fold: int
    profit_raw: float
    sp: float


def frontier_points(records: Iterable[ResultRecord]) -> list[FrontierPoint]:
    """Return points of successful records with both objectives defined."""
    return [
        FrontierPoint(r.dataset, r.processor, r.learner, r.fold, r.profit_raw, r.sp)
        for r in records
        if r.ok and r.profit_raw is not None and r.sp is not None
    ]


def pareto_frontier(
    points: Iterable[FrontierPoint | ResultRecord],
) -> list[FrontierPoint]:
    """Return the points not dominated in (maximal profit, minimal SP).

    A point is dominated if another one is at least as good in both
    objectives and strictly better in one; identical points do not
    dominate each other.

    Parameters
    ----------
    points : iterable of `FrontierPoint` or `ResultRecord`
        Candidate results; records without both objectives are ignored.

    Returns
    -------
    frontier : `list` [`FrontierPoint`]
        Non-dominated points by descending profit, then ascending SP.
    """
    items = list(points)
    candidates = [p for p in items if isinstance(p, FrontierPoint)]
    candidates += frontier_points(p for p in items if isinstance(p, ResultRecord))
    ordered = sorted(
        candidates, key=lambda p: (-p.profit_raw, p.sp, p.dataset, p.processor, p.learner, p.fold)
    )
    frontier = []
    best_better = math.inf
    index = 0
    while index < len(ordered):
        profit = ordered[index].profit_raw
        group_end = index
        while group_end < len(ordered) and ordered[group_end].profit_raw == profit:
            group_end += 1
        # Only the lowest SP of a profit level can be non-dominated.
        group_min = ordered[index].sp
        if group_min < best_better:
            frontier.extend(p for p in ordered[index:group_end] if p.sp == group_min)
        best_better = min(best_better, group_min)
        index = group_end
    return frontier


def _records_frame(records: Sequence[ResultRecord]) -> pd.DataFrame:
    rows = []
    for record in records:
        row: dict[str, Any] = {
            "schema_version": RECORDS_SCHEMA_VERSION,
            "dataset": record.dataset,
            "processor": record.processor,
            "learner": record.learner,
            "fold": record.fold,
            "seed": record.seed,
            "status": record.status.value,
        }
        for metric in METRIC_NAMES:
            row[metric] = record.metric(metric)
        row["parameters"] = json.dumps(record.parameters, sort_keys=True)
        row["undefined"] = json.dumps(record.undefined, sort_keys=True)
        info = record.exceptionInfo
        row["exception_class"] = info.className if info else None
        row["exception_message"] = info.message if info else None
        rows.append(row)
    frame = pd.DataFrame(rows, columns=list(RECORDS_CSV_COLUMNS))
    for metric in METRIC_NAMES:
        frame[metric] = frame[metric].astype(np.float64)
    return frame


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n", na_rep="")


def frontier_frame(frontier: Sequence[FrontierPoint]) -> pd.DataFrame:
    """Return frontier points as a data frame in frontier file layout."""
    return pd.DataFrame([dataclasses.asdict(p) for p in frontier], columns=list(FRONTIER_COLUMNS))


def write_frontier(frontier: Sequence[FrontierPoint], path: str | Path) -> None:
    """Write frontier points as CSV, a header alone if empty."""
    _write_csv(frontier_frame(frontier), Path(path))


def emit_report(
    records: Sequence[ResultRecord],
    output: str | Path,
    frontier: Sequence[FrontierPoint] | None = None,
) -> dict[str, Path]:
    """Write records, gains, correlations and frontier files.

    Parameters
    ----------
    records : `~collections.abc.Sequence` [`ResultRecord`]
        Benchmark records, written in the given order.
    output : `str` or `~pathlib.Path`
        Directory, created if missing.
    frontier : `~collections.abc.Sequence` [`FrontierPoint`], optional
        Frontier to write; computed from ``records`` if not given.

    Returns
    -------
    paths : `dict` [`str`, `~pathlib.Path`]
        Written files by kind.

    Raises
    ------
    OSError
        Raised with the offending path if a file cannot be written.
    """
    directory = Path(output)
    paths = {
        "records_csv": directory / "records.csv",
        "records_json": directory / "records.json",
        "gains": directory / "gains.csv",
        "correlations": directory / "correlations.csv",
        "frontier": directory / "frontier.csv",
    }
    try:
        gain_rows = aggregate_gains(records)
    except MissingBaseline as exc:
        _LOG.warning("Relative gains are not available: %s", exc)
        gain_rows = []
    gains = pd.DataFrame(
        [
            {
                "processor": row.processor,
                "n_cells": row.n_cells,
                "n_excluded": row.n_excluded,
                "n_absolute": row.n_absolute,
                **row.gains,
            }
            for row in gain_rows
        ],
        columns=["processor", "n_cells", "n_excluded", "n_absolute", *GAIN_METRICS],
    )
    try:
        names, matrix = rank_correlation(records)
        correlations = pd.DataFrame(matrix, columns=list(names))
        correlations.insert(0, "metric", list(names))
    except TooFewRecords as exc:
        _LOG.warning("Rank correlations are not available: %s", exc)
        correlations = pd.DataFrame(columns=["metric", *CORRELATION_METRICS])
    if frontier is None:
        frontier = pareto_frontier(records)

    current = directory
    try:
        directory.mkdir(parents=True, exist_ok=True)
        current = paths["records_csv"]
        _write_csv(_records_frame(records), current)
        current = paths["records_json"]
        document = RecordSet(records=list(records)).model_dump_json(indent=2)
        current.write_text(document + "\n", encoding="utf-8")
        current = paths["gains"]
        _write_csv(gains, current)
        current = paths["correlations"]
        _write_csv(correlations, current)
        current = paths["frontier"]
        write_frontier(frontier, current)
    except OSError as exc:
        raise OSError(f"Cannot write report file {current}: {exc}") from exc
    _LOG.info("Wrote %d records to %s", len(records), directory)
    return paths


def _optional(value: Any) -> float | None:
    return None if pd.isna(value) else float(value)


def _read_frame(path: Path, required: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            na_values=[""],
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise SchemaMismatch(f"File {path} is empty") from None
    missing = [name for name in required if name not in frame.columns]
    if missing:
        raise SchemaMismatch(f"File {path} lacks columns: {', '.join(missing)}")
    return frame


def read_records(path: str | Path) -> list[ResultRecord]:
    """Read records written by `emit_report` (CSV or JSON).

    Raises
    ------
    SchemaMismatch
        Raised if the file does not follow the records layout or version.
    """
    path = Path(path)
    if path.suffix == ".json":
        try:
            record_set = RecordSet.model_validate_json(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise SchemaMismatch(f"File {path} is not a records file: {exc}") from None
        if record_set.schema_version != RECORDS_SCHEMA_VERSION:
            raise SchemaMismatch(f"File {path} has schema version {record_set.schema_version}")
        return record_set.records

    frame = _read_frame(path, RECORDS_CSV_COLUMNS)
    records = []
    for line, row in enumerate(frame.to_dict("records"), start=2):
        try:
            if int(row["schema_version"]) != RECORDS_SCHEMA_VERSION:
                raise SchemaMismatch(f"{path} line {line}: schema version {row['schema_version']}")
            info = None
            if not pd.isna(row["exception_class"]):
                message = row["exception_message"]
                info = ExceptionInfo(
                    className=row["exception_class"], message="" if pd.isna(message) else message
                )
            records.append(
                ResultRecord(
                    dataset=row["dataset"],
                    processor=row["processor"],
                    learner=row["learner"],
                    fold=int(row["fold"]),
                    seed=int(row["seed"]),
                    status=ExecutionStatus(row["status"]),
                    parameters=json.loads(row["parameters"]),
                    undefined=json.loads(row["undefined"]),
                    exceptionInfo=info,
                    **{metric: _optional(row[metric]) for metric in METRIC_NAMES},
                )
            )
        except AnalysisError:
            raise
        except (TypeError, ValueError) as exc:
            raise SchemaMismatch(f"{path} line {line}: {exc}") from None
    return records


def read_frontier_points(path: str | Path) -> list[FrontierPoint]:
    """Read frontier points from a records or frontier CSV file.

    Rows of failed records and rows lacking an objective are skipped.

    Raises
    ------
    SchemaMismatch
        Raised if the file lacks the frontier columns.
    """
    path = Path(path)
    frame = _read_frame(path, FRONTIER_COLUMNS)
    points = []
    for line, row in enumerate(frame.to_dict("records"), start=2):
        if "status" in row and row["status"] != ExecutionStatus.SUCCESS.value:
            continue
        if pd.isna(row["profit_raw"]) or pd.isna(row["sp"]):
            continue
        try:
            points.append(
                FrontierPoint(
                    dataset=row["dataset"],
                    processor=row["processor"],
                    learner=row["learner"],
                    fold=int(row["fold"]),
                    profit_raw=float(row["profit_raw"]),
                    sp=float(row["sp"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise SchemaMismatch(f"{path} line {line}: {exc}") from None
    return points


def summary_rows(records: Sequence[ResultRecord]) -> list[dict[str, Any]]:
    """Return mean test metrics per processor and learner.

    Means are rounded to four decimals and `None` where no successful
    record defines the metric.
    """
    groups: dict[tuple[str, str], list[ResultRecord]] = defaultdict(list)
    for record in sort_records(records):
        groups[(record.processor, record.learner)].append(record)
    rows = []
    for (processor, learner), members in groups.items():
        ok = [r for r in members if r.ok]
        row: dict[str, Any] = {
            "Processor": processor,
            "Learner": learner,
            "Cells": len(ok),
            "Failed": len(members) - len(ok),
        }
        for metric, title in SUMMARY_COLUMNS:
            values = [v for r in ok if (v := r.metric(metric)) is not None]
            row[title] = round(float(np.mean(values)), 4) if values else None
        rows.append(row)
    return rows


def summary_table(records: Sequence[ResultRecord]) -> Table:
    """Return `summary_rows` as a table, undefined means shown as NaN."""
    rows = [
        {key: np.nan if value is None else value for key, value in row.items()}
        for row in summary_rows(records)
    ]
    return Table(rows=rows) if rows else Table()
