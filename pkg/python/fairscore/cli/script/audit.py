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


import math
from collections.abc import Sequence

import click
import pandas as pd
from astropy.table import Table

from ...cellExecutor import evaluate_scores
from ...errors import ExperimentConfigError
from ...fairmetrics import ScoreSet
from ...profit import operating_cutoff
from ..utils import echo_json, load_cost_model

REQUIRED_COLUMNS = ("score", "label", "sensitive")
METRIC_TITLES = (
    ("ind", "IND"),
    ("sp", "SP"),
    ("sf", "SF"),
    ("auc", "AUC"),
    ("emp", "EMP"),
    ("profit_raw", "Profit"),
    ("profit_normalized", "Profit per accepted"),
    ("acceptance_rate", "Acceptance rate"),
)


def read_score_file(path: str) -> ScoreSet:
    """Read a ``score,label,sensitive`` CSV file.

    Parameters
    ----------
    path : `str`
        CSV file with a header row.

    Returns
    -------
    scores : `ScoreSet`
        File contents.

    Raises
    ------
    click.ClickException
        Raised listing every malformed row by its line number.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise click.ClickException(f"File {path} is empty") from None
    missing = [name for name in REQUIRED_COLUMNS if name not in frame.columns]
    if missing:
        raise click.ClickException(f"File {path} lacks columns: {', '.join(missing)}")
    if frame.empty:
        raise click.ClickException(f"File {path} has no records")

    errors = []
    scores, labels, sensitive = [], [], []
    # Line 1 is the header.
    for line, row in enumerate(frame.to_dict("records"), start=2):
        try:
            score = float(row["score"])
        except ValueError:
            errors.append(f"line {line}: score {row['score']!r} is not a number")
        else:
            if not (math.isfinite(score) and 0.0 <= score <= 1.0):
                errors.append(f"line {line}: score out of [0,1]")
            scores.append(score)
        for name, values in (("label", labels), ("sensitive", sensitive)):
            value = row[name].strip()
            if value not in ("0", "1"):
                errors.append(f"line {line}: {name} must be 0 or 1, got {row[name]!r}")
            else:
                values.append(int(value))
    if errors:
        raise click.ClickException("\n".join(errors))
    return ScoreSet(scores, labels, sensitive)


def _parse_cutoff(cutoff: str) -> float | None:
    if cutoff == "auto":
        return None
    try:
        tau = float(cutoff)
    except ValueError:
        raise click.ClickException(f"Cutoff {cutoff!r} is neither a number nor 'auto'") from None
    if not 0.0 <= tau <= 1.0:
        raise click.ClickException(f"Cutoff {tau:g} out of [0,1]")
    return tau


def audit(
    scores: str,
    cutoff: str,
    config: str | None,
    overrides: Sequence[str],
    as_json: bool,
    **kwargs: object,
) -> None:
    """Implement the command line interface ``fairscore audit``.

    Parameters
    ----------
    scores : `str`
        Score CSV file.
    cutoff : `str`
        Cutoff value or ``auto`` for the operating cutoff.
    config : `str` or `None`
        TOML file whose ``cost`` table sets the profit model.
    overrides : `~collections.abc.Sequence` [`str`]
        ``cost.*`` overrides.
    as_json : `bool`
        Print JSON instead of a table.
    **kwargs : `dict`
        Ignored.
    """
    try:
        cm = load_cost_model(config, overrides)
    except ExperimentConfigError as exc:
        raise click.ClickException("\n".join(exc.violations)) from None
    tau = _parse_cutoff(cutoff)
    if tau is None:
        tau = operating_cutoff(cm)
    s = read_score_file(scores)
    metrics, undefined = evaluate_scores(s, cm, tau)

    if as_json:
        echo_json({"n": len(s), "cutoff": tau, "metrics": metrics, "undefined": undefined})
        return
    values = []
    for name, _ in METRIC_TITLES:
        value = metrics[name]
        values.append(f"undefined ({undefined[name]})" if value is None else f"{value:.6f}")
    table = Table(
        [
            ["Rows", "Cutoff"] + [title for _, title in METRIC_TITLES],
            [str(len(s)), f"{tau:.6f}"] + values,
        ],
        names=["Metric", "Value"],
    )
    click.echo("\n".join(table.pformat(max_lines=-1, max_width=-1)))
