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


"""Unit tests for ingestion, encoding and splitting."""

import importlib.resources
import os
import unittest

import numpy as np
import pandas as pd
from fairscore.data import (
    ColumnConfig,
    Dataset,
    IngestionConfig,
    derive_sensitive,
    ingest_frame,
    load_csv,
    load_ingestion_config,
    make_folds,
    split_train_test,
)
from fairscore.errors import (
    DegenerateStratum,
    EmptyDataset,
    IngestionError,
    InvalidAge,
    InvalidTarget,
    MissingColumn,
    TooManyFolds,
)
from lsst.daf.butler.tests.utils import makeTestTempDir, removeTestTempDir

TESTDIR = os.path.abspath(os.path.dirname(__file__))
GERMAN_CSV = os.environ.get("FAIRSCORE_GERMAN_CSV")


def _schema() -> IngestionConfig:
    schema = IngestionConfig()
    schema.target = "credit_risk"
    schema.target_map = {"1": 1, "2": 0}
    schema.columns["income"] = ColumnConfig()
    schema.columns["housing"] = ColumnConfig()
    schema.columns["housing"].kind = "categorical"
    return schema


def _frame() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "age": ["22", "30", "40", "24"],
            "income": ["1.0", None, "3.0", "5.0"],
            "housing": ["own", "rent", "own", None],
            "credit_risk": ["1", "2", "1", "2"],
        }
    )


def _random_dataset(n: int = 200, seed: int = 1) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(
        features=rng.normal(size=(n, 3)),
        labels=rng.integers(0, 2, n),
        sensitive=rng.integers(0, 2, n),
    )


class SensitiveTestCase(unittest.TestCase):
    """Tests for the age rule."""

    def test_strict(self) -> None:
        self.assertEqual(derive_sensitive([24, 25, 26], 25).tolist(), [1, 0, 0])

    def test_inclusive(self) -> None:
        self.assertEqual(derive_sensitive([24, 25, 26], 25, inclusive=True).tolist(), [1, 1, 0])

    def test_invalid_age(self) -> None:
        with self.assertRaises(InvalidAge):
            derive_sensitive([30.0, float("nan")], 25)


class IngestTestCase(unittest.TestCase):
    """Tests for encoding a raw table."""

    def setUp(self) -> None:
        self.root = makeTestTempDir(TESTDIR)

    def tearDown(self) -> None:
        removeTestTempDir(self.root)

    def test_encoding(self) -> None:
        ds = ingest_frame(_frame(), _schema())
        self.assertEqual(ds.feature_names, ("income", "housing=own", "housing=rent", "income__missing"))
        self.assertEqual(ds.labels.tolist(), [1, 0, 1, 0])
        self.assertEqual(ds.sensitive.tolist(), [1, 0, 0, 1])
        # Missing income is imputed with the median and flagged.
        np.testing.assert_array_equal(ds.features[1], [3.0, 0.0, 1.0, 1.0])
        np.testing.assert_array_equal(ds.features[3], [5.0, 0.0, 0.0, 0.0])
        report = ds.encoding_report
        assert report is not None
        self.assertEqual(report.sensitive_rule, "age < 25")
        housing = [c for c in report.columns if c.source == "housing"][0]
        self.assertEqual(housing.dropped_level, "<missing>")
        self.assertEqual(housing.n_missing, 1)
        self.assertEqual(ds.numeric_feature_indices(), [0])

    def test_missing_target_rows_dropped(self) -> None:
        frame = _frame()
        frame.loc[2, "credit_risk"] = None
        ds = ingest_frame(frame, _schema())
        self.assertEqual(ds.n, 3)
        assert ds.encoding_report is not None
        self.assertEqual(ds.encoding_report.dropped_rows, 1)

    def test_missing_column(self) -> None:
        with self.assertRaises(MissingColumn):
            ingest_frame(_frame().drop(columns=["housing"]), _schema())

    def test_invalid_target(self) -> None:
        frame = _frame()
        frame.loc[0, "credit_risk"] = "3"
        with self.assertRaises(InvalidTarget):
            ingest_frame(frame, _schema())
        schema = _schema()
        schema.target_map = {}
        with self.assertRaises(InvalidTarget):
            ingest_frame(_frame(), schema)

    def test_non_numeric(self) -> None:
        frame = _frame()
        frame.loc[0, "income"] = "lots"
        with self.assertRaises(IngestionError):
            ingest_frame(frame, _schema())

    def test_load_csv(self) -> None:
        csv = os.path.join(self.root, "data.csv")
        _frame().to_csv(csv, index=False)
        toml = os.path.join(self.root, "schema.toml")
        with open(toml, "w") as stream:
            stream.write(
                'target = "credit_risk"\n'
                'target_map = { "1" = 1, "2" = 0 }\n'
                "[sensitive]\n"
                'column = "age"\n'
                "threshold = 24\n"
                "inclusive = true\n"
                "[columns]\n"
                'income = { kind = "numeric" }\n'
                'housing = { kind = "categorical" }\n'
            )
        ds = load_csv(csv, toml)
        self.assertEqual(ds, ingest_frame(_frame(), load_ingestion_config(toml)))
        self.assertEqual(ds.sensitive.tolist(), [1, 0, 0, 1])

    def test_bad_schema(self) -> None:
        toml = os.path.join(self.root, "schema.toml")
        with open(toml, "w") as stream:
            stream.write('target = "credit_risk"\ncolour = "blue"\n')
        with self.assertRaises(IngestionError):
            load_ingestion_config(toml)

    def test_empty_file(self) -> None:
        csv = os.path.join(self.root, "empty.csv")
        open(csv, "w").close()
        with self.assertRaises(EmptyDataset):
            load_csv(csv, _schema())


class SplitTestCase(unittest.TestCase):
    """Tests for train/test splits and folds."""

    def test_split(self) -> None:
        ds = _random_dataset()
        plan = split_train_test(ds, 0.6, seed=3)
        self.assertEqual(len(np.intersect1d(plan.train_indices, plan.test_indices)), 0)
        self.assertEqual(len(plan.train_indices) + len(plan.test_indices), ds.n)
        cells = 2 * ds.labels + ds.sensitive
        for cell in range(4):
            size = np.count_nonzero(cells == cell)
            self.assertEqual(
                np.count_nonzero(cells[plan.train_indices] == cell), int(np.floor(0.6 * size + 0.5))
            )
        again = split_train_test(ds, 0.6, seed=3)
        np.testing.assert_array_equal(plan.train_indices, again.train_indices)

    def test_degenerate(self) -> None:
        ds = Dataset(features=np.ones((5, 1)), labels=[1, 1, 0, 0, 0], sensitive=[0, 0, 0, 0, 1])
        with self.assertRaises(DegenerateStratum):
            split_train_test(ds, 0.5, seed=0)

    def test_folds(self) -> None:
        strata = np.random.default_rng(4).integers(0, 4, 103)
        plan = make_folds(103, 5, strata, seed=7)
        sizes = np.bincount(plan.assignments, minlength=5)
        self.assertLessEqual(sizes.max() - sizes.min(), 1)
        for value in range(4):
            per = np.bincount(plan.assignments[strata == value], minlength=5)
            self.assertLessEqual(per.max() - per.min(), 1)
        fit, held_out = plan.split(2)
        self.assertEqual(sorted(np.concatenate([fit, held_out]).tolist()), list(range(103)))
        np.testing.assert_array_equal(held_out, plan.fold_indices(2))

    def test_too_many_folds(self) -> None:
        with self.assertRaises(TooManyFolds):
            make_folds(3, 4, [0, 1, 0], seed=0)


@unittest.skipUnless(GERMAN_CSV, "FAIRSCORE_GERMAN_CSV is not set")
class GermanTestCase(unittest.TestCase):
    """Statistics of the public German credit data."""

    def test_statistics(self) -> None:
        resource = importlib.resources.files("fairscore.resources") / "german.toml"
        with importlib.resources.as_file(resource) as path:
            schema = load_ingestion_config(path)
        schema.sensitive.inclusive = True
        ds = load_csv(GERMAN_CSV, schema)
        self.assertEqual(ds.n, 1000)
        self.assertAlmostEqual(1.0 - ds.labels.mean(), 0.300, places=12)
        self.assertAlmostEqual(ds.sensitive.mean(), 0.190, places=12)


if __name__ == "__main__":
    unittest.main()
