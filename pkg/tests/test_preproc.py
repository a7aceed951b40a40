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


"""Unit tests for reweighing and the disparate impact remover."""

import unittest

import numpy as np
from fairscore.data import Dataset
from fairscore.errors import EmptyCell, GroupTooSmall
from fairscore.preproc import di_remove, resample, reweigh


def _biased(n0: int, n1: int, seed: int = 0) -> Dataset:
    """Return data whose first feature is shifted for the unprivileged group."""
    rng = np.random.default_rng(seed)
    sensitive = np.array([0] * n0 + [1] * n1)
    features = rng.normal(size=(n0 + n1, 3))
    features[:, 0] -= 2.0 * sensitive
    labels = rng.integers(0, 2, n0 + n1)
    return Dataset(features=features, labels=labels, sensitive=sensitive)


class ReweighTestCase(unittest.TestCase):
    """Tests for reweighing."""

    def test_factorization(self) -> None:
        rng = np.random.default_rng(7)
        for _ in range(500):
            n = int(rng.integers(4, 80))
            y = rng.integers(0, 2, n)
            a = rng.integers(0, 2, n)
            if len({(int(g), int(c)) for g, c in zip(a, y)}) < 4:
                continue
            w = reweigh(y, a)
            total = w.sum()
            for group in (0, 1):
                for label in (0, 1):
                    joint = w[(a == group) & (y == label)].sum() / total
                    marginals = (w[a == group].sum() / total) * (w[y == label].sum() / total)
                    self.assertAlmostEqual(joint, marginals, delta=1e-12)
            # Weights preserve the total mass.
            self.assertAlmostEqual(total, n, delta=1e-9)

    def test_values(self) -> None:
        y = [1, 1, 1, 0, 1, 0, 0, 0]
        a = [0, 0, 0, 0, 1, 1, 1, 1]
        w = reweigh(y, a)
        # P(a=0) P(y=1) / P(a=0, y=1) = 0.5 * 0.5 / (3 / 8)
        self.assertAlmostEqual(w[0], 2.0 / 3.0, places=15)
        self.assertAlmostEqual(w[3], 2.0, places=15)

    def test_empty_cell(self) -> None:
        with self.assertRaises(EmptyCell):
            reweigh([1, 0, 1, 1], [0, 0, 1, 1])

    def test_resample(self) -> None:
        ds = _biased(50, 30)
        weights = reweigh(ds.labels, ds.sensitive)
        sample = resample(ds, weights, seed=3)
        self.assertEqual(sample.n, ds.n)
        np.testing.assert_array_equal(sample.weights, np.ones(ds.n))
        self.assertEqual(sample, resample(ds, weights, seed=3))
        with self.assertRaises(ValueError):
            resample(ds, np.zeros(ds.n), seed=3)


class DisparateImpactTestCase(unittest.TestCase):
    """Tests for the disparate impact remover."""

    def test_identity(self) -> None:
        for seed in range(20):
            ds = _biased(40, 25, seed)
            self.assertIs(di_remove(ds, 0.0), ds)

    def test_full_repair_equal_groups(self) -> None:
        for seed in range(20):
            ds = _biased(60, 60, seed)
            repaired = di_remove(ds, 1.0)
            for column in range(ds.k):
                group0 = np.sort(repaired.features[ds.sensitive == 0, column])
                group1 = np.sort(repaired.features[ds.sensitive == 1, column])
                np.testing.assert_allclose(group0, group1, rtol=0, atol=1e-12)

    def test_full_repair_unequal_groups(self) -> None:
        ds = _biased(250, 150, 4)
        before = ds.features[ds.sensitive == 0, 0].mean() - ds.features[ds.sensitive == 1, 0].mean()
        repaired = di_remove(ds, 1.0)
        repaired_column = repaired.features[:, 0]
        after = repaired_column[ds.sensitive == 0].mean() - repaired_column[ds.sensitive == 1].mean()
        self.assertGreater(before, 1.5)
        self.assertLess(abs(after), 0.1)

    def test_rank_preservation(self) -> None:
        rng = np.random.default_rng(11)
        for seed in range(50):
            ds = _biased(int(rng.integers(5, 60)), int(rng.integers(5, 60)), seed)
            level = float(rng.random())
            repaired = di_remove(ds, level)
            for group in (0, 1):
                members = ds.sensitive == group
                for column in range(ds.k):
                    order = np.argsort(ds.features[members, column], kind="stable")
                    values = repaired.features[members, column][order]
                    self.assertTrue(np.all(np.diff(values) >= -1e-12))
            np.testing.assert_array_equal(repaired.labels, ds.labels)
            np.testing.assert_array_equal(repaired.sensitive, ds.sensitive)

    def test_selected_columns(self) -> None:
        ds = _biased(30, 30)
        repaired = di_remove(ds, 1.0, numeric_columns=[0])
        np.testing.assert_array_equal(repaired.features[:, 1:], ds.features[:, 1:])
        self.assertFalse(np.array_equal(repaired.features[:, 0], ds.features[:, 0]))

    def test_errors(self) -> None:
        with self.assertRaises(GroupTooSmall):
            di_remove(_biased(10, 1), 0.5)
        with self.assertRaises(ValueError):
            di_remove(_biased(10, 10), 1.3)


if __name__ == "__main__":
    unittest.main()
