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


"""Unit tests for the post-processors."""

import unittest

import numpy as np
from fairscore.errors import EmptyGroupClass, EmptyValidation, UnknownGroup
from fairscore.fairmetrics import ScoreSet, auc, signed_statistic
from fairscore.postproc import (
    CalibrationMap,
    CriticalRegion,
    GroupDecisionRule,
    GroupThresholds,
    calibration_from_json,
    calibration_to_json,
    equalized_odds_apply,
    equalized_odds_fit,
    equalized_odds_probabilities,
    expected_calibration_error,
    group_roc,
    platt_apply,
    platt_fit,
    reject_option_apply,
    reject_option_tune,
    rule_from_json,
    rule_to_json,
)
from fairscore.profit import CostModel, expected_profit, operating_cutoff
from scipy.special import expit

FIXTURE = ScoreSet(
    scores=[0.9, 0.8, 0.3, 0.1, 0.7, 0.2, 0.3, 0.25],
    labels=[1, 0, 1, 0, 1, 0, 0, 1],
    sensitive=[0, 0, 0, 0, 1, 1, 1, 1],
)


def make_scores(n: int = 3000, seed: int = 0) -> ScoreSet:
    """Return overconfident scores whose distribution depends on the group."""
    rng = np.random.default_rng(seed)
    sensitive = rng.integers(0, 2, n)
    z = rng.normal(size=n) + 0.8 * sensitive - 0.3
    labels = (rng.random(n) < expit(z)).astype(int)
    return ScoreSet(scores=expit(2.5 * z - 0.5), labels=labels, sensitive=sensitive)


def make_disadvantaged(n: int, seed: int) -> ScoreSet:
    """Return scores where group 1 has the lower outcome rate."""
    rng = np.random.default_rng(seed)
    sensitive = rng.integers(0, 2, n)
    z = rng.normal(size=n) - 0.8 * sensitive + 0.3
    labels = (rng.random(n) < expit(z)).astype(int)
    return ScoreSet(scores=expit(1.5 * z), labels=labels, sensitive=sensitive)


def group_subset(s: ScoreSet, group: int) -> ScoreSet:
    return s.subset(np.flatnonzero(s.sensitive == group))


class RejectOptionTestCase(unittest.TestCase):
    """Tests for reject option classification."""

    def test_apply(self) -> None:
        adjusted = reject_option_apply(FIXTURE, 0.75)
        np.testing.assert_array_equal(adjusted.scores, [0.9, 0.8, 0.0, 0.1, 1.0, 0.2, 1.0, 1.0])
        np.testing.assert_array_equal(adjusted.labels, FIXTURE.labels)

    def test_region(self) -> None:
        region = CriticalRegion(0.8)
        self.assertEqual(region.band, (0.19999999999999996, 0.8))
        inside = region.contains(np.array([0.1, 0.5, 0.8, 0.85]))
        np.testing.assert_array_equal(inside, [False, True, True, False])
        for theta in (0.5, 1.0, 0.2):
            with self.assertRaises(ValueError):
                CriticalRegion(theta)

    def test_tune(self) -> None:
        cm = CostModel()
        validation = make_scores(800, 1)
        fit = reject_option_tune(validation, (-0.05, 0.05), "independence", cm, n_thetas=40)
        self.assertTrue(0.5 < fit.theta < 1.0)
        if fit.satisfied:
            self.assertLessEqual(abs(fit.statistic), 0.05)
        adjusted = reject_option_apply(validation, fit.theta)
        self.assertAlmostEqual(
            signed_statistic(adjusted, operating_cutoff(cm), "independence"), fit.statistic, places=12
        )

    def test_tune_unbounded(self) -> None:
        # Every grid value is feasible; the smallest wins ties on profit.
        fit = reject_option_tune(FIXTURE, (-1.0, 1.0), "independence", CostModel(), n_thetas=9)
        self.assertTrue(fit.satisfied)
        grid = [0.5 + 0.5 * j / 10 for j in range(1, 10)]
        self.assertIn(fit.theta, grid)

    def test_tune_margins(self) -> None:
        """Statistic levels restrict the candidates of the region scan."""
        cm = CostModel()
        cutoff = operating_cutoff(cm)
        validation = make_disadvantaged(1000, 9)
        grid = []
        for j in range(1, 31):
            theta = 0.5 + 0.5 * j / 31
            adjusted = reject_option_apply(validation, theta)
            statistic = signed_statistic(adjusted, cutoff, "independence")
            grid.append((theta, statistic, expected_profit(adjusted, cm).value))

        full = reject_option_tune(validation, (-1.0, 1.0), "independence", cm, n_thetas=30)
        most_profitable = max(grid, key=lambda row: (row[2], -row[0]))
        self.assertEqual(full.theta, most_profitable[0])
        self.assertIsNone(full.margin)

        centred = reject_option_tune(
            validation, (-1.0, 1.0), "independence", cm, n_thetas=30, n_margins=1
        )
        nearest = min(grid, key=lambda row: (abs(row[1]), -row[2], row[0]))
        self.assertEqual(centred.theta, nearest[0])
        self.assertEqual(centred.margin, 0.0)
        self.assertTrue(centred.satisfied)
        # The group gap is closed by a wider region than profit alone picks.
        self.assertNotEqual(centred.theta, full.theta)
        self.assertLess(abs(centred.statistic), abs(full.statistic))

        with self.assertRaises(ValueError):
            reject_option_tune(validation, (-1.0, 1.0), "independence", cm, n_thetas=30, n_margins=0)

    def test_tune_infeasible(self) -> None:
        with self.assertLogs("fairscore.postproc", level="WARNING"):
            fit = reject_option_tune(FIXTURE, (2.0, 3.0), "independence", CostModel(), n_thetas=9)
        self.assertFalse(fit.satisfied)

    def test_tune_errors(self) -> None:
        empty = ScoreSet(scores=np.zeros(0), labels=np.zeros(0), sensitive=np.zeros(0))
        with self.assertRaises(EmptyValidation):
            reject_option_tune(empty, (-0.1, 0.1), "independence", CostModel())
        with self.assertRaises(ValueError):
            reject_option_tune(FIXTURE, (0.1, -0.1), "independence", CostModel())


class EqualizedOddsTestCase(unittest.TestCase):
    """Tests for equalized odds post-processing."""

    def test_group_roc(self) -> None:
        roc = group_roc(np.array([0.9, 0.8, 0.3, 0.1]), np.array([1, 0, 1, 0]))
        # Accepting only the top score already reaches TPR 0.5 at FPR 0.
        self.assertEqual((roc.fpr[0], roc.tpr[0]), (0.0, 0.5))
        self.assertEqual((roc.fpr[-1], roc.tpr[-1]), (1.0, 1.0))
        self.assertTrue(np.all(np.diff(roc.fpr) > 0))
        # Hull lies on or above the empirical point (0.5, 1).
        self.assertGreaterEqual(float(roc.height(0.5)), 1.0)
        with self.assertRaises(EmptyGroupClass):
            group_roc(np.array([0.2, 0.4]), np.array([1, 1]))

    def test_fit(self) -> None:
        validation = make_scores(2000, 2)
        rule = equalized_odds_fit(validation, CostModel(), epsilon=0.02, seed=4)
        self.assertGreaterEqual(rule.target_tpr, rule.target_fpr)
        probabilities = equalized_odds_probabilities(rule, validation)
        rates = []
        for group in (0, 1):
            member = validation.sensitive == group
            p, y = probabilities[member], validation.labels[member]
            rates.append((p[y == 0].mean(), 1.0 - p[y == 1].mean()))
        self.assertLessEqual(abs(rates[0][0] - rates[1][0]), 0.02)
        self.assertLessEqual(abs(rates[0][1] - rates[1][1]), 0.02)
        self.assertAlmostEqual(rates[0][0], rule.target_fpr, places=9)

        decisions = equalized_odds_apply(rule, validation)
        np.testing.assert_array_equal(decisions, equalized_odds_apply(rule, validation, seed=4))
        self.assertTrue(set(np.unique(decisions)) <= {0, 1})

    def test_fresh_sample(self) -> None:
        rule = equalized_odds_fit(make_scores(20000, 11), CostModel(), epsilon=0.02, seed=5)
        sample = make_scores(20000, 12)
        decisions = equalized_odds_apply(rule, sample)
        rates = []
        for group in (0, 1):
            member = sample.sensitive == group
            d, y = decisions[member], sample.labels[member]
            rates.append((d[y == 0].mean(), 1.0 - d[y == 1].mean()))
        # Epsilon plus sampling noise.
        self.assertLessEqual(abs(rates[0][0] - rates[1][0]), 0.04)
        self.assertLessEqual(abs(rates[0][1] - rates[1][1]), 0.04)

    def test_weaker_hull(self) -> None:
        rng = np.random.default_rng(21)
        n = 4000
        sensitive = np.repeat([0, 1], n // 2)
        labels = rng.integers(0, 2, n)
        # Normal shifts giving AUC near 0.9 for group 0 and 0.6 for group 1.
        shift = np.where(sensitive == 0, 1.8125, 0.3583)
        s = ScoreSet(
            scores=expit(labels * shift + rng.normal(size=n)), labels=labels, sensitive=sensitive
        )
        strong, weak = group_subset(s, 0), group_subset(s, 1)
        self.assertAlmostEqual(auc(strong), 0.9, delta=0.03)
        self.assertAlmostEqual(auc(weak), 0.6, delta=0.03)

        rule = equalized_odds_fit(s, CostModel(), seed=2)
        strong_roc = group_roc(strong.scores, strong.labels)
        weak_roc = group_roc(weak.scores, weak.labels)
        self.assertAlmostEqual(rule.target_tpr, float(weak_roc.height(rule.target_fpr)), delta=1e-9)
        self.assertGreater(float(strong_roc.height(rule.target_fpr)), rule.target_tpr)

    def test_json(self) -> None:
        rule = equalized_odds_fit(make_scores(500, 3), CostModel(), seed=8)
        restored = rule_from_json(rule_to_json(rule))
        self.assertEqual(restored, rule)
        with self.assertRaises(ValueError):
            rule_from_json(rule_to_json(rule).replace('"version": 1', '"version": 99'))

    def test_errors(self) -> None:
        rule = GroupDecisionRule(groups={0: GroupThresholds(lower=0.5, upper=0.5, mixing=0.0)})
        with self.assertRaises(UnknownGroup):
            equalized_odds_probabilities(rule, FIXTURE)
        one_class = ScoreSet(scores=[0.2, 0.6, 0.4, 0.9], labels=[1, 1, 0, 1], sensitive=[0, 0, 1, 1])
        with self.assertRaises(EmptyGroupClass):
            equalized_odds_fit(one_class, CostModel())
        with self.assertRaises(ValueError):
            GroupThresholds(lower=0.6, upper=0.5, mixing=0.0)


class PlattTestCase(unittest.TestCase):
    """Tests for per-group Platt scaling."""

    def test_calibration(self) -> None:
        validation = make_scores(3000, 5)
        mapping = platt_fit(validation)
        calibrated = platt_apply(mapping, validation)
        for group in (0, 1):
            before = group_subset(validation, group)
            after = group_subset(calibrated, group)
            self.assertLessEqual(
                expected_calibration_error(after.scores, after.labels),
                expected_calibration_error(before.scores, before.labels),
            )
            # A monotone map leaves the ranking inside the group unchanged.
            self.assertEqual(auc(after), auc(before))
            self.assertLess(mapping.parameters[group][0], 0.0)

    def test_json(self) -> None:
        mapping = platt_fit(make_scores(500, 6))
        self.assertEqual(calibration_from_json(calibration_to_json(mapping)), mapping)

    def test_errors(self) -> None:
        with self.assertRaises(ValueError):
            CalibrationMap({0: (float("nan"), 0.0)})
        with self.assertRaises(UnknownGroup):
            platt_apply(CalibrationMap({0: (-1.0, 0.0)}), FIXTURE)
        one_class = ScoreSet(scores=[0.2, 0.6, 0.4, 0.9], labels=[0, 0, 0, 1], sensitive=[0, 0, 1, 1])
        with self.assertRaises(EmptyGroupClass):
            platt_fit(one_class)

    def test_ece(self) -> None:
        self.assertEqual(expected_calibration_error([0.25] * 4, [1, 0, 0, 0]), 0.0)
        self.assertAlmostEqual(expected_calibration_error([0.95, 0.95], [0, 0]), 0.95)
        self.assertEqual(expected_calibration_error([], []), 0.0)


if __name__ == "__main__":
    unittest.main()
