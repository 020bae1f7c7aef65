import unittest

import numpy as np
from pydantic import ValidationError

from builders import burst_events, cluster, people_graph
from src.models.dataset import Dataset
from src.schemas.schemas import FEATURE_GROUPS, FEATURE_NAMES, Burst, Labels, Peak, RawLabels, Task
from src.services.errors import InvalidInputError
from src.services.features import binarize_labels, build_dataset, extract_features, make_labels, split_by_copy


def burst(start, end, peak, height, reshares=1):
    return Burst(peak=Peak(day=peak, height=height), start_day=start, end_day=end, reshares=reshares)


def corpus(recurring=10, single=30):
    clusters = [cluster(f"r{i}", burst_events([(5, 12), (30, 10 + i)], 20)) for i in range(recurring)]
    clusters += [cluster(f"s{i}", burst_events([(5, 12)], 20)) for i in range(single)]
    return clusters


class TestFeatureLayout(unittest.TestCase):
    def test_groups_cover_every_feature_once(self):
        grouped = [name for names in FEATURE_GROUPS.values() for name in names]
        self.assertEqual(len(FEATURE_NAMES), 26)
        self.assertEqual(tuple(grouped), FEATURE_NAMES)


class TestExtractFeatures(unittest.TestCase):
    def test_single_copy_single_day(self):
        graph = people_graph(20)
        cascade = cluster("a", burst_events([(5, 12)], 20))
        features = extract_features(cascade, graph, burst(5, 5, 5, 12, 12))
        self.assertEqual((features.days_before_peak, features.days_after_peak), (0, 0))
        self.assertEqual((features.gradient_before, features.gradient_after), (0, 0))
        self.assertEqual(features.n_copies, 1)
        self.assertEqual(features.copy_reshare_entropy, 0.0)
        self.assertEqual(features.top_copy_share, 1.0)
        self.assertEqual((features.n_users, features.n_pages, features.prop_pages), (12, 0, 0.0))

    def test_temporal_shape(self):
        graph = people_graph(30)
        cascade = cluster("a", burst_events([(3, 2), (4, 5), (5, 10), (6, 6), (7, 3)], 30))
        features = extract_features(cascade, graph, burst(3, 7, 5, 10, 26))
        self.assertEqual((features.days_before_peak, features.days_after_peak), (2, 2))
        self.assertEqual((features.reshares_before_peak, features.reshares_after_peak), (7, 9))
        self.assertEqual(features.peak_height, 10)
        self.assertEqual(features.gradient_before, 4.0)
        self.assertEqual(features.gradient_after, 3.5)

    def test_two_copies(self):
        graph = people_graph(4)
        cascade = cluster("a", [(0, 0, 1, "c"), (1, 0, 1, "r"), (2, 0, 1, "r"), (3, 1, 1, "c")])
        features = extract_features(cascade, graph, burst(1, 1, 1, 4, 4))
        self.assertEqual(features.n_copies, 2)
        self.assertAlmostEqual(features.copy_reshare_entropy, 0.8113, places=4)
        self.assertEqual(features.top_copy_share, 0.75)
        self.assertEqual(features.mean_reshares_per_copy, 2.0)

    def test_page_features(self):
        graph = people_graph(4, [(0, 1)], n_pages=2, follow_edges=[(0, 4), (1, 5), (2, 4)])
        cascade = cluster("a", [(4, 0, 1, "c"), (0, 0, 1, "r"), (5, 0, 1, "r"), (1, 1, 1, "c")])
        features = extract_features(cascade, graph, burst(1, 1, 1, 4, 4))
        self.assertEqual((features.n_users, features.n_pages, features.prop_pages), (2, 2, 0.5))
        self.assertEqual(features.friend_edges, 1)
        self.assertEqual(features.follow_edges, 2)
        self.assertEqual(features.exposed_count, 1)
        self.assertEqual(features.prop_copies_by_pages, 0.5)
        self.assertEqual(features.prop_reshares_by_pages, 0.5)
        self.assertEqual(features.prop_reshares_page_copies, 0.75)
        self.assertEqual(features.top_copy_by_page, 1.0)

    def test_pages_only_burst_has_zero_demographics(self):
        graph = people_graph(1, n_pages=1)
        cascade = cluster("a", [(1, 0, 1, "c")])
        features = extract_features(cascade, graph, burst(1, 1, 1, 1, 1))
        self.assertEqual((features.mean_age, features.country_entropy), (0.0, 0.0))

    def test_empty_window(self):
        cascade = cluster("a", burst_events([(5, 12)], 20))
        with self.assertRaises(InvalidInputError):
            extract_features(cascade, people_graph(20), burst(10, 10, 10, 1))


class TestLabels(unittest.TestCase):
    def test_single_burst(self):
        cascade = cluster("a", burst_events([(5, 12)], 20))
        self.assertEqual(make_labels(cascade, [burst(5, 5, 5, 12, 12)]), RawLabels(recurred=False))

    def test_ratio_and_gap(self):
        cascade = cluster("a", burst_events([(5, 12)], 20))
        labels = make_labels(cascade, [burst(8, 12, 10, 50, 100), burst(22, 26, 24, 20, 28)])
        self.assertTrue(labels.recurred)
        self.assertAlmostEqual(labels.size_ratio, 0.28)
        self.assertEqual(labels.gap, 14)

    def test_binarize(self):
        labels = binarize_labels(RawLabels(recurred=True, size_ratio=0.28, gap=14), size_median=0.2, gap_median=20)
        self.assertEqual(labels, Labels(recurred=True, rel_size_large=True, late_recurrence=False))
        self.assertEqual(binarize_labels(RawLabels(recurred=False), 0.2, 20), Labels(recurred=False))

    def test_size_label_needs_recurrence(self):
        with self.assertRaises(ValidationError):
            Labels(recurred=False, rel_size_large=True)


class TestSplitByCopy(unittest.TestCase):
    def test_one_cluster_per_copy(self):
        cascade = cluster("a", [(0, 0, 1, "c"), (1, 0, 2, "r"), (2, 1, 2, "c"), (3, 1, 4, "r")])
        parts = split_by_copy(cascade)
        self.assertEqual([part.cluster_id for part in parts], ["a/0", "a/1"])
        self.assertEqual([len(part) for part in parts], [2, 2])
        self.assertEqual([int(part.is_create.sum()) for part in parts], [1, 1])


class TestBuildDataset(unittest.TestCase):
    def setUp(self) -> None:
        self.graph = people_graph(20)

    def test_recur_is_balanced(self):
        dataset = build_dataset(corpus(), self.graph, task=Task.RECUR, rng_seed=0, n_jobs=1)
        self.assertEqual(len(dataset), 20)
        self.assertEqual(dataset.class_counts(), (10, 10))
        self.assertEqual(dataset.X.shape, (20, 26))
        positives = {cid for cid, label in zip(dataset.cluster_ids, dataset.y) if label}
        self.assertEqual(positives, {f"r{i}" for i in range(10)})

    def test_downsampling_is_seeded(self):
        first = build_dataset(corpus(), self.graph, rng_seed=3, n_jobs=1)
        second = build_dataset(corpus(), self.graph, rng_seed=3, n_jobs=1)
        self.assertEqual(first.cluster_ids, second.cluster_ids)

    def test_size_task_splits_at_median(self):
        dataset = build_dataset(corpus(), self.graph, task=Task.SIZE, n_jobs=1)
        self.assertEqual(len(dataset), 10)
        for cid, label in zip(dataset.cluster_ids, dataset.y):
            self.assertEqual(label, int(int(cid[1:]) >= 5))

    def test_equal_gaps_leave_one_class(self):
        with self.assertRaises(InvalidInputError):
            build_dataset(corpus(), self.graph, task=Task.WHEN, n_jobs=1)

    def test_single_class(self):
        with self.assertRaises(InvalidInputError):
            build_dataset(corpus(single=0), self.graph, n_jobs=1)


class TestDataset(unittest.TestCase):
    def setUp(self) -> None:
        self.dataset = Dataset(np.arange(6.0).reshape(3, 2), [0, 1, 1], ("a", "b", "c"), ("x", "y"))

    def test_shape_checks(self):
        with self.assertRaises(InvalidInputError):
            Dataset(np.zeros((2, 3)), [0, 1], ("a", "b"), ("x", "y"))
        with self.assertRaises(InvalidInputError):
            Dataset(np.zeros((2, 2)), [0, 2], ("a", "b"), ("x", "y"))

    def test_select(self):
        selected = self.dataset.select(["y"])
        self.assertEqual(selected.X[:, 0].tolist(), [1.0, 3.0, 5.0])
        with self.assertRaises(InvalidInputError):
            self.dataset.select(["z"])

    def test_frame(self):
        restored = Dataset.from_frame(self.dataset.to_frame())
        np.testing.assert_array_equal(restored.X, self.dataset.X)
        self.assertEqual(restored.cluster_ids, self.dataset.cluster_ids)
        self.assertEqual(restored.feature_names, ("x", "y"))


if __name__ == '__main__':
    unittest.main()
