import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from builders import cluster
from src.models.cascade import CascadeCluster
from src.repository.configs import load_config, read_config_data, sha256_file
from src.repository.events import read_clusters, read_series, write_events, write_peaks, write_series
from src.repository.models import dump_forest_json, load_forest_json
from src.repository.reports import (manifest_path, read_manifest, read_table, reports_frame, write_manifest,
                                    write_table)
from src.models.dataset import Dataset
from src.schemas.schemas import (Burst, DailySeries, EvalReport, FoldMetrics, ForestConfig, Peak, RunManifest,
                                 SimConfig)
from src.services.errors import StorageError, UsageError
from src.services.predict import train_random_forest


class TemporaryDirTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()


class TestEventLog(TemporaryDirTestCase):
    def test_round_trip(self):
        original = CascadeCluster("c1", [0, 1, 2, 3], [0, 0, 1, 1], [1, 2, 2, 5], [True, False, True, False],
                                  [-1, 0, -1, 2])
        other = cluster("c2", [(4, 0, 3, "c")])
        path = write_events([original, other], self.dir / "events.jsonl")
        restored = read_clusters(path)
        self.assertEqual([c.cluster_id for c in restored], ["c1", "c2"])
        for name in ("actors", "copy_ids", "days", "is_create", "parents"):
            np.testing.assert_array_equal(getattr(restored[0], name), getattr(original, name))

    def test_record_fields(self):
        path = write_events([cluster("c1", [(0, 0, 1, "c")])], self.dir / "events.jsonl")
        record = json.loads(path.read_text().splitlines()[0])
        self.assertEqual(record, {"cluster": "c1", "copy": 0, "actor": 0, "day": 1, "kind": "create_copy"})

    def test_bad_record(self):
        path = self.dir / "events.jsonl"
        path.write_text('{"cluster": "c", "copy": 0, "actor": 0, "day": 0, "kind": "create_copy"}\n')
        with self.assertRaises(StorageError):
            read_clusters(path)

    def test_not_json(self):
        path = self.dir / "events.jsonl"
        path.write_text("cluster,copy\n")
        with self.assertRaises(StorageError):
            read_clusters(path)

    def test_empty_log(self):
        path = self.dir / "events.jsonl"
        path.write_text("")
        self.assertEqual(read_clusters(path), [])


class TestSeriesFiles(TemporaryDirTestCase):
    def test_missing_days_are_zero(self):
        path = self.dir / "series.csv"
        path.write_text("day,count\n2,3\n5,1\n")
        self.assertEqual(read_series(path).counts, [0, 3, 0, 0, 1])
        self.assertEqual(read_series(path, horizon=7).counts, [0, 3, 0, 0, 1, 0, 0])

    def test_round_trip(self):
        series = DailySeries(counts=[0, 4, 0, 9])
        self.assertEqual(read_series(write_series(series, self.dir / "s.csv")), series)

    def test_wrong_columns(self):
        path = self.dir / "series.csv"
        path.write_text("t,n\n1,2\n")
        with self.assertRaises(StorageError):
            read_series(path)

    def test_peaks_table(self):
        burst = Burst(peak=Peak(day=5, height=20), start_day=4, end_day=6, reshares=41)
        table = read_table(write_peaks([burst], self.dir / "peaks.csv"))
        self.assertEqual(table.iloc[0].tolist(), [5, 20, 4, 6, 2, 41])


class TestConfigFiles(TemporaryDirTestCase):
    def test_toml(self):
        path = self.dir / "sim.toml"
        path.write_text("p0 = 0.2\nm_copies = 5\n")
        self.assertEqual(read_config_data(path), {"p0": 0.2, "m_copies": 5})
        config = load_config(path, SimConfig, rng_seed=7)
        self.assertEqual((config.p1, config.rng_seed), (0.1, 7))

    def test_json(self):
        path = self.dir / "sim.json"
        path.write_text('{"p0": 0.2}')
        self.assertEqual(read_config_data(path), {"p0": 0.2})

    def test_missing(self):
        with self.assertRaises(UsageError):
            read_config_data(self.dir / "absent.toml")

    def test_malformed(self):
        path = self.dir / "sim.toml"
        path.write_text("p0 = = 1\n")
        with self.assertRaises(StorageError):
            read_config_data(path)

    def test_sha256(self):
        path = self.dir / "a.txt"
        path.write_bytes(b"abc")
        self.assertEqual(sha256_file(path), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")


class TestReports(TemporaryDirTestCase):
    def test_manifest_round_trip(self):
        output = self.dir / "run.csv"
        manifest = RunManifest(command="simulate", argv=["simulate", "--graph", "g.txt"], version="0.1.0",
                               seeds={"sim": 3}, outputs=[str(output)])
        path = write_manifest(manifest, output)
        self.assertEqual(path, manifest_path(output))
        self.assertEqual(path.name, "run.csv.manifest.json")
        self.assertEqual(read_manifest(path), manifest)

    def test_not_a_manifest(self):
        path = self.dir / "x.json"
        path.write_text("{}")
        with self.assertRaises(StorageError):
            read_manifest(path)

    def test_reports_frame(self):
        fold = FoldMetrics(accuracy=1.0, f1=1.0, roc_auc=1.0)
        report = EvalReport(model="forest", accuracy=1.0, f1=1.0, roc_auc=1.0, per_fold=[fold, fold])
        frame = reports_frame([report])
        self.assertEqual(frame["fold"].tolist(), ["1", "2", "mean"])
        write_table(frame, self.dir / "report.csv")
        self.assertEqual(len(read_table(self.dir / "report.csv")), 3)


class TestForestFile(TemporaryDirTestCase):
    def test_round_trip_predicts_identically(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(40, 3))
        y = np.tile([0, 1], 20)
        model = train_random_forest(Dataset(X, y, tuple(map(str, range(40))), ("a", "b", "c")),
                                    ForestConfig(n_trees=5, min_leaf=1))
        ensemble = load_forest_json(dump_forest_json(model, self.dir / "forest.json"))
        self.assertEqual(ensemble.feature_names, ("a", "b", "c"))
        np.testing.assert_allclose(ensemble.predict_proba(X), model.predict_proba(X), atol=1e-12)

    def test_not_json(self):
        path = self.dir / "forest.json"
        path.write_text("forest")
        with self.assertRaises(StorageError):
            load_forest_json(path)

    def test_wrong_format(self):
        path = self.dir / "forest.json"
        path.write_text('{"format": "other"}')
        with self.assertRaises(StorageError):
            load_forest_json(path)


if __name__ == '__main__':
    unittest.main()
