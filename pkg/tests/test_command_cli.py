import json
import re

import pandas as pd

from builders import burst_events, cluster
from main import main
from src.commands.analyze import METRIC_COLUMNS
from src.repository.events import read_events, write_events
from src.repository.graphs import read_graph
from src.schemas.schemas import EventKind, SimConfig
from src.services.simulate import run_sim

GRAPH_CONFIG = """
model = "small-world"
n_people = 50
n_pages = 3
neighbors = 4
page_follow_mean = 5
"""

SIM_CONFIG = """
p0 = 0.0
p1 = 0.0
m_copies = 5
mu = 3
sigma = 2
steps = 20
"""

SWEEP_CONFIG = """
kind = "virality"
grid = [0.0, 0.3]
reps = 2

[base]
p0 = 0.1
mu = 2
sigma = 1
m_copies = 3
steps = 15
"""

PREDICT_CONFIG = """
folds = 2
model = "both"

[forest]
n_trees = 5
min_leaf = 1

[logistic]
iterations = 50
"""


CORPUS_CONFIG = """
p0 = 0.0
p1 = 0.0
m_copies = 3
mu = 50
sigma = 20
steps = 100

[detector]
h0 = 1
m_mult = 1
w = 1

[corpus]
m_copies_range = [1, 3]
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def write_corpus(path, recurring=6, single=6):
    clusters = [cluster(f"r{i}", burst_events([(5, 12), (30, 10 + i)], 12)) for i in range(recurring)]
    clusters += [cluster(f"s{i}", burst_events([(5, 12)], 12)) for i in range(single)]
    return write_events(clusters, path)


def test_graph_gen_is_reproducible(tmp_path):
    config = write(tmp_path, "graph.toml", GRAPH_CONFIG)
    first, second = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["graph-gen", "--config", str(config), "--seed", "5", "--out", str(first)]) == 0
    assert main(["graph-gen", "--config", str(config), "--seed", "5", "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert sum(line.startswith("P ") for line in lines) == 50
    manifest = json.loads((tmp_path / "a.txt.manifest.json").read_text())
    assert manifest["seeds"] == {"graph": 5}
    assert manifest["command"] == "graph-gen"


def test_default_output_location(out_dir):
    config = write(out_dir, "graph.toml", GRAPH_CONFIG)
    assert main(["graph-gen", "--config", str(config)]) == 0
    assert (out_dir / "out" / "graph.txt").is_file()


def test_graph_gen_needs_config(tmp_path):
    assert main(["graph-gen", "--out", str(tmp_path / "g.txt")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["graph-gen", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path / "g.txt")]) == 2


def test_invalid_config_value(tmp_path):
    config = write(tmp_path, "graph.toml", "n_people = 0\n")
    assert main(["graph-gen", "--config", str(config), "--out", str(tmp_path / "g.txt")]) == 3


def test_unknown_subcommand():
    assert main(["fly"]) == 2


def test_unknown_log_level(tmp_path, graph_file):
    config = write(tmp_path, "sim.toml", SIM_CONFIG)
    argv = ["simulate", "--graph", str(graph_file), "--config", str(config), "--log-level", "LOUD"]
    assert main(argv) == 2


def test_unknown_task(tmp_path, graph_file):
    events = write_corpus(tmp_path / "events.jsonl")
    argv = ["predict", "--events", str(events), "--graph", str(graph_file), "--task", "viral"]
    assert main(argv) == 2


def test_missing_graph_file(tmp_path):
    config = write(tmp_path, "sim.toml", SIM_CONFIG)
    argv = ["simulate", "--graph", str(tmp_path / "absent.txt"), "--config", str(config),
            "--out", str(tmp_path / "e.jsonl")]
    assert main(argv) == 4


def test_simulate_without_virality_logs_introductions(tmp_path, graph_file):
    config = write(tmp_path, "sim.toml", SIM_CONFIG)
    out = tmp_path / "events.jsonl"
    argv = ["simulate", "--graph", str(graph_file), "--config", str(config), "--seed", "4", "--out", str(out)]
    assert main(argv) == 0

    events = read_events(out)["sim-4"]
    expected = run_sim(read_graph(graph_file), SimConfig(p0=0.0, p1=0.0, m_copies=5, mu=3, sigma=2, steps=20,
                                                         rng_seed=4))
    assert len(events) == expected.total_infections
    assert all(event.kind == EventKind.CREATE_COPY for event in events)
    series = pd.read_csv(tmp_path / "events.series.csv")
    assert len(series) == 20
    assert series["count"].sum() == len(events)

    again = tmp_path / "again.jsonl"
    assert main(argv[:-1] + [str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_simulate_plot(tmp_path, graph_file):
    config = write(tmp_path, "sim.toml", SIM_CONFIG)
    out = tmp_path / "events.jsonl"
    assert main(["simulate", "--graph", str(graph_file), "--config", str(config), "--out", str(out), "--plot"]) == 0
    assert (tmp_path / "events.svg").read_text().lstrip().startswith("<?xml")


def test_simulated_corpus_feeds_prediction(tmp_path):
    graph = tmp_path / "graph.txt"
    assert main(["graph-gen", "--config", str(write(tmp_path, "graph.toml", GRAPH_CONFIG)), "--out", str(graph)]) == 0
    config = write(tmp_path, "sim.toml", CORPUS_CONFIG)
    events = tmp_path / "events.jsonl"
    assert main(["simulate", "--graph", str(graph), "--config", str(config), "--seed", "2", "--reps", "40",
                 "--out", str(events)]) == 0

    runs = pd.read_csv(tmp_path / "events.runs.csv")
    assert len(runs) == 40
    assert runs["m_copies"].between(1, 3).all()
    assert runs["cluster_id"].is_unique
    assert sorted(read_events(events)) == sorted(runs["cluster_id"])

    predict = write(tmp_path, "predict.toml", PREDICT_CONFIG + "\n[detector]\nh0 = 1\nm_mult = 1\nw = 1\n")
    out = tmp_path / "report.csv"
    assert main(["predict", "--events", str(events), "--graph", str(graph), "--config", str(predict),
                 "--out", str(out)]) == 0
    dataset = pd.read_csv(tmp_path / "report.dataset.csv")
    assert dataset["label"].sum() * 2 == len(dataset)
    assert len(dataset) >= 4


def test_corpus_cannot_be_plotted(tmp_path, graph_file):
    config = write(tmp_path, "sim.toml", SIM_CONFIG)
    argv = ["simulate", "--graph", str(graph_file), "--config", str(config), "--reps", "2", "--plot",
            "--out", str(tmp_path / "events.jsonl")]
    assert main(argv) == 2


def test_sweep_tables(tmp_path, graph_file):
    config = write(tmp_path, "sweep.toml", SWEEP_CONFIG)
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--graph", str(graph_file), "--config", str(config), "--out", str(out)]) == 0
    raw = pd.read_csv(out)
    summary = pd.read_csv(tmp_path / "sweep.summary.csv")
    assert len(raw) == 4
    assert summary["p0"].tolist() == [0.0, 0.3]
    assert summary["runs"].tolist() == [2, 2]


def test_sweep_rejects_fractional_copy_counts(tmp_path, graph_file):
    config = write(tmp_path, "sweep.toml", SWEEP_CONFIG.replace('"virality"', '"copies"').replace("0.3", "2.5"))
    assert main(["sweep", "--graph", str(graph_file), "--config", str(config), "--out", str(tmp_path / "s.csv")]) == 3


def test_suppression_experiment(tmp_path, graph_file):
    config = write(tmp_path, "sim.toml", SIM_CONFIG + "pairs = 3\n")
    out = tmp_path / "suppression.csv"
    argv = ["experiment", "--graph", str(graph_file), "--config", str(config), "--kind", "suppression",
            "--out", str(out)]
    assert main(argv) == 0
    assert len(pd.read_csv(out)) == 3
    assert pd.read_csv(tmp_path / "suppression.summary.csv")["p_value"].tolist() == [1.0]


def test_detect_series(tmp_path):
    counts = [0] * 60
    counts[9], counts[39] = 20, 15
    series = write(tmp_path, "series.csv",
                   "day,count\n" + "".join(f"{day},{count}\n" for day, count in enumerate(counts, start=1)))
    out = tmp_path / "peaks.csv"
    assert main(["detect", "--input", str(series), "--out", str(out)]) == 0
    assert pd.read_csv(out)["peak_day"].tolist() == [10, 40]


def test_detect_event_log(tmp_path):
    events = write_corpus(tmp_path / "events.jsonl", recurring=1, single=1)
    out = tmp_path / "peaks.csv"
    assert main(["detect", "--input", str(events), "--out", str(out)]) == 0
    assert pd.read_csv(out)["cluster"].tolist() == ["r0", "r0", "s0"]


def test_analyze_empty_log(tmp_path, graph_file):
    events = write(tmp_path, "events.jsonl", "")
    out = tmp_path / "metrics.csv"
    assert main(["analyze", "--events", str(events), "--graph", str(graph_file), "--out", str(out)]) == 0
    assert out.read_text().splitlines() == [",".join(METRIC_COLUMNS)]
    assert "clusters 0" in (tmp_path / "metrics.summary.txt").read_text()


def test_analyze_two_bursts(tmp_path, graph_file):
    first = [(actor % 6, 0, 5, "c" if i == 0 else "r") for i, actor in enumerate(range(12))]
    second = [(3 + actor % 6, 0, 30, "r") for actor in range(12)]
    events = write_events([cluster("two", first + second)], tmp_path / "events.jsonl")
    out = tmp_path / "metrics.csv"
    assert main(["analyze", "--events", str(events), "--graph", str(graph_file), "--out", str(out)]) == 0
    row = pd.read_csv(out).iloc[0]
    assert row["peaks"] == 2
    assert bool(row["recurred"])
    assert abs(row["jaccard_persons"] - 1 / 3) < 1e-9
    assert row["first_burst_reshares"] == 12
    assert "exposure overlap: degenerate (n=1)" in (tmp_path / "metrics.summary.txt").read_text()


def test_analyze_overlap_grows_with_first_burst(tmp_path, graph_file):
    prefix = [2, 4, 11, 8]
    clusters = []
    for i in range(8):
        sharers = prefix[:1 + i // 2]
        first = [(sharers[j % len(sharers)], 0, 5, "c" if j == 0 else "r") for j in range(12 + i)]
        second = [((6, 7, 8)[j % 3], 0, 30, "r") for j in range(12)]
        clusters.append(cluster(f"c{i}", first + second))
    events = write_events(clusters, tmp_path / "events.jsonl")
    out = tmp_path / "metrics.csv"
    assert main(["analyze", "--events", str(events), "--graph", str(graph_file), "--out", str(out)]) == 0

    metrics = pd.read_csv(out)
    assert metrics["exposure_overlap"].round(6).tolist() == [0.0, 0.0, 0.333333, 0.333333,
                                                             0.666667, 0.666667, 1.0, 1.0]
    summary = (tmp_path / "metrics.summary.txt").read_text()
    line = next(line for line in summary.splitlines() if line.startswith("first burst size vs exposure overlap"))
    assert float(re.search(r"r=(-?[\d.]+)", line).group(1)) > 0
    assert "(n=8)" in line


def test_predict_is_reproducible(tmp_path, graph_file):
    events = write_corpus(tmp_path / "events.jsonl")
    config = write(tmp_path, "predict.toml", PREDICT_CONFIG)
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name / "report.csv"
        argv = ["predict", "--events", str(events), "--graph", str(graph_file), "--config", str(config),
                "--seed", "1", "--out", str(out), "--ablation"]
        assert main(argv) == 0
        outputs.append(out)
    assert outputs[0].read_bytes() == outputs[1].read_bytes()

    report = pd.read_csv(outputs[0])
    assert report[report["fold"] == "mean"]["model"].tolist() == ["forest", "logistic"]
    dataset = pd.read_csv(tmp_path / "a" / "report.dataset.csv")
    assert len(dataset) == 12
    assert dataset["label"].sum() == 6
    assert (tmp_path / "a" / "report.forest.json").is_file()
    assert len(pd.read_csv(tmp_path / "a" / "report.ablation.csv")) == 8


def test_replay_reproduces_outputs(tmp_path, graph_file):
    config = write(tmp_path, "sim.toml", SIM_CONFIG)
    out = tmp_path / "events.jsonl"
    assert main(["simulate", "--graph", str(graph_file), "--config", str(config), "--out", str(out)]) == 0
    recorded = out.read_bytes()
    out.unlink()

    manifest = tmp_path / "events.jsonl.manifest.json"
    assert main(["replay", str(manifest)]) == 0
    assert out.read_bytes() == recorded

    graph_file.write_text(graph_file.read_text() + "\n")
    assert main(["replay", str(manifest)]) == 3
