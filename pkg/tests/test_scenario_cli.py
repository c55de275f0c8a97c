import csv
import json

import numpy as np
import pytest

from swconsensus.cli import (
    EXIT_DIVERGED,
    EXIT_ERROR,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_UNCERTIFIED,
    main,
)
from swconsensus.scenario import (
    ScenarioError,
    load_scenario,
    parse_topology_set,
    validate_scenario,
)

TOPO_TEXT = """
mu 1.5
topology cycle
nodes 3
edge 2 1 1
edge 3 2 1
edge 1 3 1
topology empty
nodes 3
"""


class TestParseTopologySet:
    def test_basic(self):
        ts = parse_topology_set(TOPO_TEXT)
        assert ts.mu == 1.5
        assert [t.label for t in ts.topologies] == ["cycle", "empty"]
        assert ts.connected_indices == (0,)
        assert ts.topologies[0].weights[1, 0] == 1.0  # edge 2 1: flow 1 -> 2

    def test_mu_defaults_to_spectrum(self):
        text = TOPO_TEXT.replace("mu 1.5\n", "")
        ts = parse_topology_set(text)
        assert ts.mu == pytest.approx(1.5)

    def test_comments_and_blanks(self):
        ts = parse_topology_set("# c\n\n" + TOPO_TEXT + "\n# trailing\n")
        assert len(ts.topologies) == 2

    def test_unknown_directive(self):
        with pytest.raises(ScenarioError):
            parse_topology_set("vertex 1\n")

    def test_edge_out_of_range(self):
        with pytest.raises(ScenarioError):
            parse_topology_set("topology t\nnodes 2\nedge 3 1 1\n")

    def test_missing_nodes(self):
        with pytest.raises(ScenarioError):
            parse_topology_set("topology t\nedge 1 2 1\n")

    def test_empty_file(self):
        with pytest.raises(ScenarioError):
            parse_topology_set("")


def write_scenario(tmp_path, name="sc.toml", **overrides):
    (tmp_path / "set.topo").write_text(TOPO_TEXT)
    body = {
        "signal": '[signal]\nintervals = [["cycle", 3.0], ["empty", 0.3], ["cycle", 3.0]]\n',
        "horizon": "horizon = 6.3",
        "tau": "3.0",
        "T0": "0.4",
    }
    body.update(overrides)
    text = f"""
[topologies]
file = "set.topo"

[dynamics]
name = "bounded_sine"
dim = 2
alpha = 1.0

[gain]
a = 1.0
g = 20.0

[adt]
tau = {body["tau"]}
n0 = 1
T0 = {body["T0"]}

{body["signal"]}

[simulation]
dt = 1e-3
{body["horizon"]}

[initial]
seed = 1
scale = 2.0
"""
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadScenario:
    def test_roundtrip(self, tmp_path):
        sc = load_scenario(write_scenario(tmp_path))
        assert sc.ts.node_count == 3
        assert sc.gain.g == 20.0
        assert sc.adt.tau == 3.0
        assert sc.sig.intervals[0] == (0, 3.0)
        assert sc.init.shape == (6,)
        assert validate_scenario(sc)["valid"]

    def test_generated_signal(self, tmp_path):
        path = write_scenario(
            tmp_path,
            signal="[signal.generate]\ntau = 3.0\nn0 = 1\nT0 = 0.4\nhorizon = 10.0\nseed = 2\n",
        )
        sc = load_scenario(path)
        assert sc.sig.total_duration >= 10.0

    def test_explicit_initial_values(self, tmp_path):
        path = write_scenario(tmp_path)
        text = path.read_text().replace(
            "[initial]\nseed = 1\nscale = 2.0",
            "[initial]\nvalues = [1.0, 0.0, 2.0, 0.0, 3.0, 0.0]",
        )
        path.write_text(text)
        sc = load_scenario(path)
        assert np.array_equal(sc.init, [1.0, 0.0, 2.0, 0.0, 3.0, 0.0])

    def test_missing_section(self, tmp_path):
        path = write_scenario(tmp_path)
        path.write_text(path.read_text().replace("[adt]", "[adx]"))
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_unknown_signal_label(self, tmp_path):
        path = write_scenario(
            tmp_path, signal='[signal]\nintervals = [["ghost", 1.0]]\n'
        )
        with pytest.raises(ScenarioError):
            load_scenario(path)

    def test_deterministic_initial(self, tmp_path):
        path = write_scenario(tmp_path)
        a = load_scenario(path).init
        b = load_scenario(path).init
        assert np.array_equal(a, b)


class TestCliRun:
    def test_certified_run_exit_zero(self, tmp_path):
        path = write_scenario(tmp_path)
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == EXIT_OK
        for name in ("trajectory.csv", "switches.csv", "vtrace.csv",
                     "certificate.json", "summary.json"):
            assert (out / name).exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["outcome"] == "certified"
        assert summary["converged"]

    def test_t0_violation_blocks_simulation(self, tmp_path):
        path = write_scenario(
            tmp_path,
            signal='[signal]\nintervals = [["cycle", 3.0], ["empty", 1.5]]\n',
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == EXIT_INVALID
        assert not (out / "trajectory.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["outcome"] == "invalid"

    def test_zero_horizon(self, tmp_path):
        path = write_scenario(tmp_path, horizon="horizon = 0.0")
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["outcome"] == "zero-horizon"
        assert summary["final_error"] > 0

    def test_uncertified_exit_code(self, tmp_path):
        intervals = ", ".join('["cycle", 0.0], ["empty", 0.4]' for _ in range(10))
        path = write_scenario(
            tmp_path, signal=f"[signal]\nintervals = [{intervals}]\n",
            horizon="horizon = 4.0",
        )
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == EXIT_UNCERTIFIED

    def test_missing_file_exit_error(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.toml")]) == EXIT_ERROR

    def test_validate_command(self, tmp_path):
        path = write_scenario(tmp_path)
        assert main(["validate", str(path)]) == EXIT_OK


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("artifacts")
    path = write_scenario(tmp_path)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == EXIT_OK
    return out


class TestArtifacts:
    def test_error_column_recomputable(self, run_dir):
        with open(run_dir / "trajectory.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], rows[1:]
        y_cols = [i for i, h in enumerate(header) if h.startswith("y_")]
        err_col = header.index("err")
        for row in data:
            ys = [float(row[i]) for i in y_cols]
            assert float(row[err_col]) == pytest.approx(max(ys) - min(ys), abs=1e-14)

    def test_w_monotone_on_flow_rows(self, run_dir):
        cert = json.loads((run_dir / "certificate.json").read_text())
        floor = cert["v_floor"]
        with open(run_dir / "vtrace.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        ws = [float(r["W"]) for r in rows
              if r["phase"] == "flow" and float(r["V"]) > floor]
        for prev, nxt in zip(ws[:-1], ws[1:]):
            assert nxt <= prev * (1 + 1e-6)

    def test_certificate_json_fields(self, run_dir):
        cert = json.loads((run_dir / "certificate.json").read_text())
        assert cert["certified"] is True
        assert cert["window"][1] > cert["window"][0]
        assert set(cert["checks"]) == {
            "flow_decay", "disconnected_growth_bounded", "jumps_bounded",
            "clock_feasible", "w_monotone", "window_nonempty", "not_diverged",
        }

    def test_plot_export(self, run_dir):
        assert main(["plot", str(run_dir)]) == EXIT_OK
        for name in ("outputs.dat", "error.dat", "vw.dat", "switches.dat"):
            assert (run_dir / name).exists()
        lines = (run_dir / "error.dat").read_text().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) > 10


class TestSweep:
    def make_sweep(self, tmp_path, g, tau, seeds):
        sc = write_scenario(
            tmp_path,
            signal="[signal.generate]\ntau = 3.0\nn0 = 1\nT0 = 0.4\nhorizon = 8.0\nseed = 2\n",
            horizon="horizon = 8.0",
        )
        sweep = tmp_path / "sweep.toml"
        sweep.write_text(
            f'scenario = "{sc.name}"\n\n[sweep]\ng = {g}\ntau = {tau}\nseeds = {seeds}\n'
        )
        return sweep

    def test_single_cell(self, tmp_path):
        sweep = self.make_sweep(tmp_path, [20.0], [3.0], [0])
        out = tmp_path / "out"
        assert main(["sweep", str(sweep), "--out", str(out)]) == EXIT_OK
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["certified"] == "1"

    def test_cardinality_and_determinism(self, tmp_path):
        sweep = self.make_sweep(tmp_path, [5.0, 20.0], [1.0, 3.0], [0, 1])
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["sweep", str(sweep), "--out", str(out_a)]) == EXIT_OK
        assert main(["sweep", str(sweep), "--out", str(out_b)]) == EXIT_OK
        bytes_a = (out_a / "sweep.csv").read_bytes()
        assert bytes_a == (out_b / "sweep.csv").read_bytes()
        assert len(bytes_a.splitlines()) == 9  # header + 2*2*2 rows


class TestGenSignal:
    def test_prints_labels(self, tmp_path, capsys):
        topo = tmp_path / "set.topo"
        topo.write_text(TOPO_TEXT)
        rc = main([
            "gen-signal", str(topo), "--tau", "2", "--n0", "1",
            "--T0", "0.5", "--horizon", "6", "--seed", "4",
        ])
        assert rc == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) >= 2
        for i, line in enumerate(lines):
            label, dur = line.split()
            assert label == ("cycle" if i % 2 == 0 else "empty")
            assert float(dur) >= 0.0


class TestBundledScenarios:
    def test_ring3_admissible(self, scenario_dir, tmp_path):
        out = tmp_path / "ring3"
        rc = main(["run", str(scenario_dir / "ring3_admissible.toml"), "--out", str(out)])
        assert rc == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["final_error"] < 1e-6

    def test_bundled_files_validate(self, scenario_dir):
        for name in ("ring3_admissible.toml", "ring5_admissible.toml",
                     "ring5_inadmissible.toml"):
            sc = load_scenario(scenario_dir / name)
            assert validate_scenario(sc)["valid"], name
