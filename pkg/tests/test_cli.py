import json

import pytest
from numpy.testing import assert_allclose

from reserve_insure.cli import SUBCOMMANDS, main
from reserve_insure.ingest import read_csv, write_csv
from reserve_insure.synthetic import synthetic_year, wind_records

WORKED = {
    "prices": [10.0, 40.0, 20.0],
    "penalty": {"absolute": 100.0},
    "model": {"mu": [10.0, 10.0, 10.0], "sigma": [2.0, 2.0, 2.0], "capacity": 30.0},
    "storage": {"e_max": 12.0, "cost_coeff": 7.0},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Dated prices and wind readings for two synthetic months."""
    root = tmp_path_factory.mktemp("ws")
    prices, wind = synthetic_year(2018, seed=11)
    days = [d for d in prices if d[5:7] in ("01", "02")][:40]
    write_csv(root / "prices.csv", ("date", "hour", "price_usd_per_mwh"),
              ((d, h, prices[d][h]) for d in days for h in range(24)))
    write_csv(root / "wind.csv", ("timestamp", "power_mw"), wind_records(wind, 2018, seed=11, days=days))
    cfg = {"prices": "prices.csv", "wind": "wind.csv", "capacity": 50.0, "n_scenarios": 50,
           "penalty": {"ratio": 0.4}, "out": "out"}
    (root / "config.json").write_text(json.dumps(cfg))
    return root


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_config(path, data):
    path.write_text(json.dumps(data))
    return path


class TestSubcommands:
    def test_contract_worked_example(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", WORKED)
        code, out, _ = run(capsys, "contract", "--config", cfg, "--out", tmp_path / "o")
        assert code == 0
        summary = json.loads(out)["contracts"][0]
        assert summary["slot"] == 1
        assert summary["cap"] == 40.0
        assert_allclose(summary["floor"], 39.37192407293363, rtol=1e-12)
        header, rows = read_csv(tmp_path / "o" / "contract.csv")
        assert header[:3] == ["date", "charge_slot", "slot"]
        assert rows[0][1:3] == ["0", "1"]

    @pytest.mark.parametrize("sub, files", [
        ("fit", ["model.json", "model.csv"]),
        ("bid", ["bids.csv"]),
        ("contract", ["contract.csv"]),
        ("classify", ["classify.csv"]),
        ("simulate", ["report.csv", "calendar.csv"]),
        ("twoway", ["twoway.csv"]),
    ])
    def test_data_subcommands(self, workspace, tmp_path, capsys, sub, files):
        code, out, err = run(capsys, sub, "--config", workspace / "config.json", "--out", tmp_path)
        assert code == 0, err
        assert json.loads(out)["files"] == files
        for f in files:
            assert (tmp_path / f).stat().st_size > 0

    def test_network(self, tmp_path, capsys):
        code, out, _ = run(capsys, "network", "--out", tmp_path)
        assert code == 0
        assert json.loads(out)["max_abs_flow"] <= 80.0 + 1e-6
        header, rows = read_csv(tmp_path / "lmp.csv")
        assert header == ["bus", "slot", "price"]
        assert len(rows) == 14 * 24

    def test_matrix_with_svg(self, tmp_path, capsys):
        code, out, _ = run(capsys, "matrix", "--out", tmp_path, "--svg")
        assert code == 0
        assert json.loads(out)["diagonal_feasible"] is True
        assert (tmp_path / "matrix.svg").read_text().lstrip().startswith("<?xml")

    def test_fit_then_bid_from_json(self, workspace, tmp_path, capsys):
        run(capsys, "fit", "--config", workspace / "config.json", "--out", tmp_path)
        cfg = write_config(tmp_path / "b.json", {"prices": str(workspace / "prices.csv"),
                                                  "model": str(tmp_path / "model.json")})
        code, out, err = run(capsys, "bid", "--config", cfg, "--out", tmp_path / "b")
        assert code == 0, err
        assert json.loads(out)["days"] == 40

    def test_simulate_synthetic_svg(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "s.json", {"synthetic": {"seed": 2}, "months": [6], "n_scenarios": 20})
        code, out, _ = run(capsys, "simulate", "--config", cfg, "--out", tmp_path, "--svg")
        assert code == 0
        assert json.loads(out)["months"] == [6]
        assert (tmp_path / "report.svg").exists()

    def test_config_relative_out(self, workspace, capsys):
        code, _, _ = run(capsys, "classify", "--config", workspace / "config.json")
        assert code == 0
        assert (workspace / "out" / "classify.csv").exists()


class TestDeterminism:
    @pytest.mark.parametrize("sub", [s for s in SUBCOMMANDS if s not in ("network", "matrix")])
    def test_rerun_identical(self, workspace, tmp_path, capsys, sub):
        outputs = []
        for rep in ("a", "b"):
            code, _, err = run(capsys, sub, "--config", workspace / "config.json", "--seed", 7,
                               "--out", tmp_path / rep)
            assert code == 0, err
            outputs.append({p.name: p.read_bytes() for p in sorted((tmp_path / rep).iterdir())})
        assert outputs[0] == outputs[1]

    def test_seed_matters(self, workspace, tmp_path, capsys):
        for seed in (1, 2):
            run(capsys, "simulate", "--config", workspace / "config.json", "--seed", seed,
                "--out", tmp_path / str(seed))
        assert (tmp_path / "1" / "report.csv").read_bytes() != (tmp_path / "2" / "report.csv").read_bytes()

    def test_inputs_untouched(self, workspace, tmp_path, capsys):
        before = {p.name: p.read_bytes() for p in workspace.glob("*.csv")}
        run(capsys, "simulate", "--config", workspace / "config.json", "--out", tmp_path)
        assert {p.name: p.read_bytes() for p in workspace.glob("*.csv")} == before


class TestErrors:
    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 2
        assert json.loads(err)["error"] == "usage"

    def test_missing_config(self, tmp_path, capsys):
        code, _, err = run(capsys, "bid", "--config", tmp_path / "nope.json")
        assert code == 2
        assert "does not exist" in json.loads(err)["message"]

    def test_invalid_json(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{\n  \"prices\": [1, 2,\n}")
        code, _, err = run(capsys, "bid", "--config", cfg)
        payload = json.loads(err)
        assert code == 3
        assert payload["line"] == 3

    def test_data_error_has_line(self, tmp_path, capsys):
        (tmp_path / "p.csv").write_text("hour,price_usd_per_mwh\n0,1\n1,inf\n")
        cfg = write_config(tmp_path / "c.json", {"prices": "p.csv", "model": WORKED["model"]})
        code, _, err = run(capsys, "bid", "--config", cfg, "--out", tmp_path)
        payload = json.loads(err)
        assert code == 3
        assert payload["line"] == 3

    def test_missing_inputs(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", {"prices": [1.0, 2.0]})
        code, _, err = run(capsys, "contract", "--config", cfg, "--out", tmp_path)
        assert code == 2
        assert "model" in json.loads(err)["message"]

    def test_negative_seed(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", WORKED)
        code, _, _ = run(capsys, "contract", "--config", cfg, "--seed", -1)
        assert code == 2

    def test_infeasible_case_exit_4(self, tmp_path, capsys):
        from importlib import resources
        case = json.loads(resources.files("reserve_insure").joinpath("data/ieee14.json").read_text())
        case["profile"] = [20.0] * 24
        write_config(tmp_path / "case.json", case)
        cfg = write_config(tmp_path / "c.json", {"case": "case.json"})
        code, _, err = run(capsys, "network", "--config", cfg, "--out", tmp_path)
        assert code == 4
        assert json.loads(err)["error"] == "LPInfeasibleError"
