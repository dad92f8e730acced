import json

import pytest

import flocsim.cli as cli
from flocsim.errors import ConfigError
from flocsim.scenario import Scenario, bundled_scenario_path

FIG23 = bundled_scenario_path("paper_fig2_fig3")
FIG4 = bundled_scenario_path("paper_fig4_demo")


# ---------------------------------------------------------------------------
# scenario schema


def _fig23_dict():
    return json.loads(FIG23.read_text())


def test_bundled_scenarios_parse():
    scn = Scenario.from_file(FIG23)
    assert not scn.is_multi
    assert scn.model.S_in == 0.9
    assert scn.epsilons == (0.1, 0.01, 0.001)
    multi = Scenario.from_file(FIG4)
    assert multi.is_multi
    assert multi.model.n == 3


def test_unknown_field_rejected():
    obj = _fig23_dict()
    obj["extra"] = 1
    with pytest.raises(ConfigError, match="unknown fields"):
        Scenario.from_dict(obj)
    obj = _fig23_dict()
    obj["model"]["mystery"] = 2
    with pytest.raises(ConfigError, match="unknown fields"):
        Scenario.from_dict(obj)
    obj = _fig23_dict()
    obj["model"]["kinetics"]["vmax"] = 2  # typo for v_max
    with pytest.raises(ConfigError, match="unknown fields"):
        Scenario.from_dict(obj)


def test_wrong_schema_version_rejected():
    obj = _fig23_dict()
    obj["schema"] = 2
    with pytest.raises(ConfigError, match="schema"):
        Scenario.from_dict(obj)


def test_missing_field_rejected():
    obj = _fig23_dict()
    del obj["model"]["kinetics"]
    with pytest.raises(ConfigError, match="missing"):
        Scenario.from_dict(obj)


def test_bad_analysis_name_rejected():
    obj = _fig23_dict()
    obj["analyses"] = ["basins"]
    with pytest.raises(ConfigError, match="unknown analysis"):
        Scenario.from_dict(obj)


def test_negative_initial_rejected():
    obj = _fig23_dict()
    obj["initial"]["u"] = -0.1
    with pytest.raises(ConfigError):
        Scenario.from_dict(obj)


# ---------------------------------------------------------------------------
# CLI subcommands


def test_simulate_full_writes_trajectory(tmp_path):
    rc = cli.main(["simulate", "--scenario", str(FIG23), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "trajectory.csv").read_text().strip().splitlines()
    assert lines[0] == "t,S,u,v"
    first = [float(v) for v in lines[1].split(",")]
    assert first == [0.0, 0.9, 0.1, 0.5]


def test_simulate_zero_biomass_reaches_washout(tmp_path):
    obj = _fig23_dict()
    obj["initial"] = {"S": 0.2, "u": 0.0, "v": 0.0}
    obj["horizon"] = 60.0
    scn_path = tmp_path / "scn.json"
    scn_path.write_text(json.dumps(obj))
    rc = cli.main(["simulate", "--scenario", str(scn_path), "--out", str(tmp_path)])
    assert rc == 0
    last = (tmp_path / "trajectory.csv").read_text().strip().splitlines()[-1]
    t, S, u, v = (float(x) for x in last.split(","))
    assert S == pytest.approx(0.9, abs=1e-6)
    assert abs(u) < 1e-9 and abs(v) < 1e-9


def test_simulate_reduced(tmp_path):
    rc = cli.main(["simulate", "--scenario", str(FIG23), "--out", str(tmp_path),
                   "--reduced"])
    assert rc == 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,S,x"


def test_simulate_reduced_multi(tmp_path):
    rc = cli.main(["simulate", "--scenario", str(FIG4), "--out", str(tmp_path),
                   "--reduced"])
    assert rc == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,S,x1,x2,x3"
    first = [float(v) for v in lines[1].split(",")]
    assert first[2:] == pytest.approx([0.3, 0.3, 0.3])  # x_i = u_i + v_i


def test_phase_without_saddle(tmp_path):
    # monostable variant: S_in = 1.2 has a single stable positive equilibrium
    obj = _fig23_dict()
    obj["model"]["S_in"] = 1.2
    obj["initial"]["S"] = 1.2
    scn = tmp_path / "mono.json"
    scn.write_text(json.dumps(obj))
    rc = cli.main(["phase", "--scenario", str(scn), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "separatrix.csv").read_text().strip().splitlines()
    assert lines == ["branch,S,x"]  # no saddle, header only
    assert (tmp_path / "phase.svg").exists()


def test_multispecies_nonexistence_report(tmp_path):
    # S_in barely above lambda0_tilde: supply cannot match consumption there
    obj = json.loads(FIG4.read_text())
    obj["model"]["S_in"] = 0.52
    obj["initial"]["S"] = 0.52
    scn = tmp_path / "scarce.json"
    scn.write_text(json.dumps(obj))
    rc = cli.main(["multispecies", "--scenario", str(scn), "--out", str(tmp_path),
                   "--grid", "40"])
    assert rc == 0
    report = json.loads((tmp_path / "multispecies.json").read_text())
    assert report["exists"] is False
    assert report["equilibrium"] is None


def test_reduce_compare_errors_decrease(tmp_path):
    rc = cli.main(["reduce-compare", "--scenario", str(FIG23),
                   "--out", str(tmp_path), "--epsilons", "1e-1,1e-2,1e-3"])
    assert rc == 0
    lines = (tmp_path / "convergence.csv").read_text().strip().splitlines()
    assert lines[0] == "epsilon,err_S,err_x,err_u,err_v"
    errs = [float(line.split(",")[1]) for line in lines[1:]]
    assert errs[0] > errs[1] > errs[2]


def test_reduce_compare_multi(tmp_path):
    rc = cli.main(["reduce-compare", "--scenario", str(FIG4),
                   "--out", str(tmp_path), "--epsilons", "1e-1,1e-2"])
    assert rc == 0
    lines = (tmp_path / "convergence.csv").read_text().strip().splitlines()
    errs = [float(line.split(",")[1]) for line in lines[1:]]
    assert errs[0] > errs[1] > 0.0


def test_equilibria_report_bistability(tmp_path):
    rc = cli.main(["equilibria", "--scenario", str(FIG23), "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "equilibria.json").read_text())
    cli.validate_equilibria_report(report)
    assert report["positive_count"] == 2
    kinds = {(e["kind"], e["classification"]) for e in report["equilibria"]}
    assert ("washout", "stable node") in kinds
    assert ("positive", "saddle") in kinds
    assert ("positive", "stable node") in kinds
    stable_pos = [e for e in report["equilibria"]
                  if e["kind"] == "positive" and e["classification"] == "stable node"]
    saddle = [e for e in report["equilibria"] if e["classification"] == "saddle"]
    assert stable_pos[0]["S"] < saddle[0]["S"]


def test_nullclines_outputs(tmp_path):
    rc = cli.main(["nullclines", "--scenario", str(FIG23), "--out", str(tmp_path),
                   "--grid", "60"])
    assert rc == 0
    lines = (tmp_path / "nullclines.csv").read_text().strip().splitlines()
    assert lines[0] == "x,phi,gamma"
    assert len(lines) == 61
    row0 = [float(v) for v in lines[1].split(",")]
    assert row0[1] == pytest.approx(1.0, abs=1e-6)   # phi(0) = lambda0
    assert row0[2] == pytest.approx(0.9, abs=1e-12)  # gamma(0) = S_in
    svg = (tmp_path / "nullclines.svg").read_text()
    assert svg.startswith("<svg ") and svg.rstrip().endswith("</svg>")


def test_phase_outputs(tmp_path):
    rc = cli.main(["phase", "--scenario", str(FIG23), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "separatrix.csv").read_text().strip().splitlines()
    assert lines[0] == "branch,S,x"
    branches = {line.split(",")[0] for line in lines[1:]}
    assert branches == {"1", "2"}
    assert (tmp_path / "phase.svg").exists()


def test_multispecies_outputs(tmp_path):
    rc = cli.main(["multispecies", "--scenario", str(FIG4), "--out", str(tmp_path),
                   "--grid", "50"])
    assert rc == 0
    lines = (tmp_path / "multispecies.csv").read_text().strip().splitlines()
    assert lines[0] == "S,h_1,h_2,h_3,H"
    report = json.loads((tmp_path / "multispecies.json").read_text())
    assert report["exists"] is True
    assert report["equilibrium"]["S_star"] == pytest.approx(0.5235011046443, abs=1e-8)
    assert report["equilibrium"]["stable"] is True
    assert (tmp_path / "multispecies.svg").exists()


def test_multispecies_on_single_model_is_config_error(tmp_path):
    rc = cli.main(["multispecies", "--scenario", str(FIG23), "--out", str(tmp_path)])
    assert rc == 2


def test_bad_scenario_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"schema\": 1}")
    assert cli.main(["simulate", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    missing = tmp_path / "missing.json"
    assert cli.main(["simulate", "--scenario", str(missing), "--out", str(tmp_path)]) == 2


def test_numeric_failure_exit_code(tmp_path):
    # an absurdly tight tolerance forces step-size underflow -> exit 3
    rc = cli.main(["simulate", "--scenario", str(FIG23), "--out", str(tmp_path),
                   "--tol", "1e-300"])
    assert rc == 3


def test_equilibria_on_s_dependent_kinetics_is_config_error(tmp_path):
    obj = _fig23_dict()
    obj["model"]["kinetics"] = {"type": "freter", "a": 1.5, "b": 0.8, "v_max": 3.0}
    scn = tmp_path / "freter.json"
    scn.write_text(json.dumps(obj))
    assert cli.main(["equilibria", "--scenario", str(scn), "--out", str(tmp_path)]) == 2
    # the same scenario still simulates fine
    assert cli.main(["simulate", "--scenario", str(scn), "--out", str(tmp_path)]) == 0


def test_outputs_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["equilibria", "--scenario", str(FIG23), "--out", str(out)]) == 0
        assert cli.main(["nullclines", "--scenario", str(FIG23), "--out", str(out),
                         "--grid", "40"]) == 0
    assert (a / "equilibria.json").read_bytes() == (b / "equilibria.json").read_bytes()
    assert (a / "nullclines.csv").read_bytes() == (b / "nullclines.csv").read_bytes()
    assert (a / "nullclines.svg").read_bytes() == (b / "nullclines.svg").read_bytes()


def test_csv_floats_round_trip(tmp_path):
    assert cli.main(["reduce-compare", "--scenario", str(FIG23), "--out",
                     str(tmp_path), "--epsilons", "1e-1,1e-2"]) == 0
    lines = (tmp_path / "convergence.csv").read_text().strip().splitlines()
    for line in lines[1:]:
        for tok in line.split(","):
            v = float(tok)
            assert repr(v) == tok  # shortest round-trip formatting


def test_threaded_sweep_matches_serial(tmp_path, monkeypatch):
    serial = tmp_path / "serial"
    threaded = tmp_path / "threaded"
    assert cli.main(["reduce-compare", "--scenario", str(FIG23), "--out",
                     str(serial), "--epsilons", "1e-1,1e-2"]) == 0
    monkeypatch.setenv("FLOCSIM_THREADS", "2")
    assert cli.main(["reduce-compare", "--scenario", str(FIG23), "--out",
                     str(threaded), "--epsilons", "1e-1,1e-2"]) == 0
    assert (serial / "convergence.csv").read_bytes() == \
        (threaded / "convergence.csv").read_bytes()
