import json

import pytest

from pilotwalk.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from pilotwalk.configuration import read_default_config

PARAMS = """
[params]
sigma = 10.0
r = 10.0
A = 1.0
B = 5.0
"""


@pytest.fixture
def write_config(tmp_path):
    def write(command, body="", output="out.csv"):
        path = tmp_path / f"{command}.ini"
        path.write_text(f"[run]\ncommand = {command}\noutput_path = {tmp_path / output}\n" + PARAMS + body)
        return str(path)
    return write


def test_print_defaults(capsys):
    assert main(["--print-defaults", "sweep"]) == EXIT_OK
    assert capsys.readouterr().out == read_default_config("sweep")


def test_stability_command(write_config, tmp_path):
    config = write_config("stability", "\n[stability]\nk_min = 0\nk_max = 3\nn_points = 5\n", output="stab.json")

    assert main(["stability", "--config", config]) == EXIT_OK

    document = json.loads((tmp_path / "stab.json").read_text())
    assert document["r_c"] == pytest.approx(5.545454545454545)
    assert len(document["equilibria"]) == 4

    boundary = (tmp_path / "stab.json.boundary.csv").read_text().splitlines()
    assert boundary[0] == "sigma,r_c"
    assert len(boundary) == 6

    provenance = json.loads((tmp_path / "stab.json.provenance.json").read_text())
    assert provenance["command"] == "stability"
    assert provenance["config"]["params"]["B"] == 5.0


def test_simulate_command(write_config, tmp_path):
    config = write_config("simulate", "\n[integrator]\nt_end = 10.0\nsample_dt = 0.05\n")

    assert main(["simulate", "--config", config]) == EXIT_OK

    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert lines[0] == "t,x,X,Y,Z"
    assert len(lines) == 202

    summary = json.loads((tmp_path / "out.csv.provenance.json").read_text())["result"]
    assert "avg_speed" in summary
    assert summary["well_hops"] >= 0


def test_simulate_memory_system(write_config, tmp_path):
    config = write_config("simulate", "\n[integrator]\nt_end = 1.0\n\n[simulate]\nsystem = memory\n")

    assert main(["simulate", "--config", config, "--output", str(tmp_path / "memory.csv")]) == EXIT_OK
    assert (tmp_path / "memory.csv").read_text().splitlines()[0] == "t,x,X"


def test_sweep_output_does_not_depend_on_workers(write_config, tmp_path):
    config = write_config("sweep", "\n[integrator]\nt_end = 200.0\nsample_dt = 0.1\n\n"
                                   "[sweep]\nplane = sigma-r\naxis1_min = 4.0\naxis1_max = 10.0\naxis1_n = 2\n"
                                   "axis2_min = 2.0\naxis2_max = 3.0\naxis2_n = 2\n")

    assert main(["sweep", "--config", config, "--workers", "1", "--output", str(tmp_path / "one.csv")]) == EXIT_OK
    assert main(["sweep", "--config", config, "--workers", "2", "--output", str(tmp_path / "two.csv")]) == EXIT_OK

    one = (tmp_path / "one.csv").read_bytes()
    assert one == (tmp_path / "two.csv").read_bytes()
    assert one.decode().splitlines()[0] == "sigma,r,class,avg_speed,lle,well_hops,error"
    assert (tmp_path / "one.csv.boundary.csv").exists()


def test_velocity_curve_command(write_config, tmp_path):
    config = write_config("velocity-curve", "\n[integrator]\nt_end = 200.0\nsample_dt = 0.1\n\n"
                                            "[velocity]\nB_min = 1.0\nB_max = 2.0\nB_n = 2\nX0_values = 0.0, 3.0\n")

    assert main(["velocity-curve", "--config", config]) == EXIT_OK

    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert lines[0] == "B,X0,avg_speed,avg_speed_normalized,class,error"
    assert len(lines) == 5


def test_invalid_config_is_a_usage_error(write_config):
    config = write_config("simulate")
    with open(config, "a") as handle:
        handle.write("C = 1.0\n")

    assert main(["simulate", "--config", config]) == EXIT_USAGE


def test_command_must_match_config(write_config):
    assert main(["stability", "--config", write_config("simulate")]) == EXIT_USAGE


def test_command_and_config_are_required(capsys):
    assert main([]) == EXIT_USAGE
    assert "required" in capsys.readouterr().err


def test_run_failure_exits_nonzero(write_config):
    config = write_config("simulate", "\n[simulate]\ninit_rule = explicit\n")
    assert main(["simulate", "--config", config]) == EXIT_FAILURE
