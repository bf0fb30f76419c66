import math

import pytest

from pilotwalk.configuration import (ConfigSyntaxError, ConfigValueError, default_workers, load_config, parse_config,
                                     read_default_config, serialize_config)
from pilotwalk.models import *

MINIMAL = """
[run]
command = simulate
output_path = out.csv

[params]
sigma = 10.0
r = 10.0
A = 1.0
B = {B}
"""


def test_minimal_config_takes_defaults():
    cfg = parse_config(MINIMAL.format(B=5.0))

    assert cfg.command is Command.SIMULATE
    assert cfg.params == Params(sigma=10.0, r=10.0, A=1.0, B=5.0)
    assert cfg.integrator == IntegratorConfig()
    assert cfg.classifier.window_fraction == 0.5
    assert cfg.workers is None
    assert cfg.simulate is None


def test_invalid_parameter_is_named():
    with pytest.raises(ConfigValueError, match=r"params\.B must be > 0"):
        parse_config(MINIMAL.format(B=0.0))


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigValueError, match=r"params\.C is not a recognized key"):
        parse_config(MINIMAL.format(B=5.0) + "C = 2.0\n")

    with pytest.raises(ConfigValueError, match=r"run\.threads is not a recognized key"):
        parse_config(MINIMAL.format(B=5.0).replace("[run]", "[run]\nthreads = 4"))


def test_unknown_section_is_rejected():
    with pytest.raises(ConfigValueError, match=r"\[plotting\] is not a recognized section"):
        parse_config(MINIMAL.format(B=5.0) + "[plotting]\ndpi = 300\n")


def test_command_is_required():
    with pytest.raises(ConfigValueError, match=r"run\.command is required"):
        parse_config(MINIMAL.format(B=5.0).replace("command = simulate\n", ""))


def test_syntax_errors_carry_line_numbers():
    with pytest.raises(ConfigSyntaxError) as excinfo:
        parse_config("[run]\ncommand = simulate\nthis line has no delimiter\n")
    assert excinfo.value.lineno == 3

    with pytest.raises(ConfigSyntaxError) as excinfo:
        parse_config("command = simulate\n[run]\n")
    assert excinfo.value.lineno == 1


def test_keys_are_case_sensitive():
    cfg = parse_config(MINIMAL.format(B=5.0) + "\n[simulate]\ninit_rule = velocity-seeded\nx0 = 0.25\nX0 = 3.0\n")

    assert cfg.simulate.x0 == 0.25
    assert cfg.simulate.X0 == 3.0
    assert cfg.simulate.init_rule is InitRule.VELOCITY_SEEDED


def test_explicit_state_list():
    cfg = parse_config(MINIMAL.format(B=5.0) + "\n[simulate]\ninit_rule = explicit\n"
                                               "explicit_state = 0.1, 0.2, 0.3, 0.4\n")
    assert cfg.simulate.explicit_state == [0.1, 0.2, 0.3, 0.4]


@pytest.mark.parametrize("command", list(Command))
def test_default_configs_round_trip(command):
    cfg = parse_config(read_default_config(command))

    assert cfg.command is command
    assert parse_config(serialize_config(cfg)) == cfg


def test_sweep_config_builds_spec():
    spec = parse_config(read_default_config(Command.SWEEP)).sweep_spec()

    assert spec.plane is SweepPlane.SIGMA_R
    assert spec.shape == (201, 201)
    assert spec.axis1.min == 0.5 and spec.axis2.max == 30.0
    assert spec.system is SystemKind.FULL


def test_basin_and_lowmem_planes_are_fixed():
    basin = parse_config(read_default_config(Command.BASIN)).sweep_spec()
    assert basin.plane is SweepPlane.X0_X0
    assert basin.init_rule is InitRule.VELOCITY_SEEDED
    assert basin.axis1.max == pytest.approx(4 * math.pi)

    lowmem = parse_config(read_default_config(Command.LOWMEM_SWEEP)).sweep_spec()
    assert lowmem.plane is SweepPlane.A_B
    assert lowmem.system is SystemKind.LOWMEM

    with pytest.raises(ConfigValueError, match="x0-X0 plane"):
        parse_config(read_default_config(Command.BASIN).replace("[sweep]", "[sweep]\nplane = sigma-r"))


def test_sweep_section_is_required():
    text = MINIMAL.format(B=5.0).replace("command = simulate", "command = sweep")
    with pytest.raises(ConfigValueError, match=r"\[sweep\] is required"):
        parse_config(text)


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(MINIMAL.format(B=2.0))
    assert load_config(path).params.B == 2.0

    with pytest.raises(ConfigValueError, match="does not exist"):
        load_config(tmp_path / "missing.ini")


def test_worker_count_precedence(monkeypatch):
    monkeypatch.setenv("PILOTWALK_WORKERS", "3")
    assert default_workers(configured=2, requested=5) == 5
    assert default_workers(configured=2) == 2
    assert default_workers() == 3

    monkeypatch.delenv("PILOTWALK_WORKERS")
    assert default_workers() == 1

    monkeypatch.setenv("PILOTWALK_WORKERS", "many")
    with pytest.raises(ConfigValueError):
        default_workers()

    with pytest.raises(ConfigValueError):
        default_workers(requested=0)
