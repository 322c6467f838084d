import pytest

from flatgap.config import ConfigError, ExperimentConfig, dump_config, load_config, parse_config

FULL = """\
problem:
  n: 3
  epsilon: 0.001
  a: 1.5
  r0: 0.2
  gamma: 0.4
  remainder: 0.1
mode:
  k: 2
  i: 2
grid:
  nt: 33
  h_max: 0.01
  ratio: 1.2
  h_min: 0.001
  refine: 1
sweep:
  epsilons: [1.0e-2, 1.0e-3, 1.0e-4]
output:
  dir: out
  binary: true
  timing: true
oracles:
  three_d: true
  manufactured: true
seed: 7
probe_jitter: 0.1
"""


def test_defaults():
    cfg = parse_config("")
    assert isinstance(cfg, ExperimentConfig)
    p = cfg.problem
    assert (p.n, p.epsilon, p.a, p.r0, p.gamma, p.mode_k, p.mode_i) == (3, 1e-2, 1.0, 0.25, 0.5, 1, 1)
    assert cfg.grid.nt == 17 and cfg.epsilons == () and cfg.output.dir == "flatgap-out"


def test_full_document():
    cfg = parse_config(FULL)
    assert cfg.problem.mode_k == 2 and cfg.problem.mode_i == 2
    assert cfg.remainder == 0.1
    assert cfg.grid.radial_kw() == {"h_max": 0.01, "ratio": 1.2, "h_min": 0.001}
    assert cfg.epsilons == (1e-2, 1e-3, 1e-4)
    assert cfg.output.binary and cfg.oracles.three_d and cfg.seed == 7


def test_round_trip():
    cfg = parse_config(FULL)
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


def test_load_from_file(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(FULL)
    assert load_config(p) == parse_config(FULL)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")


@pytest.mark.parametrize(
    "text, key, line, msg",
    [
        ("problem:\n  epsilon: 0.3\n", "problem.epsilon", 2, "epsilon must be < 1/4"),
        ("problem:\n  epsilon: 0\n", "problem.epsilon", 2, "epsilon must be > 0"),
        ("problem:\n  n: 3\n  eps: 0.1\n", "problem.eps", 3, "unknown key"),
        ("colour: red\n", "colour", 1, "unknown key"),
        ("sweep:\n  epsilons: [0.01, 0.01, 0.001]\n", "sweep.epsilons", 2, "duplicate epsilon"),
        ("sweep:\n  epsilons: [0.001, 0.01, 0.0001]\n", "sweep.epsilons", 2, "strictly decreasing"),
        ("sweep:\n  epsilons: [0.01, 0.3, 0.001]\n", "sweep.epsilons[1]", 2, "epsilon must be < 1/4"),
        ("mode:\n  k: 1\n  i: 3\n", "mode.i", 3, "i must be in"),
        ("mode:\n  k: 1.5\n", "mode.k", 2, "expected an integer"),
        ("grid:\n  nt: 8\n", "grid.nt", 2, "nt must be >= 16"),
        ("problem:\n  a: yes\n", "problem.a", 2, "expected a number"),
        ("output:\n  binary: 1\n", "output.binary", 2, "expected true/false"),
        ("problem:\n  n: 3\n  n: 4\n", "problem.n", 3, "duplicate key"),
        ("problem: 3\n", "problem", 1, "expected a mapping"),
        ("probe_jitter: 0.7\n", "probe_jitter", 1, "probe_jitter"),
    ],
)
def test_rejections_name_key_and_line(text, key, line, msg):
    with pytest.raises(ConfigError, match=msg) as info:
        parse_config(text)
    assert info.value.key == key
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_invalid_yaml_reports_line():
    with pytest.raises(ConfigError, match="invalid YAML") as info:
        parse_config("problem:\n  n: [3\n")
    assert info.value.line is not None


def test_top_level_must_be_mapping():
    with pytest.raises(ConfigError, match="mapping"):
        parse_config("- 1\n- 2\n")
