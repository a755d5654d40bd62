import pytest

from fscap.config import DEFAULTS, ExperimentConfig, parse_config, render_config
from fscap.errors import ParseError


def test_parse_minimal_optimize_config():
    cfg = parse_config("[optimize]\niters = 200\nseed = 4\n")
    assert cfg.command == "optimize"
    assert cfg.params["iters"] == 200
    assert cfg.params["seed"] == 4
    # untouched keys fall back to documented defaults
    assert cfg.params["a"] == DEFAULTS["optimize"]["a"]
    assert cfg.params["theta0"] == "random"


def test_parse_ignores_comments_and_blank_lines():
    text = "# experiment\n\n[optimize]\n# step exponent\na = 0.8  # inline\n"
    cfg = parse_config(text)
    assert cfg.params["a"] == 0.8


def test_parse_boolean_flag():
    cfg = parse_config("[optimize]\nexact_gradient = true\n")
    assert cfg.params["exact_gradient"] is True
    cfg = parse_config("[optimize]\nexact_gradient = no\n")
    assert cfg.params["exact_gradient"] is False


def test_unknown_key_reports_line_number():
    with pytest.raises(ParseError, match="line 2"):
        parse_config("[optimize]\nbogus = 1\n")


def test_bad_value_reports_line_number():
    with pytest.raises(ParseError, match="line 3"):
        parse_config("[optimize]\na = 0.7\niters = soon\n")


def test_key_before_section_rejected():
    with pytest.raises(ParseError, match="line 1"):
        parse_config("a = 0.7\n[optimize]\n")


def test_multiple_sections_rejected():
    with pytest.raises(ParseError):
        parse_config("[optimize]\n[report]\n")


def test_unknown_section_rejected():
    with pytest.raises(ParseError, match="unknown command"):
        parse_config("[simulate]\n")


def test_missing_section_rejected():
    with pytest.raises(ParseError):
        parse_config("# nothing here\n")


def test_render_parse_roundtrip():
    cfg = ExperimentConfig("report", {"trace": "trace.csv", "out_dir": "rep"})
    back = parse_config(render_config(cfg))
    assert back.command == "report"
    assert back.params == cfg.params
