import numpy as np
import pytest

from fscap.constraints import rll_forbidden_pairs
from fscap.errors import MalformedTrace
from fscap.optimizer import SAConfig, exact_gradient_problem, run
from fscap.reporting import (config_hash, provenance_line, read_trace_csv,
                             render_figures, summarize_trace, write_trace_csv)

RLL = rll_forbidden_pairs(1, None)


@pytest.fixture(scope="module")
def trace():
    return run(SAConfig(max_iters=120, theta0=np.array([0.3]), f_hat_every=40),
               exact_gradient_problem(RLL))


def test_provenance_line_stable():
    line = provenance_line(7, "config-text")
    assert line.startswith("# seed=7 version=")
    assert config_hash("config-text") in line
    assert config_hash("a") != config_hash("b")


def test_write_read_roundtrip_is_lossless(tmp_path, trace):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace, seed=7, config_text="cfg")
    data = read_trace_csv(path)
    assert np.array_equal(data["n"], [r.n for r in trace.records])
    assert np.array_equal(data["theta"][:, 0], [r.theta[0] for r in trace.records])
    assert np.array_equal(data["g"][:, 0], [r.g[0] for r in trace.records])
    assert np.array_equal(data["a_n"], [r.a_n for r in trace.records])
    f_hat = data["f_hat"]
    assert np.isfinite(f_hat[39]) and np.isnan(f_hat[1])
    with open(path) as fh:
        assert fh.readline().startswith("# seed=7")


def test_read_rejects_junk(tmp_path):
    p = tmp_path / "junk.csv"
    p.write_text("not,a,trace\n1,2,3\n")
    with pytest.raises(MalformedTrace):
        read_trace_csv(p)
    p.write_text("")
    with pytest.raises(MalformedTrace):
        read_trace_csv(p)
    with pytest.raises(MalformedTrace):
        read_trace_csv(tmp_path / "missing.csv")


def test_read_rejects_non_numeric_rows(tmp_path, trace):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace, seed=0, config_text="cfg")
    text = path.read_text().replace("\n1,", "\nxx,", 1)
    path.write_text(text)
    with pytest.raises(MalformedTrace):
        read_trace_csv(path)


def test_summarize_trace_contents(tmp_path, trace):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace, seed=0, config_text="cfg")
    summary = summarize_trace(read_trace_csv(path))
    assert "theta_final:" in summary
    assert "f_hat_final:" in summary
    assert "reject_fraction:" in summary
    assert "grad_std_err:" in summary
    assert "theta_rate_slope:" in summary


def test_render_figures(tmp_path, trace):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace, seed=0, config_text="cfg")
    data = read_trace_csv(path)
    written = render_figures(data, tmp_path / "figs")
    names = {p.name for p in written}
    assert {"theta_trace.png", "gradient_norm.png", "objective.png"} <= names
    for p in written:
        assert p.exists() and p.stat().st_size > 0
