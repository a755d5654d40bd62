"""Trace CSV I/O, run summaries, and report figures.

Every CSV starts with a provenance comment line (seed, version, config
hash) followed by a header row.  The report path renders matplotlib
figures next to the delimited output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path

import numpy as np

from .errors import InsufficientTrace, MalformedTrace
from .optimizer import SATrace, _loglog_fit

VERSION = "0.1.0"


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def provenance_line(seed, config_text: str) -> str:
    return f"# seed={seed} version={VERSION} config_hash={config_hash(config_text)}"


def write_trace_csv(path, trace: SATrace, seed, config_text: str):
    d = len(trace.records[0].theta)
    header = (["n"] + [f"theta{i}" for i in range(d)]
              + [f"g{i}" for i in range(d)] + ["a_n", "rejected", "f_hat"])
    with open(path, "w", newline="") as fh:
        fh.write(provenance_line(seed, config_text) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in trace.records:
            writer.writerow([r.n] + [repr(float(v)) for v in r.theta]
                            + [repr(float(v)) for v in r.g]
                            + [repr(float(r.a_n)), int(r.rejected),
                               "" if r.f_hat is None else repr(float(r.f_hat))])


def read_trace_csv(path) -> dict:
    """Columns of a trace CSV as arrays; raises MalformedTrace on junk."""
    try:
        with open(path) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise MalformedTrace(str(exc)) from exc
    reader = csv.reader(io.StringIO("".join(lines)))
    rows = list(reader)
    if len(rows) < 2:
        raise MalformedTrace(f"{path}: no data rows")
    header = rows[0]
    theta_cols = [i for i, h in enumerate(header) if h.startswith("theta")]
    g_cols = [i for i, h in enumerate(header) if h.startswith("g") and h[1:].isdigit()]
    if not theta_cols or not g_cols:
        raise MalformedTrace(f"{path}: missing theta/g columns")
    try:
        data = {
            "n": np.array([int(r[0]) for r in rows[1:]]),
            "theta": np.array([[float(r[i]) for i in theta_cols] for r in rows[1:]]),
            "g": np.array([[float(r[i]) for i in g_cols] for r in rows[1:]]),
            "a_n": np.array([float(r[header.index("a_n")]) for r in rows[1:]]),
            "rejected": np.array([int(r[header.index("rejected")]) for r in rows[1:]]),
            "f_hat": np.array([float(r[header.index("f_hat")])
                               if r[header.index("f_hat")] else np.nan
                               for r in rows[1:]]),
        }
    except (ValueError, IndexError) as exc:
        raise MalformedTrace(f"{path}: {exc}") from exc
    return data


def summarize_trace(data: dict) -> str:
    """Final theta, rate fit against the final point, reject fraction,
    gradient noise level, and the persistent-rejection flag."""
    n = data["n"]
    theta = data["theta"]
    g = data["g"]
    if len(n) == 0:
        raise MalformedTrace("empty trace")
    lines = []
    theta_final = theta[-1]
    lines.append("theta_final: " + " ".join(f"{v:.6f}" for v in theta_final))
    f_hat = data["f_hat"]
    have_f = np.isfinite(f_hat)
    if have_f.any():
        lines.append(f"f_hat_final: {f_hat[have_f][-1]:.6f}")
    tail = slice(len(n) // 2, None)
    errs = np.linalg.norm(theta[tail] - theta_final[None, :], axis=1)
    try:
        fit = _loglog_fit(n[tail].astype(float), errs)
        lines.append(f"theta_rate_slope: {fit.slope:.3f} (stderr {fit.stderr:.3f})")
    except InsufficientTrace:
        lines.append("theta_rate_slope: n/a (trace too short or converged exactly)")
    rej = data["rejected"]
    lines.append(f"reject_fraction: {rej.mean():.4f}")
    late = rej[int(0.9 * len(rej)):]
    if late.size and late.any():
        lines.append("warning: rejections persist in the final 10% of iterations")
    win = min(len(g), 100)
    g_tail = g[-win:]
    se = g_tail.std(axis=0, ddof=1) / math.sqrt(win) if win > 1 else np.zeros(g.shape[1])
    lines.append("grad_std_err: " + " ".join(f"{v:.3e}" for v in se))
    lines.append("grad_mean_tail: " + " ".join(f"{v:.3e}" for v in g_tail.mean(axis=0)))
    return "\n".join(lines) + "\n"


def render_figures(data: dict, out_dir) -> list:
    """Trace figures as PNG files; returns the written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    n = data["n"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(data["theta"].shape[1]):
        ax.plot(n, data["theta"][:, i], label=f"theta{i}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("theta")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    p = out_dir / "theta_trace.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    gnorm = np.linalg.norm(data["g"], axis=1)
    pos = gnorm > 0
    if pos.any():
        ax.loglog(n[pos], gnorm[pos])
    ax.set_xlabel("iteration")
    ax.set_ylabel("|g|")
    fig.tight_layout()
    p = out_dir / "gradient_norm.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    f_hat = data["f_hat"]
    have = np.isfinite(f_hat)
    if have.any():
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(n[have], f_hat[have], marker="o", ms=3)
        ax.set_xlabel("iteration")
        ax.set_ylabel("objective estimate")
        fig.tight_layout()
        p = out_dir / "objective.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        written.append(p)
    return written
