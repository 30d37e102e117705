"""Figure rendering for the report path: residual decay against activated
degrees of freedom, one PNG per report, written next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def trace_figure(traces, path, title: str | None = None):
    """Semilog residual-vs-DOF curves, one line per trace.

    ``traces`` is a mapping label -> RunTrace.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    styles = ["o-", "d-.", "s--", "^:", "v-"]
    for style, (label, trace) in zip(styles * 8, traces.items()):
        cards = [r.card_lambda for r in trace.rows]
        resid = [r.residual_norm for r in trace.rows]
        ax.semilogy(cards, resid, style, label=label, markersize=4)
    ax.set_xlabel("degrees of freedom")
    ax.set_ylabel("residual norm")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
