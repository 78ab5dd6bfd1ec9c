"""Static SVG plots for sweeps."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def sweep_svg(path, rows: list, traces: list, boundary_label: str = "rho") -> None:
    """Left: log10 error against k for each start. Right: convergence by start fraction."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for row, errs in zip(rows, traces):
        ks = [k for k, e in enumerate(errs) if e > 0]
        ax1.plot(ks, [math.log10(errs[k]) for k in ks], marker=".",
                 label=f"{row['fraction']:.3g}")
    ax1.set_xlabel("k")
    ax1.set_ylabel("log10 ||x_k - x*||")
    ax1.legend(title="x0 / r", fontsize="small")

    fr = [row["fraction"] for row in rows]
    ok = [1 if row["converged"] else 0 for row in rows]
    colors = ["tab:green" if c else "tab:red" for c in ok]
    width = 0.8 * min((b - a for a, b in zip(fr, fr[1:]) if b > a), default=0.05)
    ax2.bar(fr, [1] * len(fr), width=width, color=colors)
    for row in rows:
        if row.get("two_cycle"):
            ax2.annotate("2-cycle", (row["fraction"], 1.02), ha="center", fontsize="small")
    ax2.axvline(1.0, color="k", linestyle="--")
    ax2.set_xlabel(f"||x0 - x*|| / {boundary_label}")
    ax2.set_yticks([])
    ax2.set_title("green: converged to x*, red: not")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
