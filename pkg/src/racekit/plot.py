"""Benchmark figure rendering."""

from __future__ import annotations

from collections import defaultdict


def render_bench_png(rows: list[dict], path: str) -> None:
    """Median detection time per algorithm over the sweep, log-log axes.

    `rows` are benchmark records with algo, N and millis keys; reps collapse
    to their median.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        series[row["algo"]][int(row["N"])].append(float(row["millis"]))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for algo in sorted(series):
        pts = sorted(series[algo].items())
        xs = [n for n, _ in pts]
        ys = [sorted(ms)[len(ms) // 2] for _, ms in pts]
        ax.plot(xs, ys, marker="o", label=algo)
    ax.set_xlabel("trace size N")
    ax.set_ylabel("median detection time (ms)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
