"""Figure rendering for the experiment tables.

Each renderer takes the rows an experiment produced and draws the matching
figure; the CLI writes it next to the CSV when asked to.  matplotlib is
imported lazily so library users who never plot do not pay for it.
"""

from __future__ import annotations


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _group(rows, key_index):
    groups: dict = {}
    for row in rows:
        groups.setdefault(row[key_index], []).append(row)
    return groups


def plot_dist(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for lam, group in _group(rows, 0).items():
        ranks = [r[1] for r in group]
        probs = [r[2] for r in group]
        (line,) = ax.plot(ranks, probs, lw=1.2, label=f"load {lam:g}")
        marked = [r for r in group if r[3]]
        if marked:
            ax.plot(marked[0][1], marked[0][2], "o", color=line.get_color(), ms=6)
    ax.set_xlabel("rank")
    ax.set_ylabel("probability")
    ax.set_title("register value distribution")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_bucket_size(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    bs = [r[0] for r in rows]
    ax.plot(bs, [r[1] for r in rows], "-o", ms=3, label="mean")
    ax.plot(bs, [r[2] for r in rows], "--", lw=0.8, label="min")
    ax.plot(bs, [r[3] for r in rows], "--", lw=0.8, label="max")
    ax.set_xlabel("registers per bucket")
    ax.set_ylabel("codeword bits")
    ax.set_title("bucket size vs. bucket width")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_bucket_size_vs_lambda(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for bs, group in _group(rows, 0).items():
        lams = [r[1] for r in group]
        means = [r[2] for r in group]
        lo = [r[2] - r[3] for r in group]
        hi = [r[4] - r[2] for r in group]
        ax.errorbar(lams, means, yerr=[lo, hi], fmt="-o", ms=3, lw=1, capsize=2, label=f"B={bs}")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("load factor")
    ax.set_ylabel("codeword bits")
    ax.set_title("bucket size vs. load factor")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_mvp(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    budgets = [str(r[0]) for r in rows]
    x = range(len(rows))
    width = 0.38
    ax.bar([i - width / 2 for i in x], [r[2] for r in rows], width, label="small")
    ax.bar([i + width / 2 for i in x], [r[3] for r in rows], width, label="big")
    for i, row in enumerate(rows):
        ax.annotate(f"MVP {row[4]:.2f}", (i - width / 2, row[2]), ha="center", va="bottom", fontsize=8)
        ax.annotate(f"MVP {row[5]:.2f}", (i + width / 2, row[3]), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(list(x), budgets)
    ax.set_xlabel("bit budget per bucket")
    ax.set_ylabel("sketch bits")
    ax.set_title("sketch size and memory-variance product")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_tree_changes(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = [r[0] for r in rows]
    cum = []
    total = 0
    for r in rows:
        total += r[2]
        cum.append(total)
    ax.step(ns, cum, where="post", lw=1.2)
    ax.set_xscale("log")
    ax.set_xlabel("stream length")
    ax.set_ylabel("cumulative codebook changes")
    ax.set_title("codebook changes over a stream")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_update_costs(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = [r[0] for r in rows]
    ax.plot(ns, [r[1] for r in rows], "-o", ms=3, label="ordinary updates")
    ax.plot(ns, [r[2] for r in rows], "-s", ms=3, label="min recomputes")
    ax.plot(ns, [r[3] for r in rows], "-^", ms=3, label="rebuilds")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("inserts")
    ax.set_ylabel("operations")
    ax.set_title("update cost counters")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_accuracy(rows, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    pts = [r for r in rows if r[0] > 0]
    ns = [r[0] for r in pts]
    ax.plot(ns, [abs(r[2]) for r in pts], "-o", ms=3, label="|mean relative error|")
    ax.plot(ns, [r[3] for r in pts], "-s", ms=3, label="relative std error")
    ax.set_xscale("log")
    ax.set_xlabel("true cardinality")
    ax.set_ylabel("relative error")
    ax.set_title("estimator accuracy")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


RENDERERS = {
    "dist": plot_dist,
    "bucket-size": plot_bucket_size,
    "bucket-size-vs-lambda": plot_bucket_size_vs_lambda,
    "mvp": plot_mvp,
    "tree-changes": plot_tree_changes,
    "update-costs": plot_update_costs,
    "accuracy": plot_accuracy,
}


def render(command: str, rows, path: str) -> None:
    RENDERERS[command](rows, path)
