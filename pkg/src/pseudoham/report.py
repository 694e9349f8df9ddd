"""Figures for experiment CSVs, written next to the CSV."""
from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _stem(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root


def plot_success(rows: list, path: str) -> str:
    by = defaultdict(list)
    for r in rows:
        by[(r["preset"], r["strategy"])].append(int(r["success"]))
    keys = sorted(by)
    rates = [sum(by[k]) / len(by[k]) for k in keys]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(keys) + 2), 3.2))
    ax.bar(range(len(keys)), rates, color="#4477aa")
    for i, k in enumerate(keys):
        ax.text(i, rates[i] + 0.02, f"{sum(by[k])}/{len(by[k])}", ha="center", fontsize=8)
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels([f"{p}\n{s}" for p, s in keys], fontsize=8)
    ax.set_ylim(0, 1.1)
    ax.set_ylabel("success rate")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_runtime(rows: list, path: str) -> str:
    by = defaultdict(list)
    for r in rows:
        by[r["preset"]].append(float(r["wall_ms"]) / 1000.0)
    keys = sorted(by)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(keys) + 2), 3.2))
    ax.boxplot([by[k] for k in keys])
    ax.set_xticks(range(1, len(keys) + 1))
    ax.set_xticklabels(keys, fontsize=8)
    ax.set_ylabel("wall time per trial (s)")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_colours(rows: list, path: str) -> str | None:
    cols = [int(r["colours"]) for r in rows if str(r.get("colours", "")) not in ("", "None")]
    if not cols:
        return None
    k = max(int(r["k"]) for r in rows if str(r.get("k", "")) != "")
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.hist(cols, bins=range(min(cols), max(cols) + 2), color="#aa7744")
    ax.axvline(k, color="k", ls="--", lw=1, label=f"k = {k}")
    ax.set_xlabel("distinct colours on the cycle")
    ax.set_ylabel("trials")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render(rows: list, csv_path: str) -> list:
    """All figures for the rows of ``csv_path``; returns the files written."""
    stem = _stem(csv_path)
    out = [plot_success(rows, stem + "_success.png"), plot_runtime(rows, stem + "_runtime.png")]
    c = plot_colours(rows, stem + "_colours.png")
    if c:
        out.append(c)
    return out
