"""Figure rendering for CLI reports.

Figures are written with the Agg backend and without a ``Software``
metadata chunk, so identical data gives byte-identical PNG files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PNG_META = {"Software": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100, metadata=PNG_META)
    plt.close(fig)


def plot_run(result, path) -> None:
    """Mean error traces per step with the analytic references."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    k = result.k
    ax.semilogy(k, np.maximum(result.mse_legit, 1e-300), label="legitimate (empirical)")
    if result.analytic_legit is not None:
        ax.axhline(result.analytic_legit, color="C0", ls="--", lw=1, label="legitimate (stationary)")
    policies = result.summary.get("eaves", [])
    for i, info in enumerate(policies):
        kind = info["policy"]["kind"]
        ax.semilogy(k, np.maximum(result.mse_eaves[i], 1e-300), color=f"C{i + 1}",
                    label=f"{kind} eavesdropper (empirical)")
        ax.semilogy(k, np.maximum(result.analytic_eaves[i], 1e-300), color=f"C{i + 1}", ls=":",
                    label=f"{kind} eavesdropper (expected)")
    ax.set_xlabel("k")
    ax.set_ylabel("mean squared error")
    ax.legend(fontsize=7)
    _save(fig, path)


def plot_gap_curves(curves: dict, path) -> None:
    """``J_r / J`` against ``mu_d``, one line per eavesdropper channel quality."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for mu_e, rows in sorted(curves.items()):
        x = [r["mu_d"] for r in rows if r["J_r_over_J"] is not None]
        y = [r["J_r_over_J"] for r in rows if r["J_r_over_J"] is not None]
        ax.plot(x, y, label=f"mu_e = {mu_e:g}")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("mu_d")
    ax.set_ylabel("J_r / J")
    ax.set_yscale("symlog", linthresh=1e-2)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_microgrid(rows: list, path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    x = [r["mu_d"] for r in rows]
    ax.semilogy(x, [r["legit_mean"] for r in rows], "o-", label="legitimate")
    for key in rows[0]:
        if key.startswith("eaves_") and key.endswith("_mean"):
            ax.semilogy(x, [r[key] for r in rows], "s-", label=key[6:-5] + " eavesdropper")
    ax.set_xlabel("mu_d")
    ax.set_ylabel("time-averaged squared error")
    ax.legend(fontsize=8)
    _save(fig, path)
