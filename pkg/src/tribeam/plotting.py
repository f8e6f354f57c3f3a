"""Figure rendering for run outputs: time series, spectra and fold histograms."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_timeseries(times, iplus, iminus, delta, path) -> None:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    ms = np.asarray(times) * 1e3
    top.plot(ms, iplus, lw=0.9, label="$I^+$")
    top.plot(ms, iminus, lw=0.9, label="$I^-$")
    top.set_ylabel("intensity")
    top.legend(loc="upper right", fontsize=8)
    top.grid(alpha=0.3)
    bottom.plot(ms, delta, color="C3", lw=0.9)
    bottom.set_xlabel("time (ms)")
    bottom.set_ylabel(r"$\Delta I$")
    bottom.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_spectrum(freq_hz, magnitudes, targets_hz, path, title="") -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    khz = np.asarray(freq_hz) / 1e3
    ax.plot(khz, magnitudes, lw=1.0)
    for target in targets_hz:
        ax.axvline(target / 1e3, color="0.8", ls="--", lw=0.8, zorder=0)
    upper = max(targets_hz) / 1e3 + 4.0 if len(targets_hz) else khz.max()
    ax.set_xlim(0.0, upper)
    ax.set_xlabel("frequency (kHz)")
    ax.set_ylabel("magnitude")
    if title:
        ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_histogram(centers_s, values, sigmas, path,
                     overlay_times=None, overlay_values=None) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.errorbar(np.asarray(centers_s) * 1e3, values, yerr=sigmas,
                fmt=".", ms=4, lw=0.8, capsize=2, label="counts")
    if overlay_times is not None:
        ax.plot(np.asarray(overlay_times) * 1e3, overlay_values,
                color="C1", lw=1.0, label="noise-free")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("fold time (ms)")
    ax.set_ylabel(r"$\Delta I$")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
