"""Signal report figures and their CSV sidecars.

Figures are built on a bare ``Figure`` (no pyplot state) and saved as SVG
with a fixed hash salt and no date, so repeated runs give identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure

PEAK_MARKER_GID = "peak-marker"

STYLE = {
    "svg.hashsalt": "respiscreen",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def write_series_csv(path, t, values, header=("t", "value")) -> None:
    lines = [",".join(header)]
    lines += [f"{a:.6f},{b:.9g}" for a, b in zip(t, values)]
    Path(path).write_text("\n".join(lines) + "\n")


def sidecar_paths(svg_path) -> dict:
    p = Path(svg_path)
    stem = p.with_suffix("")
    return {
        "raw": Path(f"{stem}.raw.csv"),
        "filtered": Path(f"{stem}.filtered.csv"),
        "spectrum": Path(f"{stem}.spectrum.csv"),
    }


def plot_breathing_report(raw, filtered, spectrum, peak_freq, out_svg, band=(0.1, 0.85)):
    """Three stacked panels: raw nostril series, filtered series, spectrum.

    The spectrum x-axis is in breaths/min. ``peak_freq`` (Hz) is marked with
    a vertical line tagged ``peak-marker``; pass None to omit it.
    """
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(7, 7.5))
        ax_raw, ax_filt, ax_spec = fig.subplots(3, 1)
        ax_raw.plot(raw.times, raw.samples, color="tab:red", lw=1.0)
        ax_raw.set_title("Nostril ROI mean temperature")
        ax_raw.set_ylabel("degC")
        ax_raw.set_gid("panel-raw")

        ax_filt.plot(filtered.times, filtered.samples, color="tab:blue", lw=1.0)
        ax_filt.set_title(f"Detrended, band-passed {band[0]:g}-{band[1]:g} Hz")
        ax_filt.set_xlabel("time [s]")
        ax_filt.set_ylabel("degC")
        ax_filt.set_gid("panel-filtered")

        bpm = spectrum.freqs * 60.0
        keep = bpm <= 2.0 * band[1] * 60.0
        ax_spec.plot(bpm[keep], spectrum.power[keep], color="k", lw=1.0)
        ax_spec.axvspan(band[0] * 60.0, band[1] * 60.0, color="tab:green", alpha=0.08)
        ax_spec.set_xlabel("rate [breaths/min]")
        ax_spec.set_ylabel("power [degC^2]")
        ax_spec.set_title("Hann periodogram")
        ax_spec.set_gid("panel-spectrum")
        if peak_freq is not None:
            line = ax_spec.axvline(peak_freq * 60.0, color="tab:orange", ls="--", lw=1.2)
            line.set_gid(PEAK_MARKER_GID)
            ax_spec.annotate(f"peak {peak_freq * 60.0:.1f} bpm", xy=(peak_freq * 60.0, 1.0),
                             xycoords=("data", "axes fraction"), xytext=(4, -12),
                             textcoords="offset points", color="tab:orange")

        fig.tight_layout()
        fig.savefig(out_svg, format="svg", metadata={"Date": None, "Creator": None})


def emit_report(raw, filtered, spectrum, peak_freq, out_svg, band=(0.1, 0.85)) -> dict:
    """Write the SVG plus ``t,value`` / ``freq,power`` CSV sidecars."""
    paths = sidecar_paths(out_svg)
    write_series_csv(paths["raw"], raw.times, raw.samples)
    write_series_csv(paths["filtered"], filtered.times, filtered.samples)
    write_series_csv(paths["spectrum"], spectrum.freqs, spectrum.power, header=("freq", "power"))
    if peak_freq is not None and not np.any(spectrum.power > 0):
        peak_freq = None
    plot_breathing_report(raw, filtered, spectrum, peak_freq, out_svg, band)
    paths["svg"] = Path(out_svg)
    return paths
