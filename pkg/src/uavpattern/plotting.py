"""Static figures written next to the CSV/JSON reports.

Uses the non-interactive Agg backend; every function takes an output path
and returns it.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dataio import pattern_lattice  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def _pattern_image(ax, pattern, n_azimuth, n_inclination, title, samples=None, vmin=None, vmax=None):
    alpha, beta = pattern_lattice(n_azimuth, n_inclination)
    aa, bb = np.meshgrid(alpha, beta)
    g = pattern(aa, bb)
    im = ax.pcolormesh(np.degrees(alpha), np.degrees(beta), g, shading="nearest",
                       cmap="viridis", vmin=vmin, vmax=vmax)
    if samples is not None:
        sa, sb = samples
        ax.plot(np.degrees(sa), np.degrees(sb), ",", color="k", alpha=0.3)
    ax.set_xlabel("azimuth [deg]")
    ax.set_ylabel("inclination [deg]")
    ax.set_title(title)
    ax.set_xlim(-180, 180)
    ax.set_ylim(-90, 90)
    return im


def plot_pattern(pattern, path, title="gain [dB]", n_azimuth=180, n_inclination=91):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 2.6))
        im = _pattern_image(ax, pattern, n_azimuth, n_inclination, title)
        fig.colorbar(im, ax=ax, label="dB")
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_model_patterns(model, path, obs=None, n_azimuth=180, n_inclination=91):
    """Both decoupled patterns side by side, optionally with the sample bearings."""
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(8, 2.6), sharey=True)
        samples_a = (obs.alpha_ba, obs.beta_ba) if obs is not None else None
        samples_b = (obs.alpha_ab, obs.beta_ab) if obs is not None else None
        im = _pattern_image(axes[0], model.pattern_a, n_azimuth, n_inclination,
                            f"G_{model.a_id} ({model.spec.label})", samples_a)
        fig.colorbar(im, ax=axes[0], label="dB")
        im = _pattern_image(axes[1], model.pattern_b, n_azimuth, n_inclination,
                            f"G_{model.b_id} ({model.spec.label})", samples_b)
        fig.colorbar(im, ax=axes[1], label="dB")
        axes[1].set_ylabel("")
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_benchmark(reports, path):
    """RMSE and Q95 bars per method, with the per-split spread as error bars."""
    ok = [r for r in reports if r.error is None]
    labels = [r.method for r in ok]
    x = np.arange(len(ok))
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 2, figsize=(8, 2.8))
        for ax, key, name in ((axes[0], "rmse", "RMSE [dB]"), (axes[1], "q95", "Q95 [dB]")):
            vals = [getattr(r, key) for r in ok]
            err = [np.std(r.per_split[key]) for r in ok]
            ax.bar(x, vals, yerr=err, color="0.6", edgecolor="k", linewidth=0.5, capsize=2)
            ax.set_xticks(x)
            ax.set_xticklabels(labels, rotation=45, ha="right")
            ax.set_ylabel(name)
            ax.grid(axis="y", linewidth=0.3)
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_noise_analysis(analysis, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 2.8))
        ax.plot(analysis.max_spread_deg, analysis.rssi_std_db, ".", markersize=1.5, alpha=0.4, color="k")
        med = float(np.median(analysis.rssi_std_db))
        ax.axhline(med, color="C3", linewidth=1, label=f"median {med:.2f} dB")
        ax.set_xlabel("max neighbour feature difference [deg]")
        ax.set_ylabel("neighbour RSSI std [dB]")
        ax.legend(loc="upper right")
        fig.savefig(path)
        plt.close(fig)
    return path
