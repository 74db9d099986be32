"""Static plot emission for experiment results, one figure per run."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {"proposed": "C0", "schmidl_cox": "C1", "schmidl_cox_1ts": "C3", "minn": "C2"}


def _series(rows, statistic):
    out = {}
    for r in rows:
        if r.statistic == statistic:
            out.setdefault(r.algorithm, []).append((r.grid_value, r.value))
    for alg in out:
        out[alg].sort(key=lambda p: (isinstance(p[0], str), p[0]))
    return out


def render_experiment(kind, rows, traces, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if kind == "metric_trace":
        for name, arr in sorted(traces.items()):
            if name.startswith("psi_"):
                continue
            alg = name.split("_")[0] if not name.startswith("schmidl_cox") else "schmidl_cox"
            ax.plot(arr[:, 0], arr[:, 1], label=name, color=_STYLE.get(alg), alpha=0.8)
        ax.set_xlabel("timing index relative to ground truth")
        ax.set_ylabel("timing metric")
    elif kind == "timing_stats":
        for alg, pts in _series(rows, "timing_err_var").items():
            ax.semilogy(
                [p[0] for p in pts],
                [max(p[1], 1e-3) for p in pts],
                "o-",
                label=f"{alg} variance",
                color=_STYLE.get(alg),
            )
        ax.set_xlabel("OSNR (dB)")
        ax.set_ylabel("timing error variance (samples^2)")
    elif kind == "cfo_sweep":
        for alg, pts in _series(rows, "cfo_hz_mean").items():
            ax.plot(
                [p[0] / 1e9 for p in pts],
                [p[1] / 1e9 for p in pts],
                "o-",
                label=alg,
                color=_STYLE.get(alg),
            )
        ax.set_xlabel("actual CFO (GHz)")
        ax.set_ylabel("mean estimated CFO (GHz)")
    elif kind == "cfo_mse":
        for alg, pts in _series(rows, "cfo_mse_hz2").items():
            ax.semilogy([p[0] for p in pts], [p[1] for p in pts], "o-",
                        label=alg, color=_STYLE.get(alg))
        ax.set_xlabel("OSNR (dB)")
        ax.set_ylabel("CFO MSE (Hz^2)")
    elif kind in ("ber_vs_cfo", "ber_vs_osnr"):
        for alg, pts in _series(rows, "ber").items():
            xs = [p[0] / (1e9 if kind == "ber_vs_cfo" else 1) for p in pts]
            ax.semilogy(xs, [max(p[1], 1e-7) for p in pts], "o-", label=alg)
        ax.set_xlabel("CFO (GHz)" if kind == "ber_vs_cfo" else "OSNR (dB)")
        ax.set_ylabel("BER")
    elif kind == "range_check":
        for alg, pts in _series(rows, "cfo_err_hz").items():
            ax.plot([p[0] / 1e9 for p in pts], [p[1] for p in pts], "o", label=alg)
        ax.set_xlabel("actual CFO (GHz)")
        ax.set_ylabel("estimation error (Hz)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(kind)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
