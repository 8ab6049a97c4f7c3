"""Delimited output, run manifests, and figure rendering.

CSV writers format floats with %.12g and LF newlines so reruns with the
same resolved config and seed are byte-identical; manifests carry
timestamps and are exempt from that guarantee.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .rmt import DetectorKind, NullDistribution
from .simulate import RocCurve

__all__ = [
    "RunManifest",
    "config_digest",
    "format_field",
    "write_csv",
    "write_manifest",
    "render_null_histograms",
    "render_roc",
    "render_pd_vs_snr",
]


def format_field(value) -> str:
    """One CSV cell: %.12g for floats, plain text otherwise."""
    if isinstance(value, DetectorKind):
        return value.value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_field(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def config_digest(resolved: dict) -> str:
    """SHA-256 of the canonical JSON form of the resolved configuration."""
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    version: str
    seed: int
    config_digest: str
    started_utc: str
    finished_utc: str
    outputs: tuple[str, ...]
    resolved_config: dict


def write_manifest(path, manifest: RunManifest) -> None:
    Path(path).write_text(json.dumps(asdict(manifest), indent=1) + "\n", encoding="ascii")


def _axes_grid(n: int):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, n, figsize=(4.5 * n, 3.4))
    return fig, ([axes] if n == 1 else list(axes))


def render_null_histograms(stats: dict, nulls: dict, path) -> None:
    """Per-detector histogram of H0 statistics with the Gaussian null overlaid."""
    kinds = list(stats)
    fig, axes = _axes_grid(len(kinds))
    for ax, kind in zip(axes, kinds):
        x = np.asarray(stats[kind], dtype=float)
        nd: NullDistribution = nulls[kind]
        ax.hist(x, bins=80, density=True, alpha=0.6, label="empirical")
        lo, hi = nd.mean - 4.5 * nd.std, nd.mean + 4.5 * nd.std
        grid = np.linspace(lo, hi, 400)
        pdf = np.exp(-0.5 * ((grid - nd.mean) / nd.std) ** 2) / (nd.std * np.sqrt(2 * np.pi))
        ax.plot(grid, pdf, "k-", lw=1.2, label="Gaussian null")
        ax.set_title(kind.value)
        ax.set_xlabel("statistic")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def render_roc(curves: list[RocCurve], path) -> None:
    fig, (ax,) = _axes_grid(1)
    for curve in curves:
        pfa = [p.pfa_target for p in curve.points]
        pd = [p.pd_hat for p in curve.points]
        ax.semilogx(pfa, pd, marker="o", ms=3, label=curve.detector.value)
    ax.set_xlabel("target false-alarm probability")
    ax.set_ylabel("detection probability")
    ax.set_ylim(0, 1.02)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def render_pd_vs_snr(rows: list[dict], path) -> None:
    fig, (ax,) = _axes_grid(1)
    kinds = []
    for r in rows:
        if r["detector"] not in kinds:
            kinds.append(r["detector"])
    for kind in kinds:
        pts = [(r["snr_db"], r["pd_hat"]) for r in rows if r["detector"] is kind]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=kind.value)
    ax.set_xlabel("average SNR (dB)")
    ax.set_ylabel("detection probability")
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _close(fig)


def _close(fig) -> None:
    import matplotlib.pyplot as plt

    plt.close(fig)
