"""Render experiment-CSV panels: estimates vs coupling, error scaling
vs shot count (log-log with a 1/sqrt(nu) guide), error vs volume, and the
fixed-boundary demo. Input is consumed strictly through the documented CSV
schemas; rendering is deterministic for fixed input.
"""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Documented CSV schemas of the experiment harness.
ESTIMATE_HEADER = [
    "observable", "protocol", "g", "V", "nu",
    "estimate", "std_error", "exact_value", "relative_error",
]
SCALING_HEADER = ["observable", "protocol", "g", "V", "nu", "eps_avg", "slope"]
VOLUME_HEADER = [
    "observable", "protocol", "g", "V", "nu", "eps_avg", "dual_weight", "available",
]

PANEL_KINDS = ("vs_g", "vs_nu", "vs_volume", "fbc")
HEADER_OF_KIND = {
    "vs_g": ESTIMATE_HEADER,
    "fbc": ESTIMATE_HEADER,
    "vs_nu": SCALING_HEADER,
    "vs_volume": VOLUME_HEADER,
}


@dataclass
class PanelSpec:
    csv_path: str
    kind: str  # one of PANEL_KINDS
    out_path: str
    group_keys: tuple[str, ...] = field(default=("observable", "protocol"))

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise ValueError(f"unknown panel kind {self.kind!r}")
        header = HEADER_OF_KIND[self.kind]
        for key in self.group_keys:
            if key not in header:
                raise ValueError(f"grouping column {key!r} not in the CSV schema")


def _load(spec: PanelSpec) -> list[dict]:
    with open(spec.csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{spec.csv_path}: empty CSV") from None
        want = HEADER_OF_KIND[spec.kind]
        if header != want:
            raise ValueError(
                f"{spec.csv_path}: header {header} does not match the "
                f"{spec.kind} schema {want}"
            )
        rows = [dict(zip(header, row)) for row in reader]
    if not rows:
        raise ValueError(f"{spec.csv_path}: no data rows")
    return rows


def _save(fig, spec: PanelSpec) -> None:
    # strip wall-clock metadata so identical input gives identical bytes
    fig.savefig(spec.out_path, dpi=120, metadata={"Software": None, "Date": None})
    plt.close(fig)


def _render_estimates(rows: list[dict], spec: PanelSpec, title: str) -> None:
    observables = sorted({r["observable"] for r in rows})
    fig, axes = plt.subplots(
        len(observables), 1, figsize=(6, 3 * len(observables)), squeeze=False
    )
    for ax, obs in zip(axes[:, 0], observables):
        sub = [r for r in rows if r["observable"] == obs]
        exact = sorted({(float(r["g"]), float(r["exact_value"])) for r in sub})
        ax.plot(*zip(*exact), "k-", label="exact", zorder=1)
        for proto in sorted({r["protocol"] for r in sub}):
            pts = sorted(
                (float(r["g"]), float(r["estimate"]), float(r["std_error"]))
                for r in sub
                if r["protocol"] == proto
            )
            gs, est, se = (np.array(c) for c in zip(*pts))
            ax.errorbar(gs, est, yerr=se, fmt="o--", capsize=3, label=proto)
        ax.set_xlabel("g")
        ax.set_ylabel("estimate")
        ax.set_title(f"{title}: {obs}")
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec)


def _render_scaling(rows: list[dict], spec: PanelSpec) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    groups = defaultdict(list)
    for r in rows:
        key = tuple(r[k] for k in spec.group_keys)
        groups[key].append((int(r["nu"]), float(r["eps_avg"])))
    nus_all = []
    for key in sorted(groups):
        pts = sorted(groups[key])
        nus, eps = zip(*pts)
        nus_all.extend(nus)
        ax.loglog(nus, eps, "o--", label=" / ".join(key))
    # shot-noise guide line with slope -1/2
    nus = np.array(sorted(set(nus_all)), dtype=float)
    top = max(float(r["eps_avg"]) for r in rows)
    guide = top * (nus / nus.min()) ** -0.5
    ax.loglog(nus, guide, "k:", label=r"$\nu^{-1/2}$ guide")
    ax.set_xlabel(r"shots $\nu$")
    ax.set_ylabel(r"$\epsilon_{avg}$")
    ax.set_title("average relative error vs shot count")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec)


def _render_volume(rows: list[dict], spec: PanelSpec) -> None:
    usable = [r for r in rows if r["available"] == "1"]
    if not usable:
        raise ValueError("no available data points in the volume CSV")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    groups = defaultdict(list)
    for r in usable:
        key = tuple(r[k] for k in spec.group_keys)
        groups[key].append((int(r["V"]), float(r["eps_avg"])))
    for key in sorted(groups):
        pts = sorted(groups[key])
        vs, eps = zip(*pts)
        ax.semilogy(vs, eps, "o--", label=" / ".join(key))
    missing = sorted({int(r["V"]) for r in rows if r["available"] != "1"})
    for v in missing:
        ax.axvline(v, color="0.8", linestyle=":")
    ax.set_xlabel("volume V")
    ax.set_ylabel(r"$\epsilon_{avg}$")
    ax.set_title("average relative error vs volume"
                 + (f" (unavailable: V={missing})" if missing else ""))
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, spec)


def render(spec: PanelSpec) -> str:
    """Render the panel and return the output path. Raises on schema
    mismatch or empty input, writing no file in that case."""
    rows = _load(spec)
    if spec.kind == "vs_g":
        _render_estimates(rows, spec, "estimates vs coupling")
    elif spec.kind == "fbc":
        _render_estimates(rows, spec, "fixed-boundary demo")
    elif spec.kind == "vs_nu":
        _render_scaling(rows, spec)
    else:
        _render_volume(rows, spec)
    return spec.out_path
