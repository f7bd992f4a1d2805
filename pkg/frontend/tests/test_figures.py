"""Frontend tests: schema validation, rendering, determinism, CLI."""
import csv
import os
import shutil
import subprocess

import pytest

from figures import PanelSpec, render
from figures import panels
from figures.cli import main as cli_main


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def estimates_csv(path):
    rows = []
    for g, est, ex in [(0.1, 0.95, 0.97), (0.5, 0.80, 0.78), (1.0, 0.52, 0.50)]:
        for proto in ("global_pairs", "product"):
            rows.append(["loop: [0]", proto, g, 6, 1000, est, 0.03, ex, 0.02])
            rows.append(["ribbon: (0, 4)", proto, g, 6, 1000, est / 2, 0.05, ex / 2, 0.04])
    write_rows(path, panels.ESTIMATE_HEADER, rows)


def scaling_csv(path):
    rows = []
    for nu, eps in [(100, 0.4), (1000, 0.12), (10000, 0.04)]:
        for proto in ("global_pairs", "dual_product"):
            rows.append(["loop: [0, 1]", proto, 0.5, 6, nu, eps, -0.5])
    write_rows(path, panels.SCALING_HEADER, rows)


def volume_csv(path):
    rows = []
    for v, eps in [(4, 0.1), (6, 0.12), (10, 0.11)]:
        rows.append(["ribbon_fixed", "dual_product", 0.5, v, 1000, eps, 2, 1])
    rows.append(["-", "dual_product", 0.5, 7, 1000, "nan", 0, 0])
    write_rows(path, panels.VOLUME_HEADER, rows)


@pytest.mark.parametrize("kind,maker", [
    ("vs_g", estimates_csv),
    ("fbc", estimates_csv),
    ("vs_nu", scaling_csv),
    ("vs_volume", volume_csv),
])
def test_render_all_kinds(tmp_path, kind, maker):
    src = tmp_path / "in.csv"
    maker(str(src))
    out = tmp_path / f"{kind}.png"
    assert render(PanelSpec(str(src), kind, str(out))) == str(out)
    assert out.exists() and out.stat().st_size > 1000


def test_empty_csv_errors_without_output(tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text("")
    out = tmp_path / "out.png"
    with pytest.raises(ValueError, match="empty"):
        render(PanelSpec(str(src), "vs_g", str(out)))
    assert not out.exists()
    # header-only file: schema fine, but no data rows
    write_rows(src, panels.ESTIMATE_HEADER, [])
    with pytest.raises(ValueError, match="no data rows"):
        render(PanelSpec(str(src), "vs_g", str(out)))
    assert not out.exists()


def test_schema_mismatch_errors(tmp_path):
    src = tmp_path / "wrong.csv"
    scaling_csv(str(src))
    out = tmp_path / "out.png"
    with pytest.raises(ValueError, match="schema"):
        render(PanelSpec(str(src), "vs_g", str(out)))
    assert not out.exists()
    with pytest.raises(ValueError):
        PanelSpec(str(src), "pie_chart", str(out))


def test_rendering_is_deterministic(tmp_path):
    src = tmp_path / "in.csv"
    scaling_csv(str(src))
    outs = []
    for name in ("a.png", "b.png"):
        out = tmp_path / name
        render(PanelSpec(str(src), "vs_nu", str(out)))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_scaling_panel_has_guide_line(tmp_path, monkeypatch):
    src = tmp_path / "in.csv"
    scaling_csv(str(src))
    captured = {}

    def grab(fig, spec):
        captured["fig"] = fig

    monkeypatch.setattr(panels, "_save", grab)
    render(PanelSpec(str(src), "vs_nu", str(tmp_path / "x.png")))
    ax = captured["fig"].axes[0]
    labels = [t.get_text() for t in ax.get_legend().get_texts()]
    assert any("guide" in t for t in labels)
    assert ax.get_xscale() == "log" and ax.get_yscale() == "log"


def test_cli_render_and_error_paths(tmp_path):
    src = tmp_path / "in.csv"
    estimates_csv(str(src))
    out = tmp_path / "cli.png"
    assert cli_main(["render", "--panel", "vs_g", "--csv", str(src), "--out", str(out)]) == 0
    assert out.exists()
    bad = tmp_path / "missing.csv"
    assert cli_main(["render", "--panel", "vs_g", "--csv", str(bad), "--out", str(out)]) == 1


@pytest.mark.skipif(shutil.which("dualshadows") is None,
                    reason="experiment CLI not installed")
def test_end_to_end_with_experiment_cli(tmp_path):
    """Consume a real CSV produced by the experiment harness CLI."""
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(
        "[schema]\nversion = 1\n"
        "[lattice]\nnx = 2\nny = 2\n"
        "[experiment]\ng = 0.3, 0.8\n"
        "protocols = dual_product\n"
        "observables = loop: [0]\n"
        "nu = 50\nreps = 3\n"
    )
    out_csv = tmp_path / "run.csv"
    subprocess.run(
        ["dualshadows", "run", "--config", str(cfg), "--seed", "3",
         "--out", str(out_csv)],
        check=True, env={**os.environ},
    )
    out_png = tmp_path / "run.png"
    render(PanelSpec(str(out_csv), "vs_g", str(out_png)))
    assert out_png.stat().st_size > 1000
