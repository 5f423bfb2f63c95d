import csv
import json

import numpy as np
import pytest

from chronon.core import ChrononError
from chronon.plotdata import emit_plot_data, plot_series


def read(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_fig1a(reference, tmp_path):
    path = emit_plot_data(reference, "fig1a", tmp_path)
    header, rows = read(path)
    assert header == ["x", "potential", "abs_psi0"]
    assert len(rows) == reference.grid.n_points
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["fig1a"]["series"] == ["potential", "abs_psi0"]


def test_fig1c_front_annotation(reference, tmp_path):
    emit_plot_data(reference, "fig1c", tmp_path, dt_since=0.5, v=1.0)
    emit_plot_data(reference, "fig1a", tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest) == {"fig1a", "fig1c"}
    entry = manifest["fig1c"]
    assert entry["series"] == ["psi0_region", "psi1_region", "potential"]
    assert entry["annotations"]["front_position"] == pytest.approx(0.5)
    series, _ = plot_series(reference, "fig1c", dt_since=0.5, v=1.0)
    x = reference.grid.x
    assert np.all(np.isnan(series["psi0_region"][(x >= 0) & (x <= 0.5)]))
    assert np.all(np.isnan(series["psi1_region"][x > 0.5]))


def test_fig2_difference_is_odd(reference):
    series, notes = plot_series(reference, "fig2", epsilon=0.05, d=0.1)
    diff = series["psi_delta"] - series["psi0"]
    x = reference.grid.x
    total = 0.0
    # pair x_A + u with x_A - u by direct search
    for i in np.flatnonzero(np.abs(x) < 0.15):
        j = int(np.argmin(np.abs(x + x[i])))
        assert abs(x[j] + x[i]) < 1e-9
        total = max(total, abs(diff[i] + diff[j]))
    assert total <= 1e-10
    assert notes["epsilon"] == 0.05


def test_unknown_kind(reference, tmp_path):
    with pytest.raises(ChrononError):
        emit_plot_data(reference, "fig9", tmp_path)


def test_unwritable_directory(reference, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ChrononError, match="cannot write"):
        emit_plot_data(reference, "fig1a", blocker / "sub")
