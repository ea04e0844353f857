import json
import math
import xml.etree.ElementTree as ET

import pytest

from wfpred.charts import PALETTE, ChartSpec, chart_svg, render_chart
from wfpred.errors import ContractError
from wfpred.reports import sidecar_path, write_csv, write_metadata

NS = "{http://www.w3.org/2000/svg}"


def parse(text):
    return ET.fromstring(text)


def test_line_chart_has_one_polyline_per_series():
    spec = ChartSpec("line", {"cpu": [0.16, 0.1, 0.05], "memory": [0.15, 0.09, 0.04]},
                     "t", "saving", x_values=[600, 1200, 1800])
    root = parse(chart_svg(spec))
    assert len(root.findall(f"{NS}polyline")) == 2


def test_bar_chart_has_one_bar_per_value():
    spec = ChartSpec("bar", {"a": [0.1, 0.2, 0.3], "b": [0.3, math.nan, 0.0]},
                     categories=list("xyz"))
    root = parse(chart_svg(spec))
    fills = [r.get("fill") for r in root.findall(f"{NS}rect")]
    # one legend swatch per series plus one bar per finite value
    assert fills.count(PALETTE[0]) == 1 + 3
    assert fills.count(PALETTE[1]) == 1 + 2


def test_heatmap_fill_scales_with_rate():
    spec = ChartSpec("heatmap", {"rack 1": [0.0, 0.5], "rack 2": [1.0, math.nan]},
                     categories=["1", "2"])
    root = parse(chart_svg(spec))
    cells = [r for r in root.findall(f"{NS}rect") if r.get("stroke") == "white"]
    fills = [c.get("fill") for c in cells]
    assert fills == ["#ffffff", "#ff8080", "#ff0000", "#eeeeee"]


def test_rendering_is_deterministic(tmp_path):
    spec = ChartSpec("bar", {"a": [1.0, 2.0]}, title="t & <u>")
    render_chart(spec, tmp_path / "a.svg")
    render_chart(spec, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    parse((tmp_path / "a.svg").read_text())  # escaped title keeps it well-formed


@pytest.mark.parametrize("spec", [
    ChartSpec("bar", {}),
    ChartSpec("bar", {"a": []}),
    ChartSpec("line", {"a": [1.0], "b": [1.0, 2.0]}),
    ChartSpec("pie", {"a": [1.0]}),
    ChartSpec("bar", {"a": [1.0, 2.0]}, categories=["x"]),
])
def test_invalid_spec_writes_nothing(tmp_path, spec):
    path = tmp_path / "c.svg"
    with pytest.raises(ContractError):
        render_chart(spec, path)
    assert not path.exists()


def test_unwritable_path(tmp_path):
    with pytest.raises(ContractError):
        render_chart(ChartSpec("bar", {"a": [1.0]}), tmp_path / "missing" / "c.svg")


def test_all_nan_series_still_renders():
    parse(chart_svg(ChartSpec("line", {"a": [math.nan, math.nan]})))


def test_csv_cells(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, ["a", "b", "c"], [[1, 0.1, None], [math.nan, "x,y", 2.5]])
    assert path.read_bytes() == b'a,b,c\n1,0.1,\n,"x,y",2.5\n'


def test_sidecar(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, ["a"], [])
    out = write_metadata(path, "abc", 7, mode="runtime")
    assert out == sidecar_path(path) == tmp_path / "r.csv.meta.json"
    doc = json.loads(out.read_text())
    assert (doc["config_hash"], doc["seed"], doc["mode"]) == ("abc", 7, "runtime")
    assert {"wfpred", "numpy", "python"} <= set(doc["versions"])
