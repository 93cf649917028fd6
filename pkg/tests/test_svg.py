import xml.etree.ElementTree as ET

import pytest

from factorforge.svg import bar_chart, line_chart

NS = "{http://www.w3.org/2000/svg}"


def _parse(svg: str) -> ET.Element:
    return ET.fromstring(svg)


class TestLineChart:
    def test_well_formed_with_two_polylines(self):
        svg = line_chart([0.0, 0.1, 0.2], [0.0, 0.05, 0.1])
        root = _parse(svg)
        assert root.tag == f"{NS}svg"
        polys = root.findall(f"{NS}polyline")
        assert len(polys) == 2
        solid, dashed = polys
        assert solid.get("stroke-dasharray") is None
        assert dashed.get("stroke-dasharray") == "6,4"
        assert len(solid.get("points").split()) == 3

    def test_labels_and_title_rendered(self):
        svg = line_chart([0.0, 1.0], [0.0, 0.5], labels=("port", "bench"), title="growth")
        texts = [t.text for t in _parse(svg).findall(f"{NS}text")]
        assert "growth" in texts
        assert "port (solid)" in texts
        assert "bench (dashed)" in texts

    def test_zero_gridline_only_when_sign_change(self):
        crossing = line_chart([-0.1, 0.2], [0.0, 0.1])
        dashed_lines = [
            l for l in _parse(crossing).findall(f"{NS}line")
            if l.get("stroke-dasharray")
        ]
        assert len(dashed_lines) == 1

    def test_escapes_markup_in_labels(self):
        svg = line_chart([0.0, 1.0], [0.0, 1.0], labels=("a<b", 'c&"d'), title="<t>")
        _parse(svg)  # would raise if unescaped
        assert "a&lt;b (solid)" in svg
        assert "c&amp;" in svg

    def test_flat_series_still_renders(self):
        _parse(line_chart([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]))

    def test_single_point(self):
        _parse(line_chart([0.5], [0.25]))

    def test_validation(self):
        with pytest.raises(ValueError, match="equally long"):
            line_chart([1.0], [1.0, 2.0])
        with pytest.raises(ValueError, match="non-empty"):
            line_chart([], [])

    def test_coordinates_inside_viewbox(self):
        svg = line_chart([0.0, 5.0, -3.0], [1.0, -1.0, 2.0], width=720, height=420)
        for poly in _parse(svg).findall(f"{NS}polyline"):
            for pair in poly.get("points").split():
                x, y = map(float, pair.split(","))
                assert 0 <= x <= 720 and 0 <= y <= 420


class TestBarChart:
    def test_one_rect_per_entry(self):
        svg = bar_chart(["A", "B", "C"], [3.0, 2.0, 1.0])
        root = _parse(svg)
        rects = root.findall(f"{NS}rect")
        assert len(rects) == 3
        widths = [float(r.get("width")) for r in rects]
        assert widths[0] > widths[1] > widths[2]

    def test_largest_value_fills_plot(self):
        svg = bar_chart(["A", "B"], [2.0, 1.0], width=720)
        rects = _parse(svg).findall(f"{NS}rect")
        assert float(rects[0].get("width")) == pytest.approx(720 - 200 - 70, abs=0.01)
        assert float(rects[1].get("width")) == pytest.approx((720 - 200 - 70) / 2, abs=0.01)

    def test_all_zero_values_render_zero_width(self):
        svg = bar_chart(["A", "B"], [0.0, 0.0])
        rects = _parse(svg).findall(f"{NS}rect")
        assert all(float(r.get("width")) == 0.0 for r in rects)

    def test_names_escaped(self):
        svg = bar_chart(["x<y&z"], [1.0])
        _parse(svg)
        assert "x&lt;y&amp;z" in svg

    def test_height_grows_with_entries(self):
        short = _parse(bar_chart(["A"], [1.0]))
        tall = _parse(bar_chart([f"F{i}" for i in range(10)], [1.0] * 10))
        assert int(tall.get("height")) > int(short.get("height"))

    def test_validation(self):
        with pytest.raises(ValueError, match="equally long"):
            bar_chart(["A"], [1.0, 2.0])
        with pytest.raises(ValueError, match="non-empty"):
            bar_chart([], [])
