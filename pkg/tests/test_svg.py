import re
import xml.etree.ElementTree as ET

from mdrml import svg


def test_unit_square_mapping():
    x, y = svg.plot_xy(0, 1)
    assert f"{x:.2f},{y:.2f}" == "80.00,60.00"
    assert svg.plot_xy(1, 0) == (svg.WIDTH - svg.RIGHT, svg.HEIGHT - svg.BOTTOM)


def test_curve_chart_is_valid_svg():
    doc = svg.curve_chart([("lr (AUC 0.900)", [(0, 0), (0, 1), (1, 1)])], "ROC", "FPR", "TPR", diagonal=True)
    root = ET.fromstring(doc)
    assert root.get("viewBox") == "0 0 800 600"
    ns = "{http://www.w3.org/2000/svg}"
    poly = root.find(f"{ns}polyline")
    assert poly.get("points") == "80.00,520.00 80.00,60.00 760.00,60.00"
    assert "lr (AUC 0.900)" in doc


def test_bar_chart_colours():
    doc = svg.bar_chart([("CIP = R", 0.3), ("age <= 30", -0.1)], "a & b")
    ET.fromstring(doc)
    fills = re.findall(r'<rect x="[^"]+" y="[^"]+" width="[^"]+" height="[^"]+" fill="([^"]+)"', doc)
    assert fills == ["white", svg.POSITIVE, svg.NEGATIVE]
    assert "a &amp; b" in doc


def test_deterministic():
    a = svg.bar_chart([("x", 0.2)], "t")
    assert a == svg.bar_chart([("x", 0.2)], "t")
