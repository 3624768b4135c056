import xml.etree.ElementTree as ET

import numpy as np

from casemix.evaluate import boxplot_stats, intra_group_variance
from casemix.svgplot import boxplots_svg, rank_spread_svg, variance_bars_svg


def well_formed(svg_text: str) -> ET.Element:
    root = ET.fromstring(svg_text)
    assert root.tag.endswith("svg")
    return root


def sample_reports():
    rng = np.random.default_rng(1)
    values = rng.gamma(2, 8, size=300)
    dt = rng.integers(1, 6, size=300)
    hrg = rng.integers(1, 6, size=300)
    return values, dt, hrg


def test_variance_bars_well_formed():
    values, dt, hrg = sample_reports()
    svg = variance_bars_svg(
        intra_group_variance(values, dt), intra_group_variance(values, hrg), "variance"
    )
    root = well_formed(svg)
    assert any(child.tag.endswith("rect") for child in root)


def test_boxplots_well_formed():
    values, dt, hrg = sample_reports()
    svg = boxplots_svg(boxplot_stats(values, dt), boxplot_stats(values, hrg), "box & whisker <>")
    root = well_formed(svg)
    texts = [c.text for c in root if c.tag.endswith("text")]
    assert any(t and "&" not in t.replace("&amp;", "") for t in texts)  # escaped output parses


def test_rank_spread_well_formed():
    rng = np.random.default_rng(2)
    final = rng.integers(1, 14, size=150)
    factor_ranks = {f: rng.integers(1, 14, size=150) for f in ("los_days", "total_cost", "tbsa_pct")}
    svg = rank_spread_svg(factor_ranks, final, k=13)
    root = well_formed(svg)
    assert sum(1 for c in root if c.tag.endswith("circle")) > 100


def test_deterministic_output():
    values, dt, hrg = sample_reports()
    a = variance_bars_svg(intra_group_variance(values, dt), intra_group_variance(values, hrg), "t")
    b = variance_bars_svg(intra_group_variance(values, dt), intra_group_variance(values, hrg), "t")
    assert a == b
