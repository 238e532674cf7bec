"""SVG pictures of sandpile configurations on SG_n."""

from __future__ import annotations

import xml.etree.ElementTree as ET

from . import __version__
from .sandpile import SandpileConfig

COLORS = {3: "#1f4fbf", 2: "#bf1f1f"}
OTHER_COLOR = "#7f7f7f"


def config_svg(c: SandpileConfig, width: int = 800, margin: int = 20, edges: bool = False) -> str:
    """Dots at the plane embedding; 3 chips blue, 2 chips red, anything else grey.

    The dot radius is 0.3 * 2^-n of the unit edge. Edges are drawn only on request.
    """
    g = c.graph
    n = g.level
    unit = width - 2 * margin
    height = int(round(unit * 3**0.5 / 2)) + 2 * margin

    def pos(v):
        x, y = g.vertices[v].plane(n)
        return margin + x * unit, height - margin - y * unit

    root = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        version="1.1",
        width=str(width),
        height=str(height),
        viewBox=f"0 0 {width} {height}",
    )
    if edges:
        grp = ET.SubElement(root, "g", stroke="#000000", attrib={"stroke-width": "0.5"})
        for i, j in g.edges.tolist():
            (x1, y1), (x2, y2) = pos(i), pos(j)
            ET.SubElement(grp, "line", x1=f"{x1:.3f}", y1=f"{y1:.3f}", x2=f"{x2:.3f}", y2=f"{y2:.3f}")
    r = 0.3 * unit / 2**n
    dots = ET.SubElement(root, "g")
    for v, chips in enumerate(c.chips.tolist()):
        x, y = pos(v)
        ET.SubElement(
            dots,
            "circle",
            cx=f"{x:.3f}",
            cy=f"{y:.3f}",
            r=f"{r:.3f}",
            fill=COLORS.get(chips, OTHER_COLOR),
            attrib={"data-v": str(v), "data-chips": str(chips)},
        )
    body = ET.tostring(root, encoding="unicode")
    return f"<!-- sierpile {__version__} level={n} -->\n{body}\n"
