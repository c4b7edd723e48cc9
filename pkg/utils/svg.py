from html import escape
from pathlib import Path
from typing import Optional

PREAMBLE = """\
<?xml version="1.0" standalone="no"?>
<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN"
"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">
<svg width="%(width).2f" height="%(height).2f" viewBox="0 0 %(width).2f %(height).2f" version="1.1"
    xmlns="http://www.w3.org/2000/svg">
<g transform="translate(%(trans_x).2f,%(trans_y).2f)">
<rect x="%(neg_trans_x).2f" y="%(neg_trans_y).2f" width="%(width).2f" height="%(height).2f" style="fill:#ffffff"/>
"""

POSTAMBLE = """\
</g></svg>
"""

COLORS = {
    "blue": "#1f4e9c",
    "red": "#c0262d",
    "orange": "#e07b00",
    "green": "#2a8c3a",
    "black": "#000000",
    "grey": "#666666",
}


class SVG:
    """Deterministic SVG canvas: coordinates are rounded to 2 decimals, commands kept in call order."""

    def __init__(self, pad: float = 20.0):
        self.min_x: Optional[float] = None
        self.max_x: Optional[float] = None
        self.min_y: Optional[float] = None
        self.max_y: Optional[float] = None
        self.pad = pad
        self.commands: list[str] = []

    def require(self, x: float, y: float):
        if self.min_x is None:
            self.min_x = self.max_x = x
            self.min_y = self.max_y = y
        else:
            self.min_x = min(self.min_x, x)
            self.max_x = max(self.max_x, x)
            self.min_y = min(self.min_y, y)
            self.max_y = max(self.max_y, y)

    def circle(self, x: float, y: float, radius: float, color: str = "black", fill: bool = False):
        self.require(x - radius, y - radius)
        self.require(x + radius, y + radius)
        stroke = COLORS.get(color, color)
        style = f"fill:{stroke if fill else 'none'};stroke:{stroke};stroke-width:1"
        self.commands.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius:.2f}" style="{style}"/>')

    def line(self, points: list[tuple[float, float]], color: str = "black", width: float = 1.0):
        for x, y in points:
            self.require(x, y)
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        stroke = COLORS.get(color, color)
        self.commands.append(
            f'<polyline points="{coords}" style="fill:none;stroke:{stroke};stroke-width:{width:.2f}"/>'
        )

    def polygon(self, points: list[tuple[float, float]], color: str = "black", fill: bool = True):
        for x, y in points:
            self.require(x, y)
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        stroke = COLORS.get(color, color)
        style = f"fill:{stroke if fill else 'none'};stroke:{stroke};stroke-width:1"
        self.commands.append(f'<polygon points="{coords}" style="{style}"/>')

    def text(self, x: float, y: float, text: str, color: str = "grey", size: int = 10):
        self.require(x, y - size)
        self.require(x + len(text) * size * 0.6, y)
        fill = COLORS.get(color, color)
        self.commands.append(
            f'<text x="{x:.2f}" y="{y:.2f}" fill="{fill}" font-size="{size}" '
            f'font-family="monospace" xml:space="preserve">{escape(text)}</text>'
        )

    def render(self) -> str:
        if self.min_x is None:
            self.require(0.0, 0.0)
        pad = self.pad
        width = self.max_x - self.min_x + 2 * pad
        height = self.max_y - self.min_y + 2 * pad
        trans_x = -self.min_x + pad
        trans_y = -self.min_y + pad
        values = {
            "width": width,
            "height": height,
            "trans_x": trans_x,
            "trans_y": trans_y,
            "neg_trans_x": -trans_x,
            "neg_trans_y": -trans_y,
        }
        return PREAMBLE % values + "".join(c + "\n" for c in self.commands) + POSTAMBLE

    def save(self, path: Path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.render())
