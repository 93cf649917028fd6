"""Dependency-free SVG charts for the report artifacts."""

from __future__ import annotations

from xml.sax.saxutils import escape

__all__ = ["bar_chart", "line_chart"]

_FONT = "font-family=\"sans-serif\""


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _frame(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def line_chart(
    series_a,
    series_b,
    labels: tuple[str, str] = ("portfolio", "benchmark"),
    title: str = "cumulative return",
    width: int = 720,
    height: int = 420,
) -> str:
    """Two-series line chart: series_a solid, series_b dashed.

    Emits exactly two <polyline> elements (the axes are <line>s).
    """
    a = [float(v) for v in series_a]
    b = [float(v) for v in series_b]
    if len(a) != len(b) or not a:
        raise ValueError("series must be non-empty and equally long")
    ml, mr, mt, mb = 60, 20, 40, 40
    pw, ph = width - ml - mr, height - mt - mb
    lo = min(min(a), min(b), 0.0)
    hi = max(max(a), max(b), 0.0)
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    pad = 0.05 * (hi - lo)
    hi, lo = hi + pad, lo - pad

    def px(i: int) -> float:
        return ml + (pw * i / max(1, len(a) - 1))

    def py(v: float) -> float:
        return mt + ph * (hi - v) / (hi - lo)

    pts_a = " ".join(f"{_fmt(px(i))},{_fmt(py(v))}" for i, v in enumerate(a))
    pts_b = " ".join(f"{_fmt(px(i))},{_fmt(py(v))}" for i, v in enumerate(b))
    body = [
        f'<text x="{ml}" y="24" {_FONT} font-size="16">{escape(title)}</text>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="#333"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="#333"/>',
    ]
    if lo < 0.0 < hi:
        zy = _fmt(py(0.0))
        body.append(
            f'<line x1="{ml}" y1="{zy}" x2="{ml + pw}" y2="{zy}" stroke="#bbb" stroke-dasharray="2,4"/>'
        )
    for frac in (0.0, 0.5, 1.0):
        v = lo + frac * (hi - lo)
        body.append(
            f'<text x="{ml - 8}" y="{_fmt(py(v) + 4)}" {_FONT} font-size="11" '
            f'text-anchor="end">{v:.4g}</text>'
        )
    body += [
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{pts_a}"/>',
        f'<polyline fill="none" stroke="#d62728" stroke-width="2" '
        f'stroke-dasharray="6,4" points="{pts_b}"/>',
        f'<text x="{ml + pw - 10}" y="{mt + 14}" {_FONT} font-size="12" text-anchor="end" '
        f'fill="#1f77b4">{escape(labels[0])} (solid)</text>',
        f'<text x="{ml + pw - 10}" y="{mt + 30}" {_FONT} font-size="12" text-anchor="end" '
        f'fill="#d62728">{escape(labels[1])} (dashed)</text>',
    ]
    return _frame(width, height, body)


def bar_chart(
    names,
    values,
    title: str = "mean |SHAP|",
    width: int = 720,
    bar_height: int = 22,
) -> str:
    """Horizontal bar chart, one bar per (name, value) in the given order."""
    names = [str(n) for n in names]
    vals = [float(v) for v in values]
    if len(names) != len(vals) or not names:
        raise ValueError("names and values must be non-empty and equally long")
    ml, mr, mt, mb = 200, 70, 40, 20
    ph = len(names) * (bar_height + 6)
    height = mt + ph + mb
    pw = width - ml - mr
    vmax = max(max(vals), 0.0)
    if vmax == 0.0:
        vmax = 1.0
    body = [f'<text x="20" y="24" {_FONT} font-size="16">{escape(title)}</text>']
    for i, (name, v) in enumerate(zip(names, vals)):
        y = mt + i * (bar_height + 6)
        w = pw * max(v, 0.0) / vmax
        body += [
            f'<text x="{ml - 8}" y="{_fmt(y + bar_height * 0.72)}" {_FONT} font-size="12" '
            f'text-anchor="end">{escape(name)}</text>',
            f'<rect x="{ml}" y="{y}" width="{_fmt(w)}" height="{bar_height}" fill="#1f77b4"/>',
            f'<text x="{_fmt(ml + w + 6)}" y="{_fmt(y + bar_height * 0.72)}" {_FONT} '
            f'font-size="11">{v:.4g}</text>',
        ]
    body.append(
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="#333"/>'
    )
    return _frame(width, height, body)
