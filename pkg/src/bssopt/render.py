"""Map rendering: weak cells shaded by traffic, existing stations, new macro
and micro stations with their coverage circles.

Output is either binary PPM (P6) or SVG; both are byte-deterministic.
"""
from __future__ import annotations

import numpy as np

from .model import Deployment, ProblemInstance, StationKind

BACKGROUND = (255, 255, 255)
TRAFFIC_LO = (255, 236, 200)
TRAFFIC_HI = (200, 40, 20)
EXISTING = (30, 30, 30)
MACRO = (20, 70, 200)
MICRO = (20, 160, 60)


def _shade(t):
    t = np.clip(t, 0.0, 1.0)[..., None]
    lo, hi = np.array(TRAFFIC_LO, float), np.array(TRAFFIC_HI, float)
    return np.rint(lo + (hi - lo) * t).astype(np.uint8)


def raster(instance: ProblemInstance, deployment: Deployment | None = None, scale: int = 4) -> np.ndarray:
    """RGB image array of shape ``(height * scale, width * scale, 3)``, y pointing down."""
    h, w = instance.height, instance.width
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    wx, wy, wt = instance.weak_cells()
    if len(wt):
        peak = wt.max() if wt.max() > 0 else 1.0
        img[wy, wx] = _shade(wt / peak)
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    yy, xx = np.mgrid[0:h * scale, 0:w * scale]
    cx = (xx + 0.5) / scale - 0.5
    cy = (yy + 0.5) / scale - 0.5

    def ring(x, y, r, color):
        d = np.hypot(cx - x, cy - y)
        img[np.abs(d - r) <= 0.5 / scale * 1.5] = color

    def glyph(x, y, color, half):
        x0, y0 = int(x * scale), int(y * scale)
        img[max(0, y0 - half):y0 + scale + half, max(0, x0 - half):x0 + scale + half] = color

    if deployment is not None:
        for st in deployment:
            color = MACRO if st.kind is StationKind.MACRO else MICRO
            ring(st.x, st.y, instance.params.radius(st.kind), color)
    for x, y in instance.existing_stations:
        glyph(x, y, EXISTING, scale)
    if deployment is not None:
        for st in deployment:
            glyph(st.x, st.y, MACRO if st.kind is StationKind.MACRO else MICRO, scale // 2)
    return img


def to_ppm(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def to_svg(instance: ProblemInstance, deployment: Deployment | None = None, scale: int = 4) -> str:
    s = scale
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{instance.width * s}" '
        f'height="{instance.height * s}" viewBox="0 0 {instance.width * s} {instance.height * s}">',
        f'<rect class="background" width="100%" height="100%" fill="rgb{BACKGROUND}"/>',
        '<g class="weak-cells">',
    ]
    wx, wy, wt = instance.weak_cells()
    if len(wt):
        colors = _shade(wt / (wt.max() if wt.max() > 0 else 1.0))
        for x, y, c in zip(wx, wy, colors):
            out.append(f'<rect x="{x * s}" y="{y * s}" width="{s}" height="{s}" '
                       f'fill="rgb({c[0]},{c[1]},{c[2]})"/>')
    out.append("</g>")
    if deployment is not None:
        out.append('<g class="coverage">')
        for st in deployment.canonical():
            color = MACRO if st.kind is StationKind.MACRO else MICRO
            r = instance.params.radius(st.kind) * s
            out.append(f'<circle class="coverage-{st.kind.value}" cx="{st.x * s + s / 2:g}" '
                       f'cy="{st.y * s + s / 2:g}" r="{r:g}" fill="none" stroke="rgb{color}"/>')
        out.append("</g>")
    out.append('<g class="existing-stations">')
    for x, y in instance.existing_stations:
        out.append(f'<rect class="station existing" x="{x * s - s / 2:g}" y="{y * s - s / 2:g}" '
                   f'width="{2 * s}" height="{2 * s}" fill="rgb{EXISTING}"/>')
    out.append("</g>")
    if deployment is not None:
        out.append('<g class="new-stations">')
        for st in deployment.canonical():
            color = MACRO if st.kind is StationKind.MACRO else MICRO
            shape = "macro" if st.kind is StationKind.MACRO else "micro"
            out.append(f'<circle class="station new-{shape}" cx="{st.x * s + s / 2:g}" '
                       f'cy="{st.y * s + s / 2:g}" r="{s:g}" fill="rgb{color}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(instance: ProblemInstance, deployment: Deployment | None, path, scale: int = 4) -> None:
    """Write ``.svg`` as vector output, anything else as binary PPM."""
    path = str(path)
    if path.lower().endswith(".svg"):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_svg(instance, deployment, scale))
    else:
        with open(path, "wb") as fh:
            fh.write(to_ppm(raster(instance, deployment, scale)))
