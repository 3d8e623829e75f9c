"""Space-time rasters of discrete runs and their file encodings.

Color map: vacant cells are white; the walking species draws from a
red family and the other from a blue family, darker with cluster size.
Row r of a raster is the configuration after r steps (row 0 is the
initial state), so a raster of a ``steps``-step run has ``steps`` rows
and the final post-run configuration is not drawn.

Files: binary PPM (P6) for bit-exact comparisons, and an SVG that
embeds the same pixels as a base64 PNG (encoded here from scratch so
no imaging dependency is needed).
"""

from __future__ import annotations

import base64
import struct
import zlib

import numpy as np

from .engine import SimConfig, Species, run_discrete

_SHADE_STEPS = 12
_SHADE_DROP = 10
_BASE = 235
_LOW = 24


def species_color(species: int, size: int) -> tuple[int, int, int]:
    main = _BASE - _SHADE_DROP * min(max(size, 1) - 1, _SHADE_STEPS)
    if species == int(Species.A):
        return (main, _LOW, _LOW)
    return (_LOW, _LOW, main)


def row_from_state(state) -> np.ndarray:
    """One RGB row; multi-occupied sites show their bravest occupant."""
    n = len(state.site_occupants)
    row = np.full((n, 3), 255, dtype=np.uint8)
    best = {}
    for c in state.clusters.values():
        cur = best.get(c.location)
        if cur is None or c.bravery > cur.bravery:
            best[c.location] = c
    for v, c in best.items():
        row[v] = species_color(int(c.species), c.size)
    return row


def spacetime_raster(cfg: SimConfig) -> np.ndarray:
    """(steps, vertex_count, 3) uint8 raster of a discrete run."""
    if cfg.mode != "discrete":
        raise ValueError("space-time rasters require discrete mode")
    if cfg.steps < 1:
        raise ValueError("need at least one step")
    rows = np.empty((cfg.steps, cfg.topology.vertex_count, 3), dtype=np.uint8)

    def hook(state, step):
        if step < cfg.steps:
            rows[step] = row_from_state(state)

    run_discrete(cfg, row_hook=hook)
    return rows


def write_ppm(image: np.ndarray) -> bytes:
    h, w, depth = image.shape
    if depth != 3 or image.dtype != np.uint8:
        raise ValueError("expected (H, W, 3) uint8")
    return b"P6\n%d %d\n255\n" % (w, h) + image.tobytes()


def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    head = tag + payload
    return struct.pack(">I", len(payload)) + head + struct.pack(">I", zlib.crc32(head) & 0xFFFFFFFF)


def write_png(image: np.ndarray) -> bytes:
    """Minimal 8-bit RGB PNG, filter 0 scanlines, fixed zlib level."""
    h, w, depth = image.shape
    if depth != 3 or image.dtype != np.uint8:
        raise ValueError("expected (H, W, 3) uint8")
    raw = b"".join(b"\x00" + image[r].tobytes() for r in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return b"".join([
        b"\x89PNG\r\n\x1a\n",
        _png_chunk(b"IHDR", ihdr),
        _png_chunk(b"IDAT", zlib.compress(raw, 6)),
        _png_chunk(b"IEND", b""),
    ])


def write_svg(image: np.ndarray, title: str = "space-time diagram") -> str:
    h, w, _ = image.shape
    b64 = base64.b64encode(write_png(image)).decode("ascii")
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">\n'
        f"  <title>{title}</title>\n"
        f'  <image width="{w}" height="{h}" style="image-rendering: pixelated" '
        f'href="data:image/png;base64,{b64}"/>\n'
        "</svg>\n"
    )


def save_spacetime(image: np.ndarray, path_base: str, title: str = "space-time diagram"):
    """Write path_base.ppm and path_base.svg; returns the two paths."""
    ppm = path_base + ".ppm"
    svg = path_base + ".svg"
    with open(ppm, "wb") as f:
        f.write(write_ppm(image))
    with open(svg, "w", encoding="ascii") as f:
        f.write(write_svg(image, title))
    return ppm, svg
