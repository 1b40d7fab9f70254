"""Monochrome waveform rendering with scope-style draw/erase semantics.

A trace maps one sample per framebuffer column; redrawing erases the old
polyline (overwrites it in "white", i.e. clears the pixels) before setting
the new one, so an incremental sequence of redraws ends bit-identical to
drawing only the final trace on a fresh buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signals import SampleFrame

__all__ = [
    "Framebuffer",
    "PlotTrace",
    "map_to_trace",
    "draw_trace",
    "export_svg",
    "export_ascii",
]

DEFAULT_WIDTH = 128
DEFAULT_HEIGHT = 64


@dataclass
class Framebuffer:
    """Binary pixel grid with a dirty-region bounding box."""

    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    pixels: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    dirty: tuple[int, int, int, int] | None = None  # (row_min, row_max, col_min, col_max)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"framebuffer must have positive size, got {self.width}x{self.height}")
        if self.pixels is None:
            self.pixels = np.zeros((self.height, self.width), dtype=bool)
        elif self.pixels.shape != (self.height, self.width):
            raise ValueError("pixel grid shape must match width/height")

    def _touch(self, mask: np.ndarray) -> None:
        rows, cols = np.nonzero(mask)
        if rows.size == 0:
            return
        box = (int(rows.min()), int(rows.max()), int(cols.min()), int(cols.max()))
        if self.dirty is None:
            self.dirty = box
        else:
            r0, r1, c0, c1 = self.dirty
            self.dirty = (min(r0, box[0]), max(r1, box[1]), min(c0, box[2]), max(c1, box[3]))

    def clear(self) -> None:
        self._touch(self.pixels)
        self.pixels[:] = False

    def clear_dirty(self) -> None:
        self.dirty = None


@dataclass(frozen=True)
class PlotTrace:
    """One framebuffer row index per column, plus the value mapping used."""

    rows: np.ndarray
    v_min: float
    v_max: float
    height: int

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        object.__setattr__(self, "rows", rows)
        if rows.size and (rows.min() < 0 or rows.max() >= self.height):
            raise ValueError("trace rows must lie within the framebuffer height")

    def __len__(self) -> int:
        return len(self.rows)


def map_to_trace(
    frame: SampleFrame,
    fb_width: int = DEFAULT_WIDTH,
    fb_height: int = DEFAULT_HEIGHT,
    v_min: float | None = None,
    v_max: float | None = None,
) -> PlotTrace:
    """Decimate a frame to one row index per column.

    Columns pick samples by stride (no averaging); larger voltages map to
    visually higher pixels, i.e. smaller row indices.  Values outside
    [v_min, v_max] clamp to the edge rows.
    """
    if fb_width <= 0 or fb_height <= 0:
        raise ValueError(f"target size must be positive, got {fb_width}x{fb_height}")
    if len(frame) == 0:
        raise ValueError("cannot map an empty frame")
    if v_min is None:
        v_min = float(np.min(frame.values))
    if v_max is None:
        v_max = float(np.max(frame.values))
    if v_max == v_min:
        # constant frame: pad the range so the trace sits mid-screen
        v_min, v_max = v_min - 0.5, v_max + 0.5
    if v_max < v_min:
        raise ValueError(f"degenerate value range [{v_min}, {v_max}]")
    picks = (np.arange(fb_width) * len(frame)) // fb_width
    norm = (frame.values[picks] - v_min) / (v_max - v_min)
    norm = np.clip(norm, 0.0, 1.0)
    rows_up = np.floor(norm * (fb_height - 1) + 0.5).astype(np.int64)
    return PlotTrace(rows=(fb_height - 1) - rows_up, v_min=v_min, v_max=v_max, height=fb_height)


def _polyline_mask(trace: PlotTrace, width: int, height: int) -> np.ndarray:
    """Pixel set of the connected trace: column spans between adjacent rows."""
    mask = np.zeros((height, width), dtype=bool)
    rows = trace.rows
    for x in range(len(rows)):
        prev = rows[x - 1] if x > 0 else rows[x]
        lo, hi = (prev, rows[x]) if prev <= rows[x] else (rows[x], prev)
        mask[lo:hi + 1, x] = True
    return mask


def draw_trace(fb: Framebuffer, old: PlotTrace | None, new: PlotTrace) -> Framebuffer:
    """Erase the previous polyline, then draw the new one."""
    if len(new) != fb.width:
        raise ValueError(f"trace length {len(new)} does not match framebuffer width {fb.width}")
    if old is not None:
        if len(old) != fb.width:
            raise ValueError(f"old trace length {len(old)} does not match framebuffer width {fb.width}")
        erase = _polyline_mask(old, fb.width, fb.height)
        fb.pixels &= ~erase
        fb._touch(erase)
    mask = _polyline_mask(new, fb.width, fb.height)
    fb.pixels |= mask
    fb._touch(mask)
    return fb


_SVG_TEMPLATE = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
    'width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
    '  <polyline points="{points}" fill="none" stroke="black" stroke-width="1"/>\n'
    '</svg>\n'
)


def export_svg(
    source: SampleFrame | PlotTrace,
    path,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    v_min: float | None = None,
    v_max: float | None = None,
) -> str:
    """Write a single-polyline SVG of a frame or prepared trace.

    Polyline coordinates are exactly the map_to_trace rows; an empty frame
    yields a valid SVG with an empty polyline.  Output bytes are fully
    deterministic for identical inputs.
    """
    if isinstance(source, PlotTrace):
        trace = source
        height = source.height
        width = len(source)
    elif len(source) == 0:
        trace = None
    else:
        trace = map_to_trace(source, width, height, v_min, v_max)
    if trace is None:
        points = ""
    else:
        points = " ".join(f"{x},{int(r)}" for x, r in enumerate(trace.rows))
    svg = _SVG_TEMPLATE.format(w=width, h=height, points=points)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return svg


def export_ascii(fb: Framebuffer) -> str:
    """One character per pixel: '#' set, '.' clear."""
    return "\n".join("".join("#" if px else "." for px in row) for row in fb.pixels)
