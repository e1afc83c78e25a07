"""SVG input/output for the M/L/C/Z path subset.

Every C segment becomes one cubic stroke; L segments are degree-elevated
to cubics; Z becomes a closing line back to the subpath start.  Parsed
sketches are normalized into the 256x256 canvas (uniform scale, centered,
5% margin) so loss weights transfer across inputs.  Exported coordinates
use 17 significant digits, which round-trips float64 exactly.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .errors import EmptySketch, MalformedSvg, ShapeMismatch, UnsupportedCommand
from .sketch import SketchFrame, SketchVideo

__all__ = [
    "CANVAS_SIZE",
    "parse_svg",
    "parse_path_data",
    "normalize_frame",
    "frame_to_svg",
    "write_frame",
    "load_video_dir",
]

CANVAS_SIZE = 256.0
CANVAS_MARGIN = 0.05

_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_TOKEN_RE = re.compile(r"[MmLlCcZz]|" + _NUMBER_RE.pattern + r"|\S")


def _tokenize(d: str):
    for match in _TOKEN_RE.finditer(d.replace(",", " ")):
        tok = match.group(0)
        if tok in ("M", "m", "L", "l", "C", "c", "Z", "z"):
            yield tok
        elif _NUMBER_RE.fullmatch(tok):
            yield tok
        elif tok.isalpha():
            raise UnsupportedCommand(f"unsupported path command {tok!r}")
        else:
            raise MalformedSvg(f"unexpected token {tok!r} in path data")


def _line_to_cubic(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Degree-elevate a line segment: interior points at 1/3 and 2/3."""
    d = p1 - p0
    return np.stack([p0, p0 + d / 3.0, p0 + 2.0 * d / 3.0, p1])


def parse_path_data(d: str) -> list[np.ndarray]:
    """Parse one `d` attribute into a list of (4, 2) cubic control arrays."""
    tokens = list(_tokenize(d))
    strokes: list[np.ndarray] = []
    i = 0
    current = None
    start = None

    def take_numbers(count: int) -> np.ndarray:
        nonlocal i
        if i + count > len(tokens):
            raise MalformedSvg(f"path data ended mid-command in {d!r}")
        vals = []
        for tok in tokens[i : i + count]:
            try:
                vals.append(float(tok))
            except ValueError:
                raise MalformedSvg(f"expected a number, got {tok!r}") from None
        i += count
        return np.array(vals)

    def peek_is_number() -> bool:
        return i < len(tokens) and _NUMBER_RE.fullmatch(tokens[i]) is not None

    while i < len(tokens):
        tok = tokens[i]
        if _NUMBER_RE.fullmatch(tok):
            raise MalformedSvg(f"coordinates {tok!r} without a preceding command")
        i += 1
        cmd = tok
        relative = cmd.islower()
        op = cmd.upper()

        if op == "M":
            xy = take_numbers(2)
            current = current + xy if (relative and current is not None) else xy
            start = current.copy()
            # SVG treats extra coordinate pairs after a moveto as linetos
            while peek_is_number():
                xy = take_numbers(2)
                nxt = current + xy if relative else xy
                strokes.append(_line_to_cubic(current, nxt))
                current = nxt
        elif op == "L":
            if current is None:
                raise MalformedSvg("lineto before any moveto")
            first = True
            while first or peek_is_number():
                first = False
                xy = take_numbers(2)
                nxt = current + xy if relative else xy
                strokes.append(_line_to_cubic(current, nxt))
                current = nxt
        elif op == "C":
            if current is None:
                raise MalformedSvg("curveto before any moveto")
            first = True
            while first or peek_is_number():
                first = False
                coords = take_numbers(6).reshape(3, 2)
                if relative:
                    coords = coords + current
                strokes.append(np.vstack([current[None, :], coords]))
                current = coords[2]
        elif op == "Z":
            if current is None or start is None:
                raise MalformedSvg("closepath before any moveto")
            if np.linalg.norm(current - start) > 1e-12:
                strokes.append(_line_to_cubic(current, start))
            current = start.copy()
        else:  # pragma: no cover - the tokenizer already rejects these
            raise UnsupportedCommand(f"unsupported path command {cmd!r}")

    return strokes


def _iter_path_elements(root):
    for elem in root.iter():
        tag = elem.tag.rsplit("}", 1)[-1]
        if tag == "path":
            yield elem


def normalize_frame(frame: SketchFrame) -> SketchFrame:
    """Fit the control-point bounding box into the canvas with 5% margin.

    Uniform scale and centering only, so the operation is idempotent:
    normalizing an already-normalized frame is the identity (up to float
    round-off).
    """
    pts = frame.points()
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(np.max(hi - lo))
    target = CANVAS_SIZE * (1.0 - 2.0 * CANVAS_MARGIN)
    scale = target / span if span > 1e-12 else 1.0
    center = 0.5 * (lo + hi)
    out = (pts - center) * scale + CANVAS_SIZE / 2.0
    return SketchFrame.from_points(out)


def parse_svg(text, normalize: bool = True) -> SketchFrame:
    """Parse an SVG document into a sketch frame.

    Only `path` elements are read; their data must use the M/L/C/Z subset
    (Q, A, H, V, S, T are rejected by name).  Styling attributes are
    ignored.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedSvg(f"not a well-formed SVG document: {exc}") from None

    strokes: list[np.ndarray] = []
    for elem in _iter_path_elements(root):
        d = elem.get("d")
        if d:
            strokes.extend(parse_path_data(d))
    if not strokes:
        raise EmptySketch("document contains no path data")

    frame = SketchFrame.from_points(np.concatenate(strokes, axis=0))
    return normalize_frame(frame) if normalize else frame


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def frame_to_svg(frame: SketchFrame) -> str:
    """Serialize a frame: one path element per stroke, full float precision."""
    size = int(CANVAS_SIZE)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
    ]
    for stroke in frame.strokes:
        p = stroke.control
        d = (
            f"M {_fmt(p[0, 0])} {_fmt(p[0, 1])} "
            f"C {_fmt(p[1, 0])} {_fmt(p[1, 1])} "
            f"{_fmt(p[2, 0])} {_fmt(p[2, 1])} "
            f"{_fmt(p[3, 0])} {_fmt(p[3, 1])}"
        )
        lines.append(f'  <path d="{d}" fill="none" stroke="black" stroke-width="1.5"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_frame(path, frame: SketchFrame):
    Path(path).write_text(frame_to_svg(frame), encoding="utf-8")


def load_video_dir(directory) -> SketchVideo:
    """Load frame_*.svg files (lexicographic = temporal order) as a video.

    Frames are parsed without re-normalization: they are already in canvas
    coordinates and per-frame refitting would destroy the animation.
    """
    directory = Path(directory)
    files = sorted(directory.glob("frame_*.svg"))
    if len(files) < 2:
        raise MalformedSvg(f"no frame sequence found in {directory}")
    frames = []
    for f in files:
        frames.append(parse_svg(f.read_text(encoding="utf-8"), normalize=False))
    try:
        return SketchVideo.from_frames(frames)
    except ShapeMismatch as exc:
        raise MalformedSvg(f"inconsistent frame sequence in {directory}: {exc}") from None
