"""Image and table I/O: 8-bit PGM (P2/P5), optional grayscale PNG, CSV,
flat key=value config files.

Loading maps 8-bit samples to float64 in [0, 255] and then clamps to
[1, 255]: the multiplicative noise model and the solver both assume a
strictly positive image, and a floor of 1 of 255 is visually negligible.
Saving clips to [0, 255] and rounds half-to-even. Nothing in between ever
quantizes.
"""

from __future__ import annotations

import csv
import warnings
from pathlib import Path

import numpy as np

from .grid import ImageGrid

INTENSITY_FLOOR = 1.0


class PgmFormatError(ValueError):
    """Malformed or unsupported image file; `offset` is the byte position."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


_WHITESPACE = b" \t\r\n\x0b\x0c"


class _PgmScanner:
    """Tokenizer over the PGM header: whitespace-separated tokens with
    # comments running to end of line."""

    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def _skip_filler(self):
        blob, n = self.blob, len(self.blob)
        while self.pos < n:
            c = blob[self.pos:self.pos + 1]
            if c in (b"#",):
                nl = blob.find(b"\n", self.pos)
                self.pos = n if nl < 0 else nl + 1
            elif c and c in _WHITESPACE:
                self.pos += 1
            else:
                return

    def token(self, what: str) -> tuple[bytes, int]:
        self._skip_filler()
        if self.pos >= len(self.blob):
            raise PgmFormatError(f"unexpected end of file reading {what}", self.pos)
        start = self.pos
        while self.pos < len(self.blob) and \
                self.blob[self.pos:self.pos + 1] not in _WHITESPACE:
            self.pos += 1
        return self.blob[start:self.pos], start

    def integer(self, what: str) -> tuple[int, int]:
        tok, off = self.token(what)
        try:
            return int(tok), off
        except ValueError:
            raise PgmFormatError(f"invalid {what}: {tok!r}", off) from None


def _clamp_loaded(data: np.ndarray, path) -> ImageGrid:
    low = data < INTENSITY_FLOOR
    n_low = int(low.sum())
    if n_low:
        warnings.warn(
            f"{path}: clamped {n_low} pixel(s) below {INTENSITY_FLOOR:g} up to the "
            f"positivity floor (strictly positive images are assumed throughout)",
            stacklevel=3)
        data = np.where(low, INTENSITY_FLOOR, data)
    return ImageGrid(data)


def _load_pgm(blob: bytes, path) -> ImageGrid:
    sc = _PgmScanner(blob)
    magic, off = sc.token("magic number")
    if magic in (b"P1", b"P3", b"P4", b"P6"):
        raise PgmFormatError(
            f"unsupported Netpbm format {magic.decode('ascii', 'replace')} "
            f"(only grayscale P2/P5 PGM is handled)", off)
    if magic not in (b"P2", b"P5"):
        raise PgmFormatError(f"not a PGM file (magic {magic[:8]!r})", off)
    width, off_w = sc.integer("width")
    height, off_h = sc.integer("height")
    if width < 1 or height < 1:
        raise PgmFormatError(f"bad dimensions {width}x{height}", off_w)
    maxval, off_m = sc.integer("maxval")
    if maxval < 1:
        raise PgmFormatError(f"bad maxval {maxval}", off_m)
    if maxval > 255:
        raise PgmFormatError(
            f"unsupported sample depth: maxval {maxval} > 255 (8-bit only)", off_m)

    n = width * height
    if magic == b"P5":
        # single whitespace byte separates the header from the raster
        if sc.pos >= len(blob) or blob[sc.pos:sc.pos + 1] not in _WHITESPACE:
            raise PgmFormatError("missing whitespace before binary raster", sc.pos)
        start = sc.pos + 1
        raster = blob[start:start + n]
        if len(raster) < n:
            raise PgmFormatError(
                f"truncated raster: expected {n} bytes, got {len(raster)}",
                start + len(raster))
        data = np.frombuffer(raster, dtype=np.uint8, count=n).astype(np.float64)
    else:
        values = np.empty(n, dtype=np.float64)
        for idx in range(n):
            v, off_v = sc.integer("sample")
            if not 0 <= v <= maxval:
                raise PgmFormatError(
                    f"sample {v} outside [0, {maxval}]", off_v)
            values[idx] = v
        data = values

    return _clamp_loaded(data.reshape(height, width), path)


def _load_png(path) -> ImageGrid:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode != "L":
            raise PgmFormatError(
                f"PNG mode {im.mode!r} is not 8-bit grayscale", 0)
        data = np.asarray(im, dtype=np.float64)
    return _clamp_loaded(data, path)


def load_image(path) -> ImageGrid:
    """Load an 8-bit grayscale image (PGM P2/P5, or PNG) as a positive
    float grid in [1, 255]."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    return _load_pgm(blob, path)


def _quantize(grid: ImageGrid) -> np.ndarray:
    # clip to the 8-bit range, round half to even
    return np.rint(np.clip(grid.data, 0.0, 255.0)).astype(np.uint8)


def save_image(grid: ImageGrid, path, fmt: str | None = None,
               comments: tuple[str, ...] = ()):
    """Write the grid as an 8-bit image. `fmt` is "P5" (default for .pgm),
    "P2", or "png"; `comments` become # lines in the PGM header (used to
    embed the resolved run configuration)."""
    path = Path(path)
    if fmt is None:
        fmt = "png" if path.suffix.lower() == ".png" else "P5"
    raster = _quantize(grid)

    if fmt == "png":
        from PIL import Image

        Image.fromarray(raster, mode="L").save(path)
        return
    if fmt not in ("P2", "P5"):
        raise ValueError(f"unknown image format {fmt!r}")

    header = [fmt.encode()]
    for line in comments:
        text = str(line).replace("\n", " ")
        header.append(b"# " + text.encode("utf-8"))
    header.append(f"{grid.width} {grid.height}".encode())
    header.append(b"255")
    blob = b"\n".join(header) + b"\n"
    if fmt == "P5":
        blob += raster.tobytes()
    else:
        lines = []
        for row in raster:
            line = ""
            for v in row:
                piece = str(int(v))
                if line and len(line) + 1 + len(piece) > 70:
                    lines.append(line)
                    line = piece
                else:
                    line = piece if not line else line + " " + piece
            lines.append(line)
        blob += ("\n".join(lines) + "\n").encode("ascii")
    path.write_bytes(blob)


def write_csv(path, header: list[str], rows):
    """CSV with a header row, UTF-8, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_surface_csv(path, table: np.ndarray):
    """Persist an (i, j, value) table; values carry 9 significant digits."""
    rows = ((int(i), int(j), f"{v:.9g}") for i, j, v in table)
    write_csv(path, ["i", "j", "value"], rows)


def read_surface_csv(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header != ["i", "j", "value"]:
            raise ValueError(f"{path}: unexpected surface CSV header {header}")
        rows = [(float(i), float(j), float(v)) for i, j, v in r]
    return np.asarray(rows, dtype=np.float64)


def write_trace_csv(path, trace):
    def fmt(x):
        return "" if x is None else f"{x:.9g}"

    rows = ((e.iteration, fmt(e.psnr), fmt(e.ssim), f"{e.relative_change:.9g}")
            for e in trace)
    write_csv(path, ["iteration", "psnr", "ssim", "relative_change"], rows)


def read_config(path) -> dict[str, str]:
    """Flat key=value file mirroring the CLI flags; # starts a comment."""
    out: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_config(path, mapping: dict):
    lines = [f"{k}={v}" for k, v in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
