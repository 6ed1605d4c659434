"""Portable bitmap (P1 ASCII, P4 binary) reading and writing; 1 is foreground."""

import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


class PbmFormatError(ValueError):
    """Malformed or unsupported PBM data."""
    pass


def _read_header(data: bytes) -> Tuple[bytes, int, int, int]:
    """Magic, width, height and the offset of the raster."""
    tokens = []
    position = 0
    while len(tokens) < 3:
        while position < len(data) and data[position:position + 1].isspace():
            position += 1
        if position >= len(data):
            raise PbmFormatError("Truncated PBM header")
        if data[position:position + 1] == b"#":
            newline = data.find(b"\n", position)
            position = len(data) if newline < 0 else newline + 1
            continue
        end = position
        while end < len(data) and not data[end:end + 1].isspace() and data[end:end + 1] != b"#":
            end += 1
        tokens.append(data[position:end])
        position = end

    magic = tokens[0]
    if magic not in (b"P1", b"P4"):
        raise PbmFormatError(f"Unsupported magic number {magic!r}; expected P1 or P4")
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except ValueError:
        raise PbmFormatError(f"Invalid PBM dimensions {tokens[1]!r} x {tokens[2]!r}") from None
    if width <= 0 or height <= 0:
        raise PbmFormatError(f"PBM dimensions must be positive, got {width}x{height}")
    return magic, width, height, position


def parse_pbm(data: bytes) -> np.ndarray:
    """Decode PBM bytes into a (height, width) boolean array."""
    magic, width, height, position = _read_header(data)

    if magic == b"P4":
        raster = data[position + 1:]
        row_bytes = (width + 7) // 8
        if len(raster) < row_bytes * height:
            raise PbmFormatError(f"P4 raster has {len(raster)} bytes, need {row_bytes * height}")
        packed = np.frombuffer(raster[:row_bytes * height], dtype=np.uint8).reshape(height, row_bytes)
        return np.unpackbits(packed, axis=1)[:, :width].astype(bool)

    body = bytearray()
    lines = data[position:].split(b"\n")
    for line in lines:
        body.extend(line.split(b"#", 1)[0])
    digits = bytes(c for c in body if not chr(c).isspace())
    if digits.strip(b"01"):
        raise PbmFormatError("P1 raster contains characters other than 0 and 1")
    if len(digits) < width * height:
        raise PbmFormatError(f"P1 raster has {len(digits)} pixels, need {width * height}")
    values = np.frombuffer(digits[:width * height], dtype=np.uint8) - ord("0")
    return values.reshape(height, width).astype(bool)


def read_pbm(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise PbmFormatError(f"Cannot read {path}: {e}") from e
    mask = parse_pbm(data)
    logger.debug(f"Read {mask.shape[1]}x{mask.shape[0]} mask from {path}")
    return mask


def format_pbm(mask: np.ndarray, binary: bool = True) -> bytes:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise PbmFormatError(f"Mask must be two-dimensional, got shape {mask.shape}")
    height, width = mask.shape
    if binary:
        return f"P4\n{width} {height}\n".encode() + np.packbits(mask, axis=1).tobytes()
    rows = "\n".join(" ".join("1" if v else "0" for v in row) for row in mask)
    return f"P1\n{width} {height}\n{rows}\n".encode()
