"""Contour text files, corpus directories, CSV reports and atomic output."""

import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from .pbm import read_pbm
from ..domain.geometry import ContourError, DccContour, GridPoint, trace_mask

logger = logging.getLogger(__name__)

CONTOUR_SUFFIXES = (".txt", ".ctr")
MASK_SUFFIXES = (".pbm",)
RD_SWEEP_COLUMNS = ["contour_id", "mode", "lambda_or_dmax", "bits", "ssdd", "madd", "states_expanded"]


class ContourFormatError(ValueError):
    """Malformed contour text."""
    pass


def parse_contour_line(line: str) -> DccContour:
    """Parse ``x,y DIR symbols``; the symbol field may be absent for a single edge."""
    fields = line.split()
    if len(fields) not in (2, 3):
        raise ContourFormatError(f"Expected 'x,y DIR symbols', got {line!r}")
    try:
        x_text, y_text = fields[0].split(",")
        start = GridPoint(int(x_text), int(y_text))
    except ValueError:
        raise ContourFormatError(f"Invalid starting point {fields[0]!r}") from None
    if fields[1] not in ("N", "E", "S", "W"):
        raise ContourFormatError(f"Invalid direction {fields[1]!r}")
    try:
        return DccContour(start, fields[1], fields[2] if len(fields) == 3 else "")
    except ContourError as e:
        raise ContourFormatError(str(e)) from e


def format_contour(contour: DccContour) -> str:
    head = f"{contour.start.x},{contour.start.y} {contour.initial.value}"
    return f"{head} {contour.symbols}" if contour.symbols else head


def parse_contours(text: str) -> List[DccContour]:
    """One contour per non-blank line; lines starting with '#' are comments."""
    contours = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            contours.append(parse_contour_line(stripped))
        except ContourFormatError as e:
            raise ContourFormatError(f"line {number}: {e}") from e
    return contours


def format_contours(contours: Iterable[DccContour]) -> str:
    return "".join(format_contour(c) + "\n" for c in contours)


def read_contours(path: Union[str, Path]) -> List[DccContour]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ContourFormatError(f"Cannot read {path}: {e}") from e
    try:
        return parse_contours(text)
    except ContourFormatError as e:
        raise ContourFormatError(f"{path}: {e}") from e


def load_contour_source(path: Union[str, Path]) -> List[DccContour]:
    """Contours from a contour text file or a traced PBM mask."""
    path = Path(path)
    if path.suffix.lower() in MASK_SUFFIXES:
        return trace_mask(read_pbm(path))
    return read_contours(path)


def corpus_files(root: Union[str, Path]) -> List[Path]:
    """Contour and mask files under ``root`` in lexicographic order."""
    root = Path(root)
    if root.is_file():
        return [root]
    suffixes = CONTOUR_SUFFIXES + MASK_SUFFIXES
    return sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in suffixes)


def load_corpus(paths: Sequence[Union[str, Path]]) -> List[DccContour]:
    contours: List[DccContour] = []
    for source in paths:
        for path in corpus_files(source):
            loaded = load_contour_source(path)
            logger.debug(f"Loaded {len(loaded)} contours from {path}")
            contours.extend(loaded)
    return contours


def atomic_write(path: Union[str, Path], data: Union[bytes, str]) -> None:
    """Write to a temporary file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    handle, temporary = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(handle, "wb") as f:
            f.write(payload)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise


def format_csv(rows: Iterable[dict], columns: Sequence[str] = RD_SWEEP_COLUMNS) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()
