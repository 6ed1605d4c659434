"""Whole-image lossless container: header, starting points, lengths and one arithmetic payload."""

import logging
import zlib
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .context_tree import ContextTree
from .entropy import (
    ArithmeticDecoder,
    ArithmeticEncoder,
    BitReader,
    BitWriter,
    CorruptStreamError,
    ModelMismatchError,
    best_rice_k,
    ceil_log2,
    quantize,
    rice_cost,
    rice_decode,
    rice_encode,
)
from .geometry import SYMBOLS, AbsoluteDirection, DccContour, GridPoint, endpoints, rotate
from ..config.constants import BitstreamFormat, ErrorMessages, OversizePolicy

logger = logging.getLogger(__name__)

_DIRECTIONS = "NESW"


class OversizeContourError(ValueError):
    """Contour longer than the 16-bit length field allows."""
    pass


class InvalidImageError(ValueError):
    """Image dimensions, contour count or coordinates cannot be coded."""
    pass


@dataclass(frozen=True)
class EncodedImage:
    """Image size, contours and the hash of the model they are coded with."""
    width: int
    height: int
    contours: Tuple[DccContour, ...] = ()
    model_hash: int = 0

    def __post_init__(self):
        object.__setattr__(self, "contours", tuple(self.contours))

    @property
    def symbol_count(self) -> int:
        return sum(len(c) for c in self.contours)

    def validate(self) -> None:
        if not 0 <= self.width <= BitstreamFormat.MAX_DIMENSION or not 0 <= self.height <= BitstreamFormat.MAX_DIMENSION:
            raise InvalidImageError(f"Image size {self.width}x{self.height} exceeds 16-bit fields")
        if len(self.contours) > BitstreamFormat.MAX_DIMENSION:
            raise InvalidImageError(f"Too many contours: {len(self.contours)}")
        for index, contour in enumerate(self.contours):
            points = endpoints(contour)
            if not (0 <= contour.start.x <= self.width and 0 <= contour.start.y <= self.height):
                raise InvalidImageError(f"Contour {index} starts outside the image: {tuple(contour.start)}")
            if points[:, 0].min() < 0 or points[:, 1].min() < 0 or points[:, 0].max() > self.width \
                    or points[:, 1].max() > self.height:
                raise InvalidImageError(f"Contour {index} leaves the {self.width}x{self.height} lattice")


@dataclass
class StartingPointBlock:
    """Axis-sorted starting points with Rice-coded differences on the sorted axis."""
    axis: int
    k: int
    points: List[GridPoint]
    width: int
    height: int

    @property
    def dimension(self) -> int:
        return self.width if self.axis == 0 else self.height

    @property
    def other_dimension(self) -> int:
        return self.height if self.axis == 0 else self.width

    def differences(self) -> List[int]:
        values = [p[self.axis] for p in self.points]
        return [b - a for a, b in zip(values, values[1:])]

    def bit_cost(self) -> int:
        if not self.points:
            return 0
        n = len(self.points)
        return (
            1
            + ceil_log2(ceil_log2(self.dimension) + 1)
            + ceil_log2(self.dimension + 1)
            + rice_cost(self.differences(), self.k)
            + n * ceil_log2(self.other_dimension + 1)
        )

    def write(self, writer: BitWriter) -> None:
        if not self.points:
            return
        writer.write_bit(self.axis)
        writer.write_bits(self.k, ceil_log2(ceil_log2(self.dimension) + 1))
        writer.write_bits(self.points[0][self.axis], ceil_log2(self.dimension + 1))
        for diff in self.differences():
            rice_encode(diff, self.k, writer)
        other_width = ceil_log2(self.other_dimension + 1)
        for point in self.points:
            writer.write_bits(point[1 - self.axis], other_width)


def plan_starting_points(points: Sequence[GridPoint], width: int, height: int) -> StartingPointBlock:
    """Cheaper of the two axis variants; x wins ties."""
    best: Optional[StartingPointBlock] = None
    for axis in (0, 1):
        ordered = sorted(points, key=lambda p: (p[axis], p[1 - axis]))
        dimension = width if axis == 0 else height
        values = [p[axis] for p in ordered]
        k = best_rice_k([b - a for a, b in zip(values, values[1:])], dimension)
        block = StartingPointBlock(axis, k, [GridPoint(*p) for p in ordered], width, height)
        if best is None or block.bit_cost() < best.bit_cost():
            best = block
    return best


def encode_starting_points(points: Sequence[GridPoint], width: int, height: int) -> BitWriter:
    writer = BitWriter()
    plan_starting_points(points, width, height).write(writer)
    return writer


def decode_starting_points(reader: BitReader, count: int, width: int, height: int) -> List[GridPoint]:
    if count == 0:
        return []
    axis = reader.read_bit()
    dimension, other_dimension = (width, height) if axis == 0 else (height, width)
    k = reader.read_bits(ceil_log2(ceil_log2(dimension) + 1))
    values = [reader.read_bits(ceil_log2(dimension + 1))]
    for _ in range(count - 1):
        values.append(values[-1] + rice_decode(reader, k))
    other_width = ceil_log2(other_dimension + 1)
    others = [reader.read_bits(other_width) for _ in range(count)]
    if axis == 0:
        return [GridPoint(v, o) for v, o in zip(values, others)]
    return [GridPoint(o, v) for v, o in zip(values, others)]


def split_oversize(contour: DccContour, limit: int = BitstreamFormat.MAX_CONTOUR_LENGTH) -> List[DccContour]:
    """Cut a contour into parts of at most ``limit`` symbols.

    The symbol after each cut becomes the initial direction of the next part.
    """
    parts = []
    while len(contour) > limit:
        head = DccContour(contour.start, contour.initial, contour.symbols[:limit])
        last = endpoints(head)[-1]
        direction = head.initial
        for symbol in head.symbols:
            direction = rotate(direction, symbol)
        parts.append(head)
        contour = DccContour(
            GridPoint(int(last[0]), int(last[1])),
            rotate(direction, contour.symbols[limit]),
            contour.symbols[limit + 1:]
        )
    parts.append(contour)
    return parts


@dataclass
class EncodedStream:
    """Container bytes plus exact bit accounting."""
    data: bytes
    contours: List[DccContour]
    source_indices: List[int]
    payload_bits: int
    contour_bits: List[int] = field(default_factory=list)

    @property
    def total_bits(self) -> int:
        return len(self.data) * 8

    @property
    def header_bits(self) -> int:
        return self.total_bits - self.payload_bits

    @property
    def symbol_count(self) -> int:
        return sum(len(c) for c in self.contours)

    @property
    def bits_per_symbol(self) -> float:
        return self.payload_bits / self.symbol_count if self.symbol_count else 0.0


def tree_provider(tree: ContextTree):
    """Frequency provider backed by the tree's smoothed distributions."""
    def provider(symbols: Sequence[str], i: int):
        return quantize(tree.probabilities_at(symbols, i))
    return provider


def encode_image(
    image: EncodedImage,
    tree: ContextTree,
    oversize_policy: OversizePolicy = OversizePolicy.FAIL
) -> EncodedStream:
    """Serialize an image's contours into a CTC1 container."""
    pieces: List[Tuple[int, DccContour]] = []
    for index, contour in enumerate(image.contours):
        if len(contour) > BitstreamFormat.MAX_CONTOUR_LENGTH:
            if oversize_policy != OversizePolicy.SPLIT:
                raise OversizeContourError(
                    f"{ErrorMessages.CONTOUR_TOO_LONG}: contour {index} has {len(contour)} symbols"
                )
            parts = split_oversize(contour)
            logger.warning(f"Split contour {index} of {len(contour)} symbols into {len(parts)} parts")
            pieces.extend((index, part) for part in parts)
        else:
            pieces.append((index, contour))

    EncodedImage(image.width, image.height, [c for _, c in pieces]).validate()

    block = plan_starting_points([c.start for _, c in pieces], image.width, image.height)
    axis = block.axis
    pieces.sort(key=lambda item: (item[1].start[axis], item[1].start[1 - axis]))
    contours = [c for _, c in pieces]

    writer = BitWriter()
    writer.write_bytes(BitstreamFormat.MAGIC)
    writer.write_bits(image.width, BitstreamFormat.DIMENSION_BITS)
    writer.write_bits(image.height, BitstreamFormat.DIMENSION_BITS)
    writer.write_bits(len(contours), BitstreamFormat.COUNT_BITS)
    writer.write_bits(image.model_hash, BitstreamFormat.MODEL_HASH_BITS)
    block.write(writer)
    for contour in contours:
        writer.write_bits(_DIRECTIONS.index(contour.initial.value), BitstreamFormat.DIRECTION_BITS)
        writer.write_bits(len(contour), BitstreamFormat.LENGTH_BITS)

    payload = BitWriter()
    encoder = ArithmeticEncoder(payload)
    provider = tree_provider(tree)
    contour_bits = []
    for contour in contours:
        before = len(payload)
        symbols = contour.symbols
        for i, symbol in enumerate(symbols):
            encoder.write(provider(symbols, i), SYMBOLS.index(symbol))
        contour_bits.append(len(payload) - before)
    encoder.finish()
    if contour_bits:
        contour_bits[-1] += len(payload) - sum(contour_bits)

    writer.write_bits(len(payload), BitstreamFormat.PAYLOAD_LENGTH_BITS)
    writer.extend(payload)
    writer.pad_to_byte()
    body = writer.getvalue()
    data = body + zlib.crc32(body).to_bytes(4, "big")

    logger.debug(f"Encoded {len(contours)} contours, {len(payload)} payload bits, {len(data)} bytes")
    return EncodedStream(
        data=data,
        contours=contours,
        source_indices=[i for i, _ in pieces],
        payload_bits=len(payload),
        contour_bits=contour_bits
    )


_MINIMUM_SIZE = len(BitstreamFormat.MAGIC) + (
    2 * BitstreamFormat.DIMENSION_BITS + BitstreamFormat.COUNT_BITS + BitstreamFormat.MODEL_HASH_BITS
    + BitstreamFormat.PAYLOAD_LENGTH_BITS + BitstreamFormat.CRC_BITS
) // 8


def decode_image(
    data: bytes,
    tree: ContextTree,
    model_hash: int,
    max_symbols: Optional[int] = None
) -> EncodedImage:
    """Inverse of encode_image; raises CorruptStreamError on any malformed input.

    ``max_symbols`` caps the total contour length the headers may declare.
    """
    try:
        return _decode(bytes(data), tree, model_hash, max_symbols)
    except CorruptStreamError:
        raise
    except (ValueError, IndexError, OverflowError) as e:
        raise CorruptStreamError(f"{ErrorMessages.CORRUPT_STREAM}: {e}") from e


def _decode(data: bytes, tree: ContextTree, model_hash: int, max_symbols: Optional[int]) -> EncodedImage:
    if len(data) < _MINIMUM_SIZE:
        raise CorruptStreamError(f"{ErrorMessages.CORRUPT_STREAM}: {len(data)} bytes is too short")
    if data[:len(BitstreamFormat.MAGIC)] != BitstreamFormat.MAGIC:
        raise CorruptStreamError(f"{ErrorMessages.CORRUPT_STREAM}: bad magic {data[:4]!r}")
    body, checksum = data[:-4], int.from_bytes(data[-4:], "big")
    if zlib.crc32(body) != checksum:
        raise CorruptStreamError(f"{ErrorMessages.CORRUPT_STREAM}: checksum mismatch")

    reader = BitReader(body, start=len(BitstreamFormat.MAGIC) * 8)
    width = reader.read_bits(BitstreamFormat.DIMENSION_BITS)
    height = reader.read_bits(BitstreamFormat.DIMENSION_BITS)
    count = reader.read_bits(BitstreamFormat.COUNT_BITS)
    stored_hash = reader.read_bits(BitstreamFormat.MODEL_HASH_BITS)
    if stored_hash != model_hash:
        raise ModelMismatchError(f"{ErrorMessages.MODEL_MISMATCH}: {stored_hash:016x} != {model_hash:016x}")

    starts = decode_starting_points(reader, count, width, height)
    headers = []
    for _ in range(count):
        direction = AbsoluteDirection(_DIRECTIONS[reader.read_bits(BitstreamFormat.DIRECTION_BITS)])
        headers.append((direction, reader.read_bits(BitstreamFormat.LENGTH_BITS)))
    declared = sum(length for _, length in headers)
    if max_symbols is not None and declared > max_symbols:
        raise CorruptStreamError(
            f"{ErrorMessages.CORRUPT_STREAM}: headers declare {declared} symbols, limit is {max_symbols}"
        )

    payload_bits = reader.read_bits(BitstreamFormat.PAYLOAD_LENGTH_BITS)
    payload_start = reader.position
    if payload_bits > reader.remaining or (payload_start + payload_bits + 7) // 8 != len(body):
        raise CorruptStreamError(f"{ErrorMessages.CORRUPT_STREAM}: payload length {payload_bits} is inconsistent")
    if count and payload_bits == 0:
        raise CorruptStreamError(f"{ErrorMessages.CORRUPT_STREAM}: empty payload")

    contours = []
    if count:
        decoder = ArithmeticDecoder(BitReader(body, start=payload_start, limit=payload_start + payload_bits))
        provider = tree_provider(tree)
        for start, (direction, length) in zip(starts, headers):
            decoded: List[str] = []
            for i in range(length):
                decoded.append(SYMBOLS[decoder.read(provider(decoded, i))])
            contours.append(DccContour(start, direction, "".join(decoded)))

    logger.debug(f"Decoded {count} contours from {len(data)} bytes")
    return EncodedImage(width=width, height=height, contours=tuple(contours), model_hash=model_hash)
