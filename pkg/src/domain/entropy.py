"""Bit-level primitives: MSB-first bit IO, integer arithmetic coding, Rice codes."""

import logging
import math
from functools import lru_cache
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .geometry import SYMBOLS
from ..config.constants import CoderPrecision

logger = logging.getLogger(__name__)

FREQUENCY_TOTAL = 1 << CoderPrecision.FREQUENCY_BITS


class CorruptStreamError(ValueError):
    """Bitstream is truncated, malformed or inconsistent."""
    pass


class ModelMismatchError(CorruptStreamError):
    """Bitstream was produced with a different model."""
    pass


def ceil_log2(n: int) -> int:
    """Smallest b with 2^b >= n (0 for n <= 1)."""
    return (n - 1).bit_length() if n > 1 else 0


class BitWriter:
    """Append-only MSB-first bit buffer."""

    def __init__(self):
        self._buffer = bytearray()
        self._current = 0
        self._filled = 0

    def __len__(self) -> int:
        return len(self._buffer) * 8 + self._filled

    def write_bit(self, bit: int) -> None:
        self._current = (self._current << 1) | (bit & 1)
        self._filled += 1
        if self._filled == 8:
            self._buffer.append(self._current)
            self._current = 0
            self._filled = 0

    def write_bits(self, value: int, width: int) -> None:
        """Write ``value`` as a fixed-width unsigned field."""
        if width < 0 or value < 0 or value >> width:
            raise ValueError(f"Value {value} does not fit in {width} bits")
        for shift in range(width - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def write_bytes(self, data: bytes) -> None:
        if self._filled == 0:
            self._buffer.extend(data)
            return
        for byte in data:
            self.write_bits(byte, 8)

    def extend(self, other: "BitWriter") -> None:
        """Append every bit written to ``other``."""
        data, length = other.getvalue(), len(other)
        full, rest = divmod(length, 8)
        self.write_bytes(data[:full])
        if rest:
            self.write_bits(data[full] >> (8 - rest), rest)

    def pad_to_byte(self) -> None:
        while self._filled:
            self.write_bit(0)

    def getvalue(self) -> bytes:
        """Buffer contents, the last partial byte zero-padded."""
        if self._filled:
            return bytes(self._buffer) + bytes([self._current << (8 - self._filled)])
        return bytes(self._buffer)


class BitReader:
    """MSB-first reader over a byte string, optionally limited to ``limit`` bits."""

    def __init__(self, data: bytes, start: int = 0, limit: Optional[int] = None):
        self._data = data
        self._position = start
        self._limit = len(data) * 8 if limit is None else min(limit, len(data) * 8)

    @property
    def position(self) -> int:
        return self._position

    @property
    def remaining(self) -> int:
        return self._limit - self._position

    def read_bit(self) -> int:
        if self._position >= self._limit:
            raise CorruptStreamError(f"Unexpected end of stream at bit {self._position}")
        byte = self._data[self._position >> 3]
        bit = (byte >> (7 - (self._position & 7))) & 1
        self._position += 1
        return bit

    def read_bits(self, width: int) -> int:
        if width > self.remaining:
            raise CorruptStreamError(f"Need {width} bits at bit {self._position}, {self.remaining} left")
        value = 0
        for _ in range(width):
            value = (value << 1) | self.read_bit()
        return value

    def read_bytes(self, count: int) -> bytes:
        return bytes(self.read_bits(8) for _ in range(count))


class FrequencyTriple(NamedTuple):
    """Quantized frequencies for (l, s, r); each at least 1."""
    l: int
    s: int
    r: int

    @property
    def total(self) -> int:
        return self.l + self.s + self.r

    def low(self, index: int) -> int:
        return sum(self[:index])

    def high(self, index: int) -> int:
        return sum(self[:index + 1])


@lru_cache(maxsize=65536)
def quantize(probabilities: Sequence[float], total: int = FREQUENCY_TOTAL) -> FrequencyTriple:
    """Integer frequencies summing to ``total``, each >= 1, within 2/total of the input."""
    scale = total - len(probabilities)
    scaled = [max(0.0, p) * scale for p in probabilities]
    frequencies = [int(math.floor(v)) + 1 for v in scaled]
    remainders = [v - math.floor(v) for v in scaled]
    order = sorted(range(len(scaled)), key=lambda i: (-remainders[i], i))

    deficit = total - sum(frequencies)
    step = 0
    while deficit > 0:
        frequencies[order[step % len(order)]] += 1
        deficit -= 1
        step += 1
    while deficit < 0:
        largest = max(range(len(frequencies)), key=lambda i: (frequencies[i], -i))
        frequencies[largest] -= 1
        deficit += 1
    return FrequencyTriple(*frequencies)


FrequencyProvider = Callable[[Sequence[str], int], FrequencyTriple]


class _ArithmeticCoderBase:
    """Shared low/high state for the integer coder."""

    def __init__(self, num_bits: int = CoderPrecision.STATE_BITS):
        self.num_bits = num_bits
        self.full_range = 1 << num_bits
        self.half_range = self.full_range >> 1
        self.quarter_range = self.half_range >> 1
        self.minimum_range = self.quarter_range + 2
        self.state_mask = self.full_range - 1
        self.low = 0
        self.high = self.state_mask

    def _narrow(self, frequencies: FrequencyTriple, index: int) -> None:
        total = frequencies.total
        if total > self.minimum_range:
            raise ValueError(f"Frequency total {total} exceeds coder precision")
        span = self.high - self.low + 1
        self.high = self.low + span * frequencies.high(index) // total - 1
        self.low = self.low + span * frequencies.low(index) // total


class ArithmeticEncoder(_ArithmeticCoderBase):
    """32-bit arithmetic encoder with pending underflow bits."""

    def __init__(self, writer: BitWriter, num_bits: int = CoderPrecision.STATE_BITS):
        super().__init__(num_bits)
        self.writer = writer
        self.underflow = 0

    def write(self, frequencies: FrequencyTriple, index: int) -> None:
        self._narrow(frequencies, index)
        while True:
            if self.high < self.half_range:
                self._emit(0)
            elif self.low >= self.half_range:
                self._emit(1)
                self.low -= self.half_range
                self.high -= self.half_range
            elif self.low >= self.quarter_range and self.high < self.quarter_range * 3:
                self.underflow += 1
                self.low -= self.quarter_range
                self.high -= self.quarter_range
            else:
                break
            self.low = (self.low << 1) & self.state_mask
            self.high = ((self.high << 1) & self.state_mask) | 1

    def _emit(self, bit: int) -> None:
        self.writer.write_bit(bit)
        for _ in range(self.underflow):
            self.writer.write_bit(bit ^ 1)
        self.underflow = 0

    def finish(self) -> None:
        """Terminate with a single 1 bit; the decoder supplies trailing zeros."""
        self._emit(1)


class ArithmeticDecoder(_ArithmeticCoderBase):
    """Mirror of ArithmeticEncoder reading from a bounded BitReader."""

    def __init__(self, reader: BitReader, num_bits: int = CoderPrecision.STATE_BITS):
        super().__init__(num_bits)
        self.reader = reader
        self.implicit_zeros = 0
        self.code = 0
        for _ in range(num_bits):
            self.code = (self.code << 1) | self._next_bit()

    def _next_bit(self) -> int:
        if self.reader.remaining > 0:
            return self.reader.read_bit()
        self.implicit_zeros += 1
        if self.implicit_zeros > self.num_bits:
            raise CorruptStreamError("Arithmetic payload ended prematurely")
        return 0

    def read(self, frequencies: FrequencyTriple) -> int:
        if not self.low <= self.code <= self.high:
            raise CorruptStreamError("Arithmetic decoder state out of range")
        total = frequencies.total
        span = self.high - self.low + 1
        value = ((self.code - self.low + 1) * total - 1) // span
        index = 0
        while index < 2 and frequencies.high(index) <= value:
            index += 1
        self._narrow(frequencies, index)
        while True:
            if self.high < self.half_range:
                pass
            elif self.low >= self.half_range:
                self.low -= self.half_range
                self.high -= self.half_range
                self.code -= self.half_range
            elif self.low >= self.quarter_range and self.high < self.quarter_range * 3:
                self.low -= self.quarter_range
                self.high -= self.quarter_range
                self.code -= self.quarter_range
            else:
                break
            self.low = (self.low << 1) & self.state_mask
            self.high = ((self.high << 1) & self.state_mask) | 1
            self.code = ((self.code << 1) & self.state_mask) | self._next_bit()
        return index


def ac_encode(symbols: Sequence[str], provider: FrequencyProvider, writer: Optional[BitWriter] = None) -> BitWriter:
    """Arithmetic-code ``symbols``; the provider sees only already-coded symbols."""
    writer = writer if writer is not None else BitWriter()
    encoder = ArithmeticEncoder(writer)
    for i, symbol in enumerate(symbols):
        encoder.write(provider(symbols, i), SYMBOLS.index(symbol))
    encoder.finish()
    return writer


def ac_decode(data: Union[BitReader, BitWriter, bytes], count: int, provider: FrequencyProvider) -> str:
    """Decode ``count`` symbols coded by ac_encode with the same provider."""
    if isinstance(data, BitWriter):
        reader = BitReader(data.getvalue(), limit=len(data))
    elif isinstance(data, BitReader):
        reader = data
    else:
        reader = BitReader(bytes(data))
    decoder = ArithmeticDecoder(reader)
    decoded: List[str] = []
    for i in range(count):
        decoded.append(SYMBOLS[decoder.read(provider(decoded, i))])
    return "".join(decoded)


def rice_length(v: int, k: int) -> int:
    return (v >> k) + 1 + k


def rice_encode(v: int, k: int, writer: Optional[BitWriter] = None) -> BitWriter:
    """Quotient in unary (ones then a zero), then the low ``k`` bits."""
    if v < 0 or k < 0:
        raise ValueError(f"Rice coding needs v >= 0 and k >= 0, got v={v}, k={k}")
    writer = writer if writer is not None else BitWriter()
    for _ in range(v >> k):
        writer.write_bit(1)
    writer.write_bit(0)
    writer.write_bits(v & ((1 << k) - 1), k)
    return writer


def rice_decode(reader: BitReader, k: int) -> int:
    quotient = 0
    while reader.read_bit():
        quotient += 1
    return (quotient << k) | reader.read_bits(k)


def rice_cost(values: Iterable[int], k: int) -> int:
    array = np.asarray(list(values), dtype=np.int64)
    return int(np.sum(np.right_shift(array, k)) + array.size * (1 + k))


def best_rice_k(values: Sequence[int], max_value: int) -> int:
    """Exhaustive k in [0, ceil(log2 W)] minimizing total bits; ties go to the smaller k."""
    if len(values) == 0:
        return 0
    array = np.asarray(values, dtype=np.int64)
    costs = [rice_cost(array, k) for k in range(ceil_log2(max_value) + 1)]
    return int(np.argmin(costs))
