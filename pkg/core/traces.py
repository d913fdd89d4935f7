"""
Memory-access trace formats and synthetic trace generation.

Text format (``.trc``), one record per line::

    #!ctrace version=1 records=3 cores=1     (optional header, first line)
    I 0x400100          # instruction fetch, core 0
    R 7fff0040 1        # data read on core 1
    W 0x7fff0040 2

Binary format (``.ctrc``): the 8-byte magic ``CTRC\\x00\\x01\\x00\\x00``
followed by 16-byte little-endian records: kind (0=I, 1=R, 2=W), core,
six reserved zero bytes, 64-bit address.

Both parsers are generators, so memory use does not grow with the trace.
"""
import io
import random
import re
import struct
from collections.abc import Sized
from dataclasses import dataclass
from pathlib import Path

from .cachesim import AccessKind, TraceRecord
from .exceptions import InvalidParameterError, TraceFormatError

MAGIC = b'CTRC\x00\x01\x00\x00'
RECORD = struct.Struct('<BB6sQ')
SUPPORTED_VERSIONS = (1,)
TEXT_SUFFIX = '.trc'
BINARY_SUFFIX = '.ctrc'

_HEX = re.compile(r'(0[xX])?[0-9a-fA-F]+')
_DIGITS = re.compile(r'[0-9]+')
_MAX_ADDRESS = 2 ** 64 - 1
_MAX_CORE = 255
_READ_CHUNK = RECORD.size * 4096


@dataclass
class TraceFileHeader:
    version: int = 1
    records: int | None = None
    cores: int | None = None

    @classmethod
    def from_directive(cls, line):
        """Parse ``#!ctrace version=1 records=N cores=K``."""
        header = cls()
        for token in line[len('#!ctrace'):].split():
            key, sep, value = token.partition('=')
            if not sep or key not in ('version', 'records', 'cores') or not _DIGITS.fullmatch(value):
                raise TraceFormatError(f"bad header field {token!r}", line=1, token=token)
            setattr(header, key, int(value))
        header.check_version()
        return header

    def check_version(self):
        if self.version not in SUPPORTED_VERSIONS:
            raise TraceFormatError(f"unsupported trace version {self.version}")

    def check_count(self, parsed):
        if self.records is not None and self.records != parsed:
            raise TraceFormatError(f"header declares {self.records} records, body has {parsed}")

    def directive(self):
        parts = [f'version={self.version}']
        if self.records is not None:
            parts.append(f'records={self.records}')
        if self.cores is not None:
            parts.append(f'cores={self.cores}')
        return '#!ctrace ' + ' '.join(parts)


class TextTraceParser:
    def __init__(self, source):
        # Whole documents may come in as str/bytes; anything else is read as a stream.
        # Bytes are decoded line by line so a bad sequence reports its line.
        if isinstance(source, (bytes, bytearray)):
            source = io.BytesIO(source)
        if isinstance(source, str):
            source = io.StringIO(source)
        self.source = source
        self.header = TraceFileHeader()

    def __iter__(self):
        return self.records()

    def parse(self):
        return list(self.records())

    def records(self):
        count = 0
        for lineno, raw in enumerate(self.source, start=1):
            line = self._decode(raw, lineno).strip()
            if lineno == 1 and line.startswith('#!ctrace'):
                self.header = TraceFileHeader.from_directive(line)
                continue
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            yield self._parse_record(line, lineno)
            count += 1
        self.header.check_count(count)

    @staticmethod
    def _decode(raw, lineno):
        if isinstance(raw, bytes):
            try:
                return raw.decode('utf-8')
            except UnicodeDecodeError:
                raise TraceFormatError("not valid UTF-8", line=lineno) from None
        return raw

    @staticmethod
    def _parse_record(line, lineno):
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise TraceFormatError("expected '<kind> <hex-address> [core]'", line=lineno, token=line)

        kind_token, address_token = tokens[0], tokens[1]
        if kind_token not in ('I', 'R', 'W'):
            raise TraceFormatError(f"unknown kind {kind_token!r}", line=lineno, token=kind_token)
        if not _HEX.fullmatch(address_token):
            raise TraceFormatError(f"non-hex address {address_token!r}", line=lineno, token=address_token)
        address = int(address_token, 16)
        if address > _MAX_ADDRESS:
            raise TraceFormatError("address wider than 64 bits", line=lineno, token=address_token)

        core = 0
        if len(tokens) == 3:
            if not _DIGITS.fullmatch(tokens[2]):
                raise TraceFormatError(f"bad core index {tokens[2]!r}", line=lineno, token=tokens[2])
            core = int(tokens[2])
        return TraceRecord(AccessKind.from_letter(kind_token), address, core)


class BinaryTraceParser:
    def __init__(self, source, strict=True):
        if isinstance(source, (bytes, bytearray)):
            source = io.BytesIO(source)
        self.source = source
        self.strict = strict
        self.header = TraceFileHeader()

    def __iter__(self):
        return self.records()

    def parse(self):
        return list(self.records())

    def records(self):
        magic = self.source.read(len(MAGIC))
        if magic != MAGIC:
            raise TraceFormatError("bad magic, not a binary trace", offset=0)

        offset = len(MAGIC)
        pending = b''
        while chunk := self.source.read(_READ_CHUNK):
            data = pending + chunk
            usable = len(data) - len(data) % RECORD.size
            for kind, core, reserved, address in RECORD.iter_unpack(data[:usable]):
                yield self._make_record(kind, core, reserved, address, offset)
                offset += RECORD.size
            pending = data[usable:]
        if pending:
            raise TraceFormatError(
                f"truncated record ({len(pending)} of {RECORD.size} bytes)", offset=offset)

    def _make_record(self, kind, core, reserved, address, offset):
        if kind > AccessKind.WRITE:
            raise TraceFormatError(f"unknown kind code {kind}", offset=offset, token=str(kind))
        if self.strict and reserved != b'\x00' * 6:
            raise TraceFormatError("reserved bytes are not zero", offset=offset)
        return TraceRecord(AccessKind(kind), address, core)


def _check_writable(record):
    if not 0 <= record.address <= _MAX_ADDRESS:
        raise TraceFormatError(f"address {record.address:#x} does not fit 64 bits")
    if not 0 <= record.core <= _MAX_CORE:
        raise TraceFormatError(f"core {record.core} does not fit the trace formats")


def write_text_trace(records, stream, header=True):
    """Write records as text; the header declares a count only for sized inputs."""
    if header:
        count = len(records) if isinstance(records, Sized) else None
        cores = max((r.core for r in records), default=0) + 1 if isinstance(records, Sized) else None
        stream.write(TraceFileHeader(records=count, cores=cores).directive() + '\n')
    for record in records:
        _check_writable(record)
        stream.write(f'{record.kind.letter} {record.address:#x} {record.core}\n')


def write_binary_trace(records, stream):
    stream.write(MAGIC)
    reserved = b'\x00' * 6
    for record in records:
        _check_writable(record)
        stream.write(RECORD.pack(record.kind, record.core, reserved, record.address))


def is_binary_trace(path):
    path = Path(path)
    if path.suffix == BINARY_SUFFIX:
        return True
    if path.suffix == TEXT_SUFFIX:
        return False
    with path.open('rb') as handle:
        return handle.read(4) == MAGIC[:4]


def read_trace(path, strict=True):
    """Stream the records of a trace file, text or binary."""
    path = Path(path)
    if is_binary_trace(path):
        with path.open('rb') as handle:
            yield from BinaryTraceParser(handle, strict=strict).records()
    else:
        with path.open('rb') as handle:
            yield from TextTraceParser(handle).records()


def write_trace(records, path):
    path = Path(path)
    if path.suffix == BINARY_SUFFIX:
        with path.open('wb') as handle:
            write_binary_trace(records, handle)
    else:
        with path.open('w', encoding='utf-8', newline='\n') as handle:
            write_text_trace(records, handle)


# Synthetic traces

PATTERNS = ('sequential', 'strided', 'random', 'loop')


@dataclass(frozen=True)
class SyntheticPattern:
    """
    Data-address pattern of a synthetic trace.

    ``stride`` is in lines (strided), ``footprint`` in lines (random), ``size``
    in lines and ``iterations`` in passes (loop).
    """
    kind: str = 'sequential'
    stride: int = 1
    seed: int = 0
    footprint: int = 1024
    size: int = 1
    iterations: int = 1

    def __post_init__(self):
        if self.kind not in PATTERNS:
            raise InvalidParameterError('pattern', self.kind, f'must be one of {", ".join(PATTERNS)}')
        for name in ('stride', 'footprint', 'size', 'iterations'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise InvalidParameterError(f'pattern.{name}', value, 'must be a positive integer')

    @classmethod
    def parse(cls, text, seed=0):
        """``sequential``, ``strided:K``, ``random[:LINES]`` or ``loop:SIZE:ITERATIONS``."""
        kind, *args = text.split(':')
        if not all(_DIGITS.fullmatch(arg) for arg in args):
            raise InvalidParameterError('pattern', text, 'arguments must be unsigned integers')
        numbers = [int(arg) for arg in args]
        expected = {'sequential': (0,), 'strided': (1,), 'random': (0, 1), 'loop': (2,)}
        if kind not in expected:
            raise InvalidParameterError('pattern', text, f'must be one of {", ".join(PATTERNS)}')
        if len(numbers) not in expected[kind]:
            raise InvalidParameterError('pattern', text, 'wrong number of arguments')
        if kind == 'strided':
            return cls(kind, stride=numbers[0], seed=seed)
        if kind == 'random':
            return cls(kind, seed=seed, footprint=numbers[0] if numbers else 1024)
        if kind == 'loop':
            return cls(kind, seed=seed, size=numbers[0], iterations=numbers[1])
        return cls(kind, seed=seed)


def generate_synthetic(pattern, length, core_count=1, *, line_size=64, ifetch_per_data=3,
                       write_every=4, data_base=0, code_base=0x400000, code_window=4096):
    """
    Yield a deterministic synthetic trace.

    ``length`` counts data records. Each data record is preceded by
    ``ifetch_per_data`` fetches from its core's program counter, which steps by
    4 bytes and wraps inside ``code_window`` bytes at ``code_base``. Every
    ``write_every``-th data record is a write (0 disables writes) and data
    record ``j`` belongs to core ``j % core_count``. Loop patterns stop after
    their iterations. Random addresses come from ``random.Random(seed)``
    (MT19937), which is stable across platforms.
    """
    if isinstance(pattern, str):
        pattern = SyntheticPattern.parse(pattern)
    for name, value, minimum in (('length', length, 0), ('core_count', core_count, 1),
                                 ('ifetch_per_data', ifetch_per_data, 0),
                                 ('write_every', write_every, 0), ('line_size', line_size, 1),
                                 ('code_window', code_window, 4)):
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            raise InvalidParameterError(name, value, f'must be an integer >= {minimum}')

    if pattern.kind == 'loop':
        length = min(length, pattern.size * pattern.iterations)
    rng = random.Random(pattern.seed)
    pcs = [0] * core_count

    for j in range(length):
        core = j % core_count
        for _ in range(ifetch_per_data):
            yield TraceRecord(AccessKind.IFETCH, code_base + pcs[core] % code_window, core)
            pcs[core] += 4

        if pattern.kind == 'sequential':
            line = j
        elif pattern.kind == 'strided':
            line = j * pattern.stride
        elif pattern.kind == 'random':
            line = rng.randrange(pattern.footprint)
        else:
            line = j % pattern.size
        kind = AccessKind.WRITE if write_every and j % write_every == write_every - 1 else AccessKind.READ
        yield TraceRecord(kind, data_base + line * line_size, core)
