"""
Inputs of the analytical energy and throughput models.

All quantities are SI (joules, seconds, watts); the config layer converts the
nJ/ns/MHz values of parameter files exactly once, at load.
"""
import math
from dataclasses import dataclass, fields, asdict

from .exceptions import InvalidParameterError

# Counts are 64-bit unsigned on the wire.
MAX_COUNT = 2 ** 64 - 1


def _check_non_negative(obj, names, prefix=''):
    for name in names:
        value = getattr(obj, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidParameterError(prefix + name, value, 'must be a number')
        if not math.isfinite(value) or value < 0:
            raise InvalidParameterError(prefix + name, value, 'must be finite and >= 0')


@dataclass(frozen=True)
class CacheTechParams:
    """Per-access energy and time of one cache level."""
    read_cycle_energy: float
    write_cycle_energy: float
    read_cycle_time: float
    write_cycle_time: float

    def __post_init__(self):
        _check_non_negative(self, [f.name for f in fields(self)])


@dataclass(frozen=True)
class MemoryTechParams:
    """Per-access energy and time of the data (RAM) and code (ROM) memories."""
    ram_read_energy: float = 0.0
    ram_write_energy: float = 0.0
    rom_read_energy: float = 0.0
    ram_read_time: float = 0.0
    ram_write_time: float = 0.0
    rom_read_time: float = 0.0

    def __post_init__(self):
        _check_non_negative(self, [f.name for f in fields(self)])


@dataclass(frozen=True)
class ProcessorParams:
    cycle_energy: float
    cycle_time: float
    leak_power: float = 0.0
    ic_read_miss_penalty: float = 0
    dc_read_miss_penalty: float = 0
    dc_write_miss_penalty: float = 0
    l2_read_miss_penalty: float = 0
    l2_write_miss_penalty: float = 0
    core_count: int = 1

    def __post_init__(self):
        _check_non_negative(self, [
            'cycle_energy', 'leak_power',
            'ic_read_miss_penalty', 'dc_read_miss_penalty', 'dc_write_miss_penalty',
            'l2_read_miss_penalty', 'l2_write_miss_penalty',
        ])
        _check_non_negative(self, ['cycle_time'])
        if self.cycle_time <= 0:
            raise InvalidParameterError('cycle_time', self.cycle_time, 'must be > 0')
        if isinstance(self.core_count, bool) or not isinstance(self.core_count, int) or self.core_count < 1:
            raise InvalidParameterError('core_count', self.core_count, 'must be an integer >= 1')


COUNT_FIELDS = (
    'ic_reads', 'ic_read_misses',
    'dc_reads', 'dc_writes', 'dc_read_misses', 'dc_write_misses',
    'l2_ifetches', 'l2_data_reads', 'l2_data_writes',
    'l2_read_misses', 'l2_write_misses',
    'ram_reads', 'ram_writes', 'rom_reads',
    'total_cycles', 'instruction_count',
)


@dataclass(frozen=True)
class AccessCounts:
    """
    Per-application transaction tallies feeding the models.

    Miss fields are miss counts, not rates: every term of the models scales
    with the length of the application.
    """
    ic_reads: int = 0
    ic_read_misses: int = 0
    dc_reads: int = 0
    dc_writes: int = 0
    dc_read_misses: int = 0
    dc_write_misses: int = 0
    l2_ifetches: int = 0
    l2_data_reads: int = 0
    l2_data_writes: int = 0
    l2_read_misses: int = 0
    l2_write_misses: int = 0
    ram_reads: int = 0
    ram_writes: int = 0
    rom_reads: int = 0
    total_cycles: int = 0
    instruction_count: int = 0
    idle_time: float = 0.0

    def __post_init__(self):
        for name in COUNT_FIELDS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidParameterError(name, value, 'must be an integer count')
            if not 0 <= value <= MAX_COUNT:
                raise InvalidParameterError(name, value, 'must be within 0 .. 2**64-1')
        _check_non_negative(self, ['idle_time'])

        bounds = (
            ('ic_read_misses', self.ic_read_misses, 'ic_reads', self.ic_reads),
            ('dc_read_misses', self.dc_read_misses, 'dc_reads', self.dc_reads),
            ('dc_write_misses', self.dc_write_misses, 'dc_writes', self.dc_writes),
            ('l2_read_misses', self.l2_read_misses,
             'l2_ifetches + l2_data_reads', self.l2_ifetches + self.l2_data_reads),
            ('l2_write_misses', self.l2_write_misses, 'l2_data_writes', self.l2_data_writes),
        )
        for name, value, bound_name, bound in bounds:
            if value > bound:
                raise InvalidParameterError(name, value, f'must not exceed {bound_name} ({bound})')

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(COUNT_FIELDS) - {'idle_time'}
        if unknown:
            raise InvalidParameterError(sorted(unknown)[0], data[sorted(unknown)[0]], 'unknown count field')
        return cls(**data)

    def as_dict(self):
        return asdict(self)

    def __add__(self, other):
        if not isinstance(other, AccessCounts):
            return NotImplemented
        merged = {name: getattr(self, name) + getattr(other, name) for name in COUNT_FIELDS}
        return AccessCounts(**merged, idle_time=self.idle_time + other.idle_time)

    def scaled(self, factor):
        """Every count (and the idle time) multiplied by an integer factor."""
        merged = {name: getattr(self, name) * factor for name in COUNT_FIELDS}
        return AccessCounts(**merged, idle_time=self.idle_time * factor)
