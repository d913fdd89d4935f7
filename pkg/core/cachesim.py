"""
Trace-driven simulation of a multicore two-level cache hierarchy.

Each core owns a private L1 instruction cache and L1 data cache; all cores
share one L2. Replacement is exact LRU per set, the hierarchy is
non-inclusive and there is no coherence between the private L1s. The
simulator's only job is to produce the transaction counts the analytical
models consume (see ``derive_counts``).
"""
import logging
from collections import OrderedDict, deque
from dataclasses import dataclass, asdict, fields
from enum import IntEnum
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()

from .exceptions import ConsistencyError, InvalidParameterError, TraceError
from .params import AccessCounts, COUNT_FIELDS

logger = logging.getLogger(__name__)


class AccessKind(IntEnum):
    IFETCH = 0
    READ = 1
    WRITE = 2

    @property
    def letter(self):
        return 'IRW'[self]

    @classmethod
    def from_letter(cls, letter):
        return cls('IRW'.index(letter))


class WritePolicy(StrEnum):
    WRITE_BACK_ALLOCATE = 'write-back-allocate'
    WRITE_THROUGH_NO_ALLOCATE = 'write-through-no-allocate'


class InterleavePolicy(StrEnum):
    ROUND_ROBIN = 'round-robin'
    TIMESTAMP = 'timestamp'


def _is_power_of_two(value):
    return isinstance(value, int) and not isinstance(value, bool) and value > 0 and value & (value - 1) == 0


@dataclass(frozen=True)
class CacheConfig:
    """
    Geometry and write policy of one cache.

    ``associativity`` is the number of ways; 1 is direct-mapped and 0 means
    fully associative (one set holding every line).
    """
    size: int
    line_size: int
    associativity: int
    write_policy: WritePolicy = WritePolicy.WRITE_BACK_ALLOCATE

    def __post_init__(self):
        if not _is_power_of_two(self.size):
            raise InvalidParameterError('size', self.size, 'must be a power of two')
        if not _is_power_of_two(self.line_size):
            raise InvalidParameterError('line_size', self.line_size, 'must be a power of two')
        if self.line_size > self.size:
            raise InvalidParameterError('line_size', self.line_size, f'must not exceed size ({self.size})')
        if isinstance(self.associativity, bool) or not isinstance(self.associativity, int) \
                or self.associativity < 0:
            raise InvalidParameterError('associativity', self.associativity, 'must be an integer >= 0')
        if self.associativity and self.size % (self.line_size * self.associativity):
            raise InvalidParameterError(
                'associativity', self.associativity,
                'size / (line_size * associativity) must be a whole number of sets')
        if self.associativity > self.num_lines:
            raise InvalidParameterError('associativity', self.associativity, 'more ways than lines')
        try:
            object.__setattr__(self, 'write_policy', WritePolicy(self.write_policy))
        except ValueError:
            raise InvalidParameterError('write_policy', self.write_policy, 'unknown write policy') from None

    @property
    def num_lines(self):
        return self.size // self.line_size

    @property
    def ways(self):
        return self.associativity or self.num_lines

    @property
    def num_sets(self):
        return self.num_lines // self.ways


@dataclass(frozen=True)
class HierarchyConfig:
    core_count: int
    l1i: CacheConfig
    l1d: CacheConfig
    l2: CacheConfig
    interleave: InterleavePolicy = InterleavePolicy.ROUND_ROBIN

    def __post_init__(self):
        if isinstance(self.core_count, bool) or not isinstance(self.core_count, int) or self.core_count < 1:
            raise InvalidParameterError('core_count', self.core_count, 'must be an integer >= 1')
        for name in ('l1i', 'l1d'):
            l1 = getattr(self, name)
            if self.l2.line_size < l1.line_size:
                raise InvalidParameterError(
                    'l2.line_size', self.l2.line_size, f'must be >= {name}.line_size ({l1.line_size})')
        try:
            object.__setattr__(self, 'interleave', InterleavePolicy(self.interleave))
        except ValueError:
            raise InvalidParameterError('interleave', self.interleave, 'unknown interleave policy') from None


@dataclass(frozen=True, slots=True)
class TraceRecord:
    kind: AccessKind
    address: int
    core: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'kind', AccessKind(self.kind))


@dataclass(frozen=True)
class CycleCosts:
    """
    Cycle-cost table used to accumulate ``total_cycles``.

    Every record costs ``base`` cycles, plus the hit latency of each level its
    demand path traverses, plus the miss penalty of each demand miss. Victim
    writebacks are off the demand path and cost nothing.
    """
    base: int = 1
    l1_hit: int = 0
    l2_hit: int = 0
    ic_read_miss: int = 10
    dc_read_miss: int = 10
    dc_write_miss: int = 10
    l2_read_miss: int = 100
    l2_write_miss: int = 100

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise InvalidParameterError(f'costs.{f.name}', value, 'must be a whole number of cycles >= 0')

    @classmethod
    def from_processor(cls, proc, base=1, l1_hit=0, l2_hit=0):
        penalties = {
            'ic_read_miss': proc.ic_read_miss_penalty,
            'dc_read_miss': proc.dc_read_miss_penalty,
            'dc_write_miss': proc.dc_write_miss_penalty,
            'l2_read_miss': proc.l2_read_miss_penalty,
            'l2_write_miss': proc.l2_write_miss_penalty,
        }
        for name, value in penalties.items():
            if float(value) != int(value):
                raise InvalidParameterError(f'penalties.{name}', value, 'must be whole cycles to simulate')
        return cls(base=base, l1_hit=l1_hit, l2_hit=l2_hit,
                   **{name: int(value) for name, value in penalties.items()})


@dataclass(frozen=True)
class EvictedLine:
    address: int
    dirty: bool


@dataclass(frozen=True)
class AccessResult:
    hit: bool
    allocated: bool = False
    evicted: EvictedLine | None = None


@dataclass
class CacheStats:
    reads: int = 0
    writes: int = 0
    read_hits: int = 0
    read_misses: int = 0
    write_hits: int = 0
    write_misses: int = 0
    fills: int = 0
    write_fills: int = 0
    evictions: int = 0
    writebacks: int = 0

    @property
    def lookups(self):
        return self.reads + self.writes

    @property
    def hits(self):
        return self.read_hits + self.write_hits

    @property
    def misses(self):
        return self.read_misses + self.write_misses

    def as_dict(self):
        data = asdict(self)
        data.update(lookups=self.lookups, hits=self.hits, misses=self.misses)
        return data


class Cache:
    """One set-associative LRU cache. Not thread-safe."""

    def __init__(self, config, name='cache'):
        self.config = config
        self.name = name
        self.stats = CacheStats()
        self._line_shift = config.line_size.bit_length() - 1
        self._num_sets = config.num_sets
        self._ways = config.ways
        self._write_back = config.write_policy is WritePolicy.WRITE_BACK_ALLOCATE
        # Per set: tag -> dirty, least recently used first.
        self._sets = [OrderedDict() for _ in range(self._num_sets)]

    def _locate(self, address):
        line = address >> self._line_shift
        return line % self._num_sets, line // self._num_sets

    def contains(self, address):
        index, tag = self._locate(address)
        return tag in self._sets[index]

    def access(self, address, kind):
        write = kind is AccessKind.WRITE
        index, tag = self._locate(address)
        lines = self._sets[index]
        stats = self.stats
        if write:
            stats.writes += 1
        else:
            stats.reads += 1

        if tag in lines:
            lines.move_to_end(tag)
            if write:
                stats.write_hits += 1
                if self._write_back:
                    lines[tag] = True
            else:
                stats.read_hits += 1
            return AccessResult(hit=True)

        if write:
            stats.write_misses += 1
            if not self._write_back:
                return AccessResult(hit=False)
        else:
            stats.read_misses += 1

        evicted = None
        if len(lines) >= self._ways:
            victim_tag, dirty = lines.popitem(last=False)
            stats.evictions += 1
            if dirty:
                stats.writebacks += 1
            victim_line = victim_tag * self._num_sets + index
            evicted = EvictedLine(address=victim_line << self._line_shift, dirty=dirty)
        lines[tag] = write and self._write_back
        stats.fills += 1
        if write:
            stats.write_fills += 1
        return AccessResult(hit=False, allocated=True, evicted=evicted)


@dataclass
class CoreTally:
    """Mutable per-core counters, one field per ``AccessCounts`` count."""
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

    def as_dict(self):
        return asdict(self)


@dataclass
class SimResult:
    per_core: list
    aggregate: CoreTally
    caches: dict
    records: int = 0

    def as_dict(self):
        return {
            'records': self.records,
            'aggregate': self.aggregate.as_dict(),
            'per_core': [tally.as_dict() for tally in self.per_core],
            'caches': {name: stats.as_dict() for name, stats in self.caches.items()},
        }


class HierarchySimulator:
    """Replays records through private L1 caches and the shared L2."""

    def __init__(self, config, costs=None):
        self.config = config
        self.costs = costs or CycleCosts()
        self.l1i = [Cache(config.l1i, f'l1i[{core}]') for core in range(config.core_count)]
        self.l1d = [Cache(config.l1d, f'l1d[{core}]') for core in range(config.core_count)]
        self.l2 = Cache(config.l2, 'l2')
        self.tallies = [CoreTally() for _ in range(config.core_count)]
        self.records = 0
        self._l1d_write_back = config.l1d.write_policy is WritePolicy.WRITE_BACK_ALLOCATE
        self._l2_write_back = config.l2.write_policy is WritePolicy.WRITE_BACK_ALLOCATE

    def step(self, record, index=None):
        core = record.core
        if not 0 <= core < self.config.core_count:
            raise TraceError(self.records if index is None else index,
                             f"core {core} out of range for {self.config.core_count} core(s)")
        tally = self.tallies[core]
        costs = self.costs
        cycles = costs.base + costs.l1_hit
        kind = record.kind

        if kind is AccessKind.IFETCH:
            tally.instruction_count += 1
            tally.ic_reads += 1
            if not self.l1i[core].access(record.address, kind).hit:
                tally.ic_read_misses += 1
                tally.l2_ifetches += 1
                cycles += costs.ic_read_miss + self._l2_read(tally, record.address, code=True)
        elif kind is AccessKind.READ:
            tally.dc_reads += 1
            result = self.l1d[core].access(record.address, kind)
            if not result.hit:
                tally.dc_read_misses += 1
                tally.l2_data_reads += 1
                cycles += costs.dc_read_miss + self._l2_read(tally, record.address, code=False)
                self._write_back_victim(tally, result.evicted)
        else:
            tally.dc_writes += 1
            result = self.l1d[core].access(record.address, kind)
            if not result.hit:
                tally.dc_write_misses += 1
                cycles += costs.dc_write_miss
            if self._l1d_write_back:
                if result.allocated:
                    tally.l2_data_reads += 1
                    cycles += self._l2_read(tally, record.address, code=False)
                    self._write_back_victim(tally, result.evicted)
            else:
                tally.l2_data_writes += 1
                cycles += self._l2_write(tally, record.address, demand=True)

        tally.total_cycles += cycles
        self.records += 1

    def _l2_read(self, tally, address, code):
        cycles = self.costs.l2_hit
        result = self.l2.access(address, AccessKind.READ)
        if not result.hit:
            tally.l2_read_misses += 1
            cycles += self.costs.l2_read_miss
            if code:
                tally.rom_reads += 1
            else:
                tally.ram_reads += 1
            self._evict_from_l2(tally, result.evicted)
        return cycles

    def _l2_write(self, tally, address, demand):
        cycles = self.costs.l2_hit if demand else 0
        result = self.l2.access(address, AccessKind.WRITE)
        if not result.hit:
            tally.l2_write_misses += 1
            if demand:
                cycles += self.costs.l2_write_miss
        if self._l2_write_back:
            self._evict_from_l2(tally, result.evicted)
        else:
            tally.ram_writes += 1
        return cycles

    def _write_back_victim(self, tally, evicted):
        if evicted is not None and evicted.dirty:
            tally.l2_data_writes += 1
            self._l2_write(tally, evicted.address, demand=False)

    @staticmethod
    def _evict_from_l2(tally, evicted):
        if evicted is not None and evicted.dirty:
            tally.ram_writes += 1

    def result(self):
        aggregate = CoreTally()
        for tally in self.tallies:
            for name in COUNT_FIELDS:
                setattr(aggregate, name, getattr(aggregate, name) + getattr(tally, name))
        caches = {}
        for core in range(self.config.core_count):
            caches[self.l1i[core].name] = self.l1i[core].stats
            caches[self.l1d[core].name] = self.l1d[core].stats
        caches[self.l2.name] = self.l2.stats
        logger.debug("simulated %d records on %d core(s): l2 %d/%d misses",
                     self.records, self.config.core_count, self.l2.stats.misses, self.l2.stats.lookups)
        return SimResult(per_core=list(self.tallies), aggregate=aggregate, caches=caches,
                         records=self.records)


def interleave(trace, core_count, policy=InterleavePolicy.ROUND_ROBIN):
    """
    Yield ``(index, record)`` in replay order.

    ``timestamp`` replays records in trace order. ``round-robin`` takes one
    record per core per turn (cores 0..n-1), skipping cores whose stream is
    exhausted; it buffers the trace to split it into per-core streams.
    """
    if InterleavePolicy(policy) is InterleavePolicy.TIMESTAMP:
        for index, record in enumerate(trace):
            if not 0 <= record.core < core_count:
                raise TraceError(index, f"core {record.core} out of range for {core_count} core(s)")
            yield index, record
        return

    streams = [deque() for _ in range(core_count)]
    for index, record in enumerate(trace):
        if not 0 <= record.core < core_count:
            raise TraceError(index, f"core {record.core} out of range for {core_count} core(s)")
        streams[record.core].append((index, record))
    while any(streams):
        for stream in streams:
            if stream:
                yield stream.popleft()


def simulate(trace, config, costs=None):
    simulator = HierarchySimulator(config, costs)
    for index, record in interleave(trace, config.core_count, config.interleave):
        simulator.step(record, index)
    return simulator.result()


def derive_counts(result, idle_time=0.0, cpi_override=None, core=None):
    """
    Build model inputs from simulator tallies.

    ``core`` selects one core's counts instead of the aggregate. Tallies that
    break an ``AccessCounts`` invariant mean the simulator is wrong, so they
    raise ``ConsistencyError`` rather than a validation error.
    """
    tally = result.aggregate if core is None else result.per_core[core]
    for name, stats in result.caches.items():
        if stats.hits + stats.misses != stats.lookups:
            raise ConsistencyError(f"{name}: hits + misses != lookups")
    try:
        counts = AccessCounts(**tally.as_dict(), idle_time=idle_time)
    except InvalidParameterError as exc:
        if exc.field == 'idle_time':
            raise
        raise ConsistencyError(f"simulator produced invalid counts: {exc.message}") from exc
    if counts.instruction_count == 0 and counts.total_cycles and cpi_override is None:
        logger.warning("trace has no instruction fetches; a CPI override is required to evaluate it")
    return counts
