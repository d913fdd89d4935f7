"""
Analytical energy and throughput models of a two-level cache hierarchy.

Every function here is pure: it reads counts and parameters and returns
immutable breakdowns, so evaluations can run from any thread.

Energy::

    E_total = (E_ic + E_dc + E_l2c + E_misc + E_leak) / CPI

Time::

    T_total = t_ic + t_dc + t_l2c + t_ins
"""
import logging
import math
from dataclasses import dataclass, asdict
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

from .exceptions import InvalidParameterError, MissingCPIError, InconsistentCountsError
from .params import AccessCounts, CacheTechParams, MemoryTechParams, ProcessorParams

logger = logging.getLogger(__name__)


class L2MissConvention(StrEnum):
    # Penalties charged on every L2 read/write transaction, as the printed model does.
    ALL_TRANSACTIONS = 'all-transactions'
    # Penalties charged on L2 misses only.
    MISSES_ONLY = 'misses-only'


@dataclass(frozen=True)
class ICacheTerms:
    read: float
    miss_penalty: float
    total: float


@dataclass(frozen=True)
class DCacheTerms:
    read: float
    write: float
    miss_penalty: float
    total: float


@dataclass(frozen=True)
class L2Terms:
    read: float
    write: float
    miss_penalty: float
    ram: float
    rom: float
    total: float


@dataclass(frozen=True)
class EnergyReport:
    ic: ICacheTerms
    dc: DCacheTerms
    l2: L2Terms
    misc: float
    leak: float
    cpi: float
    total: float

    @property
    def sum(self):
        """The undivided energy, before the CPI division of ``total``."""
        return self.ic.total + self.dc.total + self.l2.total + self.misc + self.leak

    def as_dict(self):
        data = asdict(self)
        data['sum'] = self.sum
        return data


@dataclass(frozen=True)
class TimingReport:
    ic: ICacheTerms
    dc: DCacheTerms
    l2: L2Terms
    ins: float
    total: float

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ModelOptions:
    cpi_override: float | None = None
    misc_energy: float = 0.0
    estimate_misc: bool = False
    l2_convention: L2MissConvention = L2MissConvention.ALL_TRANSACTIONS

    def __post_init__(self):
        if self.cpi_override is not None:
            _require_positive('cpi', self.cpi_override)
        if not math.isfinite(self.misc_energy) or self.misc_energy < 0:
            raise InvalidParameterError('misc_energy', self.misc_energy, 'must be finite and >= 0')
        object.__setattr__(self, 'l2_convention', L2MissConvention(self.l2_convention))


@dataclass(frozen=True)
class Evaluation:
    energy: EnergyReport
    timing: TimingReport
    cpi_source: str = 'computed'
    instruction_count: int = 0

    @property
    def throughput(self):
        """Instructions per second over the modelled execution time."""
        if self.timing.total <= 0:
            return 0.0
        return self.instruction_count / self.timing.total


def _require(value, cls, name):
    if not isinstance(value, cls):
        raise InvalidParameterError(name, value, f'must be a {cls.__name__}')


def _require_positive(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or not math.isfinite(value) or value <= 0:
        raise InvalidParameterError(name, value, 'must be finite and > 0')


def _check_inputs(counts, proc, *techs):
    _require(counts, AccessCounts, 'counts')
    _require(proc, ProcessorParams, 'processor')
    for tech in techs:
        _require(tech, CacheTechParams, 'tech')


def _l2_penalty_cycles(counts, proc, convention):
    if L2MissConvention(convention) is L2MissConvention.MISSES_ONLY:
        reads, writes = counts.l2_read_misses, counts.l2_write_misses
    else:
        reads = counts.l2_ifetches + counts.l2_data_reads
        writes = counts.l2_data_writes
    return proc.l2_read_miss_penalty * reads + proc.l2_write_miss_penalty * writes


# Energy

def icache_energy(counts, tech, proc):
    _check_inputs(counts, proc, tech)
    read = tech.read_cycle_energy * counts.ic_reads
    miss_penalty = proc.cycle_energy * proc.ic_read_miss_penalty * counts.ic_read_misses
    return ICacheTerms(read=read, miss_penalty=miss_penalty, total=read + miss_penalty)


def dcache_energy(counts, tech, proc):
    _check_inputs(counts, proc, tech)
    read = tech.read_cycle_energy * counts.dc_reads
    write = tech.write_cycle_energy * counts.dc_writes
    miss_penalty = proc.cycle_energy * (
        proc.dc_read_miss_penalty * counts.dc_read_misses
        + proc.dc_write_miss_penalty * counts.dc_write_misses
    )
    return DCacheTerms(read=read, write=write, miss_penalty=miss_penalty,
                       total=read + write + miss_penalty)


def l2_energy(counts, tech_l2, mem, proc, convention=L2MissConvention.ALL_TRANSACTIONS):
    _check_inputs(counts, proc, tech_l2)
    _require(mem, MemoryTechParams, 'memory')
    read = tech_l2.read_cycle_energy * (counts.l2_ifetches + counts.l2_data_reads)
    write = tech_l2.write_cycle_energy * counts.l2_data_writes
    miss_penalty = proc.cycle_energy * _l2_penalty_cycles(counts, proc, convention)
    ram = mem.ram_read_energy * counts.ram_reads + mem.ram_write_energy * counts.ram_writes
    rom = mem.rom_read_energy * counts.rom_reads
    return L2Terms(read=read, write=write, miss_penalty=miss_penalty, ram=ram, rom=rom,
                   total=read + write + miss_penalty + ram + rom)


def leakage_energy(proc, counts):
    _check_inputs(counts, proc)
    return proc.leak_power * counts.idle_time


def compute_cpi(counts):
    _require(counts, AccessCounts, 'counts')
    if counts.instruction_count == 0:
        raise MissingCPIError()
    return counts.total_cycles / counts.instruction_count


def resolve_cpi(counts, override=None):
    """
    CPI and where it came from: ``override``, ``computed`` or ``default``.

    A run that executed nothing (no instruction, no cycle) falls back to a unit
    CPI so that its report is all zeros instead of an error.
    """
    if override is not None:
        _require_positive('cpi', override)
        return float(override), 'override'
    if counts.instruction_count == 0 and counts.total_cycles == 0:
        logger.info("no instructions executed; using CPI = 1")
        return 1.0, 'default'
    cpi = compute_cpi(counts)
    if cpi <= 0:
        raise MissingCPIError("computed CPI is 0 (total_cycles = 0); supply a CPI override")
    return cpi, 'computed'


def estimate_misc_energy(counts, proc):
    """
    Approximate energy of the instructions that touch no data memory.

    Charges ``cycle_energy`` for every cycle not attributed to data accesses,
    where a data access costs one cycle plus its L1D miss-penalty cycles.
    """
    _check_inputs(counts, proc)
    memory_cycles = (
        counts.dc_reads + counts.dc_writes
        + proc.dc_read_miss_penalty * counts.dc_read_misses
        + proc.dc_write_miss_penalty * counts.dc_write_misses
    )
    return proc.cycle_energy * max(0, counts.total_cycles - memory_cycles)


def total_energy(ic, dc, l2, misc, leak, cpi):
    _require_positive('cpi', cpi)
    for name, value in (('misc', misc), ('leak', leak)):
        if not math.isfinite(value) or value < 0:
            raise InvalidParameterError(name, value, 'must be finite and >= 0')
    total = (ic.total + dc.total + l2.total + misc + leak) / cpi
    return EnergyReport(ic=ic, dc=dc, l2=l2, misc=misc, leak=leak, cpi=cpi, total=total)


# Time

def icache_time(counts, tech, proc):
    _check_inputs(counts, proc, tech)
    read = tech.read_cycle_time * counts.ic_reads
    miss_penalty = proc.cycle_time * proc.ic_read_miss_penalty * counts.ic_read_misses
    return ICacheTerms(read=read, miss_penalty=miss_penalty, total=read + miss_penalty)


def dcache_time(counts, tech, proc):
    _check_inputs(counts, proc, tech)
    read = tech.read_cycle_time * counts.dc_reads
    write = tech.write_cycle_time * counts.dc_writes
    miss_penalty = proc.cycle_time * (
        proc.dc_read_miss_penalty * counts.dc_read_misses
        + proc.dc_write_miss_penalty * counts.dc_write_misses
    )
    return DCacheTerms(read=read, write=write, miss_penalty=miss_penalty,
                       total=read + write + miss_penalty)


def l2_time(counts, tech_l2, mem, proc, convention=L2MissConvention.ALL_TRANSACTIONS):
    _check_inputs(counts, proc, tech_l2)
    _require(mem, MemoryTechParams, 'memory')
    read = tech_l2.read_cycle_time * (counts.l2_ifetches + counts.l2_data_reads)
    write = tech_l2.write_cycle_time * counts.l2_data_writes
    miss_penalty = proc.cycle_time * _l2_penalty_cycles(counts, proc, convention)
    ram = mem.ram_read_time * counts.ram_reads + mem.ram_write_time * counts.ram_writes
    rom = mem.rom_read_time * counts.rom_reads
    return L2Terms(read=read, write=write, miss_penalty=miss_penalty, ram=ram, rom=rom,
                   total=read + write + miss_penalty + ram + rom)


def ins_time(counts, proc, ic_read_time):
    _check_inputs(counts, proc)
    result = proc.cycle_time * counts.total_cycles - ic_read_time
    if result < 0:
        raise InconsistentCountsError(
            f"t_cycle * total_cycles ({proc.cycle_time * counts.total_cycles!r} s) is smaller "
            f"than the instruction-cache read time ({ic_read_time!r} s); total_cycles is too small",
            total_cycles=counts.total_cycles,
        )
    return result


def total_time(ic, dc, l2, ins):
    for name, value in (('ic', ic.total), ('dc', dc.total), ('l2', l2.total), ('ins', ins)):
        if not math.isfinite(value) or value < 0:
            raise InvalidParameterError(name, value, 'must be finite and >= 0')
    return TimingReport(ic=ic, dc=dc, l2=l2, ins=ins, total=ic.total + dc.total + l2.total + ins)


def evaluate(counts, *, processor, l1i, l1d, l2, memory, options=None, cpi=None):
    """
    Run both models over one set of counts.

    ``cpi`` pins the divisor (used for per-core reports, which share the
    aggregate CPI); otherwise it is resolved from ``options.cpi_override`` or
    the counts.
    """
    options = options or ModelOptions()
    if cpi is None:
        cpi, cpi_source = resolve_cpi(counts, options.cpi_override)
    else:
        _require_positive('cpi', cpi)
        cpi_source = 'shared'

    misc = options.misc_energy
    if options.estimate_misc:
        misc = estimate_misc_energy(counts, processor)

    e_ic = icache_energy(counts, l1i, processor)
    e_dc = dcache_energy(counts, l1d, processor)
    e_l2 = l2_energy(counts, l2, memory, processor, options.l2_convention)
    energy = total_energy(e_ic, e_dc, e_l2, misc, leakage_energy(processor, counts), cpi)

    t_ic = icache_time(counts, l1i, processor)
    t_dc = dcache_time(counts, l1d, processor)
    t_l2 = l2_time(counts, l2, memory, processor, options.l2_convention)
    timing = total_time(t_ic, t_dc, t_l2, ins_time(counts, processor, t_ic.read))

    return Evaluation(energy=energy, timing=timing, cpi_source=cpi_source,
                      instruction_count=counts.instruction_count)
