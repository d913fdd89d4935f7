import json
import random
from decimal import Decimal
from pathlib import Path

from django.test import SimpleTestCase

from core import config
from core.analytical import (
    L2MissConvention, ModelOptions, compute_cpi, dcache_energy, dcache_time, estimate_misc_energy,
    evaluate, icache_energy, icache_time, ins_time, l2_energy, l2_time, leakage_energy,
    resolve_cpi, total_energy, total_time,
)
from core.exceptions import InconsistentCountsError, InvalidParameterError, MissingCPIError
from core.params import AccessCounts, CacheTechParams, MemoryTechParams, ProcessorParams

from . import oracle

DATA = Path(__file__).resolve().parent / 'data'

L1 = CacheTechParams(read_cycle_energy=0.049e-9, write_cycle_energy=0.0081e-9,
                     read_cycle_time=0.32e-9, write_cycle_time=0.32e-9)
L2 = CacheTechParams(read_cycle_energy=0.064e-9, write_cycle_energy=0.0137e-9,
                     read_cycle_time=0.40e-9, write_cycle_time=0.40e-9)
PROC = ProcessorParams(cycle_energy=40e-9, cycle_time=0.5e-9, ic_read_miss_penalty=10,
                       dc_read_miss_penalty=10, dc_write_miss_penalty=12,
                       l2_read_miss_penalty=100, l2_write_miss_penalty=100)
NO_MEMORY = MemoryTechParams()


def close(actual, expected, rel=1e-12):
    expected = float(expected)
    if expected == 0:
        return actual == 0
    return abs(actual - expected) <= rel * abs(expected)


class CloseMixin:
    def assertClose(self, actual, expected, rel=1e-12, msg=None):
        self.assertTrue(close(actual, expected, rel), msg or f'{actual!r} != {expected!r} (rel {rel})')


class EquationExampleTest(CloseMixin, SimpleTestCase):
    def test_icache_energy(self):
        counts = AccessCounts(ic_reads=1_000_000, ic_read_misses=20_000)
        ic = icache_energy(counts, L1, PROC)
        self.assertClose(ic.read, 49e-6)
        self.assertClose(ic.miss_penalty, 8e-3)
        self.assertClose(ic.total, 8.049e-3)

    def test_icache_energy_without_misses_is_pure_hit_energy(self):
        ic = icache_energy(AccessCounts(ic_reads=12345), L1, PROC)
        self.assertEqual(ic.miss_penalty, 0)
        self.assertEqual(ic.total, L1.read_cycle_energy * 12345)

    def test_dcache_energy(self):
        counts = AccessCounts(dc_reads=500_000, dc_writes=200_000, dc_read_misses=5_000, dc_write_misses=2_000)
        dc = dcache_energy(counts, L1, PROC)
        self.assertClose(dc.read, 24.5e-6)
        self.assertClose(dc.write, 1.62e-6)
        self.assertClose(dc.miss_penalty, 2.96e-3)

    def test_dcache_energy_writes_only(self):
        counts = AccessCounts(dc_writes=300, dc_write_misses=7)
        dc = dcache_energy(counts, L1, PROC)
        self.assertEqual(dc.read, 0)
        self.assertClose(dc.total, L1.write_cycle_energy * 300 + PROC.cycle_energy * 12 * 7)

    def test_l2_energy(self):
        counts = AccessCounts(l2_ifetches=20_000, l2_data_reads=5_000, l2_data_writes=2_000)
        l2 = l2_energy(counts, L2, NO_MEMORY, PROC)
        self.assertClose(l2.read, 1.6e-6)
        self.assertClose(l2.write, 27.4e-9)

    def test_l2_energy_ram_only(self):
        memory = MemoryTechParams(ram_read_energy=5e-9)
        l2 = l2_energy(AccessCounts(ram_reads=1_000), L2, memory, PROC)
        self.assertClose(l2.ram, 5e-6)
        self.assertClose(l2.total, 5e-6)

    def test_l2_miss_convention(self):
        counts = AccessCounts(l2_ifetches=20_000, l2_data_reads=5_000, l2_data_writes=2_000,
                              l2_read_misses=1_000, l2_write_misses=500)
        everything = l2_energy(counts, L2, NO_MEMORY, PROC, L2MissConvention.ALL_TRANSACTIONS)
        misses = l2_energy(counts, L2, NO_MEMORY, PROC, 'misses-only')
        self.assertClose(everything.miss_penalty, 40e-9 * 100 * 27_000)
        self.assertClose(misses.miss_penalty, 40e-9 * 100 * 1_500)

    def test_leakage_energy(self):
        proc = ProcessorParams(cycle_energy=0, cycle_time=1e-9, leak_power=1.0)
        self.assertEqual(leakage_energy(proc, AccessCounts(idle_time=0.5)), 0.5)
        self.assertEqual(leakage_energy(proc, AccessCounts()), 0)
        self.assertEqual(leakage_energy(PROC, AccessCounts(idle_time=3.0)), 0)

    def test_leakage_follows_idle_time_not_run_time(self):
        proc = ProcessorParams(cycle_energy=40e-9, cycle_time=0.5e-9, leak_power=2.0)
        busy = AccessCounts(ic_reads=1000, total_cycles=50_000, instruction_count=1000)
        evaluation = evaluate(busy, processor=proc, l1i=L1, l1d=L1, l2=L2, memory=NO_MEMORY)
        self.assertGreater(evaluation.timing.total, 0)
        self.assertEqual(evaluation.energy.leak, 0)
        idle = AccessCounts(ic_reads=1000, total_cycles=50_000, instruction_count=1000, idle_time=0.25)
        evaluation = evaluate(idle, processor=proc, l1i=L1, l1d=L1, l2=L2, memory=NO_MEMORY)
        self.assertEqual(evaluation.energy.leak, 0.5)

    def test_compute_cpi(self):
        self.assertEqual(compute_cpi(AccessCounts(total_cycles=2_000_000, instruction_count=1_600_000)), 1.25)
        self.assertEqual(compute_cpi(AccessCounts(total_cycles=77, instruction_count=77)), 1.0)
        with self.assertRaises(MissingCPIError):
            compute_cpi(AccessCounts(total_cycles=10))

    def test_resolve_cpi(self):
        self.assertEqual(resolve_cpi(AccessCounts(total_cycles=10), 2.0), (2.0, 'override'))
        self.assertEqual(resolve_cpi(AccessCounts(total_cycles=10, instruction_count=5)), (2.0, 'computed'))
        self.assertEqual(resolve_cpi(AccessCounts()), (1.0, 'default'))
        with self.assertRaises(MissingCPIError):
            resolve_cpi(AccessCounts(total_cycles=10))

    def test_total_energy(self):
        ic = icache_energy(AccessCounts(ic_reads=1_000_000, ic_read_misses=20_000), L1, PROC)
        dc = dcache_energy(AccessCounts(dc_reads=500_000, dc_writes=200_000, dc_read_misses=5_000,
                                        dc_write_misses=2_000), L1, PROC)
        l2 = l2_energy(AccessCounts(l2_ifetches=20_000, l2_data_reads=5_000, l2_data_writes=2_000),
                       L2, NO_MEMORY, PROC)
        report = total_energy(ic, dc, l2, 1e-3, 0.0, 1.25)
        expected = (8.049e-3 + 2.98612e-3 + 1.6274e-6 + 1e-3) / 1.25
        self.assertClose(report.total, expected)
        self.assertIs(report.ic, ic)
        self.assertClose(total_energy(ic, dc, l2, 0.0, 0.0, 1.0).total, report.sum - 1e-3)

    def test_total_energy_rejects_non_positive_cpi(self):
        zero = icache_energy(AccessCounts(), L1, PROC)
        zero_dc = dcache_energy(AccessCounts(), L1, PROC)
        zero_l2 = l2_energy(AccessCounts(), L2, NO_MEMORY, PROC)
        self.assertEqual(total_energy(zero, zero_dc, zero_l2, 0.0, 0.0, 2).total, 0)
        for cpi in (0, -1.0, float('nan')):
            with self.assertRaises(InvalidParameterError):
                total_energy(zero, zero_dc, zero_l2, 0.0, 0.0, cpi)

    def test_icache_time(self):
        counts = AccessCounts(ic_reads=1_000_000, ic_read_misses=20_000)
        ic = icache_time(counts, L1, PROC)
        self.assertClose(ic.read, 0.32e-3)
        self.assertClose(ic.miss_penalty, 0.1e-3)

    def test_dcache_time(self):
        dc = dcache_time(AccessCounts(dc_reads=500_000), L1, PROC)
        self.assertClose(dc.read, 0.16e-3)
        misses = AccessCounts(dc_reads=9, dc_writes=9, dc_read_misses=3, dc_write_misses=4)
        tech = CacheTechParams(0, 0, 0, 0)
        self.assertClose(dcache_time(misses, tech, PROC).total, 0.5e-9 * (10 * 3 + 12 * 4))

    def test_l2_time(self):
        l2 = l2_time(AccessCounts(l2_ifetches=20_000, l2_data_reads=5_000), L2, NO_MEMORY, PROC)
        self.assertClose(l2.read, 10e-6)
        writes = AccessCounts(l2_data_writes=40, l2_write_misses=10)
        only = l2_time(writes, L2, NO_MEMORY, PROC, 'misses-only')
        self.assertClose(only.total, 0.40e-9 * 40 + 0.5e-9 * 100 * 10)

    def test_ins_time(self):
        counts = AccessCounts(total_cycles=2_000_000)
        self.assertClose(ins_time(counts, PROC, 0.32e-3), 0.68e-3)
        self.assertEqual(ins_time(AccessCounts(), PROC, 0.0), 0)
        with self.assertRaises(InconsistentCountsError):
            ins_time(AccessCounts(total_cycles=10), PROC, 1e-3)

    def test_total_time(self):
        ic = icache_time(AccessCounts(ic_reads=1_000_000, ic_read_misses=20_000), L1, PROC)
        zero_dc = dcache_time(AccessCounts(), L1, PROC)
        zero_l2 = l2_time(AccessCounts(), L2, NO_MEMORY, PROC)
        timing = total_time(ic, zero_dc, zero_l2, 0.68e-3)
        self.assertClose(timing.total, 0.42e-3 + 0.68e-3)
        self.assertEqual(total_time(ic, zero_dc, zero_l2, 0.0).total, ic.total)

    def test_invalid_inputs_name_the_field(self):
        with self.assertRaises(InvalidParameterError) as cm:
            CacheTechParams(read_cycle_energy=-1e-9, write_cycle_energy=0, read_cycle_time=0, write_cycle_time=0)
        self.assertEqual(cm.exception.field, 'read_cycle_energy')
        with self.assertRaises(InvalidParameterError) as cm:
            AccessCounts(ic_reads=1, ic_read_misses=2)
        self.assertEqual(cm.exception.field, 'ic_read_misses')
        with self.assertRaises(InvalidParameterError):
            ProcessorParams(cycle_energy=1e-9, cycle_time=0)
        with self.assertRaises(InvalidParameterError):
            AccessCounts(dc_reads=2 ** 64)

    def test_estimate_misc_energy(self):
        counts = AccessCounts(dc_reads=10, dc_writes=5, dc_read_misses=2, dc_write_misses=1, total_cycles=200)
        # memory cycles: 10 + 5 + 10*2 + 12*1 = 47
        self.assertClose(estimate_misc_energy(counts, PROC), 40e-9 * 153)
        self.assertEqual(estimate_misc_energy(AccessCounts(dc_reads=10), PROC), 0)


class WorkedExampleTest(CloseMixin, SimpleTestCase):
    """Every term of a full evaluation against the hand-computed datasheet."""

    def setUp(self):
        sheet = json.loads((DATA / 'worked_example.json').read_text(), parse_float=Decimal)
        self.params = config.load(sheet['params'], strict=True)
        self.counts = AccessCounts(**sheet['counts'], idle_time=float(sheet['params']['model']['idle_time_s']))
        self.expected = sheet['expected']

    def _evaluate(self, options=None):
        return evaluate(self.counts, processor=self.params.processor, l1i=self.params.l1i,
                        l1d=self.params.l1d, l2=self.params.l2, memory=self.params.memory,
                        options=options or self.params.options)

    def test_energy_terms(self):
        energy = self._evaluate().energy.as_dict()
        for level in ('ic', 'dc', 'l2'):
            for term, value in self.expected['energy'][level].items():
                self.assertClose(energy[level][term], value, msg=f'energy.{level}.{term}')
        for term in ('misc', 'leak', 'cpi', 'sum', 'total'):
            self.assertClose(energy[term], self.expected['energy'][term], msg=f'energy.{term}')

    def test_timing_terms(self):
        timing = self._evaluate().timing.as_dict()
        for level in ('ic', 'dc', 'l2'):
            for term, value in self.expected['timing'][level].items():
                self.assertClose(timing[level][term], value, msg=f'timing.{level}.{term}')
        self.assertClose(timing['ins'], self.expected['timing']['ins'])
        self.assertClose(timing['total'], self.expected['timing']['total'])

    def test_misses_only_convention(self):
        options = ModelOptions(misc_energy=self.params.options.misc_energy, l2_convention='misses-only')
        evaluation = self._evaluate(options)
        self.assertClose(evaluation.energy.l2.miss_penalty, self.expected['misses_only']['energy_l2_miss_penalty'])
        self.assertClose(evaluation.timing.l2.miss_penalty, self.expected['misses_only']['timing_l2_miss_penalty'])

    def test_throughput(self):
        evaluation = self._evaluate()
        self.assertClose(evaluation.throughput, 1_600_000 / float(self.expected['timing']['total']))
        self.assertEqual(evaluation.cpi_source, 'computed')


def random_params(rng):
    def energy():
        return rng.choice([0.0, rng.uniform(1e-12, 1e-8)])

    def cycles():
        return rng.randint(0, 300)

    l1i_read_time = rng.uniform(1e-11, 1e-9)
    proc = ProcessorParams(
        cycle_energy=rng.uniform(0, 1e-7), cycle_time=rng.uniform(l1i_read_time, 2e-9),
        leak_power=rng.uniform(0, 5), ic_read_miss_penalty=cycles(), dc_read_miss_penalty=cycles(),
        dc_write_miss_penalty=cycles(), l2_read_miss_penalty=cycles(), l2_write_miss_penalty=cycles(),
    )
    l1i = CacheTechParams(energy(), energy(), l1i_read_time, rng.uniform(0, 1e-9))
    l1d = CacheTechParams(energy(), energy(), rng.uniform(0, 1e-9), rng.uniform(0, 1e-9))
    l2 = CacheTechParams(energy(), energy(), rng.uniform(0, 2e-9), rng.uniform(0, 2e-9))
    memory = MemoryTechParams(energy(), energy(), energy(), rng.uniform(0, 1e-7),
                              rng.uniform(0, 1e-7), rng.uniform(0, 1e-7))
    return proc, l1i, l1d, l2, memory


def random_counts(rng, scale=10 ** 6):
    ic_reads = rng.randint(0, scale)
    dc_reads, dc_writes = rng.randint(0, scale), rng.randint(0, scale)
    l2_if, l2_dr, l2_dw = rng.randint(0, scale // 10), rng.randint(0, scale // 10), rng.randint(0, scale // 10)
    instructions = max(1, ic_reads)
    return AccessCounts(
        ic_reads=ic_reads, ic_read_misses=rng.randint(0, ic_reads),
        dc_reads=dc_reads, dc_writes=dc_writes,
        dc_read_misses=rng.randint(0, dc_reads), dc_write_misses=rng.randint(0, dc_writes),
        l2_ifetches=l2_if, l2_data_reads=l2_dr, l2_data_writes=l2_dw,
        l2_read_misses=rng.randint(0, l2_if + l2_dr), l2_write_misses=rng.randint(0, l2_dw),
        ram_reads=rng.randint(0, scale // 10), ram_writes=rng.randint(0, scale // 10),
        rom_reads=rng.randint(0, scale // 10),
        total_cycles=instructions + rng.randint(0, 4 * scale), instruction_count=instructions,
        idle_time=rng.choice([0.0, rng.uniform(0, 2)]),
    )


def flat_params(proc, l1i, l1d, l2, memory):
    return {
        'cycle_energy': proc.cycle_energy, 'cycle_time': proc.cycle_time, 'leak_power': proc.leak_power,
        'p_ic_r': proc.ic_read_miss_penalty, 'p_dc_r': proc.dc_read_miss_penalty,
        'p_dc_w': proc.dc_write_miss_penalty, 'p_l2_r': proc.l2_read_miss_penalty,
        'p_l2_w': proc.l2_write_miss_penalty,
        'l1i_read_energy': l1i.read_cycle_energy, 'l1i_read_time': l1i.read_cycle_time,
        'l1d_read_energy': l1d.read_cycle_energy, 'l1d_write_energy': l1d.write_cycle_energy,
        'l1d_read_time': l1d.read_cycle_time, 'l1d_write_time': l1d.write_cycle_time,
        'l2_read_energy': l2.read_cycle_energy, 'l2_write_energy': l2.write_cycle_energy,
        'l2_read_time': l2.read_cycle_time, 'l2_write_time': l2.write_cycle_time,
        'ram_read_energy': memory.ram_read_energy, 'ram_write_energy': memory.ram_write_energy,
        'rom_read_energy': memory.rom_read_energy, 'ram_read_time': memory.ram_read_time,
        'ram_write_time': memory.ram_write_time, 'rom_read_time': memory.rom_read_time,
    }


def leaves(report):
    out = {}
    for level in ('ic', 'dc', 'l2'):
        for term, value in report[level].items():
            out[f'{level}.{term}'] = value
    return out


class OracleTest(CloseMixin, SimpleTestCase):
    def test_random_vectors_match_brute_force_equations(self):
        rng = random.Random(20240611)
        for trial in range(1000):
            proc, l1i, l1d, l2, memory = random_params(rng)
            counts = random_counts(rng, scale=rng.choice([10, 10 ** 3, 10 ** 6]))
            convention = rng.choice(list(L2MissConvention))
            misc = rng.choice([0.0, rng.uniform(0, 1e-2)])
            cpi = rng.choice([None, rng.uniform(0.2, 5)])
            options = ModelOptions(cpi_override=cpi, misc_energy=misc, l2_convention=convention)

            result = evaluate(counts, processor=proc, l1i=l1i, l1d=l1d, l2=l2, memory=memory, options=options)
            p = flat_params(proc, l1i, l1d, l2, memory)
            c = counts.as_dict()
            expected_energy = oracle.energy_terms(c, p, convention.value)
            expected_timing = oracle.timing_terms(c, p, convention.value)
            expected_cpi = cpi if cpi is not None else (
                c['total_cycles'] / c['instruction_count'] if c['instruction_count'] else 1.0)

            energy = leaves(result.energy.as_dict())
            for key, value in energy.items():
                self.assertClose(value, expected_energy[key], msg=f'trial {trial}: energy.{key}')
            self.assertClose(result.energy.leak, expected_energy['leak'], msg=f'trial {trial}: leak')
            self.assertClose(result.energy.total, oracle.total_energy(expected_energy, misc, expected_cpi),
                             msg=f'trial {trial}: energy.total')

            timing = leaves(result.timing.as_dict())
            for key, value in timing.items():
                self.assertClose(value, expected_timing[key], msg=f'trial {trial}: timing.{key}')
            self.assertClose(result.timing.ins, expected_timing['ins'], msg=f'trial {trial}: ins')
            self.assertClose(result.timing.total, expected_timing['total'], msg=f'trial {trial}: timing.total')


class ModelPropertyTest(CloseMixin, SimpleTestCase):
    def setUp(self):
        self.rng = random.Random(7)

    def _evaluate(self, counts, params, cpi=1.0, **options):
        proc, l1i, l1d, l2, memory = params
        return evaluate(counts, processor=proc, l1i=l1i, l1d=l1d, l2=l2, memory=memory,
                        options=ModelOptions(cpi_override=cpi, **options))

    def test_zero_counts_give_zero_reports(self):
        for _ in range(20):
            params = random_params(self.rng)
            result = self._evaluate(AccessCounts(), params, cpi=None)
            for value in leaves(result.energy.as_dict()).values():
                self.assertEqual(value, 0)
            self.assertEqual(result.energy.total, 0)
            self.assertEqual(result.timing.total, 0)
            self.assertEqual(result.energy.cpi, 1.0)

    def test_linearity_and_additivity(self):
        for _ in range(100):
            params = random_params(self.rng)
            a, b = random_counts(self.rng, 10 ** 4), random_counts(self.rng, 10 ** 4)
            k = self.rng.randint(2, 50)
            base = self._evaluate(a, params)
            scaled = self._evaluate(a.scaled(k), params)
            for key, value in leaves(base.energy.as_dict()).items():
                self.assertClose(leaves(scaled.energy.as_dict())[key], k * value, rel=1e-12)
            for key, value in leaves(base.timing.as_dict()).items():
                self.assertClose(leaves(scaled.timing.as_dict())[key], k * value, rel=1e-12)

            together = self._evaluate(a + b, params)
            separate_b = self._evaluate(b, params)
            for key, value in leaves(together.energy.as_dict()).items():
                expected = leaves(base.energy.as_dict())[key] + leaves(separate_b.energy.as_dict())[key]
                self.assertClose(value, expected, rel=1e-12)
            self.assertClose(together.timing.total, base.timing.total + separate_b.timing.total, rel=1e-12)

    def test_breakdowns_reconstruct_totals(self):
        for _ in range(100):
            result = self._evaluate(random_counts(self.rng), random_params(self.rng),
                                    cpi=self.rng.uniform(0.5, 3), misc_energy=1e-4)
            energy = result.energy
            self.assertClose(energy.ic.total, energy.ic.read + energy.ic.miss_penalty)
            self.assertClose(energy.dc.total, energy.dc.read + energy.dc.write + energy.dc.miss_penalty)
            self.assertClose(energy.l2.total, energy.l2.read + energy.l2.write + energy.l2.miss_penalty
                             + energy.l2.ram + energy.l2.rom)
            self.assertClose(energy.total, (energy.ic.total + energy.dc.total + energy.l2.total
                                            + energy.misc + energy.leak) / energy.cpi)
            timing = result.timing
            self.assertClose(timing.total, timing.ic.total + timing.dc.total + timing.l2.total + timing.ins)

    def test_miss_penalties_are_monotone(self):
        counts = AccessCounts(ic_reads=100, ic_read_misses=10, dc_reads=100, dc_writes=100,
                              dc_read_misses=10, dc_write_misses=10, l2_ifetches=10, l2_data_reads=20,
                              l2_data_writes=5, l2_read_misses=5, l2_write_misses=2,
                              total_cycles=10_000, instruction_count=100)
        base = dict(cycle_energy=1e-9, cycle_time=1e-9, ic_read_miss_penalty=5, dc_read_miss_penalty=5,
                    dc_write_miss_penalty=5, l2_read_miss_penalty=50, l2_write_miss_penalty=50)
        _, l1i, l1d, l2, memory = random_params(self.rng)
        l1i = CacheTechParams(1e-12, 1e-12, 1e-10, 1e-10)
        reference = self._evaluate(counts, (ProcessorParams(**base), l1i, l1d, l2, memory))
        for name, level in (('ic_read_miss_penalty', 'ic'), ('dc_read_miss_penalty', 'dc'),
                            ('dc_write_miss_penalty', 'dc'), ('l2_read_miss_penalty', 'l2'),
                            ('l2_write_miss_penalty', 'l2')):
            bumped = ProcessorParams(**{**base, name: base[name] + 1})
            result = self._evaluate(counts, (bumped, l1i, l1d, l2, memory))
            self.assertGreater(getattr(result.energy, level).miss_penalty,
                               getattr(reference.energy, level).miss_penalty, name)
            self.assertGreater(result.energy.total, reference.energy.total, name)
            self.assertGreater(result.timing.total, reference.timing.total, name)

    def test_common_cpi_does_not_change_energy_ordering(self):
        for _ in range(100):
            params = random_params(self.rng)
            a, b = random_counts(self.rng), random_counts(self.rng)
            before = self._evaluate(a, params, cpi=1.0).energy.total < self._evaluate(b, params, cpi=1.0).energy.total
            cpi = self.rng.uniform(0.1, 10)
            after = self._evaluate(a, params, cpi=cpi).energy.total < self._evaluate(b, params, cpi=cpi).energy.total
            self.assertEqual(before, after)
