"""
Parameter files: loading, validation, defaults and the shipped presets.

Parameter files are JSON documents in the units of the processor and CACTI
tables (nJ, ns, MHz, W, KB). Numbers are parsed as ``Decimal`` and scaled to SI
exactly once, here, so the rest of the package only ever sees joules,
seconds, hertz and bytes.

A file may name a preset under ``extends``; the preset is merged underneath
it key by key. Strict mode (``CACHEMODEL_STRICT=1``) rejects unknown keys and
values outside plausible ranges, lax mode logs them and carries on.
"""
import copy
import json
import logging
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from django.conf import settings

from .analytical import L2MissConvention, ModelOptions
from .cachesim import CacheConfig, CycleCosts, HierarchyConfig, InterleavePolicy, WritePolicy
from .exceptions import ConfigError, InvalidParameterError, UnknownPresetError
from .params import CacheTechParams, MemoryTechParams, ProcessorParams

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_PRESET_DIR = Path(__file__).resolve().parent / 'presets'

REQUIRED = object()

# Decimals pass through the JSON encoder as tagged strings and are unquoted afterwards.
_DECIMAL_TAG = '\x00decimal:'
_TAGGED_DECIMAL = re.compile(r'"\\u0000decimal:([^"]+)"')


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    default: object = REQUIRED
    plausible: tuple | None = None
    choices: tuple = ()
    nullable: bool = False


def _cache_fields(data_capable):
    fields_ = {
        'size_kb': FieldSpec('number', plausible=(Decimal('0.0625'), 1 << 20)),
        'line_size': FieldSpec('int', plausible=(4, 4096)),
        'associativity': FieldSpec('int', plausible=(0, 1 << 16)),
        'lines': FieldSpec('int', default=None, nullable=True),
        'rw_ports': FieldSpec('int', default=None, nullable=True),
        'read_ports': FieldSpec('int', default=None, nullable=True),
        'write_ports': FieldSpec('int', default=None, nullable=True),
        'access_time_ns': FieldSpec('number', default=None, nullable=True, plausible=(0, 1000)),
        'cycle_time_ns': FieldSpec('number', plausible=(0, 1000)),
        'write_cycle_time_ns': FieldSpec('number', default=None, nullable=True, plausible=(0, 1000)),
        'read_energy_nj': FieldSpec('number', plausible=(0, 1000)),
        'write_energy_nj': FieldSpec('number', plausible=(0, 1000)),
    }
    if data_capable:
        fields_['write_policy'] = FieldSpec(
            'choice', default=WritePolicy.WRITE_BACK_ALLOCATE.value,
            choices=tuple(p.value for p in WritePolicy))
    return fields_


SCHEMA = {
    'processor': {
        'brand': FieldSpec('str', default=''),
        'model': FieldSpec('str', default=''),
        'cores': FieldSpec('int', default=1, plausible=(1, 1024)),
        'power_w': FieldSpec('number', default=None, nullable=True, plausible=(0, 10000)),
        'technology_nm': FieldSpec('number', default=None, nullable=True, plausible=(1, 10000)),
        'l2_kb': FieldSpec('number', default=None, nullable=True),
        'clock_mhz': FieldSpec('number', plausible=(1, 100000)),
        'cycle_energy_nj': FieldSpec('number', default=None, nullable=True, plausible=(0, 1e6)),
        'leak_power_w': FieldSpec('number', default=0, plausible=(0, 10000)),
    },
    'l1i': _cache_fields(data_capable=False),
    'l1d': _cache_fields(data_capable=True),
    'l2': _cache_fields(data_capable=True),
    'memory': {
        name: FieldSpec('number', default=0, plausible=(0, 1e5))
        for name in ('ram_read_energy_nj', 'ram_write_energy_nj', 'rom_read_energy_nj',
                     'ram_read_time_ns', 'ram_write_time_ns', 'rom_read_time_ns')
    },
    'penalties': {
        'ic_read_miss': FieldSpec('int', default=10, plausible=(0, 1e6)),
        'dc_read_miss': FieldSpec('int', default=10, plausible=(0, 1e6)),
        'dc_write_miss': FieldSpec('int', default=10, plausible=(0, 1e6)),
        'l2_read_miss': FieldSpec('int', default=100, plausible=(0, 1e6)),
        'l2_write_miss': FieldSpec('int', default=100, plausible=(0, 1e6)),
    },
    'simulation': {
        'interleave': FieldSpec('choice', default=InterleavePolicy.ROUND_ROBIN.value,
                                choices=tuple(p.value for p in InterleavePolicy)),
        'base_cycles': FieldSpec('int', default=1, plausible=(0, 1000)),
        'l1_hit_cycles': FieldSpec('int', default=0, plausible=(0, 1000)),
        'l2_hit_cycles': FieldSpec('int', default=0, plausible=(0, 1000)),
    },
    'model': {
        'cpi': FieldSpec('number', default=None, nullable=True, plausible=(0, 1000)),
        'misc_energy_nj': FieldSpec('number', default=0, plausible=(0, 1e15)),
        'estimate_misc': FieldSpec('bool', default=False),
        'idle_time_s': FieldSpec('number', default=0, plausible=(0, 1e7)),
        'l2_miss_convention': FieldSpec('choice', default=L2MissConvention.ALL_TRANSACTIONS.value,
                                        choices=tuple(c.value for c in L2MissConvention)),
    },
}

TOP_LEVEL = {
    'schema_version': FieldSpec('int', default=SCHEMA_VERSION),
    'name': FieldSpec('str', default=''),
    'description': FieldSpec('str', default=''),
    'extends': FieldSpec('str', default=None, nullable=True),
    'notes': FieldSpec('strings', default=()),
}


@dataclass(frozen=True)
class PlatformInfo:
    """Descriptive processor fields; only ``cores`` and the clock feed the models."""
    brand: str = ''
    model: str = ''
    power_w: float | None = None
    technology_nm: float | None = None
    l2_kb: float | None = None
    clock_hz: float = 0.0


@dataclass(frozen=True)
class CacheInfo:
    """CACTI columns the models never consume."""
    lines: int | None = None
    rw_ports: int | None = None
    read_ports: int | None = None
    write_ports: int | None = None
    access_time: float | None = None


@dataclass(frozen=True)
class ParameterSet:
    name: str
    processor: ProcessorParams
    l1i: CacheTechParams
    l1d: CacheTechParams
    l2: CacheTechParams
    memory: MemoryTechParams
    hierarchy: HierarchyConfig
    costs: CycleCosts
    options: ModelOptions
    idle_time: float = 0.0
    platform: PlatformInfo = PlatformInfo()
    cache_info: dict = field(default_factory=dict)
    description: str = ''
    notes: tuple = ()


# Reading

def _parse_json(text, origin):
    try:
        data = json.loads(text, parse_float=Decimal)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ConfigError('', f"{origin}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError('', f"{origin}: top level must be an object")
    return data


def _decimals(value):
    if isinstance(value, float):
        return Decimal(repr(value))
    if isinstance(value, dict):
        return {k: _decimals(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decimals(v) for v in value]
    return value


def _text(data, where):
    try:
        return bytes(data).decode('utf-8')
    except UnicodeDecodeError as exc:
        raise ConfigError('', f"{where}: not valid UTF-8 at byte {exc.start}") from None


def _read_source(source):
    if isinstance(source, dict):
        return _decimals(source), '<mapping>'
    if isinstance(source, (bytes, bytearray)):
        return _parse_json(_text(source, '<bytes>'), '<bytes>'), '<bytes>'
    if hasattr(source, 'read'):
        text = source.read()
        if isinstance(text, bytes):
            text = _text(text, '<stream>')
        return _parse_json(text, '<stream>'), '<stream>'
    path = Path(source)
    try:
        text = _text(path.read_bytes(), str(path))
    except OSError as exc:
        raise ConfigError('', f"cannot read {path}: {exc.strerror}") from None
    return _parse_json(text, str(path)), str(path)


def preset_dir():
    return Path(getattr(settings, 'CACHEMODEL_PRESET_DIR', DEFAULT_PRESET_DIR))


def _preset_path(name):
    path = preset_dir() / f'{name}.json'
    if not path.is_file():
        raise UnknownPresetError(name, [n for n, _ in list_presets()])
    return path


def _merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_document(source, _seen=()):
    """The raw document of a file, bytes, mapping or preset, with ``extends`` merged in."""
    if isinstance(source, str) and not source.endswith('.json') and '/' not in source \
            and not Path(source).exists():
        doc, origin = _read_source(_preset_path(source))
        origin = source
    else:
        doc, origin = _read_source(source)

    parent = doc.pop('extends', None)
    if parent is None:
        return doc
    if not isinstance(parent, str):
        raise ConfigError('extends', 'must be a preset name')
    if parent in _seen:
        raise ConfigError('extends', f"circular preset chain through {parent!r}")
    logger.debug("%s extends preset %s", origin, parent)
    base = resolve_document(parent, _seen + (parent,))
    for key in ('name', 'description', 'notes'):
        if key not in doc:
            base.pop(key, None)
    return _merge(base, doc)


def load_preset_document(name):
    return resolve_document(name)


# Validation

def _warn_or_fail(strict, path, message):
    if strict:
        raise ConfigError(path, message)
    logger.warning("%s: %s", path, message)


def _coerce(spec, value, path, strict):
    if value is None:
        if spec.nullable:
            return None
        raise ConfigError(path, 'must not be null')

    if spec.kind == 'str':
        if not isinstance(value, str):
            raise ConfigError(path, 'must be a string')
        return value
    if spec.kind == 'strings':
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
            raise ConfigError(path, 'must be a list of strings')
        return tuple(value)
    if spec.kind == 'bool':
        if not isinstance(value, bool):
            raise ConfigError(path, 'must be true or false')
        return value
    if spec.kind == 'choice':
        if value not in spec.choices:
            raise ConfigError(path, f"must be one of {', '.join(spec.choices)} (got {value!r})")
        return value

    if isinstance(value, bool) or not isinstance(value, (int, Decimal)):
        raise ConfigError(path, f'must be a number (got {value!r})')
    number = Decimal(value)
    if not number.is_finite():
        raise ConfigError(path, 'must be finite')
    if number < 0:
        raise ConfigError(path, f'must be >= 0 (got {value})')
    if spec.kind == 'int':
        if number != number.to_integral_value():
            raise ConfigError(path, f'must be a whole number (got {value})')
        number = int(number)
    if spec.plausible is not None:
        low, high = spec.plausible
        if not Decimal(str(low)) <= Decimal(number) <= Decimal(str(high)):
            _warn_or_fail(strict, path, f'value {value} outside plausible range [{low}, {high}]')
    return number


def _section(doc, name, schema, strict):
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(name, 'must be an object')
    for key in raw:
        if key not in schema:
            _warn_or_fail(strict, f'{name}.{key}' if name else key, 'unknown key')
    values = {}
    for key, spec in schema.items():
        path = f'{name}.{key}' if name else key
        if key in raw:
            values[key] = _coerce(spec, raw[key], path, strict)
        elif spec.default is REQUIRED:
            raise ConfigError(path, 'required key missing')
        else:
            values[key] = spec.default
    return values


def validate_document(doc, strict=None):
    """Check a resolved document against the schema and fill defaults."""
    if strict is None:
        strict = getattr(settings, 'CACHEMODEL_STRICT', False)
    top = _section({'': {k: v for k, v in doc.items() if k not in SCHEMA}}, '', TOP_LEVEL, strict)
    if top['schema_version'] != SCHEMA_VERSION:
        raise ConfigError('schema_version', f"unsupported version {top['schema_version']}")
    values = {'': top}
    for name, schema in SCHEMA.items():
        values[name] = _section(doc, name, schema, strict)
    return values


# Building

def _si(value, exponent):
    return float(Decimal(value).scaleb(exponent))


def _optional_si(value, exponent):
    return None if value is None else _si(value, exponent)


def _build(section, key_map, factory, **kwargs):
    try:
        return factory(**kwargs)
    except InvalidParameterError as exc:
        key = key_map.get(exc.field, exc.field)
        path = key if '.' in key else f'{section}.{key}'
        raise ConfigError(path, exc.message.split(': ', 1)[-1]) from None


def _size_bytes(section, size_kb):
    size = Decimal(size_kb) * 1024
    if size != size.to_integral_value():
        raise ConfigError(f'{section}.size_kb', f'{size_kb} KB is not a whole number of bytes')
    return int(size)


def _tech(values, section):
    v = values[section]
    write_time = v['write_cycle_time_ns'] if v['write_cycle_time_ns'] is not None else v['cycle_time_ns']
    return CacheTechParams(
        read_cycle_energy=_si(v['read_energy_nj'], -9),
        write_cycle_energy=_si(v['write_energy_nj'], -9),
        read_cycle_time=_si(v['cycle_time_ns'], -9),
        write_cycle_time=_si(write_time, -9),
    )


def _geometry(values, section):
    v = values[section]
    return _build(section, {'size': 'size_kb'}, CacheConfig,
                  size=_size_bytes(section, v['size_kb']),
                  line_size=v['line_size'],
                  associativity=v['associativity'],
                  write_policy=v.get('write_policy', WritePolicy.WRITE_BACK_ALLOCATE.value))


def build_parameters(values):
    proc = values['processor']
    clock_hz = Decimal(proc['clock_mhz']).scaleb(6)
    if not 0 < float(clock_hz) < float('inf'):
        raise ConfigError('processor.clock_mhz', 'must be > 0 and finite')
    if proc['cycle_energy_nj'] is not None:
        cycle_energy = _si(proc['cycle_energy_nj'], -9)
    elif proc['power_w'] is not None:
        cycle_energy = float(Decimal(proc['power_w']) / clock_hz)
    else:
        raise ConfigError('processor.cycle_energy_nj', 'required when processor.power_w is not given')

    # The period follows from the stored clock double, which survives a round trip.
    clock = float(clock_hz)
    penalties = values['penalties']
    processor = _build('processor', {'core_count': 'cores', 'cycle_time': 'clock_mhz'}, ProcessorParams,
                       cycle_energy=cycle_energy,
                       cycle_time=float(1 / Decimal(clock)),
                       leak_power=float(proc['leak_power_w']),
                       ic_read_miss_penalty=penalties['ic_read_miss'],
                       dc_read_miss_penalty=penalties['dc_read_miss'],
                       dc_write_miss_penalty=penalties['dc_write_miss'],
                       l2_read_miss_penalty=penalties['l2_read_miss'],
                       l2_write_miss_penalty=penalties['l2_write_miss'],
                       core_count=proc['cores'])

    sim = values['simulation']
    hierarchy = _build('processor', {'core_count': 'cores', 'interleave': 'simulation.interleave'},
                       HierarchyConfig,
                       core_count=proc['cores'],
                       l1i=_geometry(values, 'l1i'),
                       l1d=_geometry(values, 'l1d'),
                       l2=_geometry(values, 'l2'),
                       interleave=sim['interleave'])
    costs = CycleCosts.from_processor(processor, base=sim['base_cycles'],
                                      l1_hit=sim['l1_hit_cycles'], l2_hit=sim['l2_hit_cycles'])

    mem = values['memory']
    memory = MemoryTechParams(
        ram_read_energy=_si(mem['ram_read_energy_nj'], -9),
        ram_write_energy=_si(mem['ram_write_energy_nj'], -9),
        rom_read_energy=_si(mem['rom_read_energy_nj'], -9),
        ram_read_time=_si(mem['ram_read_time_ns'], -9),
        ram_write_time=_si(mem['ram_write_time_ns'], -9),
        rom_read_time=_si(mem['rom_read_time_ns'], -9),
    )

    model = values['model']
    cpi = model['cpi']
    if cpi is not None and cpi == 0:
        raise ConfigError('model.cpi', 'must be > 0 when given')
    options = ModelOptions(
        cpi_override=None if cpi is None else float(cpi),
        misc_energy=_si(model['misc_energy_nj'], -9),
        estimate_misc=model['estimate_misc'],
        l2_convention=L2MissConvention(model['l2_miss_convention']),
    )

    cache_info = {
        section: CacheInfo(
            lines=values[section]['lines'],
            rw_ports=values[section]['rw_ports'],
            read_ports=values[section]['read_ports'],
            write_ports=values[section]['write_ports'],
            access_time=_optional_si(values[section]['access_time_ns'], -9),
        )
        for section in ('l1i', 'l1d', 'l2')
    }
    platform = PlatformInfo(
        brand=proc['brand'], model=proc['model'],
        power_w=None if proc['power_w'] is None else float(proc['power_w']),
        technology_nm=None if proc['technology_nm'] is None else float(proc['technology_nm']),
        l2_kb=None if proc['l2_kb'] is None else float(proc['l2_kb']),
        clock_hz=clock,
    )
    top = values['']
    return ParameterSet(
        name=top['name'], description=top['description'], notes=top['notes'],
        processor=processor,
        l1i=_tech(values, 'l1i'), l1d=_tech(values, 'l1d'), l2=_tech(values, 'l2'),
        memory=memory, hierarchy=hierarchy, costs=costs, options=options,
        idle_time=float(model['idle_time_s']),
        platform=platform, cache_info=cache_info,
    )


def load(source, strict=None):
    """
    Load a parameter set from a path, preset name, byte string, stream or mapping.

    Returns a ``ParameterSet`` whose values are all SI.
    """
    doc = resolve_document(source)
    return build_parameters(validate_document(doc, strict=strict))


def load_document(doc, strict=None):
    """Build a parameter set from an already resolved document (sweep workers)."""
    return build_parameters(validate_document(doc, strict=strict))


def load_layers(*sources, strict=None):
    """Load several sources merged in order, later ones winning key by key."""
    doc = {}
    for source in sources:
        if source is not None:
            doc = _merge(doc, resolve_document(source))
    if not doc:
        raise ConfigError('', 'no parameters given (a file or a preset is required)')
    return load_document(doc, strict=strict)


# Writing

def _unit(value, exponent):
    """
    SI float back to file units, as the shortest decimal that reloads exactly.

    ``repr`` gives the shortest decimal that reads back as ``value`` and
    ``scaleb`` only moves its decimal point, so the digits are kept as a
    ``Decimal``: converting them to a float in file units would round twice.
    """
    number = Decimal(repr(value)).scaleb(exponent)
    return int(number) if number == number.to_integral_value() else number


def plain_value(value):
    if isinstance(value, Decimal):
        return int(value) if value == value.to_integral_value() else float(value)
    if isinstance(value, dict):
        return {k: plain_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain_value(v) for v in value]
    return value


def _cache_section(params, section):
    tech = getattr(params, section)
    geometry = getattr(params.hierarchy, section)
    info = params.cache_info.get(section, CacheInfo())
    data = {
        'size_kb': plain_value(Decimal(geometry.size) / 1024),
        'line_size': geometry.line_size,
        'associativity': geometry.associativity,
        'lines': info.lines,
        'rw_ports': info.rw_ports,
        'read_ports': info.read_ports,
        'write_ports': info.write_ports,
        'access_time_ns': None if info.access_time is None else _unit(info.access_time, 9),
        'cycle_time_ns': _unit(tech.read_cycle_time, 9),
        'write_cycle_time_ns': _unit(tech.write_cycle_time, 9),
        'read_energy_nj': _unit(tech.read_cycle_energy, 9),
        'write_energy_nj': _unit(tech.write_cycle_energy, 9),
    }
    if section != 'l1i':
        data['write_policy'] = geometry.write_policy.value
    return data


def to_document(params):
    proc, platform, mem = params.processor, params.platform, params.memory
    return {
        'schema_version': SCHEMA_VERSION,
        'name': params.name,
        'description': params.description,
        'notes': list(params.notes),
        'processor': {
            'brand': platform.brand,
            'model': platform.model,
            'cores': proc.core_count,
            'power_w': platform.power_w,
            'technology_nm': platform.technology_nm,
            'l2_kb': platform.l2_kb,
            'clock_mhz': _unit(platform.clock_hz, -6),
            'cycle_energy_nj': _unit(proc.cycle_energy, 9),
            'leak_power_w': proc.leak_power,
        },
        'l1i': _cache_section(params, 'l1i'),
        'l1d': _cache_section(params, 'l1d'),
        'l2': _cache_section(params, 'l2'),
        'memory': {
            'ram_read_energy_nj': _unit(mem.ram_read_energy, 9),
            'ram_write_energy_nj': _unit(mem.ram_write_energy, 9),
            'rom_read_energy_nj': _unit(mem.rom_read_energy, 9),
            'ram_read_time_ns': _unit(mem.ram_read_time, 9),
            'ram_write_time_ns': _unit(mem.ram_write_time, 9),
            'rom_read_time_ns': _unit(mem.rom_read_time, 9),
        },
        'penalties': {
            'ic_read_miss': proc.ic_read_miss_penalty,
            'dc_read_miss': proc.dc_read_miss_penalty,
            'dc_write_miss': proc.dc_write_miss_penalty,
            'l2_read_miss': proc.l2_read_miss_penalty,
            'l2_write_miss': proc.l2_write_miss_penalty,
        },
        'simulation': {
            'interleave': params.hierarchy.interleave.value,
            'base_cycles': params.costs.base,
            'l1_hit_cycles': params.costs.l1_hit,
            'l2_hit_cycles': params.costs.l2_hit,
        },
        'model': {
            'cpi': params.options.cpi_override,
            'misc_energy_nj': _unit(params.options.misc_energy, 9),
            'estimate_misc': params.options.estimate_misc,
            'idle_time_s': params.idle_time,
            'l2_miss_convention': params.options.l2_convention.value,
        },
    }


class DecimalEncoder(json.JSONEncoder):
    """Writes ``Decimal`` values as bare JSON numbers carrying all their digits."""

    def default(self, o):
        if isinstance(o, Decimal):
            if not o.is_finite():
                raise ValueError(f"{o} is not a JSON number")
            return _DECIMAL_TAG + str(o)
        return super().default(o)


def dumps(document):
    """JSON text of a document or report; ``Decimal`` digits are written as they are."""
    text = json.dumps(document, indent=2, cls=DecimalEncoder)
    return _TAGGED_DECIMAL.sub(r'\1', text) + '\n'


def serialize(params):
    return dumps(to_document(params))


# Presets

def list_presets():
    """Shipped presets as ``(name, description)`` pairs, sorted by name."""
    presets = []
    for path in sorted(preset_dir().glob('*.json')):
        doc = _parse_json(path.read_text(encoding='utf-8'), str(path))
        description = doc.get('description', '')
        presets.append((path.stem, description.splitlines()[0] if description else ''))
    return presets


def dump_preset(name):
    """The preset as a standalone document (its ``extends`` chain merged in)."""
    return dumps(resolve_document(name))


# Sweep support

def axis_paths():
    return {f'{section}.{key}' for section, schema in SCHEMA.items() for key in schema}


def apply_override(doc, path, value):
    if path not in axis_paths():
        raise ConfigError(path, 'not a parameter path')
    section, key = path.split('.', 1)
    updated = copy.deepcopy(doc)
    updated.setdefault(section, {})[key] = value
    return updated
