"""
Design-space sweeps: one run per point of a cartesian product of parameter values.

A sweep spec is a JSON document::

    {
      "params": "xeon-foster",
      "trace": "traces/fft.trc",
      "axes": [
        {"path": "l1d.size_kb", "values": [16, 32, 64]},
        {"path": "l1d.associativity", "values": [1, 2, 4, 8]}
      ]
    }

``trace`` may instead be ``{"synthetic": {"pattern": "loop:64:10", "length": 1000}}``
and ``counts`` may replace the trace altogether. Points are produced
axis-major (the first axis varies slowest) and rows come back in that order
whatever the worker count.
"""
import csv
import io
import json
import logging
import math
import multiprocessing
from dataclasses import dataclass
from decimal import Decimal
from itertools import product
from pathlib import Path

from django.conf import settings

from . import config, reports
from .exceptions import CacheModelError, SweepPointError, SweepSpecError
from .params import AccessCounts
from .traces import SyntheticPattern, generate_synthetic, read_trace

logger = logging.getLogger(__name__)

DEFAULT_POINT_CAP = 10_000


@dataclass(frozen=True)
class Axis:
    path: str
    values: tuple


@dataclass(frozen=True)
class SweepContext:
    """Everything a worker needs to evaluate a point; must stay picklable."""
    document: dict
    strict: bool
    trace_path: str | None = None
    synthetic: dict | None = None
    counts: dict | None = None
    per_core: bool = False


@dataclass(frozen=True)
class SweepSpec:
    context: SweepContext
    axes: tuple
    cap: int = DEFAULT_POINT_CAP

    @property
    def size(self):
        return math.prod(len(axis.values) for axis in self.axes)

    def points(self):
        """``(point_id, ((path, value), ...))`` in axis-major order."""
        combos = product(*[axis.values for axis in self.axes])
        for index, values in enumerate(combos):
            yield f'p{index:05d}', tuple(zip((axis.path for axis in self.axes), values))


def _resolve_path(value, base_dir):
    path = Path(value)
    if not path.is_absolute() and base_dir is not None and (base_dir / path).exists():
        return base_dir / path
    return path


def _parse_axes(raw_axes):
    if not isinstance(raw_axes, list) or not raw_axes:
        raise SweepSpecError("axes: must be a non-empty list")
    known = config.axis_paths()
    axes, seen = [], set()
    for position, raw in enumerate(raw_axes):
        if not isinstance(raw, dict) or set(raw) != {'path', 'values'}:
            raise SweepSpecError(f"axes[{position}]: expected an object with 'path' and 'values'")
        path, values = raw['path'], raw['values']
        if path not in known:
            raise SweepSpecError(f"axes[{position}]: {path!r} is not a parameter path", path=path)
        if path in seen:
            raise SweepSpecError(f"axes[{position}]: {path!r} appears twice", path=path)
        if not isinstance(values, list) or not values:
            raise SweepSpecError(f"axes[{position}]: values must be a non-empty list", path=path)
        seen.add(path)
        axes.append(Axis(path, tuple(values)))
    return tuple(axes)


def parse_spec(source, strict=None, per_core=False):
    """Read a sweep spec from a path or a mapping and resolve its parameter base."""
    base_dir = None
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        base_dir = path.resolve().parent
        try:
            raw = json.loads(path.read_text(encoding='utf-8'), parse_float=Decimal)
        except OSError as exc:
            raise SweepSpecError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise SweepSpecError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise SweepSpecError("sweep spec must be a JSON object")

    unknown = set(raw) - {'params', 'trace', 'counts', 'axes', 'cap', 'per_core'}
    if unknown:
        raise SweepSpecError(f"unknown key {sorted(unknown)[0]!r}")
    if strict is None:
        strict = getattr(settings, 'CACHEMODEL_STRICT', False)

    params_source = raw.get('params')
    if params_source is None:
        raise SweepSpecError("params: required (preset name, file or object)")
    if isinstance(params_source, str) and (params_source.endswith('.json') or '/' in params_source):
        params_source = _resolve_path(params_source, base_dir)
    document = config.resolve_document(params_source)

    trace_path = synthetic = counts = None
    trace = raw.get('trace')
    if 'counts' in raw:
        if trace is not None:
            raise SweepSpecError("give either 'trace' or 'counts', not both")
        counts = raw['counts']
        if isinstance(counts, str):
            counts_path = _resolve_path(counts, base_dir)
            try:
                counts = json.loads(counts_path.read_text(encoding='utf-8'))
            except (OSError, json.JSONDecodeError) as exc:
                raise SweepSpecError(f"counts: cannot read {counts_path} ({exc})") from None
        if not isinstance(counts, dict):
            raise SweepSpecError("counts: must be an object or a file holding one")
        counts = {k: float(v) if isinstance(v, Decimal) else v for k, v in counts.items()}
    elif isinstance(trace, str):
        trace_path = str(_resolve_path(trace, base_dir))
    elif isinstance(trace, dict) and set(trace) == {'synthetic'} and isinstance(trace['synthetic'], dict):
        synthetic = {k: int(v) if isinstance(v, Decimal) else v for k, v in trace['synthetic'].items()}
        allowed = {'pattern', 'length', 'seed', 'cores', 'line_size'}
        if not {'pattern', 'length'} <= set(synthetic) <= allowed:
            raise SweepSpecError("trace.synthetic: needs 'pattern' and 'length' "
                                 "(optional 'seed', 'cores', 'line_size')")
    else:
        raise SweepSpecError("trace: required (a path or {'synthetic': {...}}) unless 'counts' is given")

    setting_cap = getattr(settings, 'CACHEMODEL_SWEEP_POINT_CAP', DEFAULT_POINT_CAP)
    cap = raw.get('cap', setting_cap)
    if isinstance(cap, bool) or not isinstance(cap, int) or cap < 1:
        raise SweepSpecError(f"cap: must be a positive integer (got {cap!r})")
    cap = min(cap, setting_cap)

    spec = SweepSpec(
        context=SweepContext(document=document, strict=strict, trace_path=trace_path,
                             synthetic=synthetic, counts=counts,
                             per_core=bool(raw.get('per_core', per_core))),
        axes=_parse_axes(raw.get('axes')),
        cap=cap,
    )
    if spec.size > spec.cap:
        raise SweepSpecError(f"{spec.size} design points exceed the cap of {spec.cap}",
                             points=spec.size, cap=spec.cap)
    return spec


def _records(context, params):
    if context.trace_path is not None:
        return read_trace(context.trace_path)
    synthetic = context.synthetic
    pattern = SyntheticPattern.parse(synthetic['pattern'], seed=synthetic.get('seed', 0))
    return generate_synthetic(pattern, synthetic['length'],
                              synthetic.get('cores', params.processor.core_count),
                              line_size=synthetic.get('line_size', 64))


def evaluate_point(context, point_id, overrides):
    """Evaluate one design point; returns the flattened report."""
    document = context.document
    for path, value in overrides:
        document = config.apply_override(document, path, value)
    params = config.load_document(document, strict=context.strict)

    if context.counts is not None:
        counts = AccessCounts.from_dict({'idle_time': params.idle_time, **context.counts})
        report = reports.build_report(params, counts, report_id=point_id)
    else:
        report = reports.run_trace(params, _records(context, params), report_id=point_id,
                                   per_core=context.per_core)
    return reports.flatten(report)


_worker_context = None


def _init_worker(context):
    global _worker_context
    _worker_context = context


def _run_point(point, context=None):
    point_id, overrides = point
    try:
        row = evaluate_point(context or _worker_context, point_id, overrides)
    except CacheModelError as exc:
        return point_id, None, exc.as_dict()
    return point_id, row, None


def run_sweep(spec, jobs=1):
    """
    Evaluate every point of ``spec`` and return its rows in axis-major order.

    ``jobs > 1`` fans points out to a process pool; ``Pool.map`` keeps the
    input order, so the output does not depend on the worker count.
    """
    points = list(spec.points())
    jobs = max(1, min(jobs, len(points)))
    logger.info("sweep: %d point(s) on %d worker(s)", len(points), jobs)

    if jobs == 1:
        results = [_run_point(point, spec.context) for point in points]
    else:
        with multiprocessing.Pool(processes=jobs, initializer=_init_worker,
                                  initargs=(spec.context,)) as pool:
            results = pool.map(_run_point, points, chunksize=1)

    rows = []
    for (point_id, overrides), (_, row, error) in zip(points, results):
        if error is not None:
            raise SweepPointError(point_id, error)
        rows.append({'id': point_id, **{path: config.plain_value(value) for path, value in overrides}, **row})
    return rows


def select_best(rows, metric):
    """The first row with the smallest ``metric``."""
    if not rows:
        raise SweepSpecError("no rows to choose from")
    if metric not in rows[0]:
        raise SweepSpecError(f"unknown metric {metric!r}", metric=metric)
    best = min(rows, key=lambda row: row[metric])
    logger.info("sweep: best %s = %r at %s", metric, best[metric], best['id'])
    return best


def to_csv(rows):
    buffer = io.StringIO()
    if not rows:
        return ''
    writer = csv.writer(buffer, lineterminator='\n')
    # Points may differ in core count, so the header is the union of all columns.
    columns = list(dict.fromkeys(column for row in rows for column in row))
    writer.writerow(columns)
    for row in rows:
        writer.writerow([reports.format_value(row.get(column)) for column in columns])
    return buffer.getvalue()
