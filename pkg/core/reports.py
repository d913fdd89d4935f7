"""
Run reports, their JSON/CSV renderings, and model-vs-reference comparison.
"""
import csv
import io
import json
import logging
import math
from dataclasses import replace

from django.conf import settings

from . import config
from .analytical import evaluate
from .cachesim import derive_counts, simulate
from .exceptions import ComparisonError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
UNDEFINED_ERROR = 'undefined-error'


def schema_version():
    return getattr(settings, 'CACHEMODEL_SCHEMA_VERSION', SCHEMA_VERSION)


def evaluate_parameters(params, counts, cpi=None, options=None):
    return evaluate(counts, processor=params.processor, l1i=params.l1i, l1d=params.l1d,
                    l2=params.l2, memory=params.memory, options=options or params.options, cpi=cpi)


def _derived(evaluation):
    return {
        'energy_sum_j': evaluation.energy.sum,
        'energy_total_paper_j': evaluation.energy.total,
        'time_total_s': evaluation.timing.total,
        'throughput_ips': evaluation.throughput,
        'cpi': evaluation.energy.cpi,
        'cpi_source': evaluation.cpi_source,
        'instruction_count': evaluation.instruction_count,
    }


def _section(counts, evaluation):
    return {
        'counts': counts.as_dict(),
        'energy': evaluation.energy.as_dict(),
        'timing': evaluation.timing.as_dict(),
        'derived': _derived(evaluation),
    }


def build_report(params, counts, *, report_id='run', source=None, sim_result=None, per_core=False):
    """
    Evaluate ``counts`` under ``params`` and assemble a run report.

    With ``per_core`` (simulated runs only), each core is evaluated from its
    own counts with the aggregate CPI. Misc and leakage energy belong to the
    processor as a whole and appear in the aggregate only.
    """
    evaluation = evaluate_parameters(params, counts)
    report = {
        'schema_version': schema_version(),
        'kind': 'run',
        'id': report_id,
        'source': source or {},
        'params': {'name': params.name, 'document': config.to_document(params)},
        **_section(counts, evaluation),
    }
    if sim_result is not None:
        report['records'] = sim_result.records
        report['caches'] = {name: stats.as_dict() for name, stats in sim_result.caches.items()}
        if per_core:
            core_options = replace(params.options, misc_energy=0.0, estimate_misc=False)
            cores = []
            for core in range(len(sim_result.per_core)):
                core_counts = derive_counts(sim_result, core=core, cpi_override=evaluation.energy.cpi)
                core_eval = evaluate_parameters(params, core_counts, cpi=evaluation.energy.cpi,
                                                options=core_options)
                cores.append({'core': core, **_section(core_counts, core_eval)})
            report['per_core'] = cores
    elif per_core:
        logger.warning("per-core breakdown needs a simulated trace; ignored for direct counts")
    return report


def run_trace(params, records, *, report_id='run', source=None, per_core=False):
    """Simulate ``records`` on the hierarchy of ``params`` and report the result."""
    result = simulate(records, params.hierarchy, params.costs)
    counts = derive_counts(result, idle_time=params.idle_time,
                           cpi_override=params.options.cpi_override)
    return build_report(params, counts, report_id=report_id, source=source,
                        sim_result=result, per_core=per_core)


# Rendering

def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ''
    return str(value)


def to_json(report):
    return config.dumps(report)


def _unit(section, term):
    if section == 'counts':
        return 's' if term == 'idle_time' else 'count'
    if section.startswith('energy'):
        return '1' if term == 'cpi' else 'J'
    if section.startswith('timing'):
        return 's'
    return {
        'energy_sum_j': 'J', 'energy_total_paper_j': 'J', 'time_total_s': 's',
        'throughput_ips': 'instructions/s', 'cpi': '1', 'cpi_source': '',
        'instruction_count': 'count',
    }.get(term, '')


def iter_terms(report):
    """Yield ``(section, term, value)`` for every leaf of the model sections."""
    for section in ('counts', 'energy', 'timing', 'derived'):
        for term, value in report[section].items():
            if isinstance(value, dict):
                for sub, sub_value in value.items():
                    yield f'{section}.{term}', sub, sub_value
            else:
                yield section, term, value


def to_csv(report):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['section', 'term', 'value', 'unit'])
    for section, term, value in iter_terms(report):
        writer.writerow([section, term, format_value(value), _unit(section, term)])
    return buffer.getvalue()


def render(report, fmt='json'):
    return to_csv(report) if fmt == 'csv' else to_json(report)


def flatten(report):
    """
    One flat mapping per report: derived metrics first, then every term, then
    the derived metrics of each core as ``core<N>.<metric>``.
    """
    columns = dict(report['derived'])
    for section, term, value in iter_terms(report):
        if section != 'derived':
            columns[f'{section}.{term}'] = value
    for core in report.get('per_core', ()):
        for term, value in core['derived'].items():
            columns[f"core{core['core']}.{term}"] = value
    return columns


# Comparison

def load_predictions(text):
    """
    Predictions keyed by id from a run report, a JSON list of run reports or a
    sweep CSV (which carries an ``id`` column).
    """
    stripped = text.lstrip()
    if stripped.startswith('{') or stripped.startswith('['):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ComparisonError(f"predictions: invalid JSON ({exc})") from None
        reports = data if isinstance(data, list) else [data]
        predictions = {}
        for report in reports:
            if not isinstance(report, dict) or report.get('kind') != 'run':
                raise ComparisonError("predictions: expected run reports")
            report_id = str(report.get('id', 'run'))
            if report_id in predictions:
                raise ComparisonError(f"predictions: duplicate id {report_id!r}", id=report_id)
            predictions[report_id] = {
                key: value for key, value in flatten(report).items()
                if isinstance(value, (int, float)) and not isinstance(value, bool)
            }
        return predictions
    return _read_table(text, 'predictions')


def load_references(text):
    return _read_table(text, 'references')


def _read_table(text, what):
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames or 'id' not in reader.fieldnames:
        raise ComparisonError(f"{what}: CSV needs an 'id' column")
    table = {}
    for lineno, row in enumerate(reader, start=2):
        row_id = row['id']
        if row_id in table:
            raise ComparisonError(f"{what}: line {lineno}: duplicate id {row_id!r}", id=row_id)
        values = {}
        for key, raw in row.items():
            if key in ('id', None) or raw in (None, ''):
                continue
            try:
                value = float(raw)
            except ValueError:
                if what == 'references':
                    raise ComparisonError(f"{what}: line {lineno}: {key} is not a number ({raw!r})") from None
                continue
            if not math.isfinite(value):
                raise ComparisonError(f"{what}: line {lineno}: {key} is not finite ({raw!r})",
                                      id=row_id, metric=key)
            values[key] = value
        table[row_id] = values
    return table


def percent_error(predicted, reference):
    if reference == 0:
        return None
    return abs(predicted - reference) / abs(reference) * 100


def compare(predictions, references):
    """
    Percent error of every predicted metric that has a reference value.

    Rows whose reference is zero are flagged ``undefined-error`` and left out
    of the summary.
    """
    rows = []
    for ref_id, metrics in references.items():
        if ref_id not in predictions:
            raise ComparisonError(f"reference id {ref_id!r} has no prediction", id=ref_id)
        predicted_metrics = predictions[ref_id]
        for metric, reference in metrics.items():
            if metric not in predicted_metrics:
                raise ComparisonError(f"{ref_id}: no predicted value for {metric!r}", id=ref_id, metric=metric)
            predicted = predicted_metrics[metric]
            error = percent_error(predicted, reference)
            row = {'id': ref_id, 'metric': metric, 'predicted': predicted, 'reference': reference,
                   'percent_error': error, 'flag': ''}
            if error is None:
                row['flag'] = UNDEFINED_ERROR
                logger.warning("%s/%s: reference is 0, row excluded from the summary", ref_id, metric)
            rows.append(row)

    summary = {}
    for row in rows:
        entry = summary.setdefault(row['metric'], {'rows': 0, 'excluded': 0, 'max': None, 'mean': None,
                                                   '_total': 0.0})
        if row['flag']:
            entry['excluded'] += 1
            continue
        entry['rows'] += 1
        entry['_total'] += row['percent_error']
        entry['max'] = row['percent_error'] if entry['max'] is None else max(entry['max'], row['percent_error'])
    for entry in summary.values():
        total = entry.pop('_total')
        if entry['rows']:
            entry['mean'] = total / entry['rows']
    return {'schema_version': schema_version(), 'kind': 'comparison', 'rows': rows, 'summary': summary}


def comparison_to_csv(comparison):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['id', 'metric', 'predicted', 'reference', 'percent_error', 'flag'])
    for row in comparison['rows']:
        writer.writerow([row['id'], row['metric'], format_value(row['predicted']),
                         format_value(row['reference']), format_value(row['percent_error']), row['flag']])
    return buffer.getvalue()

