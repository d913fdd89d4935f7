import json
import logging
from pathlib import Path

from core import config, reports
from core.exceptions import InvalidParameterError, UsageError
from core.management.base import CacheModelCommand
from core.params import AccessCounts
from core.traces import read_trace

logger = logging.getLogger(__name__)


class Command(CacheModelCommand):
    help = 'Evaluate the energy and throughput models for one configuration.'

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--trace', help='Text (.trc) or binary (.ctrc) trace to simulate')
        source.add_argument('--counts', help='JSON file of transaction counts to evaluate directly')
        parser.add_argument('--params', help='Parameter file (or preset name)')
        parser.add_argument('--preset', help='Preset applied underneath --params')
        parser.add_argument('--format', choices=['json', 'csv'], default='json')
        parser.add_argument('--out', help='Write the report here instead of stdout')
        parser.add_argument('--id', dest='report_id', help='Report id (default: input file stem)')
        parser.add_argument('--per-core', action='store_true', help='Add a per-core breakdown')
        self.add_strict_arguments(parser)

    def handle(self, *args, **options):
        if not options['params'] and not options['preset']:
            raise UsageError('one of --params or --preset is required')
        params = config.load_layers(options['preset'], options['params'], strict=options['strict'])

        source_path = Path(options['trace'] or options['counts'])
        report_id = options['report_id'] or source_path.stem
        if options['counts']:
            counts = _read_counts(source_path, params.idle_time)
            report = reports.build_report(params, counts, report_id=report_id,
                                          source={'counts': str(source_path)},
                                          per_core=options['per_core'])
        else:
            report = reports.run_trace(params, read_trace(source_path), report_id=report_id,
                                       source={'trace': str(source_path)},
                                       per_core=options['per_core'])
        logger.info("%s: E_total %r J, T_total %r s (cpi %r, %s)", report_id,
                    report['derived']['energy_total_paper_j'], report['derived']['time_total_s'],
                    report['derived']['cpi'], report['derived']['cpi_source'])
        self.emit(reports.render(report, options['format']), options['out'])


def _read_counts(path, idle_time):
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InvalidParameterError('counts', type(data).__name__, 'must be a JSON object')
    data = data.get('counts', data) if data.get('kind') == 'run' else data
    return AccessCounts.from_dict({'idle_time': idle_time, **data})
