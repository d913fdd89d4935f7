import json

from django.conf import settings

from core import sweep
from core.exceptions import UsageError
from core.management.base import CacheModelCommand


class Command(CacheModelCommand):
    help = 'Evaluate every point of a design-space sweep and write one CSV row per point.'

    def add_arguments(self, parser):
        parser.add_argument('--spec', required=True, help='Sweep spec (JSON)')
        parser.add_argument('--jobs', type=int, default=None,
                            help='Worker processes (default: CACHEMODEL_SWEEP_JOBS)')
        parser.add_argument('--out', help='CSV destination (default: stdout)')
        parser.add_argument('--best', metavar='METRIC',
                            help='Also print the point minimizing METRIC, e.g. energy_total_paper_j')
        parser.add_argument('--per-core', action='store_true',
                            help='Add core<N>.<metric> columns for each core')
        self.add_strict_arguments(parser)

    def handle(self, *args, **options):
        jobs = options['jobs'] if options['jobs'] is not None else getattr(settings, 'CACHEMODEL_SWEEP_JOBS', 1)
        if jobs < 1:
            raise UsageError(f'--jobs must be >= 1 (got {jobs})')
        if options['best'] and not options['out']:
            raise UsageError('--best needs --out (stdout carries the best point)')

        spec = sweep.parse_spec(options['spec'], strict=options['strict'], per_core=options['per_core'])
        rows = sweep.run_sweep(spec, jobs=jobs)
        if options['best']:
            best = sweep.select_best(rows, options['best'])
        self.emit(sweep.to_csv(rows), options['out'])
        if options['best']:
            self.stdout.write(json.dumps(best))
