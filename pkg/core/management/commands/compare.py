import json
from pathlib import Path

from core import reports
from core.management.base import CacheModelCommand


class Command(CacheModelCommand):
    help = 'Percent error of model predictions against reference measurements.'

    def add_arguments(self, parser):
        parser.add_argument('--pred', required=True,
                            help='Run report (JSON), list of run reports, or sweep CSV')
        parser.add_argument('--ref', required=True, help='CSV of reference values with an id column')
        parser.add_argument('--format', choices=['json', 'csv'], default='json')
        parser.add_argument('--out', help='Write the comparison here instead of stdout')

    def handle(self, *args, **options):
        predictions = reports.load_predictions(Path(options['pred']).read_text(encoding='utf-8'))
        references = reports.load_references(Path(options['ref']).read_text(encoding='utf-8'))
        comparison = reports.compare(predictions, references)
        if options['format'] == 'csv':
            text = reports.comparison_to_csv(comparison)
        else:
            text = json.dumps(comparison, indent=2) + '\n'
        self.emit(text, options['out'])
