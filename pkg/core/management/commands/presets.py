from core import config
from core.exceptions import UsageError
from core.management.base import CacheModelCommand


class Command(CacheModelCommand):
    help = 'List the shipped parameter presets or dump one as a standalone file.'

    def add_arguments(self, parser):
        parser.add_argument('action', choices=['list', 'dump'])
        parser.add_argument('name', nargs='?', help='Preset to dump')
        parser.add_argument('--out', help='Write the dump here instead of stdout')

    def handle(self, *args, **options):
        if options['action'] == 'list':
            lines = [f'{name:<16} {description}'.rstrip() for name, description in config.list_presets()]
            self.emit(''.join(line + '\n' for line in lines), options['out'])
            return
        if not options['name']:
            raise UsageError('presets dump needs a preset name')
        self.emit(config.dump_preset(options['name']), options['out'])
