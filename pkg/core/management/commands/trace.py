import logging

from core.management.base import CacheModelCommand
from core.traces import SyntheticPattern, generate_synthetic, read_trace, write_trace

logger = logging.getLogger(__name__)


class Command(CacheModelCommand):
    help = 'Generate synthetic traces and convert between the text and binary formats.'

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)

        gen = actions.add_parser('gen', help='Write a deterministic synthetic trace')
        gen.add_argument('--pattern', required=True,
                         help='sequential, strided:K, random[:LINES] or loop:SIZE:ITERATIONS')
        gen.add_argument('--len', dest='length', type=int, required=True, help='Number of data records')
        gen.add_argument('--seed', type=int, default=0)
        gen.add_argument('--cores', type=int, default=1)
        gen.add_argument('--line-size', type=int, default=64)
        gen.add_argument('--out', required=True, help='Destination; .ctrc writes the binary format')

        convert = actions.add_parser('convert', help='Rewrite a trace in the format of --out')
        convert.add_argument('--in', dest='source', required=True)
        convert.add_argument('--out', required=True)

    def handle(self, *args, **options):
        if options['action'] == 'gen':
            pattern = SyntheticPattern.parse(options['pattern'], seed=options['seed'])
            records = list(generate_synthetic(pattern, options['length'], options['cores'],
                                              line_size=options['line_size']))
            logger.info("generated %d records (%s, seed %d)", len(records), options['pattern'], options['seed'])
        else:
            records = list(read_trace(options['source']))
        write_trace(records, options['out'])
        logger.info("wrote %d records to %s", len(records), options['out'])
