"""
Shared plumbing of the cachemodel management commands.

Library errors become one JSON line on stderr and the exit status the error
carries (2 for validation and usage problems, 1 for runtime ones).
"""
import json
import logging
import sys
from pathlib import Path

from django.core.management.base import BaseCommand

from core.exceptions import CacheModelError

logger = logging.getLogger(__name__)


class CacheModelCommand(BaseCommand):
    requires_system_checks = []

    def add_strict_arguments(self, parser):
        group = parser.add_mutually_exclusive_group()
        group.add_argument('--strict', dest='strict', action='store_const', const=True, default=None,
                           help='Reject unknown keys and implausible values (default: CACHEMODEL_STRICT)')
        group.add_argument('--lax', dest='strict', action='store_const', const=False,
                           help='Warn about unknown keys and implausible values')

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except CacheModelError as exc:
            self.fail(exc.as_dict(), exc.exit_code)
        except OSError as exc:
            self.fail({'error': 'io', 'message': f"{exc.filename or ''}: {exc.strerror or exc}".lstrip(': '),
                       'exit_code': 1}, 1)

    def fail(self, payload, exit_code):
        logger.debug("command failed: %s", payload['message'])
        self.stderr.write(json.dumps(payload))
        sys.exit(exit_code)

    def emit(self, text, out=None):
        """Write a payload to ``out`` or, without one, to stdout."""
        if out:
            Path(out).write_text(text, encoding='utf-8', newline='\n')
            logger.info("wrote %s", out)
        else:
            self.stdout.write(text, ending='')
