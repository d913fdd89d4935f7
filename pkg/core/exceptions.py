"""
Error hierarchy shared by the library, the management commands and the API.

Every error knows its machine-readable ``code`` and the process exit status a
command reports for it: 2 for usage/validation problems, 1 for runtime ones.
"""


class CacheModelError(Exception):
    code = 'error'
    exit_code = 1
    http_status = 422

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def as_dict(self):
        payload = {
            'error': self.code,
            'message': self.message,
            'exit_code': self.exit_code,
        }
        payload.update(self.details)
        return payload


class ValidationFailure(CacheModelError):
    """Base for input problems the caller can fix."""
    code = 'validation'
    exit_code = 2
    http_status = 400


class InvalidParameterError(ValidationFailure):
    code = 'invalid-parameter'

    def __init__(self, field, value, reason='out of range'):
        super().__init__(f"{field}: {reason} (got {value!r})", field=field, value=_jsonable(value))
        self.field = field
        self.value = value


class MissingCPIError(ValidationFailure):
    code = 'missing-cpi'

    def __init__(self, message="instruction_count is 0 and no CPI override was supplied"):
        super().__init__(message)


class InconsistentCountsError(ValidationFailure):
    code = 'inconsistent-counts'


class ConfigError(ValidationFailure):
    code = 'config-error'

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message, path=path)
        self.path = path


class UnknownPresetError(ConfigError):
    code = 'unknown-preset'

    def __init__(self, name, available=()):
        super().__init__('', f"unknown preset {name!r}")
        self.details['preset'] = name
        self.details['available'] = list(available)
        self.name = name


class UsageError(ValidationFailure):
    code = 'usage'


class SweepSpecError(ValidationFailure):
    code = 'sweep-spec'


class ComparisonError(ValidationFailure):
    code = 'comparison'


class SweepPointError(CacheModelError):
    """A failed design point, carrying the code and exit status of the original error."""

    def __init__(self, point_id, payload):
        super().__init__(f"{point_id}: {payload['message']}", point=point_id)
        self.code = payload['error']
        self.exit_code = payload['exit_code']
        self.http_status = 400 if self.exit_code == 2 else 422
        self.details.update({k: v for k, v in payload.items() if k not in ('error', 'message', 'exit_code')})


class TraceFormatError(CacheModelError):
    """A trace stream that does not follow the text or binary grammar."""
    code = 'trace-format'

    def __init__(self, message, *, line=None, offset=None, token=None):
        details = {}
        if line is not None:
            details['line'] = line
            message = f"line {line}: {message}"
        if offset is not None:
            details['offset'] = offset
            message = f"byte offset {offset}: {message}"
        if token is not None:
            details['token'] = token
        super().__init__(message, **details)


class TraceError(CacheModelError):
    """A well-formed record the simulator cannot replay."""
    code = 'trace'

    def __init__(self, index, message):
        super().__init__(f"record {index}: {message}", record_index=index)
        self.index = index


class ConsistencyError(CacheModelError):
    """Simulator tallies that violate the count invariants (a simulator bug)."""
    code = 'consistency'


def _jsonable(value):
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    return str(value)
