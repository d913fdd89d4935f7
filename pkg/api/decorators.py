import functools
import logging

from django.http import JsonResponse

from core.exceptions import CacheModelError

logger = logging.getLogger(__name__)


def model_errors_as_json(view_func):
    """Decorator that turns library errors into their JSON error body."""
    @functools.wraps(view_func)
    def wrapper(request, *args, **kwargs):
        try:
            return view_func(request, *args, **kwargs)
        except CacheModelError as exc:
            logger.info("%s %s: %s", request.method, request.path, exc.message)
            return JsonResponse(exc.as_dict(), status=exc.http_status)
    return wrapper
