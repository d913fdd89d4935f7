import json
import logging

from django.http import HttpResponse, JsonResponse
from django.views.decorators.csrf import csrf_exempt
from django.views.decorators.http import require_GET, require_POST

from core import config, reports
from core.params import AccessCounts
from core.traces import BinaryTraceParser, MAGIC, TextTraceParser

from .decorators import model_errors_as_json

logger = logging.getLogger(__name__)


def _load_params(preset, params):
    return config.load_layers(preset or None, params or None)


def _report_response(report):
    # Parameter values carry Decimal digits that JsonResponse would quote.
    return HttpResponse(reports.to_json(report), content_type='application/json')


@require_GET
def preset_list(request):
    """GET /api/v1/presets/ lists the shipped presets with their descriptions."""
    return JsonResponse({
        'presets': [{'name': name, 'description': description}
                    for name, description in config.list_presets()],
    })


@require_GET
@model_errors_as_json
def preset_detail(request, name):
    """GET /api/v1/presets/<name>/ returns one preset as a standalone parameter file."""
    return HttpResponse(config.dump_preset(name), content_type='application/json')


@csrf_exempt
@require_POST
@model_errors_as_json
def evaluate(request):
    """
    POST /api/v1/evaluate/
    Body: {"counts": {...}, "preset": "xeon-foster", "params": {...}}.
    ``params`` is an optional parameter document layered over ``preset``.
    """
    try:
        body = json.loads(request.body)
    except ValueError:
        return JsonResponse({'error': 'Invalid JSON body'}, status=400)
    if not isinstance(body, dict):
        return JsonResponse({'error': 'Body must be a JSON object'}, status=400)

    counts = body.get('counts')
    if not isinstance(counts, dict):
        return JsonResponse({'error': 'counts is required'}, status=400)
    if not body.get('preset') and not body.get('params'):
        return JsonResponse({'error': 'preset or params is required'}, status=400)

    params = _load_params(body.get('preset'), body.get('params'))
    counts = AccessCounts.from_dict({'idle_time': params.idle_time, **counts})
    report = reports.build_report(params, counts, report_id=str(body.get('id', 'run')),
                                  source={'counts': 'request'})
    return _report_response(report)


@csrf_exempt
@require_POST
@model_errors_as_json
def simulate(request):
    """
    POST /api/v1/simulate/
    Multipart upload: ``file`` (text or binary trace), ``preset``, optional
    ``per_core``. Returns the run report of the simulated trace.
    """
    uploaded_file = request.FILES.get('file')
    if not uploaded_file:
        return JsonResponse({'error': 'No file provided'}, status=400)
    preset = request.POST.get('preset', '')
    if not preset:
        return JsonResponse({'error': 'preset is required'}, status=400)

    content = uploaded_file.read()
    params = _load_params(preset, None)
    if content.startswith(MAGIC[:4]):
        records = BinaryTraceParser(content).records()
    else:
        try:
            content.decode('utf-8')
        except UnicodeDecodeError:
            return JsonResponse({'error': 'Trace file must be UTF-8 text'}, status=400)
        records = TextTraceParser(content).records()
    per_core = request.POST.get('per_core', '') in ('1', 'true')
    report = reports.run_trace(params, records, report_id=request.POST.get('id', uploaded_file.name),
                               source={'trace': uploaded_file.name}, per_core=per_core)
    return _report_response(report)
