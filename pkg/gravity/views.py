"""
Read-only JSON endpoints for the spectrum and prediction calculators.
"""
import logging

from django.http import JsonResponse
from django.views.decorators.http import require_GET

from .exceptions import BouncerError
from .exports import jsonable, spectrum_records
from .forms import PredictForm, SpectrumForm
from .predictions import prediction_report

logger = logging.getLogger(__name__)


def _invalid(form):
    return JsonResponse({'success': False, 'errors': form.errors.get_json_data()}, status=400)


@require_GET
def spectrum(request):
    """Levels, energies and transition frequencies of one particle."""
    form = SpectrumForm(request.GET)
    if not form.is_valid():
        return _invalid(form)
    try:
        ctx = form.build_context()
    except (BouncerError, ValueError) as exc:
        logger.warning('spectrum request failed: %s', exc)
        return JsonResponse({'success': False, 'errors': {'__all__': [{'message': str(exc)}]}}, status=400)
    return JsonResponse(jsonable({
        'success': True,
        'particle': form.cleaned_data['label'],
        'mass': ctx.mass,
        'x0': ctx.x0,
        'rows': spectrum_records(ctx),
    }))


@require_GET
def predict(request):
    """Closed-form prediction report for one particle and coupling."""
    form = PredictForm(request.GET)
    if not form.is_valid():
        return _invalid(form)
    data = form.cleaned_data
    try:
        ctx = form.build_context()
        report = prediction_report(
            ctx, data['label'], data['sigma'], r0=data['r0'], backreaction=data['backreaction'],
            delta_t=data['delta_t'], kappas=data['kappa'],
        )
    except (BouncerError, ValueError) as exc:
        logger.warning('predict request failed: %s', exc)
        return JsonResponse({'success': False, 'errors': {'__all__': [{'message': str(exc)}]}}, status=400)
    return JsonResponse(jsonable({'success': True, 'report': report.to_dict()}))
