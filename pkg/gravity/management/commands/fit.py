from pathlib import Path

import numpy as np
from django.conf import settings

from ...experiment import load_records
from ...exports import SURFACE_HEADER, write_csv, write_json
from ...fitting import confidence_region, parity_bound, scan, summary
from ...forms import FitForm
from ..base import BouncerCommand


class Command(BouncerCommand):
    help = 'Fit sigma, velocity and the transmission coefficients to a measurement CSV over a grid scan.'
    form_class = FitForm
    option_map = {'sigma': 'sigmas'}

    def add_command_arguments(self, parser):
        parser.add_argument('--sigma-min', type=float)
        parser.add_argument('--sigma-max', type=float)
        parser.add_argument('--sigma-points', type=int)
        parser.add_argument('--velocity-points', type=int)
        parser.add_argument('--level', type=float, help='confidence level, default 0.90')
        parser.add_argument('--summary', help='JSON summary path (default: --out with a .json suffix)')

    def run(self, data, form):
        # Data problems surface here, before any propagation
        records = load_records(data['data'])
        ctx = form.build_context()
        v_lo, v_hi, _ = settings.VELOCITY_GRID
        velocity_grid = np.linspace(v_lo, v_hi, data['velocity_points'])

        surface = scan(ctx, records, data['sigmas'], velocity_grid, workers=data['threads'], level=data['level'])
        region = confidence_region(surface, level=data['level'])
        result = summary(surface, region, parity_bound(surface))
        if surface.underdetermined:
            self.stderr.write(self.style.WARNING(
                f'{len(records)} record(s) do not determine three coefficients; the fit is underdetermined'
            ))

        summary_path = data['summary']
        if data['out']:
            write_csv(data['out'], SURFACE_HEADER, surface.rows())
            self.stdout.write(self.style.SUCCESS(f'Wrote {data["out"]}'))
            summary_path = summary_path or Path(data['out']).with_suffix('.json')
        self.emit(write_json, summary_path, result)
