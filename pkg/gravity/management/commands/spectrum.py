from ...exports import spectrum_header, spectrum_rows, write_csv
from ...forms import SpectrumForm
from ..base import BouncerCommand


class Command(BouncerCommand):
    help = 'Write the bouncer spectrum: Airy zeros, energies (peV) and transition frequencies (rad/s).'
    form_class = SpectrumForm

    def run(self, data, form):
        ctx = form.build_context()
        self.emit(write_csv, data['out'], spectrum_header(ctx.n_states), spectrum_rows(ctx))
