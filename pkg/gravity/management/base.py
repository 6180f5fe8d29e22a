"""
Shared plumbing for the bouncer management commands: common flags, TOML
config files, form validation and exit codes.
"""
import io
import logging

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from django.core.management.base import BaseCommand, CommandError

from ..exceptions import BouncerError, RecordFormatError

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
COMPUTATION_ERROR = 1


def load_config(path):
    """Read a TOML config file whose keys mirror the long flag names."""
    try:
        with open(path, 'rb') as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise CommandError(f'cannot read config {path}: {exc}', returncode=USAGE_ERROR)
    except tomllib.TOMLDecodeError as exc:
        raise CommandError(f'invalid config {path}: {exc}', returncode=USAGE_ERROR)
    return {key.replace('-', '_'): value for key, value in data.items()}


def _form_errors(form):
    return '; '.join(
        f'{"--" + name.replace("_", "-") if name != "__all__" else "config"}: {" ".join(errors)}'
        for name, errors in form.errors.items()
    )


class BouncerCommand(BaseCommand):
    """
    Base for every command. Subclasses set ``form_class`` and implement
    ``run(data, form)``; flags override values from ``--config``.
    """

    form_class = None
    # flag dest -> form field, where they differ
    option_map = {}

    def add_arguments(self, parser):
        parser.add_argument('--config', help='TOML file with default values for any flag')
        parser.add_argument('--particle', help='neutron, planck, kilogram or custom')
        parser.add_argument('--mass', type=float, help='particle mass in kg')
        parser.add_argument('--g', type=float, help='gravitational acceleration in m/s^2')
        parser.add_argument('--n-states', type=int, help='basis truncation')
        parser.add_argument('--sigma', help='coupling constant, or "inf" for conservative gravity')
        parser.add_argument('--velocity', type=float, help='horizontal velocity in m/s')
        parser.add_argument('--data', help='measurement CSV')
        parser.add_argument('--out', help='output path (stdout when omitted)')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--threads', type=int, help='worker processes')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def build_form(self, options):
        fields = self.form_class.base_fields
        data = {}
        if options.get('config'):
            config = load_config(options['config'])
            unknown = sorted(set(config) - set(fields) - set(self.option_map))
            if unknown:
                raise CommandError(f'unknown config keys: {", ".join(unknown)}', returncode=USAGE_ERROR)
            data.update(config)
        for dest, value in options.items():
            if value is None or dest == 'config':
                continue
            data[dest] = value
        for dest, name in self.option_map.items():
            if dest in data:
                data[name] = data.pop(dest)
        return self.form_class(data={key: value for key, value in data.items() if key in fields})

    def handle(self, *args, **options):
        form = self.build_form(options)
        if not form.is_valid():
            raise CommandError(f'invalid arguments: {_form_errors(form)}', returncode=USAGE_ERROR)
        try:
            self.run(form.cleaned_data, form)
        except RecordFormatError as exc:
            raise CommandError(f'invalid data: {exc}', returncode=USAGE_ERROR)
        except BouncerError as exc:
            logger.error('%s failed: %s', self.__module__.rsplit('.', 1)[-1], exc)
            raise CommandError(str(exc), returncode=COMPUTATION_ERROR)
        except OSError as exc:
            target = exc.filename or 'output'
            raise CommandError(f'I/O error on {target}: {exc.strerror or exc}', returncode=USAGE_ERROR)
        except ValueError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)

    def run(self, data, form):
        raise NotImplementedError('subclasses of BouncerCommand must provide a run() method')

    def emit(self, writer, target, *args):
        """Call an exports writer on ``target``, or capture it for stdout."""
        if target:
            result = writer(target, *args)
            self.stdout.write(self.style.SUCCESS(f'Wrote {target}'))
            return result
        buffer = io.StringIO()
        result = writer(buffer, *args)
        self.stdout.write(buffer.getvalue(), ending='')
        return result
