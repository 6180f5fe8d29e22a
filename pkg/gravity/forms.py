import math

import numpy as np
from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from .basis import build_context
from .constants import NEUTRON_LIFETIME
from .particles import PARTICLE_CHOICES, PARTICLES


def parse_sigma(value):
    text = str(value).strip().lower()
    if text in ('inf', 'infinity', 'conservative'):
        return math.inf
    try:
        sigma = float(text)
    except ValueError:
        raise ValidationError('Enter a positive number or "inf".')
    if math.isnan(sigma) or sigma <= 0:
        raise ValidationError('Sigma must be positive.')
    return sigma


class SigmaField(forms.Field):
    """A coupling constant: positive float or ``inf`` for the conservative model."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, (int, float)):
            value = repr(float(value))
        return parse_sigma(value)


class SigmaListField(forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return []
        if isinstance(value, str):
            value = [item for item in value.split(',') if item.strip()]
        return [parse_sigma(repr(float(item)) if isinstance(item, (int, float)) else item) for item in value]


class FloatListField(forms.Field):
    def __init__(self, *args, length=None, **kwargs):
        self.length = length
        super().__init__(*args, **kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, str):
            value = [item for item in value.split(',') if item.strip()]
        try:
            numbers = [float(item) for item in value]
        except (TypeError, ValueError):
            raise ValidationError('Enter a comma-separated list of numbers.')
        if not all(math.isfinite(number) for number in numbers):
            raise ValidationError('Numbers must be finite.')
        if self.length is not None and len(numbers) != self.length:
            raise ValidationError(f'Expected {self.length} numbers, got {len(numbers)}.')
        return numbers


class MeasurementRecordForm(forms.Form):
    """One row of a measurement file."""

    strength_m_per_s = forms.FloatField(min_value=0.0)
    omega_rad_per_s = forms.FloatField()
    transmission = forms.FloatField()
    error = forms.FloatField()

    def clean_omega_rad_per_s(self):
        omega = self.cleaned_data['omega_rad_per_s']
        if omega <= 0:
            raise ValidationError('Drive frequency must be positive.')
        return omega

    def clean_error(self):
        error = self.cleaned_data['error']
        if error <= 0:
            raise ValidationError('Measurement error must be positive.')
        return error


class ParticleForm(forms.Form):
    particle = forms.ChoiceField(choices=PARTICLE_CHOICES, required=False)
    mass = forms.FloatField(required=False)
    g = forms.FloatField(required=False)
    n_states = forms.IntegerField(required=False, min_value=1)

    def clean_n_states(self):
        n_states = self.cleaned_data.get('n_states') or settings.N_STATES
        if n_states > settings.MAX_STATES:
            raise ValidationError(f'At most {settings.MAX_STATES} states are supported.')
        return n_states

    def clean_g(self):
        g = self.cleaned_data.get('g')
        if g is None:
            return settings.GRAVITY_ACCEL
        if g <= 0:
            raise ValidationError('Gravitational acceleration must be positive.')
        return g

    def clean(self):
        cleaned_data = super().clean()
        particle = cleaned_data.get('particle') or 'neutron'
        mass = cleaned_data.get('mass')

        # A mass flag always wins over the preset
        if mass is not None:
            if mass <= 0:
                self.add_error('mass', 'Mass must be positive.')
            elif particle != 'custom' and mass != PARTICLES[particle]['mass']:
                particle = 'custom'
        elif particle == 'custom':
            self.add_error('mass', 'A custom particle needs --mass.')
        else:
            cleaned_data['mass'] = PARTICLES[particle]['mass']

        cleaned_data['particle'] = particle
        cleaned_data['label'] = PARTICLES[particle]['label'] if particle in PARTICLES else 'custom'
        return cleaned_data

    def build_context(self):
        data = self.cleaned_data
        return build_context(data['mass'], data['g'], data['n_states'])


class SpectrumForm(ParticleForm):
    out = forms.CharField(required=False)


class PredictForm(ParticleForm):
    sigma = SigmaField(required=False)
    r0 = forms.FloatField(required=False)
    backreaction = forms.BooleanField(required=False)
    delta_t = forms.FloatField(required=False)
    kappa = FloatListField(required=False)
    out = forms.CharField(required=False)

    def clean_sigma(self):
        sigma = self.cleaned_data.get('sigma')
        return 500.0 if sigma is None else sigma

    def clean_r0(self):
        r0 = self.cleaned_data.get('r0')
        if r0 is None:
            return settings.NUCLEON_RADIUS
        if r0 <= 0:
            raise ValidationError('R0 must be positive.')
        return r0

    def clean_delta_t(self):
        delta_t = self.cleaned_data.get('delta_t')
        if delta_t is None:
            return NEUTRON_LIFETIME
        if delta_t <= 0:
            raise ValidationError('Storage time must be positive.')
        return delta_t

    def clean_kappa(self):
        kappas = self.cleaned_data.get('kappa') or []
        if any(k <= 0 for k in kappas):
            raise ValidationError('Mass ratios must be positive.')
        return kappas


class _DriveMixin(forms.Form):
    velocity = forms.FloatField(required=False)
    allow_out_of_bounds = forms.BooleanField(required=False)
    coefficients = FloatListField(required=False, length=3)
    out = forms.CharField(required=False)

    def clean_velocity(self):
        velocity = self.cleaned_data.get('velocity')
        if velocity is None:
            return 6.58
        if velocity <= 0:
            raise ValidationError('Velocity must be positive.')
        lo, hi = settings.VELOCITY_BOUNDS
        if not self.data.get('allow_out_of_bounds') and not lo <= velocity <= hi:
            raise ValidationError(f'Velocity must lie in [{lo}, {hi}] m/s.')
        return velocity

    def clean_coefficients(self):
        coefficients = self.cleaned_data.get('coefficients')
        if coefficients is None:
            return (1.0, 1.0, 1.0)
        c0, c1, c2 = coefficients
        if not c0 >= c1 >= c2 >= 0:
            raise ValidationError('Coefficients must satisfy c0 >= c1 >= c2 >= 0.')
        return tuple(coefficients)


class SimulateForm(ParticleForm, _DriveMixin):
    sigma = SigmaField(required=False)
    strength = forms.FloatField(required=False, min_value=0.0)
    omega = forms.FloatField(required=False)
    n_outputs = forms.IntegerField(required=False, min_value=2)
    trajectory = forms.CharField(required=False)

    def clean_sigma(self):
        sigma = self.cleaned_data.get('sigma')
        return math.inf if sigma is None else sigma

    def clean_strength(self):
        strength = self.cleaned_data.get('strength')
        return 0.0 if strength is None else strength

    def clean_omega(self):
        omega = self.cleaned_data.get('omega')
        if omega is None:
            return 4.07e3
        if omega <= 0:
            raise ValidationError('Drive frequency must be positive.')
        return omega

    def clean_n_outputs(self):
        return self.cleaned_data.get('n_outputs') or 101


class SweepForm(ParticleForm, _DriveMixin):
    MODE_CHOICES = [('frequency', 'Vary omega at fixed a*omega'), ('strength', 'Vary a*omega at fixed omega')]

    mode = forms.ChoiceField(choices=MODE_CHOICES, required=False)
    sigmas = SigmaListField(required=False)
    fixed = forms.FloatField(required=False)
    start = forms.FloatField(required=False)
    stop = forms.FloatField(required=False)
    points = forms.IntegerField(required=False, min_value=0)
    threads = forms.IntegerField(required=False, min_value=1)

    def clean(self):
        cleaned_data = super().clean()
        mode = cleaned_data.get('mode') or 'frequency'
        cleaned_data['mode'] = mode
        if mode == 'frequency':
            defaults = (2.05e-3, 3.0e3, 5.0e3)
        else:
            defaults = (4.07e3, 0.0, 4.0e-3)
        for name, default in zip(('fixed', 'start', 'stop'), defaults):
            if cleaned_data.get(name) is None:
                cleaned_data[name] = default
        if cleaned_data.get('points') is None:
            cleaned_data['points'] = 41
        if mode == 'frequency' and min(cleaned_data['start'], cleaned_data['stop']) <= 0 and cleaned_data['points']:
            self.add_error('start', 'Frequencies must be positive.')
        if mode == 'strength' and min(cleaned_data['start'], cleaned_data['stop']) < 0:
            self.add_error('start', 'Strengths must be non-negative.')
        if not cleaned_data.get('sigmas'):
            cleaned_data['sigmas'] = [250.0, 500.0, 1000.0]
        if math.inf not in cleaned_data['sigmas']:
            cleaned_data['sigmas'] = list(cleaned_data['sigmas']) + [math.inf]
        cleaned_data['threads'] = cleaned_data.get('threads') or settings.WORKERS
        return cleaned_data


class FitForm(ParticleForm):
    data = forms.CharField()
    summary = forms.CharField(required=False)
    sigma_min = forms.FloatField(required=False)
    sigma_max = forms.FloatField(required=False)
    sigma_points = forms.IntegerField(required=False, min_value=1)
    sigmas = SigmaListField(required=False)
    velocity_points = forms.IntegerField(required=False, min_value=1)
    level = forms.FloatField(required=False)
    out = forms.CharField(required=False)
    threads = forms.IntegerField(required=False, min_value=1)

    def clean_level(self):
        level = self.cleaned_data.get('level')
        if level is None:
            return settings.CONFIDENCE_LEVEL
        if not 0 < level < 1:
            raise ValidationError('Confidence level must lie strictly between 0 and 1.')
        return level

    def clean(self):
        cleaned_data = super().clean()
        lo, hi, count = settings.SIGMA_GRID
        lo = cleaned_data.get('sigma_min') or lo
        hi = cleaned_data.get('sigma_max') or hi
        count = cleaned_data.get('sigma_points') or count
        if not 0 < lo <= hi:
            self.add_error('sigma_min', 'Sigma range must be positive and increasing.')
            return cleaned_data
        if not cleaned_data.get('sigmas'):
            cleaned_data['sigmas'] = [float(s) for s in np.geomspace(lo, hi, count)] + [math.inf]
        v_lo, v_hi, v_count = settings.VELOCITY_GRID
        cleaned_data['velocity_points'] = cleaned_data.get('velocity_points') or v_count
        cleaned_data['threads'] = cleaned_data.get('threads') or settings.WORKERS
        return cleaned_data


class SynthForm(ParticleForm, _DriveMixin):
    sigma = SigmaField(required=False)
    seed = forms.IntegerField(required=False)
    noise_scale = forms.FloatField(required=False, min_value=0.0)
    error = forms.FloatField(required=False)
    frequencies = FloatListField(required=False)
    strengths = FloatListField(required=False)

    def clean_sigma(self):
        sigma = self.cleaned_data.get('sigma')
        return 500.0 if sigma is None else sigma

    def clean_error(self):
        error = self.cleaned_data.get('error')
        if error is None:
            return 0.02
        if error <= 0:
            raise ValidationError('Measurement error must be positive.')
        return error

    def clean(self):
        cleaned_data = super().clean()
        cleaned_data['seed'] = cleaned_data.get('seed') or 0
        if cleaned_data.get('noise_scale') is None:
            cleaned_data['noise_scale'] = 1.0
        if cleaned_data.get('coefficients') == (1.0, 1.0, 1.0) and not self.data.get('coefficients'):
            cleaned_data['coefficients'] = (1.46, 0.50, 0.50)
        return cleaned_data
