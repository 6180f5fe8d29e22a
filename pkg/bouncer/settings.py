"""
Django settings for the bouncer project.

Every physics and numerics knob can be overridden from the environment or
from a ``.env`` file next to ``manage.py``.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/6.0/ref/settings/
"""

from pathlib import Path
import os

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')


def _env_bool(name, default):
    return os.getenv(name, str(default)).strip().lower() in ('1', 'true', 'yes', 'on')


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-bouncer-local-development-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = _env_bool('DEBUG', False)

ALLOWED_HOSTS = [host for host in os.getenv('ALLOWED_HOSTS', 'localhost,127.0.0.1').split(',') if host]


# Application definition

INSTALLED_APPS = [
    'gravity',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'bouncer.urls'

WSGI_APPLICATION = 'bouncer.wsgi.application'


# Database
# Nothing is persisted in a database; scan results are files.

DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Cache settings for propagated population tables
CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.filebased.FileBasedCache',
        'LOCATION': os.getenv('BOUNCER_CACHE_DIR', str(BASE_DIR / '.cache' / 'populations')),
        'TIMEOUT': None,
        'OPTIONS': {'MAX_ENTRIES': 1_000_000},
    },
}


# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'gravity': {
            'handlers': ['console'],
            'level': os.getenv('BOUNCER_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Bouncer basis
GRAVITY_ACCEL = float(os.getenv('BOUNCER_GRAVITY_ACCEL', '9.81'))  # m/s^2, site dependent
N_STATES = int(os.getenv('BOUNCER_N_STATES', '20'))
MAX_STATES = 50

# Overlap quadrature on [0, XI_MAX]
XI_MAX = float(os.getenv('BOUNCER_XI_MAX', '40.0'))
QUADRATURE_PANELS = int(os.getenv('BOUNCER_QUADRATURE_PANELS', '40'))
QUADRATURE_NODES = int(os.getenv('BOUNCER_QUADRATURE_NODES', '32'))

# Propagation
MAX_STEP = float(os.getenv('BOUNCER_MAX_STEP', '0.002'))
STEP_TOLERANCE = float(os.getenv('BOUNCER_STEP_TOLERANCE', '1e-8'))
MAX_STEP_HALVINGS = int(os.getenv('BOUNCER_MAX_STEP_HALVINGS', '6'))
VERIFY_STEP = _env_bool('BOUNCER_VERIFY_STEP', True)
TRACE_TOLERANCE = float(os.getenv('BOUNCER_TRACE_TOLERANCE', '1e-4'))
POSITIVITY_TOLERANCE = float(os.getenv('BOUNCER_POSITIVITY_TOLERANCE', '1e-6'))

# qBounce protocol
INITIAL_POPULATIONS = (0.597, 0.340, 0.063)
FLIGHT_LENGTH = float(os.getenv('BOUNCER_FLIGHT_LENGTH', '0.30'))  # m
VELOCITY_BOUNDS = (
    float(os.getenv('BOUNCER_VELOCITY_MIN', '5.6')),
    float(os.getenv('BOUNCER_VELOCITY_MAX', '9.5')),
)

# Fitting
SIGMA_GRID = (1e2, 1e3, 25)  # log-spaced, conservative node appended
VELOCITY_GRID = (VELOCITY_BOUNDS[0], VELOCITY_BOUNDS[1], 40)
CONFIDENCE_LEVEL = float(os.getenv('BOUNCER_CONFIDENCE_LEVEL', '0.90'))
PARITY_TOLERANCE = 1e-3
WORKERS = int(os.getenv('BOUNCER_WORKERS', '1'))

# Predictions
NUCLEON_RADIUS = float(os.getenv('BOUNCER_NUCLEON_RADIUS', '1e-15'))  # m, D-P coarse graining
