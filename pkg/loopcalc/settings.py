import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

from dotenv import load_dotenv

load_dotenv()


# Only management commands run; the key is never used for signing.
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'loopcalc-local')

DEBUG = os.getenv('DEBUG', 'false').strip().lower() in {'1', 'true', 'yes'}

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # internal apps
    'paths.apps.PathsConfig',
    'gauge.apps.GaugeConfig',
    'calculus.apps.CalculusConfig',
    'verify.apps.VerifyConfig',
    'cli.apps.CliConfig',
]

# No app owns database tables; the test runner only needs a valid entry.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

TIME_ZONE = 'UTC'

USE_TZ = True


# Logging: diagnostics go to stderr, stdout is reserved for command results.
LOG_LEVEL = os.getenv('LOOPCALC_LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        name: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for name in ('loopcalc', 'paths', 'gauge', 'calculus', 'verify', 'cli')
    },
}


# LOOPCALC SETTINGS
# Every numeric default of the toolkit lives here; option records read from it.
LOOPCALC = {
    'INTEGRATOR_STEPS': 64,
    'EPS_LIST': [1e-2, 5e-3, 2.5e-3],
    'RICHARDSON': True,
    # absolute per-coordinate vertex identity
    'POINT_TOL': 1e-12,
    # relative cross-product tolerance for collinearity
    'COLLINEAR_TOL': 1e-12,
    'ALGEBRA_TOL': 1e-10,
    'GROUP_TOL': 1e-10,
    'ORDER_NOISE_FACTOR': 1e3,
    'MIN_ORDER': 1.8,
    # upper bound on the observed order of first-derivative identities
    'MAX_ORDER': 2.2,
    'VERIFY_WORKERS': int(os.getenv('LOOPCALC_VERIFY_WORKERS', '4')),
    'DATA_DIR': BASE_DIR / 'data',
    'TOLERANCES': {
        'homomorphism': 1e-9,
        'inverse': 1e-9,
        'thin_invariance': 1e-9,
        'mandelstam': 1e-6,
        'decomposition': 1e-6,
        'decomposition_transport': 1e-10,
        'curvature': 1e-4,
        'antisymmetry': 1e-8,
        'commutator': 1e-3,
        'loop_homotopy': 1e-6,
        'bianchi_analytic': 1e-12,
        'bianchi_numeric': 1e-2,
    },
    'SAMPLES': {
        'homomorphism': 50,
        'inverse': 50,
        'thin_invariance': 50,
        'mandelstam': 20,
        'decomposition': 20,
        'decomposition_transport': 20,
        'curvature': 20,
        'antisymmetry': 20,
        'commutator': 10,
        'loop_homotopy': 20,
        'bianchi_analytic': 20,
        'bianchi_numeric': 3,
    },
}
