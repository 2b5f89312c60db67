"""
Django settings for fspair_project project.

The project has no web surface: Django provides the configuration layer,
logging, the management-command CLI and the test runner.
"""

from pathlib import Path
import os
from dotenv import load_dotenv
import logging

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'fspair-local-key')

DEBUG = os.getenv('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'summation_pairs',
]

# No models; SimpleTestCase suites never touch a database.
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True
TIME_ZONE = 'UTC'


# Numerical defaults. Overridable per run through a json5 file named by FSPAIR_CONFIG.
FSPAIR = {
    'poisson_t_max': 64.0,
    'poisson_lambda_max': 64.0,
    'guinand_c': 1.0 / 9.0,
    'guinand_n_max': 512,
    'meyer_n_max': 2000,
    'quadrature_tol': 1e-8,
    'quadrature_limit': 400,
    'merge_distance': 1e-12,
    'kernel_singular_radius': 1e-6,
    'eigen_tol_rel': 1e-9,
    'recover_s_sequence': [1e-1, 1e-2, 1e-3],
    'ap_grid_points': 1024,
    'ap_grid_halfwidth': 8.0,
    'ef_panel_order': 10,
}

FSPAIR_CONFIG = os.getenv('FSPAIR_CONFIG')

LOG_LEVEL = os.getenv('FSPAIR_LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('FSPAIR_LOG_FILE')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
            'level': LOG_LEVEL,
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'summation_pairs': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

# Local runs can also keep a log file
if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'verbose',
        'level': 'DEBUG',
    }
    LOGGING['loggers']['summation_pairs']['handlers'].append('file')

logging.getLogger('numba').setLevel(logging.WARNING)
