"""
Django settings for the cachemodel project.

Besides the framework settings this module holds the ``CACHEMODEL_*`` knobs
read by the ``core`` app: parameter-file strictness, preset location and the
sweep limits.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY',
    'django-insecure-cachemodel-development-key-change-me',
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('DJANGO_DEBUG', '1') == '1'

ALLOWED_HOSTS = ['localhost', '127.0.0.1', 'testserver']


# Application definition

INSTALLED_APPS = [
    'core',
    'api',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'cachemodel.urls'

WSGI_APPLICATION = 'cachemodel.wsgi.application'


# Nothing is persisted: parameter sets, traces and reports live in files.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Uploaded traces are parsed in memory up to this size.
DATA_UPLOAD_MAX_MEMORY_SIZE = 64 * 1024 * 1024
FILE_UPLOAD_MAX_MEMORY_SIZE = 64 * 1024 * 1024


# Logging

LOG_LEVEL = os.environ.get('CACHEMODEL_LOG_LEVEL', 'INFO').upper()

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
        'core': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'api': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Cache model

# CACHEMODEL_STRICT=1 rejects unknown parameter keys and implausible values.
CACHEMODEL_STRICT = os.environ.get('CACHEMODEL_STRICT', '0') == '1'

CACHEMODEL_PRESET_DIR = BASE_DIR / 'core' / 'presets'

CACHEMODEL_SWEEP_POINT_CAP = int(os.environ.get('CACHEMODEL_SWEEP_POINT_CAP', '10000'))

CACHEMODEL_SWEEP_JOBS = int(os.environ.get('CACHEMODEL_SWEEP_JOBS', '1'))

CACHEMODEL_SCHEMA_VERSION = 1
