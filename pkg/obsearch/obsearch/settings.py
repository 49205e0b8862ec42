"""
Django settings for the obsearch project.

Only the pieces of Django the project actually uses are configured here: the
app registry (so ``manage.py test`` and the management commands find every
app), logging, and the ``OBSEARCH`` defaults read by the harness.

There is no database traffic; the sqlite entry exists because Django's
checks expect a default connection.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


SECRET_KEY = os.environ.get('OBSEARCH_SECRET_KEY', 'obsearch-local-only-not-a-secret')

DEBUG = os.environ.get('OBSEARCH_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'observations',
    'envs',
    'learner',
    'search',
    'permtest',
    'harness',
]

REST_FRAMEWORK = {
    'COERCE_DECIMAL_TO_STRING': False,
    'UNAUTHENTICATED_USER': None,
}

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True

TIME_ZONE = 'UTC'


# Logging
# https://docs.djangoproject.com/en/5.2/topics/logging/

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.environ.get('OBSEARCH_LOG_LEVEL', 'INFO'),
    },
}


# Experiment defaults. Config files and CLI flags override these per run.

OBSEARCH = {
    'OUT_DIR': os.environ.get('OBSEARCH_OUT_DIR', str(BASE_DIR.parent / 'out')),
    'SEEDS': 10,
    'WORKERS': 1,
    'BUCKET_STEPS': 1000,
    'EVAL_EPISODES': 20,
    'PERMTEST_EPISODES': 100,
    'DROPOUT_RATE': 0.1,
    'KEEP_THRESHOLD': 0.05,
    'SWEEP_DROPOUT_RATES': [0.3, 0.1, 0.05, 0.01],
    'LOG_EVERY_EPISODES': 10,
}
