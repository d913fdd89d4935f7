"""
WSGI config for the cachemodel project.

Exposes the HTTP API as a module-level callable named ``application``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'cachemodel.settings')

application = get_wsgi_application()
