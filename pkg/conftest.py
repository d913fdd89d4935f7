import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'cachemodel.settings')
django.setup()
