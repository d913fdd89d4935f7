"""
URL configuration for the cachemodel project.

Only the JSON API is routed; the design-space tooling itself runs through
``manage.py`` commands.
"""
from django.urls import path, include

urlpatterns = [
    path('api/v1/', include('api.urls')),
]
