from django.urls import path
from . import views

app_name = 'api'

urlpatterns = [
    # Presets
    path('presets/', views.preset_list, name='preset_list'),
    path('presets/<slug:name>/', views.preset_detail, name='preset_detail'),

    # Models
    path('evaluate/', views.evaluate, name='evaluate'),
    path('simulate/', views.simulate, name='simulate'),
]
