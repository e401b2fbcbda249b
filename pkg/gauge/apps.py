from django.apps import AppConfig


class GaugeConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'gauge'
