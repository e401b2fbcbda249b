from django.apps import AppConfig


class PathsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'paths'
