from django.apps import AppConfig


class GravityConfig(AppConfig):
    name = 'gravity'
    verbose_name = 'Entropic gravity bouncer'
