from django.apps import AppConfig


class ObservationsConfig(AppConfig):
    name = 'observations'
    verbose_name = 'Observation channels'
