from django.apps import AppConfig


class SearchAppConfig(AppConfig):
    name = 'search'
    verbose_name = 'Observation-space search'
