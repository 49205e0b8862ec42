from django.apps import AppConfig


class PermtestAppConfig(AppConfig):
    name = 'permtest'
    verbose_name = 'Dropout-permutation test'
