from django.conf import settings
from rest_framework import serializers

from learner.serializer import TrainConfigSerializer
from permtest.models import PermTestConfig


def _default(key):
    return lambda: settings.OBSEARCH[key]


class PermTestConfigSerializer(serializers.Serializer):
    dropout_rate = serializers.FloatField(default=_default('DROPOUT_RATE'), min_value=0.0)
    eval_episodes = serializers.IntegerField(default=_default('PERMTEST_EPISODES'), min_value=1)
    keep_threshold = serializers.FloatField(default=_default('KEEP_THRESHOLD'))
    aux_train_steps = serializers.IntegerField(required=False, allow_null=True, min_value=1)
    sweep_rates = serializers.ListField(child=serializers.FloatField(min_value=0.0), allow_empty=False,
                                        default=_default('SWEEP_DROPOUT_RATES'), write_only=True)
    train = TrainConfigSerializer(required=False)

    def validate_dropout_rate(self, value):
        if value >= 1.0:
            raise serializers.ValidationError("dropout rate must be below 1")
        return value

    def validate_keep_threshold(self, value):
        if value <= 0.0:
            raise serializers.ValidationError("keep threshold must be positive")
        return value

    def validate_sweep_rates(self, value):
        if any(rate >= 1.0 for rate in value):
            raise serializers.ValidationError("dropout rates must be below 1")
        return value

    def create(self, validated_data):
        validated_data.pop('sweep_rates', None)
        train = validated_data.pop('train', None)
        if train is not None:
            train = self.fields['train'].create(train)
        return PermTestConfig(train=train, **validated_data)


def default_permtest_config() -> PermTestConfig:
    defaults = settings.OBSEARCH
    return PermTestConfig(dropout_rate=defaults['DROPOUT_RATE'], eval_episodes=defaults['PERMTEST_EPISODES'],
                          keep_threshold=defaults['KEEP_THRESHOLD'])
