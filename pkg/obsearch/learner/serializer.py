from rest_framework import serializers

from learner.models import TrainConfig


class TrainConfigSerializer(serializers.Serializer):
    learning_rate = serializers.FloatField(default=0.003, min_value=0.0)
    hidden_sizes = serializers.ListField(child=serializers.IntegerField(min_value=1), allow_empty=False,
                                         required=False)
    batch_size = serializers.IntegerField(default=256, min_value=1)
    gamma = serializers.FloatField(default=0.99)
    tau = serializers.FloatField(default=0.005, min_value=0.0, max_value=1.0)
    steps_per_update = serializers.IntegerField(default=1, min_value=1)
    warmup_steps = serializers.IntegerField(default=1000, min_value=1)
    buffer_capacity = serializers.IntegerField(default=100_000, min_value=1)
    eval_episodes = serializers.IntegerField(default=20, min_value=1)

    def validate_gamma(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("gamma must lie strictly between 0 and 1")
        return value

    def validate_learning_rate(self, value):
        if value <= 0.0:
            raise serializers.ValidationError("learning rate must be positive")
        return value

    def validate_tau(self, value):
        if value <= 0.0:
            raise serializers.ValidationError("tau must be positive")
        return value

    def create(self, validated_data):
        # hidden sizes fall back to the per-environment default
        return TrainConfig.for_env(self.context.get("env_id", ""), **validated_data)
