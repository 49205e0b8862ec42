import json
from pathlib import Path

import numpy as np
from rest_framework import serializers

from observations.models import ChannelGroup, ObservationSpace


class RangeField(serializers.Field):
    """Per-dimension ``[min, max]`` pairs; ``null`` until a sample has been recorded."""

    def to_representation(self, pairs):
        return [list(p) for p in pairs]

    def to_internal_value(self, data):
        if data is None:
            return None
        try:
            pairs = [(float(lo), float(hi)) for lo, hi in data]
        except (TypeError, ValueError):
            raise serializers.ValidationError("expected a list of [min, max] pairs")
        if any(lo > hi for lo, hi in pairs):
            raise serializers.ValidationError("range minimum exceeds maximum")
        return pairs


class ChannelSpecSerializer(serializers.Serializer):
    name = serializers.CharField(max_length=64)
    group = serializers.ChoiceField(choices=ChannelGroup.choices)
    dim = serializers.IntegerField(min_value=1)
    range = RangeField(source='range_pairs', required=False, allow_null=True)

    def validate(self, attrs):
        pairs = attrs.get('range_pairs')
        if pairs is not None and len(pairs) != attrs['dim']:
            raise serializers.ValidationError({'range': f"expected {attrs['dim']} pairs, got {len(pairs)}"})
        return attrs


class ObservationSpaceSerializer(serializers.Serializer):
    """``{name, history_len, action_dim, channels: [{name, group, dim, range}]}``.

    Loading resolves each channel against ``context['env']``'s registry so the
    restored space can extract values again.
    """
    name = serializers.CharField(max_length=64)
    history_len = serializers.IntegerField(min_value=1)
    action_dim = serializers.IntegerField(min_value=0)
    include_prev_actions = serializers.BooleanField(read_only=True)
    channels = ChannelSpecSerializer(many=True)

    def validate_channels(self, value):
        names = [c['name'] for c in value]
        if len(set(names)) != len(names):
            raise serializers.ValidationError("a channel appears twice")
        return value

    def validate(self, attrs):
        env = self.context.get('env')
        if env is None:
            return attrs
        registry = {c.name: c for c in env.channel_registry()}
        errors = []
        for item in attrs['channels']:
            spec = registry.get(item['name'])
            if spec is None:
                errors.append(f"unknown channel {item['name']!r} for {env.spec.env_id}")
            elif spec.dim != item['dim'] or spec.group != item['group']:
                errors.append(f"channel {item['name']!r} does not match the registry definition")
        if errors:
            raise serializers.ValidationError({'channels': errors})
        return attrs

    def create(self, validated_data):
        registry = {c.name: c for c in self.context['env'].channel_registry()}
        channels = []
        for item in validated_data['channels']:
            spec = registry[item['name']]
            if item.get('range_pairs') is not None:
                spec.low = np.array([lo for lo, _ in item['range_pairs']])
                spec.high = np.array([hi for _, hi in item['range_pairs']])
            channels.append(spec)
        history_len = validated_data['history_len']
        return ObservationSpace(
            channels=channels,
            action_dim=validated_data['action_dim'],
            history_len=history_len,
            include_prev_actions=history_len > 1,
            name=validated_data['name'],
        )


def write_space_json(space, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(ObservationSpaceSerializer(space).data, indent=2))
    return path


def read_space_json(path, env):
    serializer = ObservationSpaceSerializer(data=json.loads(Path(path).read_text()), context={'env': env})
    serializer.is_valid(raise_exception=True)
    return serializer.save()
