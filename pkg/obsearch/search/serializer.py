import json
import math
from pathlib import Path

from rest_framework import serializers

from observations.presets import SEARCH_GROUPS
from learner.serializer import TrainConfigSerializer
from permtest.serializer import PermTestConfigSerializer, default_permtest_config
from search.models import Grouping, Metric, SearchConfig


class ScoreField(serializers.FloatField):
    """Scores are ``-inf`` for failed trainings; JSON carries them as ``null``, read back as ``None``."""

    def to_representation(self, value):
        value = float(value)
        return value if math.isfinite(value) else None


class TraceEntrySerializer(serializers.Serializer):
    iter = serializers.IntegerField(source='iteration')
    group = serializers.CharField()
    candidate_channels = serializers.ListField(child=serializers.CharField())
    score = ScoreField(allow_null=True)
    accepted = serializers.BooleanField()
    pruned = serializers.ListField(child=serializers.CharField())
    best_score = ScoreField(allow_null=True)


def append_trace(entry, path):
    with Path(path).open('a') as fh:
        fh.write(json.dumps(TraceEntrySerializer(entry).data) + '\n')


def read_trace(path):
    rows = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
    serializer = TraceEntrySerializer(data=rows, many=True)
    serializer.is_valid(raise_exception=True)
    return serializer.validated_data


class SearchConfigSerializer(serializers.Serializer):
    metric = serializers.ChoiceField(choices=Metric.choices, default=Metric.ALL)
    grouping = serializers.ChoiceField(choices=Grouping.choices, default=Grouping.SEMANTIC)
    steps = serializers.IntegerField(min_value=1, required=False)
    max_iterations = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    patience = serializers.IntegerField(min_value=1, default=5)
    groups = serializers.ListField(child=serializers.ChoiceField(choices=list(SEARCH_GROUPS)),
                                   allow_empty=False, required=False)
    prune = serializers.BooleanField(default=True)
    eval_episodes = serializers.IntegerField(min_value=1, default=20)
    train = TrainConfigSerializer(required=False)
    permtest = PermTestConfigSerializer(required=False)

    def create(self, validated_data):
        train = validated_data.pop('train', None)
        permtest = validated_data.pop('permtest', None)
        if train is not None:
            train = self.fields['train'].create(train)
        permtest = self.fields['permtest'].create(permtest) if permtest is not None else default_permtest_config()
        if permtest.train is None:
            permtest.train = train
        return SearchConfig.for_env(self.context.get('env_id', ''), train=train, permtest=permtest,
                                    **validated_data)
