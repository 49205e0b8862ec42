import json
from pathlib import Path

from django.conf import settings
from rest_framework import serializers

from observations.exceptions import ChannelConfigError
from observations.models import PresetName
from observations.presets import preset, space_from_names
from envs.exceptions import EnvError
from envs.models import EnvId
from envs.registry import make_env
from harness.models import Command, ExperimentConfig
from learner.models import TrainConfig
from learner.serializer import TrainConfigSerializer
from permtest.serializer import PermTestConfigSerializer, default_permtest_config
from search.models import DEFAULT_STEPS, SearchConfig
from search.serializer import SearchConfigSerializer

# Keys that change where or how fast a run executes, never what it computes.
UNHASHED_KEYS = ('workers', 'out')


def _default(key):
    return lambda: settings.OBSEARCH[key]


class ExperimentConfigSerializer(serializers.Serializer):
    """The JSON config file of one experiment; ``save()`` returns an :class:`ExperimentConfig`."""

    command = serializers.ChoiceField(choices=Command.choices)
    env = serializers.ChoiceField(choices=EnvId.choices, source='env_id')
    env_options = serializers.DictField(default=dict)
    presets = serializers.ListField(child=serializers.CharField(max_length=64), default=list)
    space = serializers.CharField(max_length=64, default=PresetName.RS)
    channels = serializers.ListField(child=serializers.CharField(max_length=64), default=list)
    steps = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    seeds = serializers.IntegerField(min_value=1, default=_default('SEEDS'))
    root_seed = serializers.IntegerField(min_value=0, default=0)
    workers = serializers.IntegerField(min_value=1, default=_default('WORKERS'))
    out = serializers.CharField(source='out_dir', default=_default('OUT_DIR'))
    sweep = serializers.BooleanField(default=False)
    trajectories = serializers.BooleanField(default=False)
    train = TrainConfigSerializer(required=False)
    search = SearchConfigSerializer(required=False)
    permtest = PermTestConfigSerializer(required=False)

    def validate_out(self, value):
        try:
            Path(value).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise serializers.ValidationError(f"cannot create output directory: {exc}")
        return value

    def validate(self, attrs):
        try:
            env = make_env(attrs['env_id'], **attrs['env_options'])
        except (EnvError, ChannelConfigError) as exc:
            raise serializers.ValidationError({'env_options': [str(exc)]})

        command = attrs['command']
        if command == Command.BENCH and not attrs['presets']:
            raise serializers.ValidationError({'presets': ["bench needs at least one preset"]})
        names = attrs['presets'] if command == Command.BENCH else [attrs['space']]
        if command == Command.SEARCH:
            names = names + [PresetName.RS, PresetName.OAI]
        errors = []
        for name in dict.fromkeys(names):
            try:
                preset(name, env)
            except ChannelConfigError as exc:
                errors.append(str(exc))
        if errors:
            raise serializers.ValidationError({'presets' if command == Command.BENCH else 'space': errors})
        if attrs['channels']:
            try:
                space_from_names(env, attrs['channels'])
            except ChannelConfigError as exc:
                raise serializers.ValidationError({'channels': [str(exc)]})

        search = attrs.get('search') or {}
        steps = attrs.get('steps') or search.get('steps') or DEFAULT_STEPS.get(attrs['env_id'], SearchConfig.steps)
        warmup = (attrs.get('train') or {}).get('warmup_steps', TrainConfig.warmup_steps)
        if steps < warmup:
            raise serializers.ValidationError({'steps': [f"{steps} steps do not cover {warmup} warmup steps"]})
        aux_steps = (attrs.get('permtest') or {}).get('aux_train_steps')
        if aux_steps is not None and aux_steps < warmup:
            raise serializers.ValidationError(
                {'permtest': [f"aux_train_steps {aux_steps} does not cover {warmup} warmup steps"]})
        attrs['steps'] = steps
        return attrs

    def create(self, validated_data):
        env_id = validated_data['env_id']
        # nested serializers pick per-environment defaults from the shared context
        self.context['env_id'] = env_id
        train = validated_data.pop('train', None)
        train = self.fields['train'].create(train) if train is not None else TrainConfig.for_env(env_id)

        search_data = validated_data.pop('search', None)
        search = None
        if search_data is not None:
            search_data.setdefault('steps', validated_data['steps'])
            search = self.fields['search'].create(search_data)
        elif validated_data['command'] == Command.SEARCH:
            search = SearchConfig.for_env(env_id, steps=validated_data['steps'], permtest=default_permtest_config())
        if search is not None:
            search.train = search.train or train
            search.permtest.train = search.permtest.train or search.train

        permtest_data = validated_data.pop('permtest', None)
        if permtest_data is not None:
            sweep_rates = list(permtest_data.get('sweep_rates', settings.OBSEARCH['SWEEP_DROPOUT_RATES']))
            permtest = self.fields['permtest'].create(permtest_data)
        else:
            sweep_rates = list(settings.OBSEARCH['SWEEP_DROPOUT_RATES'])
            permtest = default_permtest_config()
        permtest.train = permtest.train or train

        snapshot = {k: v for k, v in json.loads(json.dumps(self.initial_data)).items() if k not in UNHASHED_KEYS}
        return ExperimentConfig(train=train, search=search, permtest=permtest, sweep_rates=sweep_rates,
                                snapshot=snapshot, **validated_data)


def load_experiment_config(path, **overrides) -> ExperimentConfig:
    """Read a config file, apply non-``None`` overrides and validate; raises ``ValidationError``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise serializers.ValidationError({'config': [f"cannot read {path}: {exc}"]})
    if not isinstance(data, dict):
        raise serializers.ValidationError({'config': [f"{path} must hold a JSON object"]})
    data.update({k: v for k, v in overrides.items() if v is not None})
    serializer = ExperimentConfigSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return serializer.save()


class FailureSerializer(serializers.Serializer):
    seed = serializers.IntegerField()
    label = serializers.CharField()
    error = serializers.CharField()


class SeedMetadataSerializer(serializers.Serializer):
    seed_index = serializers.IntegerField()
    labels = serializers.ListField(child=serializers.CharField())
    failures = serializers.DictField(child=serializers.CharField())
    wall_seconds = serializers.FloatField()
    extra = serializers.DictField()


class RunMetadataSerializer(serializers.Serializer):
    """``metadata.json`` at the root of a run directory; ``report`` reads it back."""

    command = serializers.ChoiceField(choices=Command.choices)
    env = serializers.CharField(source='env_id')
    config_hash = serializers.CharField(max_length=12)
    config = serializers.DictField(source='snapshot')
    bucket_steps = serializers.IntegerField(min_value=1)
    seeds = serializers.IntegerField(min_value=1)
    labels = serializers.ListField(child=serializers.CharField())
    completed_seeds = serializers.ListField(child=serializers.IntegerField())
    failed_seeds = FailureSerializer(many=True)
    started = serializers.DateTimeField()
    finished = serializers.DateTimeField()
    wall_seconds = serializers.FloatField()


def write_json(serializer_class, instance, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(serializer_class(instance).data, indent=2))
    return path
