import json

import pytest

from relex.pipeline import run_synth
from relex.synth import SynthSpec


SMALL_SPEC = dict(
    num_classes=3,
    samples_per_cluster=30,
    input_dim=8,
    cluster_count=3,
    label_sets_per_cluster=[[0], [1], [1, 2]],
    noise_scale=0.05,
    seed=17,
)


@pytest.fixture
def small_dataset(tmp_path):
    """A tiny separable dataset directory with manifest + train/test splits."""
    data_dir = tmp_path / "data"
    spec = SynthSpec.from_dict(SMALL_SPEC)
    summary = run_synth(spec, data_dir)
    return data_dir, summary


@pytest.fixture
def small_spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(SMALL_SPEC))
    return path
