"""Documented per-corpus inference presets.

Projection training transfers across corpora with one configuration (the
library defaults), but the inference-stage knobs k and c are corpus-dependent.
These are the validated settings for the common public benchmarks; they are
plain data consumed via ``--preset``, never implicit behavior.
"""

from .errors import ConfigError

INFERENCE_PRESETS: dict[str, dict] = {
    "nyt10m": {"k": 50, "c": 0.6},
    "nyt10d": {"k": 100, "c": 0.7},
    "disrex": {"k": 50, "c": 0.5},
    "wiki20m": {"k": 100, "c": 0.5},
    "wiki20d": {"k": 150, "c": 0.7},
}


def inference_preset(name: str) -> dict:
    try:
        return dict(INFERENCE_PRESETS[name.lower()])
    except KeyError:
        known = ", ".join(sorted(INFERENCE_PRESETS))
        raise ConfigError(f"unknown preset {name!r}; known presets: {known}")
