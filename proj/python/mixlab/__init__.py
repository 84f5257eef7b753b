"""Simulated multi-speaker mixtures, cACGMM separation, MVDR beamforming and SDR metrics."""

import json

from . import _mixlab
from ._mixlab import (
    DataError,
    NumericalError,
    UsageError,
    bss_eval_sdr,
    fit_cacgmm,
    istft,
    mask_mvdr,
    mvdr_souden,
    resolve_permutation,
    sdr,
    si_sdr,
    stft,
)

__all__ = [
    "DataError",
    "NumericalError",
    "UsageError",
    "bss_eval_sdr",
    "default_config",
    "fit_cacgmm",
    "generate_dataset",
    "istft",
    "mask_mvdr",
    "mvdr_souden",
    "resolve_permutation",
    "sample_scene",
    "sdr",
    "separate_scene",
    "si_sdr",
    "simulate_rir",
    "simulate_scene",
    "stft",
    "validate_scene",
]


def _dump(config):
    return "" if config is None else json.dumps(config)


def default_config():
    return json.loads(_mixlab.default_config())


def sample_scene(seed, config=None):
    return json.loads(_mixlab.sample_scene(seed, _dump(config)))


def validate_scene(scene):
    return _mixlab.validate_scene(json.dumps(scene))


def simulate_rir(scene, config=None):
    return _mixlab.simulate_rir(json.dumps(scene), _dump(config))


def simulate_scene(master_seed, index, config=None):
    out = _mixlab.simulate_scene(master_seed, index, _dump(config))
    out["geometry"] = json.loads(out["geometry"])
    return out


def separate_scene(master_seed, index, method="cacgmm-mvdr", config=None):
    return _mixlab.separate_scene(master_seed, index, method, _dump(config))


def generate_dataset(out, seed=0, count=1, jobs=1, config=None):
    return json.loads(_mixlab.generate_dataset(str(out), seed, count, jobs, _dump(config)))
