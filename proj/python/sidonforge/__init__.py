# SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
#
# SPDX-License-Identifier: Apache-2.0

"""Array-in, array-out access to the sidonforge degradation pipeline."""

import json
from pathlib import Path

from . import _sidonforge
from ._sidonforge import (  # noqa: F401
    AbsorptionInfeasible,
    AlignmentFailure,
    BackendFailure,
    BackendUnavailable,
    DecayRangeUnavailable,
    EmptyPool,
    FatalConfig,
    InvalidArgument,
    InvalidGeometry,
    IoError,
    MalformedWav,
    NoiseDecodeFatal,
    RateMismatch,
    SidonforgeError,
    SilentResidual,
    SilentSignal,
    UnsupportedEncoding,
    UnsupportedRate,
    derive_seed,
)


class BoundPipeline:
    """A validated (config, noise pool, codec backend, seed) bundle.

    Build from TOML text or a config file path. Relative paths in the config
    resolve against `base_dir`, or the file's directory when a path is given.
    """

    def __init__(self, config, base_dir=None):
        if isinstance(config, Path) or (isinstance(config, str) and config.endswith(".toml")):
            path = Path(config)
            text = path.read_text()
            base = base_dir if base_dir is not None else path.parent
        else:
            text = config
            base = base_dir if base_dir is not None else ""
        self._native = _sidonforge.BoundPipeline(text, str(base))

    @property
    def global_seed(self):
        return self._native.global_seed

    def degrade_array(self, samples, sample_rate_hz, utterance_id, variant_index):
        """Returns (degraded float64 array, DegradationRecord as a dict)."""
        audio, record = self._native.degrade_array(samples, sample_rate_hz, utterance_id, variant_index)
        return audio, json.loads(record)


def degrade_array(pipeline, samples, sample_rate_hz, utterance_id, variant_index):
    return pipeline.degrade_array(samples, sample_rate_hz, utterance_id, variant_index)


__all__ = ["BoundPipeline", "degrade_array", "derive_seed", "SidonforgeError", "FatalConfig"]
