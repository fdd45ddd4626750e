"""Shared builders for test configurations."""

from __future__ import annotations

import math
from dataclasses import replace

from whichway import (
    AliceMode,
    BeamSplitterSpec,
    CoincidenceSpec,
    CollapseSpec,
    ExperimentConfig,
    Geometry,
    GridSpec,
    InterferometerSpec,
    NoiseSpec,
    SourceSpec,
    SourceType,
    StateModel,
)

K_DEFAULT = 2.0e6 * math.pi


def make_config(**overrides) -> ExperimentConfig:
    """Ideal balanced reduced-model config; override any field by name."""
    cfg = ExperimentConfig(
        source=SourceSpec(matching_type=SourceType.TYPE1),
        model=StateModel.REDUCED_BELL,
        bs_a=BeamSplitterSpec.balanced(),
        bs_b=BeamSplitterSpec.balanced(),
        interferometer=InterferometerSpec(k=K_DEFAULT),
        geometry=Geometry(path_s_to_a=30.0, path_s_to_b=33.0, dist_a_to_b=60.0),
        collapse=CollapseSpec.infinite(),
        noise=NoiseSpec(),
        coincidence=CoincidenceSpec(),
        trials_per_point=2000,
        delta_r_grid=GridSpec(0.0, 1.0e-6, 8),
        k_grid=GridSpec(-3.0, 3.0, 9),
        master_seed=11,
    )
    return replace(cfg, **overrides) if overrides else cfg


def at_theta(cfg: ExperimentConfig, theta: float) -> ExperimentConfig:
    """Shift the interferometer so k*delta_r equals theta."""
    ifm = replace(cfg.interferometer, delta_r=theta / cfg.interferometer.k)
    return replace(cfg, interferometer=ifm)
