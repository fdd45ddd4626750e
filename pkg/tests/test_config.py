import math
from dataclasses import replace

import pytest

from whichway.config import (
    ConfigError,
    canonical_text,
    config_hash,
    load_config,
    parse_config,
    parse_run,
)
from whichway.montecarlo import AliceMode, GridSpec
from whichway.optics import SourceType, StateModel

MINIMAL = """
[source]
matching_type = type1

[run]
delta_r_grid = 0 : 1e-6 : 16
k_grid = -3 : 3 : 13
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.source.matching_type is SourceType.TYPE1
    assert cfg.source.phi_deg == 45.0
    assert cfg.model is StateModel.REDUCED_BELL
    assert cfg.bs_a.tau == pytest.approx(math.sqrt(0.5))
    assert cfg.interferometer.k == pytest.approx(2.0e6 * math.pi)
    assert cfg.interferometer.zeta == 0.0 and cfg.interferometer.eta == 0.5
    assert cfg.geometry.path_s_to_a == 30.0
    assert cfg.geometry.path_s_to_b == 33.0
    assert cfg.geometry.dist_a_to_b == 60.0
    assert cfg.collapse.is_infinite
    assert cfg.noise.epsilon == 0.0
    assert cfg.coincidence.window == 2.0e-7 and cfg.coincidence.enabled
    assert cfg.trials_per_point == 20000
    assert cfg.delta_r_grid == GridSpec(0.0, 1.0e-6, 16)
    assert cfg.k_grid == GridSpec(-3.0, 3.0, 13)
    assert cfg.master_seed == 0 and cfg.workers == 1
    assert cfg.alice_mode is AliceMode.BOTH


def test_parse_run_carries_the_alternate_distance():
    run = parse_run(MINIMAL + "\n[geometry]\ndist_a_to_b_alt = 30\n")
    assert run.dist_a_to_b_alt == 30.0
    assert parse_run(MINIMAL).dist_a_to_b_alt is None


FULL = """
[source]
matching_type = type2
phi_deg = 135

[model]
name = product

[optics_a]
tau = 0.6
rho = 0.8
phase_t = 0.1

[optics_b]
tau = 0.8
rho = 0.6
phase_r = -0.2

[interferometer]
k = 1.2e6
delta_r = 1e-7
theta_0 = 0.3
zeta = 0.1
eta = 0.35

[geometry]
path_s_to_a = 25
path_s_to_b = 31
dist_a_to_b = 45
dist_a_to_b_alt = 20
c_eff = 2.5e8

[collapse]
speed = 12.5

[noise]
epsilon = 0.07
noise_fringe_visibility = 0.4
detector_efficiency = 0.85
dark_rate = 1e4
jitter_sigma = 4e-10

[coincidence]
window = 1.5e-7
enabled = true

[run]
trials_per_point = 2500
delta_r_grid = 0 : 2e-6 : 12
k_grid = 0.5 : 8.5 : 9
master_seed = 77
workers = 4
alice_mode = mz_open
"""


def test_full_config_round_trips_through_canonical_text():
    run = parse_run(FULL)
    cfg = run.config
    assert cfg.model is StateModel.PRODUCT
    assert cfg.collapse.speed == 12.5
    assert cfg.alice_mode is AliceMode.MZ_OPEN
    text = canonical_text(cfg, dist_a_to_b_alt=run.dist_a_to_b_alt)
    again = parse_run(text)
    assert again.config == cfg
    assert again.dist_a_to_b_alt == 20.0
    assert config_hash(cfg, dist_a_to_b_alt=20.0) == config_hash(
        again.config, dist_a_to_b_alt=again.dist_a_to_b_alt
    )


def test_config_hash_is_sensitive_to_values():
    cfg = parse_config(MINIMAL)
    assert config_hash(cfg) != config_hash(replace(cfg, master_seed=1))
    assert len(config_hash(cfg)) == 16


def test_unknown_sections_and_keys_are_rejected():
    with pytest.raises(ConfigError, match="mystery"):
        parse_config(MINIMAL + "\n[mystery]\nx = 1\n")
    with pytest.raises(ConfigError, match="typo_key"):
        parse_config(MINIMAL + "\n[noise]\ntypo_key = 1\n")


def test_partial_splitter_spec_is_rejected():
    with pytest.raises(ConfigError, match="rho"):
        parse_config(MINIMAL + "\n[optics_a]\ntau = 0.6\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[optics_a]\ntau = 0.9\nrho = 0.5\n")


def test_invalid_values_surface_as_config_errors():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[collapse]\nspeed = -2\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[interferometer]\nzeta = 0.4\neta = 0.4\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[run]\ntrials_per_point = 10\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[run]\nalice_mode = sideways\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[model]\nname = bohmian\n")


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="matching_type"):
        parse_config("[run]\ndelta_r_grid = 0 : 1e-6 : 16\nk_grid = -3 : 3 : 13\n")
    with pytest.raises(ConfigError, match="delta_r_grid"):
        parse_config("[source]\nmatching_type = type1\n[run]\nk_grid = -3 : 3 : 13\n")


def test_grid_syntax_errors():
    for bad in ("0 : 1e-6", "0 : 1e-6 : 2.5", "a : b : 8", "0 : 1e-6 : 1"):
        with pytest.raises(ConfigError):
            parse_config(
                "[source]\nmatching_type = type1\n"
                f"[run]\ndelta_r_grid = {bad}\nk_grid = -3 : 3 : 13\n"
            )


def test_speed_sentinels_and_bool_forms():
    cfg = parse_config(MINIMAL + "\n[collapse]\nspeed = inf\n")
    assert cfg.collapse.is_infinite
    cfg = parse_config(MINIMAL + "\n[collapse]\nspeed = infinite\n")
    assert cfg.collapse.is_infinite
    cfg = parse_config(MINIMAL + "\n[coincidence]\nenabled = off\n")
    assert not cfg.coincidence.enabled
    cfg = parse_config(MINIMAL + "\n[coincidence]\nenabled = yes\n")
    assert cfg.coincidence.enabled
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[coincidence]\nenabled = maybe\n")


def test_load_config_reads_files(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL, encoding="utf-8")
    run = load_config(path)
    assert run.config == parse_config(MINIMAL)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_syntax_errors_are_config_errors():
    with pytest.raises(ConfigError):
        parse_config("not an ini file at all [[[")
    with pytest.raises(ConfigError):
        parse_config("[source]\nmatching_type\n")
