"""Smoke coverage for the figure renderers.

Each renderer gets a real result object from a small run and must leave a
valid PNG behind.  Content is not pixel checked; the goal is that every
report path draws without errors under the Agg backend.
"""

import pytest

from conftest import make_config
from whichway.experiments import (
    exp_coherence_test,
    exp_commutation,
    exp_kink,
    exp_qi_speed,
    exp_remote_which_way,
)
from whichway.montecarlo import GridSpec, NoiseSpec
from whichway.output import IoError
from whichway.report import (
    render_coherence,
    render_commutation,
    render_kink,
    render_qispeed,
    render_whichway,
)
from whichway.timing import CollapseSpec, Geometry

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def check_png(path):
    assert path.exists()
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_render_whichway(tmp_path):
    res = exp_remote_which_way(make_config(trials_per_point=500))
    out = tmp_path / "ww.png"
    render_whichway(res, out)
    check_png(out)


def test_render_kink(tmp_path):
    cfg = make_config(
        noise=NoiseSpec(jitter_sigma=0.5e-9),
        k_grid=GridSpec(-3.0, 3.0, 9),
        trials_per_point=500,
    )
    res = exp_kink(cfg)
    out = tmp_path / "kink.png"
    render_kink(res, out)
    check_png(out)


def test_render_qispeed(tmp_path):
    cfg = make_config(
        collapse=CollapseSpec(speed=10.0),
        noise=NoiseSpec(jitter_sigma=0.5e-9),
        k_grid=GridSpec(1.0, 9.0, 9),
        trials_per_point=500,
    )
    res = exp_qi_speed(cfg, Geometry(30.0, 33.0, 60.0), Geometry(30.0, 33.0, 30.0))
    out = tmp_path / "qispeed.png"
    render_qispeed(res, out)
    check_png(out)


def test_render_coherence(tmp_path):
    res = exp_coherence_test(make_config(trials_per_point=500))
    out = tmp_path / "coh.png"
    render_coherence(res, out)
    check_png(out)


def test_render_commutation(tmp_path):
    cfg = make_config(
        k_grid=GridSpec(-3.0, 3.0, 7),
        delta_r_grid=GridSpec(0.0, 1.0e-6, 8),
        trials_per_point=500,
    )
    res = exp_commutation(cfg)
    out = tmp_path / "comm.png"
    render_commutation(res, out)
    check_png(out)


def test_render_to_missing_directory_raises(tmp_path):
    res = exp_remote_which_way(make_config(trials_per_point=500))
    with pytest.raises(IoError):
        render_whichway(res, tmp_path / "no" / "such" / "dir" / "x.png")
