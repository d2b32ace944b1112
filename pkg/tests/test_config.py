import numpy as np
import pytest

from ends_scatter.config import (ConfigError, GridConfig, RunConfig,
                                 default_config, load_config, parse_config,
                                 thread_cap)

FULL = """
[model]
r0 = 2.5
name = bespoke

[ends.1]
profile = conic: 1.5
q1_amplitude = 1.0
q1_power = 0.8

[ends.2]
profile = hyperbolic
decay = 1.0, 2.0, 0.5

[potential]
core = square: 1.2, 0.8

[grid]
rmax = 30
dx = 0.02
mmax = 1

[run]
lambda_grid = 0.4:0.9:5
t_grid = 5, 10, 20
end = 2
profile_center = 0.6
tol_w = 5e-4
"""


def test_default_config_presets():
    cfg = default_config("B")
    assert cfg.model.name == "B"
    assert cfg.grid.rmax == 60.0
    assert cfg.run.end == 1


def test_parse_full_config():
    cfg = parse_config(FULL)
    m = cfg.model
    assert m.name == "bespoke" and m.r0 == 2.5
    r = np.linspace(5.0, 20.0, 50)
    assert np.allclose(m.ends[0].f(r), 1.5 * r)         # conic opening
    assert m.ends[1].lambda0 == 0.125                   # hyperbolic end
    assert m.ends[1].decay == (1.0, 2.0, 0.5)
    # reference tail glued above the threshold
    assert abs(m.ends[0].q1(np.array([100.0]))[0] - 100.0**-0.8) < 1e-10
    # square core barrier
    assert np.allclose(m.potential(np.array([0.0, 0.5, 1.0])), [1.2, 1.2, 0.0])
    assert cfg.grid == GridConfig(30.0, 0.02, 1)
    assert cfg.run.lambda_grid == (0.4, 0.9, 5)
    assert cfg.run.t_grid == (5.0, 10.0, 20.0)
    assert cfg.run.end == 2
    assert cfg.run.tol_w == 5e-4
    assert cfg.run.tol_s == 1e-6  # untouched default
    assert np.allclose(cfg.run.lambdas, np.linspace(0.4, 0.9, 5))


def test_preset_shortcut_overrides_ends():
    cfg = parse_config("[model]\npreset = D\n")
    assert cfg.model.name == "D"
    assert cfg.model.potential(np.array([0.0]))[0] == 1.5


@pytest.mark.parametrize("text,match", [
    ("[grid]\nrmax = 10\n", "missing \\[model\\]"),
    ("[model]\npreset = Z\n", "unknown preset"),
    ("[model]\nr0 = 1.0\n", "r0 must be >= 2"),
    ("[model]\npreset = A\n\n[mystery]\nx = 1\n", "unknown config sections"),
    ("[model]\npreset = A\n[run]\nlambda_grid = 1:0.5:4\n", "lambda_grid"),
    ("[model]\npreset = A\n[run]\nt_grid = 10, 5\n", "t_grid"),
    ("[model]\npreset = A\n[run]\nend = 3\n", "end must be"),
    ("[model]\npreset = A\n[grid]\ndx = -0.1\n", "must be positive"),
    ("[model]\nr0 = 2\n[ends.1]\nprofile = weird\n", "unknown profile"),
    ("[model]\nr0 = 2\n[ends.1]\nprofile = conic\n", "conic:ALPHA"),
    ("[model]\nr0 = 2\n[ends.1]\nprofile = euclidean\n[ends.2]\n"
     "profile = euclidean\n[potential]\ncore = square: 1.0, 5.0\n",
     "fit inside"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_missing_end_section_without_preset():
    with pytest.raises(ConfigError, match="ends.2"):
        parse_config("[model]\nr0 = 2\n[ends.1]\nprofile = euclidean\n")


def test_table_profile_from_file(tmp_path):
    r = np.linspace(1.0, 30.0, 60)
    f = r + 0.1 * np.sin(r)
    path = tmp_path / "prof.csv"
    path.write_text("# r, f\n" + "\n".join(
        f"{float(a)!r},{float(b)!r}" for a, b in zip(r, f)))
    text = ("[model]\nr0 = 2\n"
            f"[ends.1]\nprofile = table: {path}\n"
            "[ends.2]\nprofile = euclidean\n")
    cfg = parse_config(text, base=str(tmp_path))
    assert np.allclose(cfg.model.ends[0].f(r[20:]), f[20:], rtol=1e-10)


def test_table_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config("[model]\nr0 = 2\n[ends.1]\nprofile = table: nope.csv\n"
                     "[ends.2]\nprofile = euclidean\n", base=str(tmp_path))
    bad = tmp_path / "bad.csv"
    bad.write_text("1,1\n0.5,2\n2,3\n3,4\n")
    with pytest.raises(ConfigError, match="increase strictly"):
        parse_config("[model]\nr0 = 2\n[ends.1]\nprofile = table: bad.csv\n"
                     "[ends.2]\nprofile = euclidean\n", base=str(tmp_path))


def test_load_config_records_source(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("[model]\npreset = A\n")
    cfg = load_config(str(p))
    assert cfg.source == str(p)
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.cfg"))


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("ENDS_SCATTER_THREADS", raising=False)
    assert thread_cap() == 1
    monkeypatch.setenv("ENDS_SCATTER_THREADS", "4")
    assert thread_cap() == 4
    monkeypatch.setenv("ENDS_SCATTER_THREADS", "0")
    assert thread_cap() == 1
    monkeypatch.setenv("ENDS_SCATTER_THREADS", "banana")
    assert thread_cap() == 1


def test_run_config_validation_direct():
    with pytest.raises(ConfigError):
        RunConfig(profile_width=-1.0).validate()
    with pytest.raises(ConfigError):
        RunConfig(dt=0.0).validate()
    with pytest.raises(ConfigError):
        RunConfig(tol_s=0.0).validate()
