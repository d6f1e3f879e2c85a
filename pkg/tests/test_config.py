import pytest

from nora.config import NUMERIC_FIELDS, ConfigError, ScenarioConfig, build_config, parse_config

DEFAULTS = dict(ues=40000, t_ap=10000.0, t_rap=5.0, d_c=500.0, t_rms_us=0.3, preambles=54, max_attempts=10,
               rate_0=1.6, rate_1=1.6, rate_2=1.6, delta_db=3.0, snr_db=10.0, theta=1.0, t_prach=2.0, t_pd=2.0,
               t_rar=1.0, t_r3=3.0, t_msg3=3.0, t_cr=1.0, w_rar=6.0, w_cr=16.0, w_bo=20.0, eta=0.5, xi=0.5)


def test_empty_file_gives_defaults(tmp_path):
    f = tmp_path / "empty.ini"
    f.write_text("")
    cfg = parse_config(f)
    for k, v in DEFAULTS.items():
        assert getattr(cfg, k) == v, k
    assert cfg.arrival == "uniform"
    assert cfg == parse_config()


def test_traffic_model_presets():
    tm2 = build_config(overrides={"traffic_model": "tm2"})
    assert (tm2.arrival, tm2.ues, tm2.beta_a, tm2.beta_b) == ("beta", 20000, 3.0, 4.0)
    over = build_config(overrides={"traffic_model": "tm2", "ues": 50000})
    assert over.ues == 50000 and over.arrival == "beta"
    assert over.replace(ues=20000) == tm2


def test_negative_t_rms_names_field():
    with pytest.raises(ConfigError, match=r"t_rms_us=-1\.0"):
        build_config(overrides={"t_rms_us": -1})


def test_all_errors_reported_together():
    with pytest.raises(ConfigError) as exc:
        build_config(overrides={"preambles": 1, "eta": 2})
    assert "preambles" in str(exc.value) and "eta" in str(exc.value)


def test_file_precedence_and_sections(tmp_path):
    f = tmp_path / "cfg.ini"
    f.write_text("# comment\n[scenario]\ntraffic_model = tm2\nues = 30000\n\n[run]\nscheme = ora ; inline\n"
                 "[timing]\nw-bo = 10\n")
    cfg = parse_config(f, {"ues": "25000"})
    assert cfg.ues == 25000 and cfg.arrival == "beta" and cfg.scheme == "ora" and cfg.w_bo == 10.0


@pytest.mark.parametrize("text,needle", [
    ("[scenario]\nbogus = 1\n", "unknown key"),
    ("[nope]\nues = 1\n", "unknown section"),
    ("[run]\nues = 1\n", "different section"),
    ("ues = 1\n", r"\[section\] header"),
    ("[scenario]\nues = many\n", "cannot convert"),
    ("[scenario]\nues = 2.5\n", "cannot convert"),
])
def test_file_errors(tmp_path, text, needle):
    f = tmp_path / "bad.ini"
    f.write_text(text)
    with pytest.raises(ConfigError, match=needle):
        parse_config(f)


def test_unknown_override():
    with pytest.raises(ConfigError, match="unknown config key"):
        build_config(overrides={"colour": "red"})


def test_detection_table():
    cfg = build_config(overrides={"max_attempts": 3, "detection_probs": "1, 0.5 0.25"})
    assert cfg.pool().detection_probs().tolist() == [1.0, 0.5, 0.25]
    with pytest.raises(ConfigError):
        build_config(overrides={"max_attempts": 3, "detection_probs": "1 0.5"})


def test_numeric_fields_and_frozen():
    assert "ues" in NUMERIC_FIELDS and "scheme" not in NUMERIC_FIELDS
    cfg = ScenarioConfig()
    with pytest.raises(Exception):
        cfg.ues = 3
