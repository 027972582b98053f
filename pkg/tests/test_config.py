import pytest

from rockeeg.config import (
    DATA_DIR_ENV,
    ConfigError,
    RunConfig,
    load_config,
    parse_text,
    parse_value,
)


def test_defaults_resolve_to_full_preset():
    cfg = load_config()
    assert cfg.conv_filters == (16, 32) and cfg.lstm_units == 100
    assert cfg.learning_rate == 1e-5 and cfg.batch_size == 64 and cfg.l2 == 0.01
    assert cfg.dropout == (0.5, 0.5, 0.25, 0.25) and cfg.lstm_reshape is None


def test_scaled_preset():
    cfg = load_config(overrides={"cnn_preset": "scaled"})
    assert cfg.conv_filters == (8, 16) and cfg.learning_rate == 1e-3
    assert cfg.lstm_reshape == "auto"
    spec = cfg.network_spec(input_length=64, n_classes=2)
    assert spec.lstm_input()[0] * spec.lstm_input()[1] == spec.pooled_length() * 16


def test_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nseed = 5\nfolds = 4\nepochs = 3  # trailing\n")
    cfg = load_config(path, {"seed": 9})
    assert (cfg.seed, cfg.folds, cfg.epochs) == (9, 4, 3)


def test_env_data_dir(monkeypatch, tmp_path):
    monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path))
    assert load_config().data_dir == str(tmp_path)
    assert load_config(overrides={"data_dir": "/x"}).data_dir == "/x"


def test_parse_values():
    assert parse_value("subjects", "1,2, 3") == (1, 2, 3)
    assert parse_value("dropout", "0.1,0.2,0.3,0.4") == (0.1, 0.2, 0.3, 0.4)
    assert parse_value("apply_car", "off") is False
    assert parse_value("target_rate", "none") is None
    assert parse_value("lstm_reshape", "25:816") == (25, 816)


@pytest.mark.parametrize("text", ["pipeline = svm", "folds = 1", "ratios = 1,2",
                                  "seed = abc", "bogus = 1", "no equals sign"])
def test_invalid(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text + "\n")
    with pytest.raises((ConfigError, TypeError)):
        load_config(path)


def test_echo_round_trip():
    cfg = load_config(overrides={"cnn_preset": "scaled", "subjects": "1,2", "seed": 4})
    text = cfg.to_text()
    names = [line.split(" = ")[0] for line in text.splitlines()[1:]]
    assert names == [f for f in RunConfig.__dataclass_fields__]
    again = RunConfig(**parse_text(text)).resolved()
    assert again.to_text() == text


def test_alpha_grid():
    grid = load_config().alpha_grid()
    assert len(grid) == 10 and grid[0] == pytest.approx(1e-3) and grid[-1] == pytest.approx(1e3)
