from pathlib import Path

import pytest

from genfl.errors import ConfigError, MetricsFormatError, SweepError
from genfl.schemas.experiment import ExperimentConfig
from genfl.schemas.metrics import CSV_COLUMNS, MetricsTable, RoundMetrics, plateau_accuracy, rounds_to_threshold
from genfl.schemas.protocol import Mode
from genfl.services.experiment_service import SWEEP_SUMMARY_COLUMNS, experiment_service

HEADER = "round,mode,test_accuracy,test_loss,mean_client_emd,round_time_sec,round_energy_joules,pool_size\n"


def _write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_empty_config_takes_defaults(tmp_path):
    config = experiment_service.load_config(_write(tmp_path, ""))
    assert config.alpha == 0.1
    assert config.mode is Mode.GENFL
    assert (config.kappa1, config.kappa2) == (0.7, 0.3)
    assert config.rounds == 100
    assert config.plateau_window == 10
    assert (config.rate_per_round, config.cap_per_class) == (60, 60)


@pytest.mark.parametrize("alpha", ["0.1", "0.3", "1.0"])
def test_large_experiment_config_validates(tmp_path, alpha):
    text = (
        "# 100 clients, 10 per round\n"
        "num_clients = 100\n"
        "clients_per_round = 10\n"
        "epochs = 5\n"
        "batch_size = 64\n"
        "learning_rate = 0.0001\n"
        f"alpha = {alpha}\n"
        "rate_per_round = 10\n"
        "cap_per_class = 300\n"
    )
    config = experiment_service.load_config(_write(tmp_path, text))
    assert config.num_clients == 100
    assert config.learning_rate == 0.0001


def test_negative_alpha_is_rejected(tmp_path):
    with pytest.raises(ConfigError) as info:
        experiment_service.load_config(_write(tmp_path, "alpha = -1\n"))
    assert "alpha" in info.value.keys
    assert "alpha" in str(info.value)


def test_every_violation_is_reported(tmp_path):
    with pytest.raises(ConfigError) as info:
        experiment_service.load_config(_write(tmp_path, "alpha = -1\nrounds = -2\nlabel_noise = 3\n"))
    assert {"alpha", "rounds", "label_noise"} <= set(info.value.keys)


def test_cross_field_violation_names_the_keys(tmp_path):
    with pytest.raises(ConfigError) as info:
        experiment_service.load_config(_write(tmp_path, "num_clients = 4\nclients_per_round = 5\n"))
    assert "clients_per_round" in str(info.value)


@pytest.mark.parametrize("text,line", [
    ("seed = 1\nnot a pair\n", 2),
    ("seed = 1\nsomething = 3\n", 2),
    ("alpha = 0.1\n\nalpha = 0.2\n", 3),
])
def test_parse_errors_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(ConfigError) as info:
        experiment_service.load_config(_write(tmp_path, text))
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        experiment_service.load_config(tmp_path / "absent.cfg")


def test_kappa_complement_and_mode_defaults():
    assert ExperimentConfig(kappa1=0.6).kappa2 == pytest.approx(0.4)
    assert ExperimentConfig(kappa2=0.25).kappa1 == pytest.approx(0.75)
    fl = ExperimentConfig(mode="fl-only")
    assert (fl.kappa1, fl.kappa2) == (1.0, 0.0)
    aigc = ExperimentConfig(mode="aigc_only")
    assert aigc.mode is Mode.AIGC_ONLY
    assert (aigc.kappa1, aigc.kappa2) == (0.0, 1.0)
    with pytest.raises(ConfigError):
        experiment_service.validate_config({"mode": "fl-only", "kappa2": "0.3"})
    with pytest.raises(ConfigError):
        experiment_service.validate_config({"kappa1": "0.5", "kappa2": "0.6"})


def test_presets_fill_unset_keys():
    config = experiment_service.validate_config({"preset": "cifar100-like"})
    assert config.num_classes == 100
    assert config.cap_per_class == 100
    overridden = experiment_service.validate_config({"preset": "cifar100-like", "cap_per_class": "50"})
    assert overridden.cap_per_class == 50
    with pytest.raises(ConfigError):
        experiment_service.validate_config({"preset": "imagenet"})


def test_overrides_apply_on_top_of_file(tmp_path):
    path = _write(tmp_path, "seed = 1\nrounds = 7\n")
    config = experiment_service.load_config(path, {"seed": 9, "rounds": None})
    assert config.seed == 9
    assert config.rounds == 7


def test_config_hash_ignores_output_dir(make_config, tmp_path):
    a = make_config()
    b = make_config(output_dir=str(tmp_path / "elsewhere"))
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != make_config(seed=99).config_hash()


def test_run_writes_metrics_and_config_echo(make_config):
    config = make_config(rounds=2)
    table = experiment_service.run(config, record_history=False)
    out = Path(config.output_dir)
    text = (out / "metrics.csv").read_text()
    lines = text.splitlines(keepends=True)
    assert lines[0] == HEADER
    assert len(lines) == 4
    assert lines[1].startswith("0,genfl,")
    assert len(table) == 3
    echo = (out / "config.txt").read_text()
    assert echo.startswith(f"# config_hash={config.config_hash()}\n# seed={config.seed}\n")


def test_run_is_byte_identical_and_reloadable(make_config, tmp_path):
    config = make_config(rounds=2)
    experiment_service.run(config, record_history=False)
    out = Path(config.output_dir)
    first = (out / "metrics.csv").read_bytes()

    reloaded = experiment_service.load_config(out / "config.txt", {"output_dir": str(tmp_path / "again")})
    assert reloaded.config_hash() == config.config_hash()
    experiment_service.run(reloaded, record_history=False)
    assert (tmp_path / "again" / "metrics.csv").read_bytes() == first

    parallel = reloaded.model_copy(update={"client_workers": 3, "output_dir": str(tmp_path / "parallel")})
    experiment_service.run(parallel, record_history=False)
    assert (tmp_path / "parallel" / "metrics.csv").read_bytes() == first


def test_read_metrics_csv(make_config):
    config = make_config(rounds=2, mode="fl-only")
    table = experiment_service.run(config, record_history=False)
    loaded = experiment_service.read_metrics_csv(Path(config.output_dir) / "metrics.csv")
    assert loaded.rows == table.rows
    assert loaded.label == "fl-only"
    assert loaded.config_hash == config.config_hash()
    assert loaded.seed == config.seed


def test_read_metrics_csv_rejects_foreign_header(tmp_path):
    path = _write(tmp_path, "a,b\n1,2\n", name="metrics.csv")
    with pytest.raises(MetricsFormatError):
        experiment_service.read_metrics_csv(path)


def test_rounds_to_threshold():
    def row(i, acc):
        return RoundMetrics(i, acc, 1.0, 0.0, 0.0, 0.0, 0, "genfl")
    rows = [row(0, 0.1), row(1, 0.5), row(2, 0.61), row(3, 0.4)]
    assert rounds_to_threshold(rows, 0.6) == 2
    assert rounds_to_threshold(rows, 0.9) is None
    assert len(CSV_COLUMNS) == 8


def test_plateau_accuracy_averages_the_last_rounds():
    rows = [RoundMetrics(i, acc, 1.0, 0.0, 0.0, 0.0, 0, "genfl") for i, acc in enumerate([0.1, 0.5, 0.7, 0.6])]
    assert plateau_accuracy(rows, 2) == pytest.approx(0.65)
    assert plateau_accuracy(rows, 1) == 0.6
    assert plateau_accuracy(rows, 10) == pytest.approx(0.475)
    assert plateau_accuracy([], 3) is None
    assert MetricsTable(rows=rows).plateau_accuracy(2) == pytest.approx(0.65)
    with pytest.raises(ValueError):
        plateau_accuracy(rows, 0)


def test_sweep_writes_member_and_combined_outputs(make_config):
    base = make_config(rounds=1)
    tables = experiment_service.sweep(base, "alpha", ["0.5", "1.0"], record_history=False)
    assert [t.label for t in tables] == ["alpha=0.5", "alpha=1.0"]
    out = Path(base.output_dir)
    assert (out / "alpha=0.5" / "metrics.csv").is_file()
    assert (out / "alpha=1.0" / "config.txt").is_file()

    combined = (out / "sweep.csv").read_text().splitlines()
    assert combined[0] == "axis,value,seed," + HEADER.strip()
    assert len(combined) == 1 + 2 * 2
    summary = (out / "sweep_summary.csv").read_text().splitlines()
    assert summary[0] == ",".join(SWEEP_SUMMARY_COLUMNS)
    assert len(summary) == 3


def test_sweep_member_seeds():
    base = ExperimentConfig(seed=5, output_dir="runs/base")
    a = experiment_service.member_config(base, "alpha", "0.1")
    b = experiment_service.member_config(base, "alpha", "1.0")
    assert a.seed != b.seed
    assert a.seed == experiment_service.member_config(base, "alpha", "0.1").seed
    assert experiment_service.member_config(base, "alpha", "0.1", paired=True).seed == 5
    assert experiment_service.member_config(base, "seed", "11").seed == 11
    assert Path(a.output_dir) == Path("runs/base") / "alpha=0.1"


def test_sweep_kappa_and_mode_axes():
    base = ExperimentConfig()
    member = experiment_service.member_config(base, "kappa1", "0.4")
    assert member.kappa2 == pytest.approx(0.6)
    fl = experiment_service.member_config(base, "mode", "fl-only")
    assert (fl.kappa1, fl.kappa2) == (1.0, 0.0)
    genfl = experiment_service.member_config(base, "mode", "genfl")
    assert (genfl.kappa1, genfl.kappa2) == (0.7, 0.3)


def test_sweep_rejects_bad_requests(make_config):
    base = make_config()
    with pytest.raises(SweepError):
        experiment_service.sweep(base, "alpha", [], record_history=False)
    with pytest.raises(SweepError):
        experiment_service.sweep(base, "colour", ["1"], record_history=False)
    with pytest.raises(SweepError):
        experiment_service.sweep(base, "output_dir", ["x"], record_history=False)
    with pytest.raises(ConfigError):
        experiment_service.sweep(base, "alpha", ["0.1", "-1"], record_history=False)
    assert not Path(base.output_dir).exists()


def test_export_split_sizes(make_config, tmp_path):
    config = make_config()
    train = experiment_service.export_split(config, tmp_path / "train.txt", "train")
    test = experiment_service.export_split(config, tmp_path / "test.txt", "test")
    assert len(train.read_text().splitlines()) == config.train_size
    assert len(test.read_text().splitlines()) == config.num_classes * config.test_per_class
    with pytest.raises(ValueError):
        experiment_service.export_split(config, tmp_path / "x.txt", "validation")


def test_generated_pool_matches_a_real_run(make_config, tmp_path):
    config = make_config(rounds=3)
    pool = experiment_service.build_generated_pool(config)
    table = experiment_service.run(config, record_history=False)
    assert len(pool) == table.rows[-1].pool_size
    exported = experiment_service.export_split(config, tmp_path / "pool.txt", "pool")
    lines = exported.read_text().splitlines()
    assert len(lines) == len(pool)
    assert all(line.split(",")[1] == "g" for line in lines)


def test_read_metrics_csv_rejects_malformed_rows(tmp_path):
    header = ",".join(CSV_COLUMNS)
    path = _write(tmp_path, f"{header}\n0,genfl,not-a-number\n", name="metrics.csv")
    with pytest.raises(MetricsFormatError) as info:
        experiment_service.read_metrics_csv(path)
    assert info.value.category == "io"
