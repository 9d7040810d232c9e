import json

import numpy as np
import pytest

from polaruep.cli import main
from polaruep.polar import read_reliability_file
from polaruep.sim import (
    SWEEP_COLUMNS,
    ConfigError,
    SweepConfig,
    calibrate,
    parse_ebn0,
    read_config_file,
    read_sweep_csv,
    resolve_scheme,
    run_diagnostics,
    run_sweep,
)

SMALL = dict(n=5, r_inf=0.5, ebn0=(1.0, 2.0, 1.0), max_trials=3000, min_errors=40,
             block_size=500, seed=3)


def small(**kw):
    return SweepConfig(**{**SMALL, **kw})


# --------------------------------------------------------------------------- config


def test_defaults_reproduce_reference_geometry():
    cfg = SweepConfig().validate()
    assert (cfg.N, cfg.K, cfg.design_snr_db, cfg.min_errors) == (128, 64, 0.0, 100)
    assert cfg.trial_budget == 1_562_500
    np.testing.assert_allclose(cfg.ebn0_points(), np.arange(0, 6.01, 0.5))


def test_parse_ebn0():
    assert parse_ebn0("0:6:0.5") == (0.0, 6.0, 0.5)
    assert parse_ebn0("3") == (3.0, 3.0, 1.0)
    with pytest.raises(ValueError):
        parse_ebn0("1:2")


@pytest.mark.parametrize("kw, field", [
    (dict(k_rep=(2,)), "k_rep"),
    (dict(r_inf=0.3), "r_inf"),
    (dict(rep_mode="loud"), "rep_mode"),
    (dict(ebn0=(3.0, 1.0, 0.5)), "ebn0"),
    (dict(max_trials=-1), "max_trials"),
    (dict(workers=0), "workers"),
    (dict(construction="magic"), "construction"),
])
def test_invalid_fields_are_named(kw, field):
    with pytest.raises(ConfigError) as exc:
        small(**kw).validate()
    assert exc.value.field == field
    assert field in str(exc.value)


def test_from_mapping_aliases_and_errors():
    cfg = SweepConfig.from_mapping({"krep": "1,5,11", "rep-mode": "scaled", "rinf": "0.5",
                                    "systematic": "yes", "max_trials": "1e4"})
    assert cfg.k_rep == (1, 5, 11)
    assert cfg.rep_mode == "scaled_soft"
    assert cfg.systematic is True and cfg.max_trials == 10_000
    with pytest.raises(ConfigError) as exc:
        SweepConfig.from_mapping({"seed": "abc"})
    assert exc.value.field == "seed"
    with pytest.raises(ConfigError):
        SweepConfig.from_mapping({"colour": "red"})


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nn = 6\nkrep = 1, 5  # trailing\nrep_mode: hard\n")
    assert read_config_file(path) == {"n": "6", "krep": "1, 5", "rep_mode": "hard"}
    path.write_text("nonsense\n")
    with pytest.raises(ConfigError):
        read_config_file(path)


# --------------------------------------------------------------------------- sweep


def test_sweep_writes_csv_and_metadata(tmp_path):
    res = run_sweep(small(k_rep=(1, 3), out=str(tmp_path)))
    rows = read_sweep_csv(tmp_path / "sweep.csv")
    assert len(rows) == 4 == len(res.rows)
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header == ",".join(SWEEP_COLUMNS)
    for r in rows:
        assert r["trials"] <= 3000
        assert r["converged"] == int(r["crit_errors"] >= 40)
        assert 0 <= r["ber_crit"] <= 1 and 0 <= r["ber_avg"] <= 1
        assert r["es_n0_db"] == pytest.approx(r["eb_n0_db"] + 10 * np.log10(0.5), abs=1e-4)
    meta = json.loads((tmp_path / "sweep_meta.json").read_text())
    assert meta["config"]["seed"] == 3
    assert meta["rng"] and meta["build_id"] and meta["schema_version"] == 1
    assert b"\r" not in (tmp_path / "sweep.csv").read_bytes()


def test_stopping_rule_reaches_min_errors():
    res = run_sweep(small(ebn0=(0.0, 0.0, 1.0), max_trials=50_000, min_errors=50))
    (row,) = res.rows
    assert row["crit_errors"] >= 50 and row["converged"]
    assert row["trials"] % 500 == 0 and row["trials"] < 50_000


def test_unconverged_points_are_flagged():
    res = run_sweep(small(ebn0=(8.0, 8.0, 1.0), max_trials=600, min_errors=100))
    assert res.rows[0]["converged"] == 0
    assert res.metadata["warnings"]


def test_zero_trials_gives_empty_table(tmp_path, caplog):
    res = run_sweep(small(max_trials=0, out=str(tmp_path)))
    assert res.rows == []
    assert (tmp_path / "sweep.csv").read_text().strip() == ",".join(SWEEP_COLUMNS)
    assert "max_trials is 0" in caplog.text


def test_sweep_repeatable_and_worker_independent(tmp_path):
    a, b, c = (tmp_path / x for x in "abc")
    run_sweep(small(k_rep=(1, 3), out=str(a)))
    run_sweep(small(k_rep=(1, 3), out=str(b)))
    run_sweep(small(k_rep=(1, 3), out=str(c), workers=3))
    ref = (a / "sweep.csv").read_bytes()
    assert (b / "sweep.csv").read_bytes() == ref
    assert (c / "sweep.csv").read_bytes() == ref


def test_scaled_mode_autocalibrates_and_reads_scale_file(tmp_path):
    cfg = small(k_rep=(3,), systematic=True, rep_mode="scaled_soft", calibration_trials=10_000,
                out=str(tmp_path))
    scheme, _ = resolve_scheme(cfg, 3)
    assert scheme.rep_mode == "scaled_soft" and (scheme.scale_factors > 0).all()
    means = calibrate(cfg)[3]
    assert means.size == scheme.code.K
    path = tmp_path / "scales_k3.csv"
    first = path.read_bytes()
    calibrate(cfg)
    assert path.read_bytes() == first
    from_file, _ = resolve_scheme(small(k_rep=(3,), systematic=True, rep_mode="scaled_soft",
                                        scale_file=str(path)), 3)
    np.testing.assert_array_equal(from_file.scale_factors, means[scheme.crit_pos])


# --------------------------------------------------------------------------- diagnostics


def test_diagnostics_artifacts(tmp_path):
    res = run_diagnostics(small(max_trials=2000, out=str(tmp_path)), keep_samples=True)
    K = res.scheme.code.K
    assert res.stats.trials == 2000
    assert res.correlation.shape == (K, K)
    np.testing.assert_allclose(res.correlation, res.correlation.T)
    top = res.scheme.code.most_reliable_info(5)
    assert set(res.channels) == {int(top[0]), int(top[4])}
    for c in res.channels:
        assert (tmp_path / f"hist_ch{c}.csv").exists()
        assert res.signed_llrs(c).size == 2000
    lines = (tmp_path / "per_channel_ber.csv").read_text().splitlines()
    assert len(lines) == K + 1
    corr_lines = (tmp_path / "correlation.csv").read_text().splitlines()
    assert len(corr_lines) == K + 1


def test_diagnostics_zero_trials(tmp_path):
    res = run_diagnostics(small(max_trials=0, out=str(tmp_path)))
    assert res.stats.trials == 0 and res.correlation is None
    assert res.metadata["warnings"]


def test_diagnostics_rejects_frozen_channel():
    with pytest.raises(ConfigError):
        run_diagnostics(small(max_trials=10, diag_channels=(0,)))


# --------------------------------------------------------------------------- CLI


def test_cli_sweep_and_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 5\nrinf = 0.5\nkrep = 3\nebn0 = 1:1:1\nmax_trials = 100\n"
                   "block_size = 50\n")
    out = tmp_path / "out"
    code = main(["sweep", "--config", str(cfg), "--krep", "1", "--out", str(out),
                 "--rep-mode", "hard", "--systematic"])
    assert code == 0
    rows = read_sweep_csv(out / "sweep.csv")
    assert [r["k_rep"] for r in rows] == [1]
    assert rows[0]["rep_mode"] == "hard" and rows[0]["systematic"] == 1
    assert "BER_crit" in capsys.readouterr().out


def test_cli_invalid_field(capsys):
    assert main(["sweep", "--krep", "4", "--max-trials", "0"]) == 2
    assert "k_rep" in capsys.readouterr().err


def test_cli_construct(tmp_path):
    assert main(["construct", "--n", "7", "--krep", "1,11", "--out", str(tmp_path)]) == 0
    code = read_reliability_file(tmp_path / "reliability_k74.txt")
    assert code.K == 74 and code.N == 128
    assert (tmp_path / "reliability_k64.txt").exists()


def test_cli_calibrate_and_diagnostics(tmp_path):
    assert main(["calibrate", "--n", "4", "--krep", "3", "--calibration-trials", "10000",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "scales_k3.csv").exists()
    assert main(["diagnostics", "--n", "4", "--max-trials", "500", "--out",
                 str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "correlation.csv").exists()
