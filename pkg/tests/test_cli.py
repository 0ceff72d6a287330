import io

import numpy as np
import pytest

from nbmimo.cli import build_parser, load_config, main
from nbmimo.config import ConfigError, ExperimentConfig
from nbmimo.presets import PRESETS, preset_text
from nbmimo.runner import (
    ks_gaussian_test,
    run_command,
    run_flops,
    run_uncoded,
    substream,
    write_csv,
)


class TestConfig:
    def test_defaults_validate(self):
        assert ExperimentConfig().validate() == []

    def test_all_errors_reported_at_once(self):
        text = """
[meta]
command = ber
[system]
n_t = 10
n_r = 10
modulation = 5
[code]
m = 8
n_symbols = 100
d_c = 3
[detector]
kind = mmse, turbo
[channel]
rho_t = 1.5
[stop]
min_frame_errors = 0
"""
        with pytest.raises(ConfigError) as err:
            ExperimentConfig.from_ini(text)
        messages = "\n".join(err.value.errors)
        assert "modulation" in messages
        assert "turbo" in messages
        assert "correlation" in messages
        assert "min_frame_errors" in messages
        assert "divisible" in messages
        assert len(err.value.errors) >= 5

    def test_malformed_value_reported(self):
        text = """
[meta]
command = flops
[flops]
n_r = ten
"""
        with pytest.raises(ConfigError, match="malformed"):
            ExperimentConfig.from_ini(text)

    def test_threshold_requires_bpsk(self):
        text = """
[meta]
command = threshold
[system]
n_t = 200
n_r = 200
modulation = 4
[de]
ensemble_size = 100000
repeat_factors = 1
gamma0_db = -3
"""
        with pytest.raises(ConfigError, match="BPSK"):
            ExperimentConfig.from_ini(text)

    def test_threshold_enforces_ensemble_floor(self):
        text = """
[meta]
command = threshold
[de]
ensemble_size = 500
repeat_factors = 1
gamma0_db = -3
"""
        with pytest.raises(ConfigError, match="10\\^4"):
            ExperimentConfig.from_ini(text)

    def test_spectral_efficiency_bookkeeping(self):
        cfg = ExperimentConfig(n_t=200, modulation=2, n_symbols=300, d_c=4)
        assert cfg.rate.numerator == 1 and cfg.rate.denominator == 2
        assert cfg.spectral_efficiency == 100.0

    def test_repeat_factor_spectral_efficiency(self):
        cfg = ExperimentConfig(
            n_t=200, modulation=2, n_symbols=300, d_c=3, repeat_factor=2
        )
        assert cfg.spectral_efficiency == pytest.approx(200 / 6)

    def test_every_preset_parses(self):
        for name in PRESETS:
            cfg = ExperimentConfig.from_ini(preset_text(name))
            assert cfg.validate() == []

    def test_unknown_preset(self):
        with pytest.raises(KeyError, match="unknown preset"):
            preset_text("fig999")


class TestKsUtility:
    def test_gaussian_passes(self):
        rng = np.random.default_rng(0)
        res = ks_gaussian_test(rng.normal(3.0, 2.0, size=100_000))
        assert res.passed
        assert res.p_value > 0.001

    def test_uniform_fails(self):
        rng = np.random.default_rng(1)
        res = ks_gaussian_test(rng.uniform(size=100_000))
        assert not res.passed
        assert res.p_value < 1e-6

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError, match="10\\^3"):
            ks_gaussian_test(np.random.default_rng(2).normal(size=500))

    def test_degenerate_samples_rejected(self):
        with pytest.raises(ValueError, match="zero variance"):
            ks_gaussian_test(np.ones(2000))


class TestRngStreams:
    def test_substreams_are_deterministic(self):
        a = substream(42, 0, 7).integers(0, 1 << 30, size=5)
        b = substream(42, 0, 7).integers(0, 1 << 30, size=5)
        assert np.array_equal(a, b)

    def test_substreams_are_distinct(self):
        a = substream(42, 0, 7).integers(0, 1 << 30, size=5)
        b = substream(42, 0, 8).integers(0, 1 << 30, size=5)
        c = substream(43, 0, 7).integers(0, 1 << 30, size=5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestCsv:
    def test_metadata_comments_then_header(self):
        rows = run_flops(ExperimentConfig(command="flops", flops_n_r=[1, 8]))
        buf = io.StringIO()
        write_csv(rows, {"command": "flops", "master_seed": 1}, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "# command = flops"
        assert lines[1] == "# master_seed = 1"
        assert lines[2].startswith("n_r,modulation,proposed_detect")
        assert len(lines) == 5

    def test_bit_identical_repeat(self):
        cfg = ExperimentConfig.from_ini(preset_text("ci-small-uncoded"))
        out1, out2 = io.StringIO(), io.StringIO()
        for buf in (out1, out2):
            rows, meta = run_command(cfg)
            write_csv(rows, meta, buf)
        assert out1.getvalue() == out2.getvalue()

    def test_seed_changes_output(self):
        cfg = ExperimentConfig.from_ini(preset_text("ci-small-uncoded"))
        rows1, _ = run_command(cfg)
        cfg.master_seed += 1
        rows2, _ = run_command(cfg)
        assert any(
            a.bit_errors != b.bit_errors for a, b in zip(rows1, rows2)
        )


class TestRunners:
    def test_uncoded_stop_rule_recorded(self):
        cfg = ExperimentConfig(
            command="uncoded",
            n_t=8,
            n_r=8,
            detectors=["mmse"],
            gamma_db=[-4.0, 40.0],
            min_frame_errors=5,
            max_frames=50,
        )
        rows = run_uncoded(cfg)
        by_gamma = {r.gamma_db: r for r in rows}
        assert by_gamma[-4.0].stop_reason == "frame_errors"
        assert by_gamma[-4.0].frame_errors >= 5
        assert by_gamma[40.0].stop_reason == "max_frames"
        assert by_gamma[40.0].frames == 50

    def test_uncoded_high_snr_mmse_error_free(self):
        cfg = ExperimentConfig(
            command="uncoded",
            n_t=8,
            n_r=8,
            detectors=["mmse"],
            gamma_db=[60.0],
            min_frame_errors=5,
            max_frames=40,
        )
        rows = run_uncoded(cfg)
        assert rows[0].ber == 0.0
        assert rows[0].fer == 0.0

    def test_noiseless_coded_sanity(self):
        cfg = ExperimentConfig.from_ini(preset_text("ci-small-ber"))
        cfg.gamma_db = [60.0]
        cfg.max_frames = 5
        cfg.min_frame_errors = 1
        rows, _ = run_command(cfg)
        assert rows[0].ber == 0.0
        assert rows[0].fer == 0.0
        assert rows[0].mean_iterations <= 1.0

    def test_error_accounting_mean_bits_per_frame_error(self):
        # 100 frame errors carrying 1752 bit errors: 17.52 bits per frame
        # error on average, reported as about 18.
        from nbmimo.runner import _stats_from_counts

        counts = np.zeros(300, dtype=int)
        counts[:99] = 17
        counts[99] = 69
        assert counts.sum() == 1752
        ber, _, fe, fer, _, per_fe = _stats_from_counts(counts, 800)
        assert fe == 100
        assert per_fe == pytest.approx(17.52)
        assert round(per_fe) == 18
        assert ber == pytest.approx(1752 / (800 * 300))

    def test_per_frame_fading_runs(self):
        cfg = ExperimentConfig.from_ini(preset_text("ci-small-ber"))
        cfg.fading = "per-frame"
        cfg.gamma_db = [10.0]
        cfg.max_frames = 5
        cfg.min_frame_errors = 1
        rows, meta = run_command(cfg)
        assert meta["fading"] == "per-frame"
        assert rows[0].frames >= 1


class TestCliSurface:
    def test_parser_has_all_subcommands(self):
        parser = build_parser()
        for cmd in ("ber", "uncoded", "capacity", "threshold", "flops", "ksdelta"):
            args = parser.parse_args([cmd, "--preset", "x"])
            assert args.command == cmd

    def test_command_preset_mismatch_rejected(self):
        parser = build_parser()
        args = parser.parse_args(["ber", "--preset", "fig2"])
        with pytest.raises(ConfigError, match="declares command"):
            load_config(args)

    def test_seed_override(self):
        parser = build_parser()
        args = parser.parse_args(
            ["flops", "--preset", "ci-small-flops", "--seed", "777"]
        )
        cfg = load_config(args)
        assert cfg.master_seed == 777

    def test_main_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "flops.csv"
        code = main(["flops", "--preset", "ci-small-flops", "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert "# command = flops" in text
        assert "221800" in text

    def test_main_reports_bad_preset(self, capsys):
        code = main(["ber", "--preset", "nope"])
        assert code == 2
        assert "unknown preset" in capsys.readouterr().err
