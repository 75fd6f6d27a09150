import math

import pytest

from synclab.cli import main
from synclab.config import ConfigError, parse_config, parse_pairs

MINIMAL = """\
potential.family = quartic
potential.a = 0.5
rng.master_seed = 42
campaign.kind = lyapunov
"""


class TestParseConfig:
    def test_minimal_config_parses(self):
        cfg = parse_config(MINIMAL)
        assert cfg.kind == "lyapunov"
        assert cfg.master_seed == 42
        assert cfg.potential.family == "quartic"
        assert cfg.campaign_params["T"] == 1e4

    def test_unknown_key_reports_line_number(self):
        text = "rng.master_seed = 1\npotential.famly = quartic\ncampaign.kind = lyapunov\n"
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert any(ln == 2 and "unknown key" in msg for ln, msg in err.value.problems)

    def test_bad_value_reports_line_number(self):
        text = "campaign.kind = escape\ncampaign.replicas = many\n"
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert any(ln == 2 and "bad value" in msg for ln, msg in err.value.problems)

    def test_epsilons_parse_and_sort_descending(self):
        cfg = parse_config("campaign.kind = escape\ncampaign.epsilons = 0.1,0.3,0.2\n"
                           "campaign.replicas = 50\n")
        assert cfg.campaign_params["epsilons"] == (0.1, 0.3, 0.2)
        assert cfg.campaign().epsilons == (0.3, 0.2, 0.1)

    def test_infinity_outer_radius(self):
        cfg = parse_config("campaign.kind = escape\ncampaign.r_outer = inf\n")
        assert math.isinf(cfg.campaign_params["r_outer"])

    def test_missing_kind_is_an_error(self):
        with pytest.raises(ConfigError, match="campaign.kind"):
            parse_config("rng.master_seed = 5\n")

    def test_kind_conflict_with_subcommand(self):
        with pytest.raises(ConfigError, match="conflicts"):
            parse_config(MINIMAL, kind="escape")

    def test_key_for_wrong_kind_rejected(self):
        text = "campaign.kind = escape\ncampaign.delta = 0.2\n"
        with pytest.raises(ConfigError, match="does not apply"):
            parse_config(text)

    def test_custom_family_requires_coeffs(self):
        with pytest.raises(ConfigError, match="coeffs"):
            parse_config("potential.family = custom\ncampaign.kind = lyapunov\n")
        cfg = parse_config("potential.family = custom\n"
                           "potential.coeffs = 1.0,-2.0,1.0\n"
                           "campaign.kind = lyapunov\n")
        assert cfg.potential.coeffs == (1.0, -2.0, 1.0)

    def test_comments_and_blank_lines_ignored(self):
        text = "# a comment\n\ncampaign.kind = lyapunov  # trailing\n"
        assert parse_config(text).kind == "lyapunov"

    def test_config_hash_tracks_content(self):
        a = parse_config(MINIMAL)
        b = parse_config(MINIMAL)
        c = parse_config(MINIMAL.replace("42", "43"))
        assert a.config_hash == b.config_hash
        assert a.config_hash != c.config_hash

    def test_parse_pairs_collects_multiple_problems(self):
        text = "nonsense line\npotential.famly = x\n"
        with pytest.raises(ConfigError) as err:
            parse_pairs(text)
        assert len(err.value.problems) == 2


class TestCli:
    def run_cli(self, tmp_path, args, name="run"):
        out = tmp_path / name
        code = main(args + ["--out", str(out)])
        return code, out

    def test_lyapunov_tiny_run_writes_outputs(self, tmp_path):
        code, out = self.run_cli(tmp_path, [
            "lyapunov", "--set", "campaign.T=50", "--set", "campaign.replicas=4"])
        assert code == 0
        rows = (out / "rows.csv").read_text()
        summary = (out / "summary.txt").read_text()
        assert rows.startswith("# synclab 0.1.0 config_sha256=")
        assert "master_seed=0" in rows.splitlines()[0]
        assert rows.splitlines()[1] == "kind,T,dt,replicate,seed,stream_id,lambda_hat"
        assert '"lambda_hat"' in summary

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["lyapunov", "--set", "campaign.T=50", "--set", "campaign.replicas=4"]
        code_a, out_a = self.run_cli(tmp_path, args, "a")
        code_b, out_b = self.run_cli(tmp_path, args, "b")
        assert code_a == code_b == 0
        assert (out_a / "rows.csv").read_bytes() == (out_b / "rows.csv").read_bytes()
        assert (out_a / "summary.txt").read_bytes() == (out_b / "summary.txt").read_bytes()

    def test_escape_with_one_replica_is_flagged(self, tmp_path):
        code, out = self.run_cli(tmp_path, ["escape", "--set", "campaign.replicas=1"])
        assert code == 2
        assert "too_few_replicas" in (out / "summary.txt").read_text()

    def test_config_error_exits_one(self, tmp_path):
        code, _ = self.run_cli(tmp_path, ["lyapunov", "--set", "potential.famly=q"])
        assert code == 1

    def test_missing_config_file_exits_one(self, tmp_path):
        code, _ = self.run_cli(tmp_path, ["lyapunov", "--config",
                                          str(tmp_path / "nope.cfg")])
        assert code == 1

    def test_config_file_plus_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("campaign.kind = lyapunov\ncampaign.T = 80\n"
                       "campaign.replicas = 8\n")
        code, out = self.run_cli(tmp_path, [
            "lyapunov", "--config", str(cfg), "--set", "campaign.replicas=3"])
        assert code == 0
        body = (out / "summary.txt").read_text()
        assert '"replicas": 3' in body
        assert '"T": 80.0' in body

    def test_emit_plot_data(self, tmp_path):
        code, out = self.run_cli(tmp_path, [
            "lyapunov", "--set", "campaign.T=50", "--set", "campaign.replicas=4",
            "--emit-plot-data"])
        assert code == 0
        plot = (out / "plotdata.csv").read_text().splitlines()
        assert plot[1] == "x,y,err"
        assert len(plot) == 3

    def test_validate_potential_quartic_passes(self, tmp_path):
        code, out = self.run_cli(tmp_path, ["validate-potential"])
        assert code == 0
        assert "pass" in (out / "report.txt").read_text()

    def test_validate_potential_flags_bad_family(self, tmp_path):
        code, out = self.run_cli(tmp_path, [
            "validate-potential", "--set", "potential.family=shifted_quadratic"])
        assert code == 2
        assert "FAIL" in (out / "report.txt").read_text()

    def test_control_verify_small_alpha_grid(self, tmp_path):
        code, out = self.run_cli(tmp_path, [
            "control-verify", "--set", "campaign.alphas=0.2"])
        assert code == 0
        sched = (out / "schedule.csv").read_text().splitlines()
        assert sched[1] == "alpha,phase,t_start,t_end,h_description,action"
        assert len(sched) == 2 + 7
        assert "final diameter" in (out / "verification.txt").read_text()

    def test_gronwall_cli_runs(self, tmp_path):
        code, out = self.run_cli(tmp_path, [
            "gronwall", "--set", "campaign.epsilons=0.1,0.05",
            "--set", "campaign.replicas=10"])
        assert code == 0
        assert (out / "rows.csv").exists()
