import json

import numpy as np
import pytest

from lpboot import experiment
from lpboot.errors import InvalidSpecError
from lpboot.metrics import McTable


def base_spec(**kw):
    data = {
        "name": "t",
        "root_seed": 7,
        "T": [120],
        "horizons": [3],
        "lag_rules": [1],
        "estimators": ["lp-method1"],
        "B": 19,
        "mc_reps": 3,
        "dgp": {"family": "ar1", "phi": [0.5]},
    }
    data.update(kw)
    return data


class TestParse:
    def test_valid(self):
        spec = experiment.parse_spec(base_spec())
        assert spec.T == (120,) and spec.variants[0].label == "ar1(phi=0.5)"

    def test_unknown_top_key(self):
        with pytest.raises(InvalidSpecError, match="field 'reps'"):
            experiment.parse_spec(base_spec(reps=3))

    def test_unknown_dgp_key(self):
        with pytest.raises(InvalidSpecError, match="field 'dgp.rho'"):
            experiment.parse_spec(base_spec(dgp={"family": "ar1", "phi": [0.5], "rho": 1}))

    def test_all_errors_reported(self):
        with pytest.raises(InvalidSpecError) as info:
            experiment.parse_spec(base_spec(B=3, alpha=2.0, scheme="magic"))
        msg = str(info.value)
        assert "field 'B'" in msg and "field 'alpha'" in msg and "field 'scheme'" in msg

    def test_missing_required(self):
        data = base_spec()
        del data["T"]
        with pytest.raises(InvalidSpecError, match="field 'T': required"):
            experiment.parse_spec(data)

    def test_bad_band(self):
        with pytest.raises(InvalidSpecError, match="dgp.band"):
            experiment.parse_spec(base_spec(dgp={"family": "arp", "order": 4, "band": [0.9, 0.3]}))

    def test_true_rule_rejected_for_ma(self):
        with pytest.raises(InvalidSpecError, match="lag_rules"):
            experiment.parse_spec(base_spec(lag_rules=["true"], dgp={"family": "gbf", "fixture": "fair1"}))

    def test_arp_variants(self):
        spec = experiment.parse_spec(base_spec(lag_rules=["true"], dgp={"family": "arp", "order": [4, 6], "band": [0.3, 0.9]}))
        assert [v.true_order() for v in spec.variants] == [4, 6]

    @pytest.mark.parametrize("name", ["smoke", "paper_ar1", "paper_arp_low", "paper_arp_med", "paper_arp_high", "paper_ma24_fair1"])
    def test_shipped_fixtures_parse(self, name):
        spec, raw = experiment.load_spec(name)
        assert raw and spec.name

    def test_unknown_fixture(self):
        with pytest.raises(InvalidSpecError):
            experiment.load_spec("no_such_design")

    def test_with_B(self):
        assert experiment.parse_spec(base_spec()).with_B(999).B == 999


class TestExecute:
    def test_unit_is_pure(self):
        spec = experiment.parse_spec(base_spec())
        assert experiment.run_unit(spec, 0, 120, 1) == experiment.run_unit(spec, 0, 120, 1)

    def test_common_data_across_estimators(self):
        spec = experiment.parse_spec(base_spec(estimators=["lp-method1", "lp-method2", "var-ma", "ar-benchmark"]))
        recs = experiment.run_unit(spec, 0, 120, 0)
        assert len(recs) == 4 and all(r["status"] == "ok" for r in recs)
        assert recs[0]["point"] == recs[1]["point"]
        assert len({r["truth"] for r in recs}) == 1

    def test_arp_coefficients_shared_across_T(self):
        spec = experiment.parse_spec(base_spec(T=[100, 150], dgp={"family": "arp", "order": 3, "band": [0.3, 0.9]}))
        a = spec.variants[0].draw(spec.root_seed, 0, 2)
        b = spec.variants[0].draw(spec.root_seed, 0, 2)
        assert a == b
        assert a != spec.variants[0].draw(spec.root_seed, 0, 3)

    def test_aggregate_grid(self):
        spec = experiment.parse_spec(base_spec(horizons=[2, 4], lag_rules=["sbic", 1]))
        table, failures = experiment.aggregate(spec, experiment.execute(spec))
        assert len(table.cells) == 4 and not failures
        assert all(c.n_reps == 3 for c in table.cells)

    def test_failure_recorded(self):
        spec = experiment.parse_spec(base_spec(T=[40], lag_rules=[30]))
        table, failures = experiment.aggregate(spec, experiment.execute(spec))
        assert failures and failures[0]["n_failed"] == 3
        assert np.isnan(table.cells[0].coverage)


class TestRun:
    def test_smoke_outputs(self, tmp_path):
        out = experiment.run_experiment("smoke", tmp_path)
        assert out.exit_code == 0
        for name in ("metrics.csv", "metrics.json", "replications.csv", "manifest.json"):
            assert (tmp_path / name).exists()
        assert not (tmp_path / "failures.json").exists()
        table = McTable.from_csv((tmp_path / "metrics.csv").read_text())
        assert len(table.cells) == 4
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["status"] == "ok" and manifest["B"] == 49
        assert manifest["seeds"]["root_seed"] == 20240601
        assert len(manifest["seeds"]["units"]) == 10
        assert set(manifest["artifacts"]) == {"metrics.csv", "metrics.json", "replications.csv"}

    def test_rerun_identical(self, tmp_path):
        experiment.run_experiment("smoke", tmp_path / "a")
        experiment.run_experiment("smoke", tmp_path / "b")
        for name in ("metrics.csv", "replications.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_workers_identical(self, tmp_path):
        experiment.run_experiment("smoke", tmp_path / "a", workers=1)
        experiment.run_experiment("smoke", tmp_path / "b", workers=2)
        assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()

    def test_partial_failure_exit(self, tmp_path):
        spec = tmp_path / "bad.toml"
        spec.write_text(
            'root_seed = 1\nT = [40]\nhorizons = [3]\nlag_rules = [1, 30]\nB = 19\nmc_reps = 2\n[dgp]\nfamily = "ar1"\nphi = [0.0]\n'
        )
        out = experiment.run_experiment(spec, tmp_path / "o")
        assert out.exit_code == 3
        assert json.loads((tmp_path / "o" / "failures.json").read_text())[0]["cell"]["lag_rule"] == "30"
        assert out.manifest["status"] == "partial-failure"

    def test_paper_scale(self, tmp_path):
        spec = tmp_path / "s.toml"
        spec.write_text('root_seed = 1\nT = [60]\nhorizons = [2]\nlag_rules = [1]\nmc_reps = 1\n[dgp]\nfamily = "ar1"\nphi = [0.0]\n')
        assert experiment.run_experiment(spec, tmp_path / "o", paper_scale=True).manifest["B"] == 999

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv(experiment.WORKERS_ENV, "3")
        assert experiment.default_workers() == 3
        monkeypatch.setenv(experiment.WORKERS_ENV, "x")
        with pytest.raises(InvalidSpecError):
            experiment.default_workers()
