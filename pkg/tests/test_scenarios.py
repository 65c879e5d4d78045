import csv
import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import ctcsim.scenarios as sc
from ctcsim.cli import main
from ctcsim.qmath import QMathError
from ctcsim.scenarios import (
    BUILTIN_SCENARIOS,
    SCENARIO_CLAIMS,
    ScenarioSpec,
    SpecError,
    SweepAborted,
    load_config,
    run_scenario,
    run_sweep,
    scenario_spec,
    validate_spec,
    verify_goldens,
    write_goldens,
)

GOLDENS = Path(__file__).resolve().parents[1] / "goldens"
NO_CTC_BOUND = 0.5 + np.sqrt(2) / 4


def test_builtin_names_and_claims():
    assert set(BUILTIN_SCENARIOS) == {
        "bell-identity", "classical-correlated", "classical-iid", "measured-single",
        "distinguish-correlated", "distinguish-iid", "deutsch-crosscheck",
    }
    assert set(SCENARIO_CLAIMS) == set(BUILTIN_SCENARIOS)


class TestRunScenario:
    def test_bell_identity(self):
        r = run_scenario(BUILTIN_SCENARIOS["bell-identity"])
        assert r.n == 8 and abs(r.metrics["quantum_mutual_information"]) <= 1e-9

    def test_classical_correlated(self):
        r = run_scenario(BUILTIN_SCENARIOS["classical-correlated"])
        assert abs(r.metrics["classical_mutual_information_zz"] - 1.0) <= 1e-9

    def test_distinguish_iid(self):
        r = run_scenario(BUILTIN_SCENARIOS["distinguish-iid"])
        assert r.n == 16 and r.metrics["helstrom_success"] <= 0.85356
        assert r.deutsch is not None and r.deutsch["ctc_delta"] <= 1e-6

    def test_iid_only_gets_deutsch(self):
        assert run_scenario(BUILTIN_SCENARIOS["classical-correlated"]).deutsch is None

    def test_extrapolated_flag(self):
        spec = ScenarioSpec(ensemble=[[0.2, [1, 0, 0, 0]], [0.8, [0, 0, 0, 1]]], form="iid", n=4)
        assert run_scenario(spec).extrapolated

    def test_rejects_sweep(self):
        with pytest.raises(SpecError, match="^n:"):
            run_scenario(scenario_spec("bell-identity", n=(3, 4)))


class TestRunSweep:
    def test_distinguish_correlated_monotone(self):
        rows = run_sweep(scenario_spec("distinguish-correlated", n=(2, 4, 6, 8, 10)))
        values = [r.metrics["helstrom_success"] for r in rows]
        assert [r.n for r in rows] == [2, 4, 6, 8, 10]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_bell_identity(self):
        rows = run_sweep(scenario_spec("bell-identity", n=(3, 4, 5, 6)))
        assert all(abs(r.metrics["quantum_mutual_information"]) <= 1e-9 for r in rows)

    def test_hash_per_row(self, tmp_path):
        out = tmp_path / "s.csv"
        rows = run_sweep(scenario_spec("bell-identity", n=(3, 4), output_path=str(out)))
        with out.open() as fh:
            table = list(csv.DictReader(fh))
        assert list(table[0]) == list(sc.CSV_COLUMNS)
        assert {t["spec_hash"] for t in table} == {rows[0].spec_hash}
        assert {int(t["n"]) for t in table} == {3, 4}

    def test_partial_output(self, tmp_path, monkeypatch):
        real = sc._simulate

        def flaky(spec, n):
            if n == 5:
                raise QMathError("boom")
            return real(spec, n)

        monkeypatch.setattr(sc, "_simulate", flaky)
        out = tmp_path / "s.json"
        spec = scenario_spec("bell-identity", n=(3, 4, 5, 6), output_path=str(out), format="json")
        with pytest.raises(SweepAborted) as info:
            run_sweep(spec)
        assert len(info.value.partial) == 2
        payload = json.loads(out.read_text())
        assert payload["partial"] is True and len(payload["results"]) == 2

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            run_sweep(scenario_spec("distinguish-correlated", n=(2, 3), output_path=str(path), format="json"))
        assert a.read_bytes() == b.read_bytes()


class TestValidation:
    @pytest.mark.parametrize(
        "overrides,path",
        [
            ({"n": (4, 3)}, "n"),
            ({"n": 1}, "n"),
            ({"retained_stage": 9}, "retained_stage"),
            ({"form": "measured:12"}, "form"),
            ({"form": "sometimes"}, "form"),
            ({"unitary": "toffoli"}, "unitary"),
            ({"ensemble": "ghz"}, "ensemble"),
            ({"ctc_seed": "plus"}, "ctc_seed"),
            ({"format": "xml"}, "format"),
            ({"unitary": [[[1, 0]] * 4] * 4}, "unitary"),
        ],
    )
    def test_field_paths(self, overrides, path):
        with pytest.raises(SpecError) as info:
            validate_spec(replace(BUILTIN_SCENARIOS["bell-identity"], **overrides))
        assert info.value.path.startswith(path)

    def test_measured_needs_bell(self):
        with pytest.raises(SpecError, match="Bell"):
            run_scenario(scenario_spec("classical-iid", form="measured:3"))


def test_inline_config(tmp_path):
    h = 2**-0.5
    cfg = {
        "scenario": "custom-ch",
        "ensemble": [[0.5, [[1, 0], [0, 0], [0, 0], [0, 0]]], [0.5, [[0, 0], [0, 0], [h, 0], [-h, 0]]]],
        "form": "correlated",
        "unitary": [
            [[1, 0], [0, 0], [0, 0], [0, 0]],
            [[0, 0], [h, 0], [0, 0], [h, 0]],
            [[0, 0], [0, 0], [1, 0], [0, 0]],
            [[0, 0], [h, 0], [0, 0], [-h, 0]],
        ],
        "n": 8,
        "retained_stage": 5,
        "ctc_seed": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]],
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    custom = run_scenario(load_config(path))
    builtin = run_scenario(BUILTIN_SCENARIOS["distinguish-correlated"])
    assert np.max(np.abs(custom.retained - builtin.retained)) <= 1e-12


def test_config_unknown_field(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"scenario": "bell-identity", "colour": "red"}))
    with pytest.raises(SpecError, match="config.colour"):
        load_config(path)


class TestGoldens:
    def test_shipped_goldens_pass(self):
        report = verify_goldens(GOLDENS)
        assert report.passed, report.lines()

    def test_fresh_generation_passes(self, tmp_path):
        write_goldens(tmp_path)
        report = verify_goldens(tmp_path)
        assert report.passed
        assert any("default tolerance 1e-09" in n for n in report.notes)

    def test_perturbed_entry_fails(self, tmp_path):
        write_goldens(tmp_path)
        path = tmp_path / "classical-iid.json"
        data = json.loads(path.read_text())
        data["retained"][1][1][0] += 1e-6
        path.write_text(json.dumps(data))
        report = verify_goldens(tmp_path)
        assert not report.passed
        bad = [e for e in report.entries if e["status"] == "fail"]
        assert [e["scenario"] for e in bad] == ["classical-iid"]
        assert bad[0]["failures"] == ["retained[1][1].re"]

    def test_tolerance_file(self, tmp_path):
        write_goldens(tmp_path)
        path = tmp_path / "classical-iid.json"
        data = json.loads(path.read_text())
        data["retained"][1][1][0] += 1e-6
        path.write_text(json.dumps(data))
        (tmp_path / "tolerances.json").write_text(json.dumps({"classical-iid": 1e-5}))
        assert verify_goldens(tmp_path).passed

    def test_missing_is_uninitialized(self, tmp_path):
        report = verify_goldens(tmp_path)
        assert {e["status"] for e in report.entries} == {"uninitialized"}
        assert not report.passed


class TestCli:
    def test_scenario_csv(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        assert main(["--scenario", "classical-iid", "--n-sweep", "3,4", "--out", str(out)]) == 0
        assert "classical-iid" in capsys.readouterr().out
        assert out.read_text().startswith("scenario,form,unitary,n,stage,metric,value")

    def test_json_has_matrix(self, tmp_path):
        out = tmp_path / "o.json"
        assert main(["--scenario", "bell-identity", "--n", "4", "--format", "json", "--out", str(out)]) == 0
        res = json.loads(out.read_text())["results"][0]
        assert np.allclose(np.array(res["retained"])[..., 0], np.eye(4) / 4)

    def test_overrides(self, capsys):
        assert main(["--scenario", "bell-identity", "--n", "5", "--form", "measured:3",
                     "--stage", "3", "--ctc-seed", "zero", "--unitary", "identity"]) == 0
        assert "form=measured:3" in capsys.readouterr().out

    def test_invalid_spec_exit(self, capsys):
        assert main(["--scenario", "bell-identity", "--n-sweep", "5,4"]) == 1
        assert "invalid spec: n:" in capsys.readouterr().err

    def test_simulation_error_exit(self, monkeypatch):
        def broken(spec, n):
            raise QMathError("eigensolver failed")

        monkeypatch.setattr(sc, "_simulate", broken)
        assert main(["--scenario", "bell-identity"]) == 2

    def test_golden_exit_codes(self, tmp_path, capsys):
        assert main(["--write-goldens", str(tmp_path)]) == 0
        assert main(["--verify-goldens", str(tmp_path)]) == 0
        (tmp_path / "bell-identity.json").unlink()
        assert main(["--verify-goldens", str(tmp_path)]) == 3
        assert "UNINITIALIZED" in capsys.readouterr().out

    def test_config(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"scenario": "distinguish-iid", "n": [2, 3]}))
        assert main(["--config", str(path)]) == 0

    def test_list(self, capsys):
        assert main(["--list"]) == 0
        assert "deutsch-crosscheck" in capsys.readouterr().out
