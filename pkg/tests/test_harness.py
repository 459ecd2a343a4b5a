import csv
import json

import numpy as np
import pytest

from nonbazilevic.cli import main
from nonbazilevic.corpus import (
    ConfigError,
    InverseDesign,
    RunConfig,
    corpus_json,
    generate_corpus,
    inverse_design,
    load_config,
    validate_function,
)
from nonbazilevic.harness import TRACE_HEADER, TRACE_KINDS, emit_traces, run_all, write_report
from nonbazilevic.operator import ClassParams, phi
from nonbazilevic.series import default_grid, make_function

SMALL = dict(angles=64, only=["identity-p1"])


@pytest.fixture(scope="module")
def corpus():
    return generate_corpus(RunConfig())


class TestCorpus:
    def test_count_and_kinds(self, corpus):
        assert len(corpus) == 26
        assert corpus[0].id == "identity-p1"
        kinds = {e.construction for e in corpus}
        assert kinds == {"explicit-coefficients", "inverse-designed", "mobius-derived"}

    def test_exclusion_is_marked(self, corpus):
        excluded = [e for e in corpus if e.excluded]
        assert [e.id for e in excluded] == ["stress-04"]
        assert excluded[0].exclusion_reason

    def test_sparse_bounds(self, corpus):
        for e in corpus:
            if e.id.startswith("sparse"):
                assert np.all(np.abs(e.function.coeffs) <= 0.3 + 1e-15)

    def test_deterministic(self, corpus):
        cfg = RunConfig()
        assert corpus_json(corpus, cfg) == corpus_json(generate_corpus(cfg), cfg)

    def test_seed_changes_corpus(self, corpus):
        cfg = RunConfig(seed=7)
        assert corpus_json(generate_corpus(cfg), cfg) != corpus_json(corpus, RunConfig())

    def test_inverse_round_trip(self):
        d = InverseDesign(1.0, -1.0, 0.5, 1.0, 0.0, 1.0)
        f = inverse_design(1, d)
        g = default_grid(64)
        np.testing.assert_allclose(phi(f, ClassParams(1, 1, 1.0, 1.0, 0.0), g), d.psi(g.points), atol=1e-8)
        # z (1 - 0.5 z)/(1 + 0.5 z): reduced coefficients 1, -1, 0.5, -0.25, ...
        np.testing.assert_allclose(f.reduced.coeffs[:4], [1, -1, 0.5, -0.25], atol=1e-14)

    def test_inverse_complex_exponent(self):
        d = InverseDesign(0.6, -0.6, 0.6, 1.0, 0.5, 1.0)
        f = inverse_design(2, d)
        g = default_grid(64)
        np.testing.assert_allclose(phi(f, ClassParams(2, 1, 1.0, 1.0, 0.5), g), d.psi(g.points), atol=1e-8)

    def test_validate(self):
        g = default_grid(64)
        assert validate_function(make_function(1, 1, [0.5], exact=True), g) == ""
        assert "zero" in validate_function(make_function(1, 1, [1.02], exact=True), g)


class TestConfig:
    def test_defaults(self):
        cfg = load_config(env={})
        assert cfg.seed == 42 and cfg.sizes == (10, 10, 5)

    def test_env_and_flag(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed": 1}))
        assert load_config(path, env={}).seed == 1
        assert load_config(path, env={"SUBORD_SEED": "5"}).seed == 5
        assert load_config(path, seed=9, env={"SUBORD_SEED": "5"}).seed == 9
        with pytest.raises(ConfigError):
            load_config(env={"SUBORD_SEED": "x"})

    def test_rejects_unknown_and_bad(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"sedd": 1})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"sizes": [1, 2]})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"tolerances": {"nope": 1}})
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        with pytest.raises(ConfigError):
            load_config(bad, env={})

    def test_round_trip(self):
        cfg = RunConfig(seed=3, mus=[0.5, [1.0, 0.5]])
        assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.fixture(scope="module")
def report():
    return run_all(RunConfig(**SMALL))


class TestRunAll:
    def test_identity_only(self, report):
        s = report.summary
        assert s["unexpected_refutations"] == 0 and s["errors"] == 0
        assert {r["entry"] for r in report.records if not r["planted"]} <= {"identity-p1", "corpus"}
        for r in report.records:
            if not r["planted"] and r["theorem"] not in ("def1", "def2"):
                assert r["status"] in ("certified", "skipped", "inconclusive")

    def test_planted_audit(self, report):
        audit = report.summary["planted_audit"]
        assert audit["passed"] and audit["refuted"] == audit["planted"] == 3

    def test_accounting(self, report):
        acc = report.summary["accounting"]
        assert acc == {"generated": 1, "checked": 1, "excluded": 0, "balanced": True}

    def test_records_sorted_and_json(self, report, tmp_path):
        d = json.loads(report.to_json())
        assert d["schema"] == 1 and len(d["records"]) == len(report.records)
        path = write_report(report, tmp_path / "out")
        assert json.loads(path.read_text())["summary"] == d["summary"]

    def test_no_faults(self):
        r = run_all(RunConfig(**SMALL, plant_faults=False, mus=[1.0], exponents=[[1, 0]]))
        assert r.summary["planted_audit"]["planted"] == 0 and r.ok


class TestTraces:
    @pytest.mark.parametrize("kind", TRACE_KINDS)
    def test_every_kind(self, kind, tmp_path):
        cfg = RunConfig(angles=16, only=["identity-p1"])
        csv_path, meta = emit_traces(cfg, kind, tmp_path)
        raw = csv_path.read_bytes()
        assert b"\r" not in raw
        rows = list(csv.reader(raw.decode().splitlines()))
        assert tuple(rows[0]) == TRACE_HEADER and len(rows) > 1
        assert json.loads(meta.read_text())["kind"] == kind

    def test_region_boundary_halfplane(self, tmp_path):
        cfg = RunConfig(angles=32, targets=[[1, -1]])
        csv_path, _ = emit_traces(cfg, "region-boundary", tmp_path)
        rows = list(csv.DictReader(csv_path.read_text().splitlines()))
        # Re w = (1 - r^2)/|1 - z|^2 tends to 0 away from z = 1 as r -> 1
        for r in rows:
            z = complex(float(r["z_re"]), float(r["z_im"]))
            assert float(r["w_re"]) == pytest.approx((1 - abs(z) ** 2) / abs(1 - z) ** 2, rel=1e-12)
            if abs(z) > 0.98 and z.real < 0:
                assert float(r["w_re"]) < 0.011

    def test_dominant_values_affine(self, tmp_path):
        cfg = RunConfig(angles=16, targets=[[1, 0]])
        csv_path, _ = emit_traces(cfg, "dominant-values", tmp_path, gamma=1.0)
        for r in csv.DictReader(csv_path.read_text().splitlines()):
            z = complex(float(r["z_re"]), float(r["z_im"]))
            assert abs(complex(float(r["w_re"]), float(r["w_im"])) - (1 + z / 2)) < 1e-12

    def test_deterministic_bytes(self, tmp_path):
        cfg = RunConfig(angles=16)
        a, _ = emit_traces(cfg, "dominant-values", tmp_path / "a")
        b, _ = emit_traces(cfg, "dominant-values", tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError):
            emit_traces(RunConfig(angles=16), "nope", tmp_path)


class TestCli:
    def test_corpus(self, tmp_path):
        assert main(["corpus", "--out", str(tmp_path)]) == 0
        assert len(json.loads((tmp_path / "corpus.json").read_text())["entries"]) == 26
        assert main(["corpus", "--format", "csv", "--out", str(tmp_path)]) == 0
        assert len((tmp_path / "corpus.csv").read_text().splitlines()) == 27

    def test_check_ok(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"angles": 64}))
        assert main(["check", "all", "--config", str(cfg), "--only", "identity-p1",
                     "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "report.json").read_text())["summary"]["planted_audit"]["passed"]

    def test_check_violation(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"angles": 64, "mus": [1.0], "exponents": [[1, 0]]}))
        # an unattainable identity tolerance turns rounding error into violations
        assert main(["check", "identity", "--config", str(cfg), "--only", "sparse-00",
                     "--tol-identity", "1e-30", "--out", str(tmp_path)]) == 1

    def test_config_errors(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["corpus", "--config", str(cfg)]) == 2
        assert main(["check", "9.9", "--out", str(tmp_path)]) == 2
        assert main(["corpus", "--tol-identity", "-1"]) == 2
        assert main(["dominant", "--gamma", "-1"]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_dominant(self, capsys):
        assert main(["dominant", "--gamma", "1", "-A", "1", "-B", "0"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["inf_re"] == pytest.approx(0.5, abs=1e-3)
        assert main(["dominant", "--format", "csv"]) == 0
        assert capsys.readouterr().out.startswith("key,value\n")

    def test_membership(self, capsys):
        assert main(["membership", "--coeffs", "0.1", "--mu", "0.5", "-A", "1", "-B", "-1"]) == 0
        assert json.loads(capsys.readouterr().out)["verdict"]["status"] == "certified"
        assert main(["membership", "--entry", "identity-p1", "--rho", "0.5"]) == 0
        assert json.loads(capsys.readouterr().out)["passes"] is True
        assert main(["membership", "--entry", "stress-04"]) == 2

    def test_trace(self, tmp_path, capsys):
        assert main(["trace", "re-extrema", "--gamma", "1+1i", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "trace-re-extrema.csv").exists()
