"""CLI: tuple-file parsing, pipelines, reports, exit codes."""

import json

import numpy as np
import pytest

from dcmodel.cli import (
    TupleFileError,
    VerificationReport,
    emit_report,
    generate_demo,
    load_tuple_file,
    main,
    run_full_suite,
    run_validate,
    save_tuple_file,
)
from dcmodel.tuples import ContractionTuple


def _write_tuple(path, mats, meta=None):
    T = ContractionTuple(tuple(np.asarray(M, dtype=complex) for M in mats))
    save_tuple_file(str(path), T, meta or {})
    return str(path)


class TestTupleFile:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        p = _write_tuple(tmp_path / "t.json", [0.3 * M], {"seed": 5})
        T, meta = load_tuple_file(p)
        assert T.n == 1 and T.dim == 3
        assert np.allclose(T.matrices[0], 0.3 * M, atol=1e-15)
        assert meta["seed"] == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(TupleFileError):
            load_tuple_file(str(tmp_path / "absent.json"))

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(TupleFileError):
            load_tuple_file(str(p))

    def test_ragged_matrix_rejected(self, tmp_path):
        p = tmp_path / "ragged.json"
        doc = {"n": 1, "dim": 2,
               "matrices": [[[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0]]]],
               "metadata": {}}
        p.write_text(json.dumps(doc))
        with pytest.raises(TupleFileError):
            load_tuple_file(str(p))

    def test_wrong_count_rejected(self, tmp_path):
        p = tmp_path / "count.json"
        doc = {"n": 2, "dim": 1, "matrices": [[[[0.0, 0.0]]]], "metadata": {}}
        p.write_text(json.dumps(doc))
        with pytest.raises(TupleFileError):
            load_tuple_file(str(p))


class TestDemo:
    def test_tensor_demo_validates(self, tmp_path):
        T, meta = generate_demo("tensor", [2, 3], 0.4, 7)
        assert T.n == 2 and T.dim == 6
        p = tmp_path / "demo.json"
        save_tuple_file(str(p), T, meta)
        report, code = run_validate(str(p))
        assert code == 0 and report.verdict == "pass"

    def test_demo_determinism(self, tmp_path):
        for name in ("a.json", "b.json"):
            T, meta = generate_demo("tensor", [2, 2], 0.5, 3)
            save_tuple_file(str(tmp_path / name), T, meta)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_jordan_is_nilpotent(self):
        T, _ = generate_demo("jordan", [3], 0.6, 0)
        assert np.allclose(np.linalg.matrix_power(T.matrices[0], 3), 0.0)

    def test_random_is_diagonal_tensor(self):
        T, _ = generate_demo("random", [2, 2], 0.4, 1)
        for M in T.matrices:
            assert np.allclose(M, np.diag(np.diag(M)))

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            generate_demo("bogus", [2], 0.4, 0)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            generate_demo("tensor", [2], 1.5, 0)


class TestPipelines:
    def test_identity_tuple_gates_suite(self, tmp_path):
        p = _write_tuple(tmp_path / "ident.json", [np.eye(2)])
        report, code = run_validate(p)
        assert code == 1
        names = {c.name: c.status for c in report.checks}
        assert names["validate.pure"] == "fail"
        report, code = run_full_suite(p)
        assert code == 1
        assert any(c.status == "skipped" for c in report.checks)
        assert all(c.status == "skipped" for c in report.checks
                   if not c.name.startswith("validate."))

    def test_zero_tuple_suite_exact(self, tmp_path):
        p = _write_tuple(tmp_path / "zero.json",
                         [np.zeros((1, 1)), np.zeros((1, 1))])
        report, code = run_full_suite(p)
        assert code == 0 and report.verdict == "pass"
        for c in report.checks:
            if c.status == "pass" and c.name != "validate.pure":
                assert c.residual <= 1e-12

    def test_suite_check_roster(self, tmp_path):
        T, meta = generate_demo("tensor", [2, 2], 0.4, 2)
        p = tmp_path / "demo.json"
        save_tuple_file(str(p), T, meta)
        report, code = run_full_suite(str(p))
        assert code == 0
        names = [c.name for c in report.checks]
        assert names == [
            "validate.contractive", "validate.commuting",
            "validate.doubly_commuting", "validate.pure",
            "validate.defect_commutation",
            "dilation.isometry", "dilation.intertwining",
            "dilation.adjoint_on_kernels", "dilation.minimality",
            "dilation.compression",
            "model.boundary_inner", "model.kernel_identity",
            "model.defect_invariance", "model.product_kernel_identity",
            "model.gramian_kernel", "model.gramian_operator",
            "model.projection_drift", "model.projection_commutators",
            "model.subspace_split",
            "blh.inner_recovery", "blh.reconstruct_sum",
        ]


class TestReports:
    def test_json_schema(self):
        report = VerificationReport()
        report.add("x", 1e-12, 1e-9, "some identity")
        text = emit_report(report, "json")
        doc = json.loads(text)
        assert set(doc) == {"checks", "verdict"}
        assert set(doc["checks"][0]) == {"name", "status", "residual",
                                         "tolerance", "paper_ref"}
        assert doc["verdict"] == "pass"

    def test_text_and_json_verdicts_agree(self):
        report = VerificationReport()
        report.add("x", 1.0, 1e-9, "failing identity")
        assert "verdict: fail" in emit_report(report, "text")
        assert json.loads(emit_report(report, "json"))["verdict"] == "fail"

    def test_empty_report(self):
        text = emit_report(VerificationReport(), "text")
        assert "verdict: pass" in text

    def test_skipped_not_counted_as_failure(self):
        report = VerificationReport()
        report.add("a", 0.0, 1.0, "ok")
        report.skip("b", "skipped thing", "too large")
        assert report.verdict == "pass"


class TestMain:
    def test_end_to_end(self, tmp_path, capsys):
        demo = str(tmp_path / "demo.json")
        rep1 = str(tmp_path / "r1.json")
        rep2 = str(tmp_path / "r2.json")
        assert main(["demo", "tensor", "--dims", "2,2", "--radius", "0.4",
                     "--seed", "5", "--out", demo]) == 0
        assert main(["validate", demo]) == 0
        assert main(["--format", "json", "suite", demo, "--report", rep1]) == 0
        assert main(["--format", "json", "suite", demo, "--report", rep2]) == 0
        capsys.readouterr()
        assert open(rep1, "rb").read() == open(rep2, "rb").read()

    def test_parse_error_exit_3(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("nope")
        assert main(["validate", str(p)]) == 3
        capsys.readouterr()

    def test_bad_degree_flag(self, tmp_path, capsys):
        demo = str(tmp_path / "demo.json")
        main(["demo", "jordan", "--dims", "2", "--out", demo])
        assert main(["suite", demo, "--degree", "many"]) == 3
        capsys.readouterr()

    def test_fixed_degree(self, tmp_path, capsys):
        demo = str(tmp_path / "demo.json")
        main(["demo", "jordan", "--dims", "2", "--radius", "0.6", "--out", demo])
        assert main(["suite", demo, "--degree", "6"]) == 0
        out = capsys.readouterr().out
        assert "degree used: 6" in out
