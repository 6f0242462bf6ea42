import json
import subprocess
import sys
from pathlib import Path

import pytest
from jsonschema import validate

import acwb
from acwb.cli import run, corpus
from acwb.words import parse_presentation

SCHEMAS = Path(acwb.__file__).parent / "schemas"


def load_schema(name):
    with open(SCHEMAS / f"{name}.schema.json") as fh:
        return json.load(fh)


def run_json(capsys, args, schema=None):
    code = run(args)
    out = capsys.readouterr().out
    payload = json.loads(out)
    if schema:
        validate(payload, load_schema(schema))
    return code, payload


class TestCommands:
    def test_parse(self, capsys):
        code, payload = run_json(capsys, ["parse", "<x, y | xy, y>"], "parse")
        assert code == 0
        assert payload["balanced"] is True
        assert payload["relators"] == [[1, 2], [2]]

    def test_parse_error_exit_code(self, capsys):
        assert run(["parse", "<x | y>"]) == 1

    def test_normalize(self, capsys):
        code, payload = run_json(capsys, ["normalize", "<x | x X x>"], "normalize")
        assert code == 0
        assert payload["presentation"] == "<x | x>"

    def test_invariants_disc(self, capsys):
        code, payload = run_json(capsys, ["invariants", "<a | a>"], "invariants")
        assert code == 0
        assert payload["euler_M"] == 1
        assert payload["euler_S"] == 1
        assert payload["surface"] == "disc"

    def test_invariants_annulus(self, capsys):
        _, payload = run_json(capsys, ["invariants", "<a, b | a, Aba>"], "invariants")
        assert payload["euler_M"] == 0
        assert payload["surface"] == "annulus"

    def test_handle_build_round_trip(self, capsys):
        assert run(["handle", "build", "<a, b | a, Aba>"]) == 0
        text = capsys.readouterr().out
        from acwb.handles import parse_handle_structure, serialize_handle_structure

        assert serialize_handle_structure(parse_handle_structure(text)) == text

    def test_handle_choices(self, capsys):
        code, payload = run_json(capsys, ["handle", "choices", "<x | xxx>"], "handle_choices")
        assert code == 0
        assert payload["total"] == 2 and len(payload["choices"]) == 2

    def test_search_nontrivial(self, capsys):
        code, payload = run_json(capsys, ["search", "<x | x^2>"], "search")
        assert code == 0
        assert payload["outcome"] == "non_trivial_abelianization"

    def test_search_trivial_with_certificate(self, capsys):
        code, payload = run_json(capsys, ["search", "<x, y | y x, y>"], "search")
        assert code == 0
        assert payload["outcome"] == "trivialized"
        assert payload["certificate"][0].startswith("START")

    def test_scramble(self, capsys):
        code, payload = run_json(
            capsys, ["scramble", "<x, y | x, y>", "-k", "4", "--seed", "9"], "scramble"
        )
        assert code == 0
        parse_presentation(payload["presentation"])

    def test_compile(self, capsys):
        code, payload = run_json(
            capsys,
            ["compile", "<a, b | a, b>", "--move", "CONJ 2 1 1", "--move", "INV 1"],
            "compile",
        )
        assert code == 0
        assert payload["consistent"] is True
        assert len(payload["steps"]) == 2

    def test_verify_cert(self, capsys, tmp_path):
        cert = tmp_path / "cert.txt"
        cert.write_text("START <a, b | a, b>\nCONJ 2 1 +1\n")
        code, payload = run_json(
            capsys,
            ["verify-cert", str(cert), "--expected", "<a, b | a, Aba>"],
            "verify_cert",
        )
        assert code == 0
        assert payload["valid"] is True

    def test_recognize_smoke(self, capsys):
        code, payload = run_json(
            capsys,
            ["recognize", "--depth", "8", "<x, y | x y x Y X Y, x^2 Y^3>"],
            "recognize",
        )
        assert code == 0
        assert "verdict" in payload

    def test_recognize_not_sphere_like(self, capsys):
        code, payload = run_json(capsys, ["recognize", "<x | x^2>"], "recognize")
        assert code == 0
        assert payload["verdict"] == "not_sphere_like"

    def test_corpus(self, capsys):
        code, payload = run_json(capsys, ["corpus"], "corpus")
        assert code == 0
        names = [e["name"] for e in payload["entries"]]
        assert "ak-2" in names and "standard-4" in names
        ak2 = next(e for e in payload["entries"] if e["name"] == "ak-2")
        assert ak2["snf_diagonal"] == [1, 1]

    def test_corpus_round_trips(self, capsys):
        for entry in corpus():
            parse_presentation(entry["presentation"])


class TestReportStability:
    def test_byte_stable_reports(self, tmp_path):
        for args in (
            ["search", "<x, y | y x, y>", "--depth", "6"],
            ["scramble", "<x, y | x, y>", "-k", "5", "--seed", "3"],
            ["recognize", "<a, b | a, Aba>", "--depth", "4"],
        ):
            out = tmp_path / "report.json"
            assert run(args + ["--out", str(out)]) == 0
            first = out.read_bytes()
            assert run(args + ["--out", str(out)]) == 0
            assert out.read_bytes() == first

    def test_witness_file(self, tmp_path):
        out = tmp_path / "verdict.json"
        assert run(["recognize", "<a, b | a, Aba>", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["witness"] == str(out) + ".witness"
        assert Path(payload["witness"]).exists()

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "acwb.cli", "corpus"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        json.loads(proc.stdout)
