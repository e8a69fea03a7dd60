import hashlib
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocyclebench import __version__
from cocyclebench.cli import Manifest, main, parse_measures, run, validate
from cocyclebench.errors import GrammarError

ZREG = ["--group", "zd:1", "--rep", "regular", "--cocycle", "generated:delta:[0]"]


def _body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_group_info_ball_sizes(capsys):
    assert main(["group", "info", "--group", "zd:2", "--radius", "5"]) == 0
    rows = _body(capsys.readouterr().out)
    assert rows[0] == "n,ball_size,sphere_size"
    assert [int(r.split(",")[1]) for r in rows[1:]] == [1, 5, 13, 25, 41, 61]


def test_folner_scan_flags_all_rows(capsys):
    assert main(["folner", "scan", "--group", "zd:1", "--n", "20", "--K", "2"]) == 0
    rows = _body(capsys.readouterr().out)[1:]
    assert len(rows) == 20
    assert all(r.endswith(",1") for r in rows)


def test_met_run_weak_column(capsys):
    assert main(["met", "run", *ZREG, "--xi", "delta:[0]", "--measures", "list:100"]) == 0
    n, weak, ab, _ = _body(capsys.readouterr().out)[1].split(",")
    assert n == "100"
    assert float(weak) == pytest.approx(0.0258, abs=1e-4)


def test_header_embeds_version_and_manifest_hash(capsys):
    main(["group", "info", "--group", "zd:1", "--radius", "2"])
    out = capsys.readouterr().out.splitlines()
    manifest_json = out[1].removeprefix("# manifest ")
    digest = hashlib.sha256(manifest_json.encode()).hexdigest()
    assert out[0] == f"# cocyclebench {__version__} manifest-sha256={digest}"


def test_fixpoint_exit_codes(capsys):
    assert main(["fixpoint", "run", *ZREG, "--measures", "balls:2..6", "--target", "0.01"]) == 2
    assert "partial" in capsys.readouterr().err
    cob = ["--group", "zd:1", "--rep", "regular", "--cocycle", "coboundary:delta:[0]"]
    assert main(["fixpoint", "run", *cob, "--measures", "balls:1..3", "--target", "1e-9"]) == 0
    assert _body(capsys.readouterr().out)[1].startswith("1,0.0,0.0,")


def test_errors_exit_one(capsys):
    assert main(["group", "info", "--group", "nope", "--radius", "2"]) == 1
    assert "nope" in capsys.readouterr().err
    assert main(["met", "run", "--group", "zd:1"]) == 1


def test_higson_and_harmonic_commands(capsys):
    assert main(["higson", "classify", *ZREG, "--field", "pairing", "--xi", "delta:[0]", "--p", "4", "--radius", "3"]) == 0
    rows = _body(capsys.readouterr().out)
    assert rows[0] == "n,sup_variation,hp_partial"
    assert len(rows) == 5
    assert main(["harmonic", "test", "--group", "zd:1", "--field", "linear:1", "--radius", "3"]) == 0
    rows = _body(capsys.readouterr().out)
    assert rows[0] == "g,defect"
    assert all(r.endswith(",0.0") for r in rows[1:])
    assert main(["higson", "classify", "--group", "zd:1", "--field", "length", "--radius", "3"]) == 1


def test_rigidity_demo(capsys):
    assert main(["rigidity", "demo", "--radius", "4"]) == 0
    rows = [r.split(",") for r in _body(capsys.readouterr().out)[1:]]
    assert [float(r[3]) for r in rows] == [1.0] * 4
    assert [float(r[4]) for r in rows] == pytest.approx([2 / (k + 1) for k in range(1, 5)])


def test_validate(capsys):
    assert main(["validate", "group", "info", "--group", "zd:2", "--radius", "5"]) == 0
    assert capsys.readouterr().out == ""
    assert main(["validate", "met", "run", "--group", "quux"]) == 1
    assert "quux" in capsys.readouterr().out
    assert main(["validate", "group", "info", "--group", "heisenberg", "--radius", "60"]) == 1
    assert "projects" in capsys.readouterr().out


def test_validate_has_no_side_effects(tmp_path):
    m = Manifest(command="met run", group="zd:1", rep="regular", cocycle="generated:delta:[0]", xi="delta:[0]", measures="balls:10")
    assert validate(m) == []
    assert list(tmp_path.iterdir()) == []


def test_out_dir_and_manifest_reuse(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["group", "info", "--group", "zd:1", "--radius", "3", "--out", str(out)]) == 0
    table = (out / "group_info.csv").read_text()
    manifest = (out / "manifest.json").read_text()
    assert Manifest.from_json(manifest).to_json() == manifest
    assert main(["group", "info", "--manifest", str(out / "manifest.json")]) == 0
    assert capsys.readouterr().out == table


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\ngroup = zd:3\nradius = 2\n")
    assert main(["group", "info", "--config", str(cfg)]) == 0
    rows = _body(capsys.readouterr().out)
    assert rows[-1] == "2,25,18"


def test_json_format(capsys):
    assert main(["folner", "scan", "--group", "zd:1", "--n", "2", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["columns"] == ["n", "|F|", "|∂F|", "diam", "K_hat"]
    assert doc["manifest"]["format"] == "json"


def test_measure_grammar():
    assert parse_measures("balls:3") == ("balls", {"radii": [1, 2, 3]})
    assert parse_measures("balls:2..4") == ("balls", {"radii": [2, 3, 4]})
    assert parse_measures("list:5,7") == ("balls", {"radii": [5, 7]})
    assert parse_measures("shalom:21,60") == ("shalom", {"K": 21.0, "n_max": 60})
    assert parse_measures("shifted:2@[4]") == ("shifted", {"radii": [1, 2], "shift": [4]})
    with pytest.raises(GrammarError, match="position 7"):
        parse_measures("list:1,x")
    with pytest.raises(GrammarError):
        parse_measures("cubes:3")


def test_shifted_measures_run():
    m = Manifest(command="met run", group="zd:1", rep="regular", cocycle="generated:delta:[0]", xi="delta:[0]", measures="shifted:3@[20]")
    body, code = run(m)
    assert code == 0
    assert len(body.splitlines()) == 4


_text = st.one_of(st.none(), st.text(max_size=12))
_num = st.one_of(st.none(), st.floats(allow_nan=False, allow_infinity=False))


@settings(max_examples=80, deadline=None)
@given(_text, _text, st.one_of(st.none(), st.integers(0, 10**6)), _num, _num)
def test_manifest_round_trip_is_byte_identical(rep, measures, radius, K, target):
    m = Manifest(command="met run", rep=rep, measures=measures, radius=radius, K=K, target=target)
    text = m.to_json()
    again = Manifest.from_json(text)
    assert again == m
    assert again.to_json() == text
    assert again.sha256() == m.sha256()


def test_unknown_manifest_keys_rejected():
    with pytest.raises(GrammarError):
        Manifest.from_json('{"command": "group info", "colour": "blue"}')


@pytest.mark.parametrize("workers", [2, 8])
def test_bodies_identical_across_workers(workers):
    m = Manifest(command="fixpoint run", group="zd:1", rep="regular", cocycle="generated:delta:[0]", measures="balls:2..20", target=0.0)
    assert run(m, workers) == run(m, 1)
