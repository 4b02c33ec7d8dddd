import importlib.util
import json
import random
import re
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from moore_tower.chain import ChainComplex
from moore_tower.cli import (CommandRequest, InputError, bisimplicial_to_json, emit_report, execute,
                             load_object, main, parse_bounds, parse_input, parse_range, sequence_table)
from moore_tower.compare import random_bisimplicial
from moore_tower.exactalg import RingSpec, ZZ
from moore_tower.simplicial import random_simplicial

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
_spec = importlib.util.spec_from_file_location("make_goldens", ROOT / "scripts" / "make_goldens.py")
make_goldens = importlib.util.module_from_spec(_spec)
_spec.loader.exec_module(make_goldens)


def write(tmp_path, obj, name="in.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- goldens


@pytest.mark.parametrize("name,argv", make_goldens.CORPUS, ids=[n for n, _ in make_goldens.CORPUS])
def test_golden(name, argv, tmp_path):
    out = tmp_path / "out"
    code = make_goldens.run(make_goldens.corpus_argv(argv), out)
    expected = json.loads((GOLDEN / "exit_codes.json").read_text())[name]
    assert code == expected
    assert out.read_bytes() == (GOLDEN / make_goldens.golden_name(name, argv)).read_bytes()


def test_golden_inputs_are_current():
    for name, obj in make_goldens.inputs().items():
        assert json.loads((GOLDEN / "inputs" / name).read_text()) == obj


# ---------------------------------------------------------------- requests and reports


def test_kinv_on_periodic_complex():
    rep = execute(CommandRequest("kinv", input_path=str(GOLDEN / "inputs" / "periodic_z4.json"), degree=1))
    assert rep.results["verdict"] == "non-nullhomotopic" and rep.exit_code == 0


def test_lift_on_unrealizable_target_exits_2(capsys):
    code, out, _ = run(["lift", str(GOLDEN / "inputs" / "unrealizable.json"), "--no-timing"], capsys)
    assert code == 2
    body = json.loads(out)["results"]
    assert not body["realizable"] and body["certificate"][0]["reason"] == "obstruction"


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_spiral_on_random_seed_is_exact(seed):
    rep = execute(CommandRequest("spiral", seed=seed, timing=False))
    assert rep.exit_code == 0 and rep.results["exact"] and rep.results["ok"]


def test_json_report_reloads_equal():
    rep = execute(CommandRequest("compare-les", seed=4, ring=RingSpec.mod(2)))
    assert json.loads(emit_report(rep, "json")) == rep.to_json()


def test_text_table_has_one_row_per_term():
    rep = execute(CommandRequest("compare-les", input_path=str(GOLDEN / "inputs" / "moore_z2.json"),
                                 ring=RingSpec.mod(2), degree_range=(0, 0)))
    seq = rep.results["sequence"]
    assert len(seq["terms"]) == 4
    rep = execute(CommandRequest("compare-les", input_path=str(GOLDEN / "inputs" / "moore_z2.json"),
                                 ring=RingSpec.mod(2), degree_range=(0, 1)))
    seq = rep.results["sequence"]
    assert len(seq["terms"]) == 7
    six = dict(seq, terms=seq["terms"][:6], verdicts=[v for v in seq["verdicts"] if v["index"] < 6])
    rows = sequence_table(six)
    assert len(rows) == 7 and rows[0].startswith("term")
    assert all(r.rstrip().endswith(("exact", "-")) for r in rows[1:])


def test_timing_is_outside_the_results():
    req = CommandRequest("homology", seed=1)
    a, b = execute(req), execute(req)
    assert "timing" in a.to_json() and a.results == b.results
    assert emit_report(execute(CommandRequest("homology", seed=1, timing=False))) == \
        emit_report(execute(CommandRequest("homology", seed=1, timing=False)))


def test_ring_flag_base_changes_integer_input():
    rep = execute(CommandRequest("homology", input_path=str(GOLDEN / "inputs" / "moore_z2.json"),
                                 ring=RingSpec.mod(2)))
    assert [h["homology"]["text"] for h in rep.results["homology"]] == ["Z/2", "Z/2"]


# ---------------------------------------------------------------- validation


def test_d_squared_nonzero_names_degrees(tmp_path, capsys):
    bad = ChainComplex.free(ZZ, [1, 1, 1], [[[1]], [[0]]]).to_json()
    bad["differentials"][1]["entries"] = ["1"]
    code, _, err = run(["homology", write(tmp_path, bad)], capsys)
    assert code == 1 and "d_1 o d_2" in err and "degrees 2 -> 0" in err


def test_unknown_and_missing_fields(tmp_path):
    good = ChainComplex.free(ZZ, [1, 1], [[[2]]]).to_json()
    with pytest.raises(InputError, match=r"\$: unknown field 'extra'"):
        load_object(dict(good, extra=1), "complex")
    broken = json.loads(json.dumps(good))
    del broken["terms"][1]["generators"]
    with pytest.raises(InputError, match=r"\$.terms\[1\]: missing field 'generators'"):
        load_object(broken, "complex")
    broken = json.loads(json.dumps(good))
    broken["differentials"][0]["entries"] = [2]
    with pytest.raises(InputError, match=r"differentials\[0\]\.entries\[0\]: expected a decimal string"):
        load_object(broken, "complex")


def test_malformed_json_reports_line_and_column(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "ring": "Z",\n  "top_degree": 0,,\n}')
    with pytest.raises(InputError, match=r"bad\.json:3:"):
        parse_input(p, "complex")


def test_flag_parsing():
    assert parse_range("1..3") == (1, 3)
    assert parse_bounds("rank=1,entry=2,deg=3").to_json() == {"deg": 3, "rank": 1, "entry": 2}
    for bad in ("3..1", "1-3"):
        with pytest.raises(InputError):
            parse_range(bad)
    for bad in ("rank=1,rank=2", "width=3", "rank=-1"):
        with pytest.raises(InputError):
            parse_bounds(bad)


@pytest.mark.parametrize("argv", [
    ["homology", "--seed", "1", "--ring", "Q"],
    ["homology", "--seed", "1", "--range", "2..1"],
    ["lift", "--seed", "1", "--bounds", "rank=x"],
    ["homology"],
    ["homology", "missing.json"],
    ["homology", "--seed", "1", "--bounds", "rank=1"],
])
def test_bad_requests_exit_1(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1 and err


def test_thread_cap_is_validated(monkeypatch, capsys):
    monkeypatch.setenv("MOORE_TOWER_THREADS", "zero")
    assert run(["homology", "--seed", "1"], capsys)[0] == 1
    monkeypatch.setenv("MOORE_TOWER_THREADS", "2")
    assert run(["homology", "--seed", "1"], capsys)[0] == 0


def test_ring_mismatch_is_rejected():
    with pytest.raises(InputError, match="cannot use --ring"):
        execute(CommandRequest("homology", input_path=str(GOLDEN / "inputs" / "periodic_z4.json"),
                               ring=RingSpec.mod(2)))


def test_bisimplicial_json_roundtrip():
    x = random_bisimplicial(random.Random(3), ZZ, 2, 2, max_rank=2)
    y = load_object(json.loads(json.dumps(bisimplicial_to_json(x))), "bisimplicial")
    assert bisimplicial_to_json(y) == bisimplicial_to_json(x)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.sampled_from([1, -1, 2]))
def test_corrupted_simplicial_files_name_the_failure(seed, pick, delta):
    x = random_simplicial(random.Random(seed), ZZ, 3, max_rank=2, top=2)
    obj = x.to_json()
    slots = [(n, i, k) for n in range(1, 4) for i, f in enumerate(obj["faces"][n])
             for k in range(len(f["entries"]))]
    if not slots:
        return
    n, i, k = slots[pick % len(slots)]
    entries = obj["faces"][n][i]["entries"]
    entries[k] = str(int(entries[k]) + delta)
    try:
        y = load_object(obj, "simplicial")
    except InputError as e:
        assert re.search(r"\(level \d, (i=\d, j=\d|\d)\)", str(e)), str(e)
    else:
        # a perturbation survives only when every identity still holds
        y.validate()


def test_face_identity_error_names_level_and_indices():
    x = random_simplicial(random.Random(1), ZZ, 2, max_rank=2, top=1)
    obj = x.to_json()
    m = obj["faces"][2][2]
    m["entries"] = [str(int(e) + 1) for e in m["entries"]]
    with pytest.raises(InputError, match=r"identity .* fails at \(level \d, i=\d, j=\d\)"):
        load_object(obj, "simplicial")
