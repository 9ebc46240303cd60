import csv
import io
import json

import pytest
from hypothesis import HealthCheck, given, settings

from nbsync.examples.transcriptions import message_passing, peterson, store_buffering
from nbsync.litmus import ParseError, format_program, parse, parse_file, run
from nbsync.litmus import report as render
from nbsync.litmus.cli import corpus_names, main, resolve
from nbsync.orderings import ACQ, REL, InvalidOrderPair, InvalidReadOrder, InvalidWriteOrder
from nbsync.simulator import Load, Loop, Model, Store

from oracles import straight_line

FIG1 = """
litmus producer-consumer
# producer fills data, then raises the flag
locations {
  data: plain init 0
  flag: atomic init 0 read=acquire write=release
}
thread Producer {
  store data = 1
  store flag = 1
}
thread Consumer {
  loop {
    load r1 = flag
  } until r1 == 1
  load r2 = data
}
forbidden: r2 == 0
"""


def test_parse_producer_consumer():
    p = parse(FIG1)
    assert p.name == "producer-consumer"
    assert [t.name for t in p.threads] == ["Producer", "Consumer"]
    assert p.location("data").kind == "plain"
    store_flag = p.threads[0].instrs[1]
    assert isinstance(store_flag, Store) and store_flag.order is REL
    loop = p.threads[1].instrs[0]
    assert isinstance(loop, Loop) and loop.body[0] == Load("r1", "flag", ACQ)
    assert p.clauses[0].kind == "forbidden"


def test_order_errors_are_delegated():
    bad_read = FIG1.replace("load r1 = flag", "load r1 = flag @release")
    with pytest.raises(InvalidReadOrder) as info:
        parse(bad_read)
    assert "line 14" in str(info.value)
    with pytest.raises(InvalidWriteOrder):
        parse(FIG1.replace("store flag = 1", "store flag = 1 @acquire"))
    with pytest.raises(InvalidOrderPair):
        parse(FIG1.replace("flag: atomic init 0 read=acquire write=release",
                           "flag: rmw init 0 success=release failure=acquire"))


@pytest.mark.parametrize("text,where", [
    ("litmus empty\nlocations {\n  x: atomic init 0\n}\n", None),
    (FIG1.replace("store data = 1", "stor data = 1"), 9),
    (FIG1.replace("locations {", "locations {\n  q: weird init 0"), 5),
    (FIG1.replace("until r1 == 1", "until r1 =="), 15),
    (FIG1.replace("forbidden:", "perhaps:"), 18),
])
def test_syntax_errors(text, where):
    with pytest.raises(ParseError) as info:
        parse(text)
    if where is not None:
        assert info.value.line == where


def test_cas_and_arrays_round_trip():
    text = """
    litmus cas-demo
    locations {
      turn[2]: atomic init 0,1
      head: rmw init 0 success=release failure=relaxed
    }
    thread A {
      cas r = head (0 -> 1) @seq_cst/acquire
      load t = turn[1] @relaxed
      u = t + r * 2
    }
    thread B {
      cas s = head (0 -> 2)
      store turn[0] = 1 @release
    }
    exists: r == 0 && s == 1
    """
    p = parse(text)
    assert parse(format_program(p)) == p
    assert p.init == {"turn[0]": 0, "turn[1]": 1, "head": 0}


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_round_trips(name):
    p = parse_file(resolve(name))
    assert parse(format_program(p)) == p


@settings(max_examples=80, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(straight_line())
def test_random_round_trip(program):
    assert parse(format_program(program)) == program


# -- runner -------------------------------------------------------------

def test_exhaustive_verdicts():
    ra = run(message_passing("release", "acquire", clause="forbidden: r2 == 0"), model=Model.TABLE1)
    assert ra.ok and ra.verdicts[0].verdict == "Forbidden" and ra.races == []
    rlx = run(message_passing("relaxed", "relaxed", clause="exists: r2 == 0"), model=Model.TABLE1)
    v = rlx.verdicts[0]
    assert rlx.ok and v.verdict == "Allowed" and v.witness is not None
    assert any("load r2 = data" in line and "-> 0" in line for line in v.describe(rlx.thread_names))
    assert len(rlx.races) == 1


def test_violated_forbidden_clause():
    rep = run(message_passing("relaxed", "relaxed", clause="forbidden: r2 == 0"), model=Model.TABLE1)
    assert not rep.ok and rep.verdicts[0].witness is not None


def test_stress_store_buffering_sc():
    rep = run(store_buffering("seq_cst"), mode="stress", iterations=100_000)
    assert rep.ok and rep.unexplained == []
    assert sum(rep.histogram.values()) + rep.stress_blocked == 100_000
    assert all(not (dict(k)["r1"] == 0 and dict(k)["r2"] == 0) for k in rep.histogram)


def test_stress_observed_subset_of_enumerated(busy_switching):
    for program in (peterson("sc"), message_passing("release", "acquire")):
        rep = run(program, mode="stress", iterations=300)
        assert rep.unexplained == [] and rep.ok
        assert set(rep.histogram) <= rep.outcomes.valuations()


def test_stress_exists_clause_is_not_a_failure():
    rep = run(message_passing("relaxed", "relaxed", clause="exists: r2 == 0"), mode="stress", iterations=50)
    assert rep.ok and rep.verdicts[0].verdict in ("Observed", "Not observed")


def test_json_and_csv_reports():
    rep = run(peterson("sc"))
    doc = json.loads(render.to_json(rep))
    assert doc["format"] == 1 and doc["name"] == "peterson-sc" and doc["model"] == "sc"
    assert len(doc["outcomes"]) == 6 and all("witness" in o for o in doc["outcomes"])
    assert doc["races"] == [] and [v["verdict"] for v in doc["verdicts"]] == ["Forbidden", "Forbidden"]
    rows = list(csv.DictReader(io.StringIO(render.to_csv(rep))))
    assert len(rows) == 6 and {r["max_holders"] for r in rows} == {"1"}

    stress = run(peterson("sc"), mode="stress", iterations=20)
    sdoc = json.loads(render.to_json(stress))
    assert sum(o["count"] for o in sdoc["outcomes"]) == 20 - sdoc["blocked"]


def test_plot_written(tmp_path):
    path = tmp_path / "out.png"
    render.plot(run(store_buffering("relaxed"), model=Model.TABLE1), str(path))
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


# -- command line -------------------------------------------------------

def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "mp-release-acquire", "--model", "table1"]) == 0
    assert main(["run", "mp-relaxed", "--model", "table1"]) == 0
    out = capsys.readouterr().out
    assert "exists: r2 == 0  -> Allowed (ok)" in out and "load r2 = data" in out
    assert main(["run", "peterson-ra-defaults", "--model", "table1"]) == 2
    bad = tmp_path / "bad.litmus"
    bad.write_text("litmus bad\nlocations {\n x: atomic init 0\n}\nthread A {\n load r = x @release\n}\n")
    assert main(["run", str(bad)]) == 3
    assert main(["run", str(tmp_path / "missing.litmus")]) == 3
    assert main(["run", "peterson-sc", "--max-states", "5"]) == 4


def test_cli_report_directory(tmp_path, capsys):
    out = tmp_path / "rep"
    assert main(["run", "sb-relaxed", "--model", "full", "--report", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["model"] == "full" and len(doc["outcomes"]) == 4
    assert (out / "outcomes.csv").read_text().splitlines()[0] == "r1,r2,x,y,count"
    assert (out / "outcomes.png").stat().st_size > 0


def test_cli_stress_and_progress(tmp_path, capsys):
    path = tmp_path / "s.json"
    assert main(["run", "sb-seq-cst", "--mode", "stress", "--iterations", "200", "--json", str(path)]) == 0
    assert json.loads(path.read_text())["iterations"] == 200
    assert main(["run", "peterson-sc", "--progress"]) == 0
    assert "progress: ok" in capsys.readouterr().out


def test_cli_print_and_list(capsys):
    assert main(["list"]) == 0
    assert "filter-3" in capsys.readouterr().out.split()
    assert main(["print", "mp-release-acquire"]) == 0
    assert capsys.readouterr().out.startswith("litmus mp-release-acquire")
