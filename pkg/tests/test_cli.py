import json
from fractions import Fraction as F

import pytest

from selfish_packing import __version__
from selfish_packing.cli import BUDGET, FAILED, OK, USAGE, main
from selfish_packing.core import PACKING_FORMAT_VERSION, Instance, Packing, parse_instance, serialize_instance
from selfish_packing.game import is_nash
from selfish_packing.generators import MANIFEST_FILE


def write_instance(path, sizes, alpha=F(1)):
    path.write_text(serialize_instance(Instance.from_sizes(sizes, alpha)))
    return str(path)


def write_packing(path, sizes, bins):
    path.write_text(Packing.from_bins(Instance.from_sizes(sizes), bins).dumps())
    return str(path)


@pytest.fixture
def graham(tmp_path):
    assert main(["gen", "--family", "graham", "--r", "3", "--N", "3", "--out-dir", str(tmp_path / "g")]) == OK
    return tmp_path / "g" / "instance.txt"


def bins_in(path):
    return len(json.loads(path.read_text())["bins"])


class TestPack:
    def test_graham(self, graham, tmp_path, capsys):
        assert len(parse_instance(graham.read_text())) == 9
        out = tmp_path / "ss.json"
        assert main(["pack", "--algo", "ss", "--in", str(graham), "--out", str(out), "--trace", str(tmp_path / "tr.json")]) == OK
        assert bins_in(out) == 4
        assert "4 bins" in capsys.readouterr().out
        assert main(["pack", "--algo", "opt", "--in", str(graham), "--out", str(tmp_path / "opt.json")]) == OK
        assert bins_in(tmp_path / "opt.json") == 3
        assert (tmp_path / "tr.json").exists()

    def test_ff_halves(self, tmp_path):
        inst = write_instance(tmp_path / "h.txt", [F(1, 2)] * 4)
        assert main(["pack", "--algo", "ff", "--in", inst, "--out", str(tmp_path / "p.json")]) == OK
        assert bins_in(tmp_path / "p.json") == 2

    def test_trace_needs_ss(self, tmp_path):
        inst = write_instance(tmp_path / "h.txt", [F(1, 2)])
        rc = main(["pack", "--algo", "ffd", "--in", inst, "--out", str(tmp_path / "p"), "--trace", str(tmp_path / "t")])
        assert rc == USAGE

    def test_budget(self, tmp_path, capsys):
        sizes = [F(x, 100) for x in (44, 21, 31, 19, 24, 19, 39, 18, 34, 40)]
        inst = write_instance(tmp_path / "b.txt", sizes)
        assert main(["pack", "--algo", "opt", "--budget", "3", "--in", inst, "--out", str(tmp_path / "p")]) == BUDGET
        assert capsys.readouterr().err

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("alpha 1/1\n0/1\n")
        assert main(["pack", "--algo", "ss", "--in", str(bad), "--out", str(tmp_path / "p")]) == USAGE
        assert "size must be positive" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["pack", "--algo", "ss", "--in", str(tmp_path / "nope"), "--out", str(tmp_path / "p")]) == USAGE

    @pytest.mark.parametrize("algo", ["ss", "ff", "ffd", "opt"])
    def test_round_trip_with_check(self, graham, tmp_path, algo):
        out = tmp_path / f"{algo}.json"
        assert main(["pack", "--algo", algo, "--in", str(graham), "--out", str(out)]) == OK
        rc = main(["check", "--kind", "ne", "--in", str(graham), "--packing", str(out)])
        assert rc in (OK, FAILED)
        packing = Packing.loads_document(parse_instance(graham.read_text()), out.read_text())
        assert (rc == OK) == is_nash(packing)


class TestCheck:
    def test_ne(self, tmp_path):
        sizes = [F(1, 2), F(1, 2), F(1, 3), F(1, 3), F(1, 3)]
        inst = write_instance(tmp_path / "i.txt", sizes)
        pk = write_packing(tmp_path / "p.json", sizes, [[0, 1], [2, 3, 4]])
        for kind in ("ne", "sne-direct", "sne-ss"):
            assert main(["check", "--kind", kind, "--in", inst, "--packing", pk]) == OK

    def test_two_quarters(self, tmp_path, capsys):
        sizes = [F(1, 4), F(1, 4)]
        inst = write_instance(tmp_path / "i.txt", sizes)
        pk = write_packing(tmp_path / "p.json", sizes, [[0], [1]])
        assert main(["check", "--kind", "ne", "--in", inst, "--packing", pk]) == FAILED
        assert "->" in capsys.readouterr().out
        assert main(["check", "--kind", "sne-direct", "--in", inst, "--packing", pk]) == FAILED
        assert main(["check", "--kind", "sne-ss", "--in", inst, "--packing", pk]) == FAILED

    def test_ss_output_is_strong(self, graham, tmp_path):
        out = tmp_path / "ss.json"
        main(["pack", "--algo", "ss", "--in", str(graham), "--out", str(out)])
        assert main(["check", "--kind", "sne-direct", "--in", str(graham), "--packing", str(out)]) == OK

    def test_mismatch(self, tmp_path, capsys):
        inst = write_instance(tmp_path / "i.txt", [F(1, 4), F(1, 4)])
        pk = write_packing(tmp_path / "p.json", [F(1, 4)], [[0]])
        assert main(["check", "--kind", "ne", "--in", inst, "--packing", pk]) == USAGE
        assert capsys.readouterr().err

    def test_budget(self, tmp_path):
        sizes = [F(1, 7)] * 3 + [F(2, 9)] * 3 + [F(1, 5)] * 3
        inst = write_instance(tmp_path / "i.txt", sizes)
        pk = write_packing(tmp_path / "p.json", sizes, [[k] for k in range(9)])
        rc = main(["check", "--kind", "sne-direct", "--budget", "1", "--in", inst, "--packing", pk])
        assert rc in (BUDGET, FAILED)


class TestGen:
    def test_poa_bundle(self, tmp_path, capsys):
        out = tmp_path / "poa"
        assert main(["gen", "--family", "poa", "--t", "2", "--s", "2", "--n", "264", "--out-dir", str(out)]) == OK
        files = sorted(p.name for p in out.iterdir())
        assert len(files) == 4 and MANIFEST_FILE in files
        captured = capsys.readouterr()
        assert "1172" in captured.out
        assert "note:" in captured.err

    def test_bad_n(self, tmp_path):
        assert main(["gen", "--family", "poa", "--t", "2", "--s", "2", "--n", "263", "--out-dir", str(tmp_path)]) == USAGE

    def test_missing_parameter(self, tmp_path):
        assert main(["gen", "--family", "param", "--t", "2", "--out-dir", str(tmp_path)]) == USAGE

    def test_param(self, tmp_path):
        assert main(["gen", "--family", "param", "--t", "2", "--r", "3", "--N", "3", "--out-dir", str(tmp_path)]) == OK
        assert len(parse_instance((tmp_path / "instance.txt").read_text())) == 9


class TestAudit:
    def test_ss(self, graham, tmp_path, capsys):
        assert main(["audit", "--kind", "ss", "--in", str(graham)]) == OK
        captured = capsys.readouterr()
        doc = json.loads(captured.out)
        assert doc["passed"] is True
        assert "ss audit: pass" in captured.err

    def test_ss_parametric_with_opt(self, tmp_path):
        sizes = [F(1, 3)] * 4 + [F(1, 4)] * 2
        inst = write_instance(tmp_path / "i.txt", sizes, F(1, 2))
        opt = tmp_path / "opt.json"
        main(["pack", "--algo", "opt", "--in", inst, "--out", str(opt)])
        rc = main(["audit", "--kind", "ss", "--t", "2", "--in", inst, "--opt", str(opt), "--report", str(tmp_path / "r.json")])
        assert rc == OK
        assert json.loads((tmp_path / "r.json").read_text())["reports"][0]["kind"] == "ss"

    def test_poa(self, tmp_path):
        sizes = [F(1, 2), F(1, 2), F(1, 3), F(3, 8), F(1, 4)]
        inst = write_instance(tmp_path / "i.txt", sizes, F(1, 2))
        ne = tmp_path / "ne.json"
        assert main(["dynamics", "--in", inst, "--out", str(ne)]) == OK
        csv_path = tmp_path / "groups.csv"
        rc = main(["audit", "--kind", "poa", "--in", inst, "--ne", str(ne), "--t", "2",
                   "--special", "exceptions", "--groups-csv", str(csv_path), "--report", str(tmp_path / "r.json")])
        assert rc == OK
        assert csv_path.read_text().startswith("name,t,n_A")
        kinds = [r["kind"] for r in json.loads((tmp_path / "r.json").read_text())["reports"]]
        assert kinds == ["claim40", "claim41", "claim50", "poa"]

    def test_poa_needs_ne(self, graham):
        assert main(["audit", "--kind", "poa", "--in", str(graham)]) == USAGE

    def test_construction(self, tmp_path, capsys):
        good = tmp_path / "good"
        main(["gen", "--family", "poa", "--t", "2", "--s", "2", "--n", "274", "--recurrence", "consistent", "--out-dir", str(good)])
        assert main(["audit", "--kind", "construction", "--bundle", str(good)]) == OK
        assert "construction audit: pass" in capsys.readouterr().err
        printed = tmp_path / "printed"
        main(["gen", "--family", "poa", "--t", "2", "--s", "2", "--n", "264", "--out-dir", str(printed)])
        capsys.readouterr()
        assert main(["audit", "--kind", "construction", "--bundle", str(printed)]) == FAILED
        err = capsys.readouterr().err
        assert "note: d_observation21" in err and "failed: c_is_nash" in err

    def test_tampered_bundle(self, tmp_path):
        out = tmp_path / "b"
        main(["gen", "--family", "poa", "--t", "2", "--s", "2", "--n", "274", "--recurrence", "consistent", "--out-dir", str(out)])
        ne_file = out / "ne_packing.json"
        doc = json.loads(ne_file.read_text())
        bins = doc["bins"]
        bins.append([bins[0].pop()])
        ne_file.write_text(json.dumps(doc))
        assert main(["audit", "--kind", "construction", "--bundle", str(out)]) == FAILED

    def test_missing_bundle(self, tmp_path):
        assert main(["audit", "--kind", "construction", "--bundle", str(tmp_path / "none")]) == USAGE
        assert main(["audit", "--kind", "construction"]) == USAGE


class TestBounds:
    def test_table(self, capsys):
        assert main(["bounds", "--table"]) == OK
        t2 = next(r for r in capsys.readouterr().out.splitlines() if r.startswith("2,")).split(",")
        # half-even rounding: within 1e-6 of the printed, truncated values
        for got, ref in zip((t2[3], t2[5], t2[6]), ("1.376643", "1.464571", "1.466667")):
            assert abs(F(got) - F(ref)) <= F(1, 10**6)
        assert main(["bounds", "--table", "--rounding", "down"]) == OK
        t2 = next(r for r in capsys.readouterr().out.splitlines() if r.startswith("2,")).split(",")
        assert (t2[3], t2[5]) == ("1.376643", "1.464571")

    def test_lambda(self, capsys):
        assert main(["bounds", "--lambda", "3"]) == OK
        assert "19/12" in capsys.readouterr().out

    def test_poa(self, capsys):
        assert main(["bounds", "--poa", "2"]) == OK
        out = capsys.readouterr().out
        assert "22/15" in out and "poa_lower(2)" in out

    def test_intervals(self, capsys):
        assert main(["bounds", "--lambda-limit"]) == OK
        assert main(["bounds", "--lambda-t", "2"]) == OK
        out = capsys.readouterr().out
        assert "1.6066" in out and "1.3766" in out

    def test_usage(self):
        assert main(["bounds", "--poa", "1"]) == USAGE
        with pytest.raises(SystemExit) as info:
            main(["bounds"])
        assert info.value.code == USAGE


class TestDynamics:
    def test_quarters(self, tmp_path, capsys):
        inst = write_instance(tmp_path / "q.txt", [F(1, 4)] * 4)
        log = tmp_path / "log.txt"
        out = tmp_path / "out.json"
        assert main(["dynamics", "--in", inst, "--log", str(log), "--out", str(out)]) == OK
        assert bins_in(out) == 1
        assert len(log.read_text().splitlines()) == 3
        assert main(["check", "--kind", "ne", "--in", inst, "--packing", str(out)]) == OK

    def test_seeded_reproducible(self, tmp_path):
        sizes = [F(k, 37) for k in range(1, 19)]
        inst = write_instance(tmp_path / "i.txt", sizes)
        outs = []
        for run in ("a", "b"):
            args = ["dynamics", "--in", inst, "--policy", "seeded-random", "--seed", "5",
                    "--log", str(tmp_path / f"{run}.log"), "--out", str(tmp_path / f"{run}.json")]
            assert main(args) == OK
            outs.append(((tmp_path / f"{run}.log").read_bytes(), (tmp_path / f"{run}.json").read_bytes()))
        assert outs[0] == outs[1]

    def test_given_start(self, tmp_path):
        sizes = [F(1, 2), F(1, 4), F(1, 4)]
        inst = write_instance(tmp_path / "i.txt", sizes)
        pk = write_packing(tmp_path / "p.json", sizes, [[0], [1, 2]])
        assert main(["dynamics", "--in", inst, "--start", "given", "--packing", pk]) == OK
        assert main(["dynamics", "--in", inst, "--start", "given"]) == USAGE
        assert main(["dynamics", "--in", inst, "--start", "ff"]) == OK


class TestMisc:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        out = capsys.readouterr().out
        assert __version__ in out and f"packing format {PACKING_FORMAT_VERSION}" in out

    def test_deterministic_outputs(self, tmp_path):
        for run in ("a", "b"):
            d = tmp_path / run
            main(["gen", "--family", "param", "--t", "2", "--r", "3", "--N", "3", "--out-dir", str(d)])
            main(["pack", "--algo", "ss", "--in", str(d / "instance.txt"),
                  "--out", str(d / "ss.out"), "--trace", str(d / "trace.out")])
        a = {p.name: p.read_bytes() for p in (tmp_path / "a").iterdir()}
        b = {p.name: p.read_bytes() for p in (tmp_path / "b").iterdir()}
        assert a == b

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == USAGE
