import cmath
import csv
import io
import json
import math
import re
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

from ergweights import cli
from ergweights import config as cf

README = Path(__file__).resolve().parents[1] / "README.md"


def example(name):
    return str(resources.files("ergweights") / "configs" / name)


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run_quiet(*args, **kw):
    err = io.StringIO()
    code = cli.run(*args, stderr=err, **kw)
    return code, err.getvalue()


def test_decompose_diag(tmp_path):
    code, _ = run_quiet(example("decompose_diag.json"), tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "decompose.csv")
    assert rows[0] == cli.DECOMPOSE_COLUMNS
    assert len(rows) == 33
    for row in rows[1:]:
        n, a_re, _, b_re, _, c_re, _ = (float(v) for v in row)
        assert abs(a_re - (1 + 0.5 ** n)) < 1e-15
        assert abs(b_re - 1) < 1e-12 and abs(c_re - 0.5 ** n) < 1e-12
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["results"]["residual_bound_holds"] is True
    assert summary["files"] == ["decompose.csv"]


def test_jordan_rejected(tmp_path):
    code, err = run_quiet(example("decompose_jordan.json"), tmp_path)
    assert code == 3
    assert "power-boundedness" in err and "not power bounded" in err


def test_kvn_squares(tmp_path):
    code, _ = run_quiet(example("kvn_squares.json"), tmp_path)
    assert code == 0
    res = json.loads((tmp_path / "summary.json").read_text())["results"]
    assert res["final_density"] >= 0.998 and res["violations"] == 0
    dens = read_csv(tmp_path / "kvn_density.csv")
    assert dens[0] == ["N", "members", "density"]


@pytest.mark.parametrize("name", ["rtt_residual.json", "cex_block_sign.json",
                                  "universal_shift.json"])
def test_thread_count_does_not_change_output(tmp_path, name):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_quiet(example(name), a, threads=1, horizon_override=1 << 16)[0] == 0
    assert run_quiet(example(name), b, threads=8, horizon_override=1 << 16)[0] == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_seed_reproducibility(tmp_path):
    doc = json.loads(Path(example("rtt_residual.json")).read_text())
    cfg = write_cfg(tmp_path, doc)
    run_quiet(cfg, tmp_path / "r1")
    run_quiet(cfg, tmp_path / "r2")
    assert (tmp_path / "r1" / "trace.csv").read_bytes() == (tmp_path / "r2" / "trace.csv").read_bytes()
    doc["seed"] = 8
    run_quiet(write_cfg(tmp_path, doc, "other.json"), tmp_path / "r3")
    assert (tmp_path / "r1" / "trace.csv").read_bytes() != (tmp_path / "r3" / "trace.csv").read_bytes()


def test_summary_echo_validates(tmp_path):
    for name in ("average_resonance.json", "poly_weyl_squares.json"):
        out = tmp_path / name
        assert run_quiet(example(name), out, horizon_override=1 << 14)[0] == 0
        summary = json.loads((out / "summary.json").read_text())
        cf.validate(summary["config"])
        assert summary["kind"] == summary["config"]["kind"]
        text = (out / "summary.json").read_text()
        assert text == json.dumps(summary, sort_keys=True, indent=2) + "\n" or \
            text == json.dumps(summary, sort_keys=True, indent=2)


def test_trace_csv_contract(tmp_path):
    assert run_quiet(example("average_resonance.json"), tmp_path, horizon_override=4096)[0] == 0
    raw = (tmp_path / "trace.csv").read_bytes()
    assert b"\r\n" not in raw
    rows = read_csv(tmp_path / "trace.csv")
    assert rows[0] == cli.TRACE_COLUMNS
    Ns = [int(r[0]) for r in rows[1:]]
    assert Ns[-1] == 4096 and all(b == 2 * a for a, b in zip(Ns, Ns[1:]))
    re_, im = float(rows[-1][1]), float(rows[-1][2])
    assert abs(complex(re_, im) - cmath.exp(0.6j * math.pi)) < 1e-12


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.update(bogus=1), "bogus"),
    (lambda d: d.update(point=1.5), "point"),
    (lambda d: d["weight"].update(type="nope"), "weight"),
    (lambda d: d.pop("system"), "system"),
])
def test_invalid_configs_exit_2(tmp_path, mutate, fragment):
    doc = json.loads(Path(example("average_resonance.json")).read_text())
    mutate(doc)
    code, err = run_quiet(write_cfg(tmp_path, doc), tmp_path / "o")
    assert code == 2 and fragment in err


def test_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert run_quiet(str(p), tmp_path / "o")[0] == 2
    assert run_quiet(str(tmp_path / "absent.json"), tmp_path / "o")[0] == 2
    assert run_quiet(example("average_resonance.json"), tmp_path / "o", threads=0)[0] == 2


def test_list_command(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("circle_rotation", "block_sign", "random_linear", "kvn_squares.json"):
        assert name in out


def test_catalog_count_matches_readme():
    count = cli.list_builtins(io.StringIO())
    assert count == sum(len(v) for v in cli.catalog().values())
    text = README.read_text()
    section = text.split("## Built-in catalog", 1)[1].split("\n## ", 1)[0]
    entries = re.findall(r"^\s*- `([^`]+)`", section, flags=re.M)
    assert len(entries) == count
    listed = {name for items in cli.catalog().values() for name, _ in items}
    assert set(entries) == listed
    m = re.search(r"(\d+) entries", section)
    assert m and int(m.group(1)) == count


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ergweights", "run",
                           example("decompose_jordan.json"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 3
    assert proc.stderr.startswith("rejected: violated hypothesis")
