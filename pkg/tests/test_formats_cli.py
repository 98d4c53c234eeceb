import io
import json
import random
import subprocess
import sys
from pathlib import Path

import pytest

from finleighton import formats as F
from finleighton.cli import run
from finleighton.core import verify_covering
from finleighton.fixtures import amalgam, amalgam_double_cover, bs, c1, export_fixtures, rose_pattern
from finleighton.generators import random_cover, random_gos, random_gwf
from finleighton.pipeline import commensurate, verify_witness


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    d = tmp_path_factory.mktemp("fx")
    export_fixtures(d)
    return d


def call(*argv):
    buf = io.StringIO()
    code = run([str(a) for a in argv], buf)
    text = buf.getvalue()
    return code, text


def test_gwf_round_trip():
    rng = random.Random(0)
    for _ in range(30):
        g = random_gwf(rng, 7, 4)
        d = F.gwf_to_dict(g)
        back = F.gwf_from_dict(json.loads(F.dumps(d)))
        assert F.gwf_to_dict(back) == d


def test_cover_round_trip():
    rng = random.Random(1)
    for _ in range(20):
        x = random_gwf(rng, 6, 3)
        y, cm = random_cover(x, rng, 3)
        back = F.cover_from_dict(F.loads(F.dumps(F.cover_to_dict(cm))))
        assert verify_covering(back).ok
        assert F.cover_to_dict(back) == F.cover_to_dict(cm)


def test_gos_and_raw_round_trip():
    rng = random.Random(2)
    for _ in range(20):
        g = random_gos(rng)
        assert F.gos_to_dict(F.gos_from_dict(F.gos_to_dict(g))) == F.gos_to_dict(g)
    raw = bs(2, -3)
    assert F.rawgog_to_dict(F.rawgog_from_dict(F.rawgog_to_dict(raw))) == F.rawgog_to_dict(raw)


def test_witness_round_trip():
    g, _ = amalgam_double_cover()
    w = commensurate(amalgam(), g)
    text = F.dumps(F.witness_to_dict(w))
    w2 = F.witness_from_dict(F.loads(text))
    assert F.dumps(F.witness_to_dict(w2)) == text
    assert verify_witness(w2)["ok"]


def test_parse_error_has_position():
    with pytest.raises(F.ParseError) as exc:
        F.loads('{"a": 1,\n  "b": }', "x.json")
    assert "x.json" in str(exc.value) and "line 2" in str(exc.value)


def test_schema_errors():
    with pytest.raises(F.ParseError):
        F.gwf_from_dict({"schema": "gos.v1"})
    d = F.gwf_to_dict(c1())
    d["fins"][0]["cycle"] = ["zz+"]
    with pytest.raises(F.ParseError):
        F.gwf_from_dict(d)


def test_cli_exit_codes(fx):
    assert call("validate", fx / "c1.gwf.json")[0] == 0
    assert call("validate", fx / "broken.gwf.json")[0] == 2
    assert call("validate", fx / "torus_a.gos.json")[0] == 0
    assert call("common-cover", fx / "c1.gwf.json", fx / "c1_double.gwf.json")[0] == 0
    assert call("univ-eq", fx / "c1.gwf.json", fx / "rose_pattern.gwf.json")[0] == 1
    code, text = call("balanced", fx / "bs12.rawgog.json")
    assert code == 1 and json.loads(text)["modulus"] == "2"
    assert call("balanced", fx / "bs22.rawgog.json")[0] == 0
    assert call("commensurate", fx / "count_one.gos.json", fx / "count_two.gos.json")[0] == 3
    assert call("invariants", fx / "amalgam.gos.json")[0] == 0
    assert call("density", fx / "c2.gwf.json")[0] == 0
    assert call("rigidity", "x")[0] == 1
    assert call("rigidity", "x!")[0] == 2
    assert call("validate")[0] == 2
    missing = fx / "nope.json"
    assert call("validate", missing)[0] == 2


def test_cli_budget_exhausted(fx):
    code, text = call("commensurate", fx / "unwrap.gos.json", fx / "unwrap.gos.json", "--budget", "0")
    assert code == 4 and json.loads(text)["error"] == "BudgetExhausted"
    assert call("commensurate", fx / "unwrap.gos.json", fx / "unwrap.gos.json")[0] == 0


def test_cli_commensurate_and_verify(fx, tmp_path):
    code, text = call("commensurate", fx / "amalgam.gos.json", fx / "amalgam_double.gos.json", "--component")
    assert code == 0
    out = json.loads(text)
    assert out["report"]["ok"] and out["component"]["report"]["ok"]
    p = tmp_path / "w.json"
    p.write_text(text)
    assert call("verify-witness", p)[0] == 0
    out["weights"]["scale"] = "7"
    p.write_text(json.dumps(out))
    assert call("verify-witness", p)[0] == 1


def test_cli_cover_check(fx, tmp_path):
    x = rose_pattern()
    rng = random.Random(4)
    y, cm = random_cover(x, rng, 3)
    p = tmp_path / "c.json"
    p.write_text(F.dumps(F.cover_to_dict(cm)))
    assert call("cover-check", p)[0] == 0


def test_cli_pretty_and_determinism(fx):
    a = call("colours", fx / "rose_pattern.gwf.json", fx / "c1.gwf.json")
    b = call("colours", fx / "rose_pattern.gwf.json", fx / "c1.gwf.json")
    assert a == b and json.loads(a[1])["schema"] == "types.v1"
    code, text = call("density", fx / "c1.gwf.json", "--pretty")
    assert code == 0 and "vertices" in text and not text.startswith("{")


def test_module_entry_point(fx):
    r = subprocess.run([sys.executable, "-m", "finleighton", "validate", str(fx / "c1.gwf.json")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["ok"]


def test_exported_fixtures_parse(fx):
    for p in sorted(Path(fx).iterdir()):
        d = F.loads(p.read_text(), str(p))
        assert d["schema"] in {"gwf.v1", "gos.v1", "rawgog.v1"}
