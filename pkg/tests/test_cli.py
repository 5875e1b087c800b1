import csv
import json
import subprocess
import sys

import pytest

from ftqlab import __version__
from ftqlab.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, ConfigError, csv_text, fmt, main, parse_config


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), "--seed", "7"])


def test_defaults_from_file(tmp_path):
    cfg_file = tmp_path / "c.ini"
    cfg_file.write_text("[global]\nseed = 11\n[toric-comm]\nL = 3\nnu = 0.002\n", encoding="utf-8")
    cfg = parse_config("toric-comm", {}, str(cfg_file))
    assert cfg.seed == 11 and cfg.params["L"] == [3] and cfg.params["nu"] == 0.002
    assert cfg.params["trials"] == 100000 and cfg.sources["L"] == "file" and cfg.sources["trials"] == "default"


def test_flags_override_file(tmp_path):
    cfg_file = tmp_path / "c.ini"
    cfg_file.write_text("[toric-comm]\nL = 3\nnu = 0.002\n", encoding="utf-8")
    cfg = parse_config("toric-comm", {"L": "5", "nu": "1e-3", "seed": "1"}, str(cfg_file))
    assert cfg.params["L"] == [5] and cfg.params["nu"] == 1e-3 and cfg.sources["nu"] == "flag"


@pytest.mark.parametrize("flags,key", [
    ({"L": "banana"}, "L"), ({"nu": "x"}, "nu"), ({"bogus": "1"}, "bogus"), ({"seed": "s"}, "seed"),
    ({"threads": "0"}, "threads"),
])
def test_config_errors_name_the_key(flags, key):
    with pytest.raises(ConfigError) as e:
        parse_config("toric-comm", {"seed": "1", **flags})
    assert str(e.value).startswith(key)


def test_file_errors(tmp_path):
    f = tmp_path / "c.ini"
    f.write_text("[toric-comm]\nwidth = 3\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="^width"):
        parse_config("toric-comm", {"seed": "1"}, str(f))
    f.write_text("[nonsense]\nL = 3\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="^nonsense"):
        parse_config("toric-comm", {"seed": "1"}, str(f))
    with pytest.raises(ConfigError, match="^config"):
        parse_config("toric-comm", {"seed": "1"}, str(tmp_path / "missing.ini"))


def test_seed_env_fallback(monkeypatch):
    monkeypatch.setenv("FTQLAB_SEED", "99")
    assert parse_config("noise-bounds", {}).seed == 99


def test_usage_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "toric-comm", "--L", "banana") == EXIT_USAGE
    assert "L:" in capsys.readouterr().err
    assert run(tmp_path, "toric-comm", "--trials", "0") == EXIT_USAGE
    assert run(tmp_path, "toric-comm", "--sampler", "gauss") == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE
    assert run(tmp_path, "rec-sim", "--code", "nope") == EXIT_USAGE
    assert run(tmp_path, "rec-sim", "--gate", "H") == EXIT_USAGE
    assert run(tmp_path, "rec-sim", "--level", "2") == EXIT_USAGE
    assert run(tmp_path, "single-shot", "--code", "surface_d5") == EXIT_USAGE


def test_noise_bounds_csv(tmp_path):
    assert run(tmp_path, "noise-bounds") == EXIT_OK
    raw = (tmp_path / "noise-bounds.csv").read_bytes()
    assert b"\r" not in raw
    rows = list(csv.DictReader(raw.decode().splitlines()))
    assert len(rows) == 12  # every grid point has n delta >= 1
    assert all(r["pass"] == "true" and r["seed"] == "7" and r["stream_index"] == "-1" for r in rows)
    assert all(float(r["tail_sum"]) <= float(r["chernoff_bound"]) for r in rows)
    meta = json.loads((tmp_path / "noise-bounds.meta.json").read_text())
    assert meta["version"] == __version__ and meta["config"]["params"]["n"] == [50, 100, 200, 400]


def test_failing_predicate_exits_one(tmp_path):
    # survival 0.9999 is out of reach at this noise rate
    code = run(tmp_path, "single-shot", "--delta", "0.05", "--rounds", "3", "--trials", "500", "--min-survival", "0.9999")
    assert code == EXIT_FAIL
    assert json.loads((tmp_path / "single-shot.meta.json").read_text())["pass"] is False


def test_crash_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["noise-bounds", "--out", str(blocker / "sub"), "--seed", "1"]) == 3


@pytest.mark.parametrize("args,files", [
    (["toric-comm", "--L", "3", "--trials", "300"], ["toric-comm.csv"]),
    (["single-shot", "--rounds", "2", "--trials", "300"], ["single-shot.csv"]),
    (["rec-sim", "--code", "bitflip3", "--gate", "I", "--sweep", "monte-carlo", "--trials", "200", "--delta", "0.01"],
     ["rec-sim.json"]),
    (["teleport-verify", "--code", "bitflip3", "--gate-set", "paulis", "--trials", "1"], ["teleport-verify.json"]),
])
def test_byte_identical_reruns(tmp_path, args, files):
    a, b = tmp_path / "a", tmp_path / "b"
    ca = main(args + ["--out", str(a), "--seed", "5"])
    cb = main(args + ["--out", str(b), "--seed", "5"])
    assert ca == cb and ca in (EXIT_OK, EXIT_FAIL)
    meta = f"{args[0]}.meta.json"
    for f in files + [meta]:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_rows_carry_provenance(tmp_path):
    main(["toric-comm", "--L", "3", "--trials", "200", "--out", str(tmp_path), "--seed", "3"])
    rows = list(csv.DictReader((tmp_path / "toric-comm.csv").read_text().splitlines()))
    assert rows and all(r["seed"] == "3" and r["stream_index"] != "" for r in rows)


def test_rec_sim_level2(tmp_path, capsys):
    code = main(["rec-sim", "--code", "bitflip3", "--level", "2", "--sweep", "monte-carlo", "--out", str(tmp_path),
                 "--seed", "1"])
    assert code == EXIT_OK
    rep = json.loads((tmp_path / "rec-sim.json").read_text())
    assert rep["level"] == 2 and rep["n_subrecs"] > 0 and 0 < rep["p_good"] <= 1
    assert "size=" in capsys.readouterr().out


def test_fmt_and_csv():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "true" and fmt(float("nan")) == "nan" and fmt(float("-inf")) == "-inf"
    assert csv_text(["a", "b"], [[1, 0.5]]) == "a,b\n1,0.5\n"


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ftqlab.cli", "noise-bounds", "--n", "100", "--delta", "0.05",
                          "--out", str(tmp_path), "--seed", "2"], capture_output=True, text=True)
    assert out.returncode == 0 and "PASS" in out.stdout
    assert subprocess.run([sys.executable, "-m", "ftqlab.cli", "--version"], capture_output=True).returncode == 0
