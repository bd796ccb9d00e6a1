import importlib.util
import shlex
from pathlib import Path

import pytest

from newmodp.cli import DEFAULTS, main
from newmodp.fixtures import ENV_VAR

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"

_spec = importlib.util.spec_from_file_location("regen_golden", ROOT / "tools" / "regen_golden.py")
regen = importlib.util.module_from_spec(_spec)
_spec.loader.exec_module(regen)


def run(capsys, command):
    code = main(shlex.split(command))
    return code, capsys.readouterr().out


def values(text):
    """Flatten a report into {"section.key": value}."""
    out, sec = {}, ""
    for line in text.splitlines():
        if line.startswith("[") and line.endswith("]"):
            sec = line[1:-1]
        elif " = " in line and not line.startswith("#"):
            k, v = line.split(" = ", 1)
            out[f"{sec}.{k}" if sec else k] = v
    return out


@pytest.fixture(autouse=True)
def _no_env_pack(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)


def test_every_golden_case_is_shipped():
    assert sorted(p.stem for p in GOLDEN.glob("*.txt")) == sorted(regen.CASES)


@pytest.mark.parametrize("name", sorted(regen.CASES))
def test_golden_report(capsys, name):
    want = (GOLDEN / f"{name}.txt").read_text(encoding="utf-8")
    code, text = run(capsys, regen.CASES[name])
    assert f"# exit = {code}\n" + regen.masked(text) == want


@pytest.mark.parametrize("command,dim", [
    ("space --level 15 --weight 4 --ring Q", "4"),
    ("space --level 1 --weight 0", "1"),
    ("space --level 15 --weight 4 --ring F7", "4"),
])
def test_space_dimensions(capsys, command, dim):
    code, text = run(capsys, command)
    v = values(text)
    assert code == 0 and v["space.dim"] == dim == v["space.formula_dim"]


def test_space_kind_defaults():
    # weight 0 has no cusp forms, so the default kind there is M
    assert DEFAULTS["kind"] == "auto"


def test_space_kind_choice(capsys):
    v = values(run(capsys, "space --level 15 --weight 4 --kind M")[1])
    assert v["parameters.kind"] == "M" and v["space.dim"] == "8"


def test_reports_are_deterministic(capsys):
    cmd = "verify levelraising --N 5 --ell 3 --p 7 --k 4"
    a = run(capsys, cmd)[1]
    b = run(capsys, cmd)[1]
    assert regen.masked(a) == regen.masked(b)
    assert any(line.startswith("timing_seconds = ") for line in a.splitlines())


def test_exit_codes(capsys):
    assert run(capsys, "verify newformthm --N 5 --ell 3 --p 7 --k 4")[0] == 0
    code, text = run(capsys, "verify filtration-monsky --N 5 --ell 3 --p 7")
    assert code == 1 and values(text)["error.type"] == "BadCongruence"
    with pytest.raises(SystemExit) as e:
        main(["examples", "nope"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["verify", "nosuchsuite"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["space", "--level", "15", "--weight", "4", "--ring", "R"])
    assert e.value.code == 2


def test_unsupported_input_is_a_failed_run(capsys):
    code, text = run(capsys, "space --level 9 --weight 4")
    assert code == 1 and values(text)["error.type"] == "Unsupported"


def test_out_directory(capsys, tmp_path):
    out = tmp_path / "reports"
    code, text = run(capsys, f"--out {out} verify newformthm --N 5 --ell 3 --p 7 --k 4")
    files = list(out.iterdir())
    assert code == 0 and [f.name for f in files] == ["verify-newformthm-N5-l3-p7-k4.txt"]
    assert files[0].read_text(encoding="utf-8") == text
    run(capsys, f"--quiet --out {out} examples mod5-level3")
    assert (out / "examples-mod5-level3.txt").exists()
    assert capsys.readouterr().out == ""


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[newmodp]\nR = 13\nnormalization = W\n", encoding="utf-8")
    base = "verify keyker --N 5 --ell 3 --p 7 --k 4"
    v = values(run(capsys, f"--config {cfg} {base}")[1])
    assert v["parameters.R_bound"] == "13" and v["parameters.normalization"] == "W"
    v = values(run(capsys, f"--config {cfg} {base} --R 17 --normalization w")[1])
    assert v["parameters.R_bound"] == "17" and v["parameters.normalization"] == "w"
    v = values(run(capsys, base)[1])
    assert v["parameters.R_bound"] == str(DEFAULTS["R"]) == "20"
    assert v["parameters.normalization"] == "w"


def test_config_out_directory(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[newmodp]\nout = {tmp_path / 'o'}\n", encoding="utf-8")
    run(capsys, f"--config {cfg} space --level 1 --weight 0")
    assert (tmp_path / "o" / "space-level1-w0.txt").exists()


def test_missing_config_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["--config", str(tmp_path / "absent.ini"), "space", "--level", "1", "--weight", "0"])
    assert e.value.code == 2


def test_fixture_pack_override(capsys, tmp_path, monkeypatch):
    empty = tmp_path / "pack"
    empty.mkdir()
    code, text = run(capsys, f"--fixtures {empty} space --level 15 --weight 4")
    v = values(text)
    assert v["parameters.fixtures"] == "0" and v["parameters.fixture_pack"] == "pack"
    # the engine derives the new block itself when the pack is empty
    assert code == 0 and v["space.dim"] == "4"
    monkeypatch.setenv(ENV_VAR, str(empty))
    v = values(run(capsys, "space --level 1 --weight 0")[1])
    assert v["parameters.fixture_pack"] == "env" and v["parameters.fixtures"] == "0"


def test_named_suites_pass(capsys):
    for cmd in ("verify identities --N 1 --ell 3 --p 5 --k 12",
                "verify newformthm --N 1 --ell 3 --p 5 --k 16",
                "verify span --N 1 --ell 3 --p 7 --k 12"):
        code, text = run(capsys, cmd)
        assert code == 0, text
