import pytest

from newmodp.errors import Inconsistent, InvariantViolation, ParseError
from newmodp.fixtures import (
    ENV_VAR, al_sign, format_fixture, load_pack, pack_dir, parse_fixture, parse_fixtures,
    validate_pack, weil_strict,
)
from newmodp.newold import weil_check
from newmodp.rings import ZmodPB

B_TEXT = """\
# the level 15 newform with a_3 = -3
label = 15.4.b
level = 15
weight = 4
coeff_ring = ZZ
al_signs = 3:+1 5:+1
provenance = test copy
an = 1, 3, -3, 1, -5, -9, 20, -21, 9, -15
"""


def _with_an(an, text=B_TEXT):
    head = text.rsplit("an =", 1)[0]
    return head + "an = " + ", ".join(str(x) for x in an) + "\n"


def test_parse_b():
    fx = parse_fixture(B_TEXT)
    assert fx.label == "15.4.b" and fx.level == 15 and fx.weight == 4
    assert fx.an[:9] == [1, 3, -3, 1, -5, -9, 20, -21, 9]
    assert fx.al_signs == {3: 1, 5: 1}
    assert list(fx.qexp(prec=4).coeffs) == [0, 1, 3, -3]


def test_round_trip():
    fx = parse_fixture(B_TEXT)
    again = parse_fixture(format_fixture(fx))
    assert (again.label, again.an, again.al_signs) == (fx.label, fx.an, fx.al_signs)


def test_normalization_violation():
    an = parse_fixture(B_TEXT).an
    with pytest.raises(InvariantViolation) as e:
        parse_fixture(_with_an([2] + an[1:]))
    assert e.value.name == "normalization"


def test_multiplicativity_violation():
    an = list(parse_fixture(B_TEXT).an)
    an[5] += 1  # a_6 != a_2 a_3
    with pytest.raises(InvariantViolation) as e:
        parse_fixture(_with_an(an))
    assert (e.value.name, e.value.index) == ("multiplicativity", 6)


def test_recurrence_violation():
    an = list(parse_fixture(B_TEXT).an)
    an[3] += 1  # a_4 != a_2^2 - 8
    with pytest.raises(InvariantViolation) as e:
        parse_fixture(_with_an(an))
    assert e.value.name == "hecke recurrence" and e.value.index == 4


def test_al_sign_violation():
    with pytest.raises(InvariantViolation) as e:
        parse_fixture(B_TEXT.replace("3:+1", "3:-1"))
    assert e.value.name == "al sign"


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_fixture(B_TEXT.replace("an = 1,", "an = 1.0,"))
    with pytest.raises(ParseError):
        parse_fixture(B_TEXT + "colour = blue\n")
    with pytest.raises(ParseError):
        parse_fixture(B_TEXT.replace("weight = 4\n", ""))
    with pytest.raises(ParseError):
        parse_fixture(B_TEXT.replace("ZZ", "QQ(sqrt5)"))
    with pytest.raises(InvariantViolation):
        parse_fixture(B_TEXT.replace("provenance = test copy", "provenance = "))


def test_mod_pb_fixture():
    text = B_TEXT.replace("coeff_ring = ZZ", "coeff_ring = Z/7^2").replace(
        "an = 1, 3, -3", "an = 1/49, 3/49, 46/49")
    fx = parse_fixture(text)
    assert isinstance(fx.coeff_ring, ZmodPB) and fx.an[:3] == [1, 3, 46]
    assert al_sign(fx, 3) == 1
    with pytest.raises(ParseError):
        parse_fixture(text.replace("3/49", "3/7"))


def test_al_signs_from_the_pack(pack):
    byl = {fx.label: fx for fx in pack}
    assert al_sign(byl["15.4.3+5+"], 3) == 1
    assert al_sign(byl["15.4.3-5-"], 3) == -1
    assert al_sign(byl["3.16.3-"], 3) == -1
    assert al_sign(byl["3.12.3+"], 3) == 1
    with pytest.raises(Inconsistent):
        al_sign(byl["15.4.3+5+"], 2)


def test_shipped_pack_validates(pack):
    rep = validate_pack()
    assert rep["ok"], rep
    assert (15, 4, 2) in rep["covered"]
    assert rep["fixtures"] == len(pack) > 0
    # every fixture carries provenance and the strict local bound
    assert weil_check(pack)["passed"]


def test_empty_directory_lists_requirements(tmp_path):
    rep = validate_pack(tmp_path)
    assert not rep["ok"]
    assert {(N, k) for N, k, _ in rep["missing"]} == {(5, 4), (15, 4), (3, 12), (3, 16)}
    assert load_pack(tmp_path) == []


def test_duplicate_label_is_flagged(tmp_path):
    (tmp_path / "one.fix").write_text(B_TEXT, encoding="utf-8")
    (tmp_path / "two.fix").write_text(B_TEXT, encoding="utf-8")
    rep = validate_pack(tmp_path, required=())
    assert rep["duplicates"] == ["15.4.b"] and not rep["ok"]


def test_bad_file_is_reported(tmp_path):
    (tmp_path / "bad.fix").write_text(B_TEXT.replace("an = 1,", "an = 2,"), encoding="utf-8")
    rep = validate_pack(tmp_path, required=())
    assert rep["errors"] and not rep["ok"]


def test_env_override(tmp_path, monkeypatch):
    (tmp_path / "b.fix").write_text(B_TEXT, encoding="utf-8")
    monkeypatch.setenv(ENV_VAR, str(tmp_path))
    assert pack_dir() == tmp_path
    assert [fx.label for fx in load_pack()] == ["15.4.b"]


def test_several_fixtures_per_file():
    two = B_TEXT + "---\n" + B_TEXT.replace("15.4.b", "15.4.b2")
    assert [fx.label for fx in parse_fixtures(two)] == ["15.4.b", "15.4.b2"]
    with pytest.raises(ParseError):
        parse_fixture(two)


def test_weil_strict():
    assert weil_strict(2, 3, 4)       # |a_3(f)| = 2 < 4 * 3
    assert not weil_strict(12, 3, 4)
