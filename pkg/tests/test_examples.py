import pytest

from newmodp.examples import NAMES, mod5_level3, mod7_level15, run_example


def test_mod5_level3(pack):
    res = mod5_level3(pack)
    assert res["passed"] and all(res["checks"].values())
    assert sorted(res["checks"]) == ["W_images_agree", "images_are_scalar", "reductions_agree",
                                   "w_images_disagree"]
    im = res["images"]
    assert (im["3.12.3+"]["w_scalar"], im["3.16.3-"]["w_scalar"]) == (1, 4)
    assert im["3.12.3+"]["W_scalar"] == im["3.16.3-"]["W_scalar"] == 4
    assert im["3.12.3+"]["W_prefix"] == im["3.16.3-"]["W_prefix"]
    # q + 78q^2 - 243q^3 + 4036q^4 - 5370q^5 reduced mod 5
    assert res["reduction_prefix"][:5] == [1, 3, 2, 1, 0]


def test_mod7_level15(pack):
    res = mod7_level15(pack)
    assert res["passed"] and all(res["checks"].values())
    assert res["b_prefix"] == [0, 1, 3, -3, 1, -5, -9, 20, -21, 9]
    assert all((x - y) % 7 == 0 for x, y in zip(res["b_prefix"], res["old_prefix"]))
    assert res["smith_p_part"] == [1, 1, 1, 7]
    assert res["lambda"] == res["a3_f"] == 2 and res["intersection_dim"] == 1


def test_run_example_by_name(pack):
    assert set(NAMES) == {"mod5-level3", "mod7-level15"}
    assert run_example("mod5-level3", pack)["name"] == "mod5-level3"
    with pytest.raises(KeyError):
        run_example("nope", pack)


def test_example_fails_without_its_fixture(pack):
    from newmodp.errors import Unsupported
    with pytest.raises(Unsupported):
        mod5_level3([fx for fx in pack if fx.label != "3.16.3-"])
