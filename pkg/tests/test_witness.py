"""Exact witness family and the four-party counterexample table."""

import pytest

from entrocone.setfn import cmi, is_monotone, is_submodular, is_weakly_monotone
from entrocone.witness import (
    closed_form_value,
    counterexample_table,
    make_witness_f,
    make_witness_g,
    standard_instance,
    verify_counterexample,
    verify_witness,
    witness_ground,
    witness_params,
)


def table_cmi(table, i, j, alpha=frozenset()):
    """CMI arithmetic on a K-indexed integer table (zero off support)."""
    a = frozenset(alpha)
    get = lambda s: table.get(frozenset(s), 0)
    return -get(a) + get(a | {i}) + get(a | {j}) - get(a | {i} | {j})


def mu_hat(params, subset):
    """The correction as a set function on the full ground set: supported
    only where the register part is empty."""
    s = frozenset(subset)
    k = s & frozenset("abc")
    if s - k:
        return 0
    return params.mu.get(k, 0)


def mu_cmi(params, i, j, alpha=frozenset()):
    a = frozenset(alpha)
    get = lambda s: mu_hat(params, s)
    return -get(a) + get(a | {i}) + get(a | {j}) - get(a | {i} | {j})


# ------------------------------------------------------------ tables


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_base_and_slope_cmi_tables(n):
    p = witness_params(n)
    th = lambda i, j, al=frozenset(): table_cmi(p.theta, i, j, al)
    la = lambda i, j, al=frozenset(): table_cmi(p.lam, i, j, al)
    assert th("a", "b") == n * (n + 1) * (n - 2)
    assert la("a", "b") == 0
    assert th("a", "c") == n * (n + 1) * (3 * n - 1)
    assert la("a", "c") == -(n + 1) * (3 * n - 1)
    assert th("b", "c") == n * (n + 1) * (n - 1)
    assert la("b", "c") == -(n + 1) * (n - 1)
    assert th("a", "b", {"c"}) == n * (n + 1)
    assert la("a", "b", {"c"}) == (n + 1) * (n - 1)
    assert th("a", "c", {"b"}) == 2 * n * (n + 1) ** 2
    assert la("a", "c", {"b"}) == -2 * n * (n + 1)
    assert th("b", "c", {"a"}) == 2 * n * (n + 1)
    assert la("b", "c", {"a"}) == 0


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_correction_cmi_table(n):
    p = witness_params(n)
    m = lambda i, j, al=frozenset(): mu_cmi(p, i, j, al)
    assert m("b", "c", {"a"}) == 2 * n * (n + 1)
    assert m("b", "x1", {"a"}) == 2 * n * (n + 1)
    assert -m("a", "b") == 2 * n * (n + 1)
    assert m("a", "c") == 2 * n**2 * (n + 1)
    assert m("a", "x1") == 2 * n**2 * (n + 1)
    assert -m("c", "x1", {"a"}) == 2 * n**2 * (n + 1)
    assert -m("x1", "x2", {"a"}) == 2 * n**2 * (n + 1)
    assert m("a", "c", {"b"}) == 2 * n * (n + 1) ** 2
    assert m("a", "x1", {"b"}) == 2 * n * (n + 1) ** 2
    assert -m("x1", "x2", {"a", "b"}) == 2 * n * (n + 1) ** 2
    assert -m("c", "x1", {"a", "b"}) == 2 * n * (n + 1) ** 2


def test_correction_between_registers_never_positive():
    # register-register CMIs of the full witness reduce to minus a correction
    for n in (2, 3, 4):
        p = witness_params(n)
        f = make_witness_f(n)
        gr = f.ground
        full = gr.n_subsets - 1
        abc = gr.mask_of(("a", "b", "c"))
        import entrocone.setfn as sf

        for al in sf.submasks(full & ~gr.mask_of(("x1", "x2"))):
            labels = set(gr.labels_of(al))
            val = cmi(f, "x1", "x2", gr.labels_of(al))
            assert val == -mu_cmi(p, "x1", "x2", labels)
            assert val >= 0  # the register-register corrections are never positive


# ------------------------------------------------------------ frozen values


def test_witness_values_frozen_n2():
    f = make_witness_f(2)
    assert f("a") == 84
    assert f(("a", "b")) == 129
    assert f("x1") == -4
    assert f(()) == 0


def test_params_require_two_registers():
    with pytest.raises(ValueError):
        witness_params(1)
    with pytest.raises(ValueError):
        make_witness_f(0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_special_cmi_values(n):
    f = make_witness_f(n)
    assert cmi(f, "b", "c", "a") == 0
    assert cmi(f, "a", "c", "b") == 0
    assert cmi(f, "a", "c") == n * (n + 1) * (n - 1)
    assert cmi(f, "a", "b") == n**2 * (n + 1)
    assert cmi(f, ("a", "b"), "c") == n * (n + 1) * (n - 1)
    assert cmi(f, "b", "x1", "a") == (n + 1) * (n - 1)
    assert cmi(f, "a", "x1", "b") == 0
    assert cmi(f, "a", "x1") == 2 * n * (n + 1)
    # conditioning on any nonempty register set
    assert cmi(f, "a", "b", "x1") == n * (n + 1) * (n - 2)
    assert cmi(f, "a", "b", tuple(f"x{i}" for i in range(1, n + 1))) == n * (n + 1) * (n - 2)


# ------------------------------------------------------------ closed form


def test_closed_form_values():
    assert closed_form_value(2, 2, 0) == -6
    assert closed_form_value(2, 1, 0) == 0
    assert closed_form_value(3, 3, 0) == -12
    assert closed_form_value(3, 3, 1) == 12
    assert closed_form_value(4, 6, 2) == 20
    assert closed_form_value(4, 4, 0) == -20
    # for p > n every feasible class has delta >= p - n, hence value >= 0
    assert closed_form_value(4, 5, 1) == 0
    with pytest.raises(ValueError):
        closed_form_value(2, 0, 0)
    with pytest.raises(ValueError):
        closed_form_value(2, 2, 3)
    with pytest.raises(ValueError):
        closed_form_value(2, 4, 1)  # 3 nonempty subsets cannot fit in 2 registers


@pytest.mark.parametrize("n", [2, 3])
def test_standard_instance_evaluates_to_closed_form(n):
    f = make_witness_f(n)
    g = make_witness_g(n)
    inst = standard_instance(n, n)
    assert inst.functional.evaluate(f) == closed_form_value(n, n, 0) == -n * (n + 1)
    assert inst.functional.evaluate(g) == closed_form_value(n, n, 0)
    for c in inst.constraints:
        assert c.evaluate(f) == 0


# ------------------------------------------------------------ full reports


def test_verify_witness_n2_report():
    rep = verify_witness(2)
    assert rep.passed
    assert rep.negative_classes == [
        {"p": 2, "delta": 0, "value": "-6"}
    ]
    hist = {(r["p"], r["delta"]): (r["count"], r["value_f"]) for r in rep.instance_rows}
    expected = {
        (1, 0): (3, 0), (1, 1): (1, 12),
        (2, 0): (1, -6), (2, 1): (3, 6), (2, 2): (1, 18),
        (3, 1): (1, 0), (3, 2): (3, 12), (3, 3): (1, 24),
        (4, 2): (1, 6), (4, 3): (3, 18), (4, 4): (1, 30),
    }
    assert hist == expected
    # every class obeys the closed form and g agrees with f throughout
    for r in rep.instance_rows:
        assert r["value_f"] == r["value_g"] == r["expected"]


def test_verify_witness_n3():
    rep = verify_witness(3)
    assert rep.passed
    assert rep.negative_classes == [{"p": 3, "delta": 0, "value": "-12"}]


def test_witness_structure_small():
    for n in (2, 3):
        f = make_witness_f(n)
        g = make_witness_g(n)
        assert is_submodular(f)
        assert is_submodular(g)
        assert is_monotone(g)
        assert is_weakly_monotone(g)
        assert not is_monotone(f)  # f(x1) < 0


# ------------------------------------------------------------ counterexample


def test_counterexample_table_values():
    e = counterexample_table()
    assert e.ground.labels == ("A", "B", "C", "D")
    singles = [e("A"), e("B"), e("C"), e("D")]
    assert singles == [5, 5, 2, 4]
    assert e(("A", "B")) == 6
    assert e(("C", "D")) == 6
    assert e(("A", "B", "C")) == 6
    assert e(("A", "B", "C", "D")) == 4


def test_counterexample_report():
    rep = verify_counterexample()
    assert rep.passed
    assert rep.prior_value == -2
    assert sorted(rep.new_values.values()) == [0, 0, 0, 2]
    assert rep.new_values["thm2p_1"] == 2
    assert all(v == 0 for v in rep.constraint_values.values())
    assert not rep.monotone  # the table is deliberately not monotone
    assert rep.submodular and rep.weakly_monotone
