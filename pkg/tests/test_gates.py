from itertools import product

import pytest

from memlogic.core import HERE, LEAVE, Multiset, Rule, validate_system
from memlogic.engine import SimConfig, run
from memlogic.gates import (CATALYSTS, LogicLevel, ParamError, RedundancyParams, catalyst_and,
                            catalyst_not, concentration_holder, cooperative_gate, logic_rules,
                            read_level, read_wire, redundant_gate)
from memlogic.dsl.netlist import FUNCTIONS

from oracles import first_firing

KINDS = ["NOT", "AND", "NAND", "OR"]


def rule(text):
    from memlogic.dsl import parse_rule
    return parse_rule(text)


def test_cooperative_rule_sets_are_the_textbook_ones():
    assert set(cooperative_gate("NOT")["1"].rules) == {rule("0 -> L 1"), rule("1 -> L 0")}
    assert set(cooperative_gate("AND")["1"].rules) == {
        rule("0 0 -> L 0"), rule("0 1 -> L 0"), rule("1 1 -> L 1")}
    assert set(cooperative_gate("NAND")["1"].rules) == {
        rule("0 0 -> L 1"), rule("0 1 -> L 1"), rule("1 1 -> L 0")}
    assert set(cooperative_gate("OR")["1"].rules) == {
        rule("0 0 -> L 0"), rule("0 1 -> L 1"), rule("1 1 -> L 1")}


@pytest.mark.parametrize("kind", KINDS)
def test_cooperative_truth_tables(kind):
    arity = 1 if kind == "NOT" else 2
    for bits in product((0, 1), repeat=arity):
        sys_ = cooperative_gate(kind, bits)
        assert validate_system(sys_) == []
        for seed in range(30):
            tr = run(sys_, SimConfig(seed=seed, max_attempts=10_000), record=False)
            assert [o for _, o in tr.emitted] == [str(FUNCTIONS[kind](*bits))]


def test_bad_kind_and_params():
    with pytest.raises(ParamError):
        cooperative_gate("XOR")
    with pytest.raises(ParamError):
        RedundancyParams(3, 3)
    with pytest.raises(ParamError):
        RedundancyParams(3, 5, 3)
    assert RedundancyParams(3, 5).l == 2
    assert RedundancyParams(1, 2).l == 0
    with pytest.raises(ParamError):
        concentration_holder(m=10, n=11)


def test_redundant_rules():
    sys_ = redundant_gate("AND", RedundancyParams(2, 3))
    rules = set(sys_["1"].rules)
    assert rule("0^4 -> L 0^3") in rules and rule("0^2 1^2 -> L 0^3") in rules
    assert rule("1^4 -> L 1^3") in rules
    assert rule("0^2 -> H 0") in rules and rule("1^2 -> H 1") in rules
    assert len(rules) == 5


def test_rule_factor_multiplies_logic_only():
    pool = redundant_gate("NOT", RedundancyParams(2, 3), factor=7)["1"].rules
    assert pool[rule("0^2 -> L 1^3")] == 7
    assert pool[rule("0^2 -> H 0")] == 1


def test_split_inputs_use_port_species():
    rules = set(redundant_gate("AND", RedundancyParams(2, 3), split_inputs=True)["1"].rules)
    assert rule("x0^2 y1^2 -> L 0^3") in rules and rule("x1^2 y0^2 -> L 0^3") in rules


def _shared_and_oracle(counts, h, m):
    logic = [({"0": 2 * h}, 1, 0), ({"0": h, "1": h}, 1, 0), ({"1": 2 * h}, 1, 1)]
    return first_firing(counts, logic, [("0", 1), ("1", 1)])


def test_redundant_and_ones_matches_oracle():
    # four ones: the 1^2 1^2 rule races the deletion of ones
    p = _shared_and_oracle({"1": 4}, 2, 3)
    sys_ = redundant_gate("AND", RedundancyParams(2, 3), (1, 1), copies=2)
    n = 2000
    emitted = 0
    for seed in range(n):
        tr = run(sys_, SimConfig(seed=seed, max_attempts=10_000), record=False)
        out = [o for _, o in tr.emitted]
        assert set(out) <= {"1"} and len(out) in (0, 3)
        emitted += bool(out)
        assert tr.final["1"].contents.get("1", 0) <= 1
    sd = (float(p[1]) * (1 - float(p[1])) / n) ** 0.5
    assert abs(emitted / n - float(p[1])) < 4 * sd


def test_redundant_and_mixed_matches_oracle():
    # {1:5, 0:5}: usually 0^m, but the shared species let 1^4 fire first
    p = _shared_and_oracle({"0": 5, "1": 5}, 2, 3)
    sys_ = redundant_gate("AND", RedundancyParams(2, 3)).with_contents("1", {"0": 5, "1": 5})
    n = 2000
    first = {"0": 0, "1": 0, None: 0}
    for seed in range(n):
        tr = run(sys_, SimConfig(seed=seed, max_attempts=10_000), record=False)
        first[tr.emitted[0][1] if tr.emitted else None] += 1
    for key, want in ((0, "0"), (1, "1"), (None, None)):
        q = float(p.get(key, 0))
        sd = (q * (1 - q) / n) ** 0.5
        assert abs(first[want] / n - q) < 4 * sd + 1e-9
    assert float(p[0]) > 0.9 and float(p[1]) > 0


def test_deletion_fixed_point():
    # h=6: no logic rule can ever fire on five ones
    sys_ = redundant_gate("AND", RedundancyParams(6, 7)).with_contents("1", {"1": 5})
    tr = run(sys_, SimConfig(seed=0, max_attempts=10_000))
    assert tr.final["1"].contents == Multiset({"1": 1}) and tr.halted_at is not None


@pytest.mark.parametrize("bits", list(product((0, 1), repeat=2)))
def test_catalyst_and(bits):
    sys_ = catalyst_and(bits)
    assert validate_system(sys_) == []
    want = str(bits[0] & bits[1])
    for seed in range(40):
        tr = run(sys_, SimConfig(seed=seed, max_attempts=100_000))
        assert [o for _, o in tr.emitted] == [want]
        for cat in CATALYSTS["and"]:
            assert {c for a, r, o, c in _totals(tr, cat)} == {1}


def _totals(trace, obj):
    per = {}
    for a, r, o, c in trace.rows:
        if o == obj:
            per[a] = per.get(a, 0) + c
    return [(a, None, obj, c) for a, c in per.items()]


def test_catalyst_and_zero_reaction_keeps_catalyst():
    assert rule("e z -> H e OUT 0") in set(catalyst_and()["1"].rules)


@pytest.mark.parametrize("bit", [0, 1])
def test_catalyst_not(bit):
    sys_ = catalyst_not((bit,))
    for seed in range(40):
        tr = run(sys_, SimConfig(seed=seed, max_attempts=100_000))
        skin = tr.final["1"].contents
        assert skin.get(str(1 - bit)) == 1 and skin.get(str(bit), 0) == 0
        for cat in CATALYSTS["not"]:
            assert {c for *_, c in _totals(tr, cat)} == {1}


def test_catalyst_not_recycles():
    sys_ = catalyst_not((0,))
    tr = run(sys_, SimConfig(seed=3, max_attempts=100_000))
    assert tr.final["2"].contents.get("n") == 1
    second = tr.final.add_contents("2", {"1": 1})
    tr2 = run(second, SimConfig(seed=4, max_attempts=100_000))
    assert tr2.final["1"].contents.get("0") == 1 and tr2.final["1"].contents.get("1") == 1


def test_holder_rules():
    sys_ = concentration_holder(m=100, n=20, cap_factor=3)
    pool = sys_["1"].rules
    assert pool[rule("a -> H a^2")] == 1
    assert pool[rule("a^100 -> H a^80")] == 3
    gen = concentration_holder(generator="g")
    assert rule("g -> H a g") in set(gen["1"].rules)
    assert gen["1"].contents == Multiset({"a": 1, "g": 1})


def test_readout():
    p = RedundancyParams(3, 5)
    assert read_wire(0, 5, p) is LogicLevel.ONE
    assert read_wire(5, 0, p) is LogicLevel.ZERO
    assert read_wire(5, 5, p) is LogicLevel.AMBIGUOUS
    assert read_wire(0, 0, p) is LogicLevel.UNDEFINED
    assert read_level(2, p) is LogicLevel.UNDEFINED
    assert read_level(1, p) is LogicLevel.ZERO


def test_read_level_monotone():
    p = RedundancyParams(4, 6)
    order = {LogicLevel.ZERO: 0, LogicLevel.UNDEFINED: 1, LogicLevel.ONE: 2}
    levels = [order[read_level(s, p)] for s in range(12)]
    assert levels == sorted(levels)


def test_logic_rules_reject_conflicts():
    with pytest.raises(ParamError):
        logic_rules("AND", (("a", "a"), ("a", "a")))


def test_golden_files(corpus):
    from memlogic.dsl import from_system, print_system
    golden = {
        "gate_and.psys": cooperative_gate("AND"),
        "gate_not.psys": cooperative_gate("NOT"),
        "gate_nand.psys": cooperative_gate("NAND"),
        "gate_or.psys": cooperative_gate("OR"),
        "catalyst_and.psys": catalyst_and(),
        "catalyst_not.psys": catalyst_not(),
        "holder.psys": concentration_holder(),
        "redundant_and.psys": redundant_gate("AND", RedundancyParams(3, 5)),
    }
    for name, sys_ in golden.items():
        assert (corpus / name).read_text() == print_system(from_system(sys_)), name
