import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from memlogic.core import (HERE, LEAVE, OUT, MembraneSystem, Multiset, Region, Rule, inside,
                           link)
from memlogic.engine import (Disturbance, Outcome, SimConfig, Simulation, TargetUnresolvable,
                             firing_probability, is_halted, match_probability, run)
from memlogic.gates import cooperative_gate, redundant_gate, RedundancyParams

from oracles import enumerate_match, first_firing


def rule(lhs, rhs, target=HERE):
    return Rule(Multiset(lhs.split()), ((Multiset(rhs.split()), target),) if rhs else ())


def single(contents, *rules):
    return MembraneSystem.build([Region("1", Multiset(contents), Multiset(list(rules)))])


def nested():
    return MembraneSystem.build([
        Region("1", Multiset("a")),
        Region("2", Multiset("b b c".split()), Multiset([rule("b c", "a")]), parent="1"),
        Region("3", parent="1"),
        Region("4", Multiset("c"), parent="3"),
    ])


def test_leave_reaches_parent():
    sys_ = MembraneSystem.build([Region("1"), Region("2", Multiset("1"),
                                                   Multiset([rule("1", "0", LEAVE)]), parent="1")])
    sim = Simulation(sys_, seed=0)
    outcome, fired = sim.attempt("2")
    assert outcome is Outcome.APPLIED and fired == rule("1", "0", LEAVE)
    assert sim.counts("1") == Multiset("0")


def test_skin_leave_goes_to_environment():
    sim = Simulation(single("1", rule("1", "0", LEAVE)), seed=0)
    sim.step()
    assert sim.counts(None) == Multiset("0")
    assert sim.emitted == [(1, "0")]


def test_no_rules_and_too_few_objects():
    sim = Simulation(single("a"), seed=0)
    assert sim.attempt("1") == (Outcome.NO_RULES, None)
    sim = Simulation(single("a", rule("a a", "b")), seed=0)
    assert sim.attempt("1") == (Outcome.REJECTED, None)


def test_missing_reactant_always_rejected():
    sys_ = single("b a".split(), rule("b c", "a"))
    sim = Simulation(sys_, seed=3)
    assert all(sim.attempt("1")[0] is Outcome.REJECTED for _ in range(1000))
    assert sim.counts("1") == Multiset("a b".split())


CONFIGS = [
    ({"a": 3, "b": 1}, {"a": 1, "b": 1}),
    ({"a": 2, "b": 2, "c": 4}, {"a": 1, "c": 2}),
    ({"x": 5, "y": 3}, {"x": 3}),
    ({"a": 1}, {"a": 2}),
    ({"0": 4, "1": 4}, {"0": 2, "1": 2}),
]


@pytest.mark.parametrize("contents,lhs", CONFIGS)
def test_match_probability_against_enumeration(contents, lhs):
    exact = enumerate_match(contents, lhs)
    assert match_probability(Multiset(lhs), Multiset(contents)) == pytest.approx(float(exact), abs=1e-12)


def test_half_example():
    r = rule("a b", "c")
    assert enumerate_match({"a": 3, "b": 1}, {"a": 1, "b": 1}) == Fraction(1, 2)
    assert firing_probability(r, Region("1", Multiset({"a": 3, "b": 1}), Multiset([r]))) == 0.5


def test_empirical_firing_rate_small():
    r = rule("a b", "c")
    sim = Simulation(single({"a": 3, "b": 1}, r), seed=11)
    n = 20_000
    hits = 0
    for _ in range(n):
        hits += sim.attempt("1")[0] is Outcome.APPLIED
        sim.contents["1"] = {"a": 3, "b": 1}
        sim.sizes["1"] = 4
    assert abs(hits / n - 0.5) < 0.02


def test_pool_multiplicity_weights_choice():
    a, b = rule("a", "x"), rule("a", "y")
    sys_ = MembraneSystem.build([Region("1", Multiset({"a": 1}), Multiset({a: 3, b: 1}))])
    fired = {}
    for seed in range(4000):
        _, r = Simulation(sys_, seed).attempt("1")
        fired[r] = fired.get(r, 0) + 1
    assert abs(fired[a] / 4000 - 0.75) < 0.03


def test_uniform_scheduler_frequencies():
    sys_ = MembraneSystem.build([Region(str(i)) for i in range(4)])
    sim = Simulation(sys_, seed=5)
    n = 1_000_000
    counts = dict.fromkeys(sim.labels, 0)
    for _ in range(n):
        counts[sim.choose_region()] += 1
    expected = n / 4
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 16.27  # 3 dof, p = 0.001
    assert all(abs(c / n - 0.25) < 0.01 for c in counts.values())


def test_round_robin_cycles():
    sys_ = MembraneSystem.build([Region(str(i)) for i in range(3)])
    sim = Simulation(sys_, seed=0, scheduler="round_robin")
    seen = []
    for _ in range(6):
        seen.append(sim.choose_region())
        sim.attempts += 1
    assert seen == ["0", "1", "2", "0", "1", "2"]


def test_is_halted_examples():
    assert not is_halted(nested())
    done = nested().with_contents("2", Multiset("a b".split()))
    assert is_halted(done)
    assert is_halted(MembraneSystem.build([Region("1", Multiset("a"))]))


def test_nested_run():
    for seed in range(50):
        tr = run(nested(), SimConfig(seed=seed, max_attempts=1000))
        assert tr.halted_at is not None and tr.halted_at <= 1000
        final = tr.final
        assert final["2"].contents == Multiset("a b".split())
        for lab in ("1", "3", "4"):
            assert final[lab].contents == nested()[lab].contents


def test_not_gate_run():
    tr = run(cooperative_gate("NOT", (1,)), SimConfig(seed=1, max_attempts=1000))
    assert [o for _, o in tr.emitted] == ["0"]
    assert tr.halted_at is not None


def test_determinism_and_seed_sensitivity():
    from memlogic.gates import concentration_holder
    a = run(concentration_holder(), SimConfig(seed=42, max_attempts=2000))
    b = run(concentration_holder(), SimConfig(seed=42, max_attempts=2000))
    c = run(concentration_holder(), SimConfig(seed=43, max_attempts=2000))
    assert a.rows_csv() == b.rows_csv() and a.emitted_csv() == b.emitted_csv()
    assert a.rows_csv() != c.rows_csv()


def test_trace_format_and_stride():
    from memlogic.gates import concentration_holder
    tr = run(concentration_holder(), SimConfig(seed=0, max_attempts=100, trace_every=10))
    lines = tr.rows_csv("seed=0").splitlines()
    assert lines[0] == "# seed=0" and lines[1] == "attempt,region,object,count"
    attempts = [a for a, *_ in tr.rows]
    assert attempts == sorted(attempts)
    assert set(attempts) == set(range(0, 101, 10))
    assert tr.emitted_csv().splitlines()[0] == "attempt,emitted_object"


def test_disturbances_fire_at_their_attempt_and_clip():
    sys_ = single({"a": 5})
    tr = run(sys_, SimConfig(max_attempts=10),
             [Disturbance(3, "1", {"a": -9}), Disturbance(6, "1", {"b": 2})])
    series = dict(tr.series("1", "a"))
    assert series[2] == 5 and series[3] == 0
    assert dict(tr.series("1", "b"))[6] == 2
    # halting waits for pending disturbances
    assert tr.halted_at == 6


def test_halting_check_stride():
    tr = run(single("1", rule("1", "0", LEAVE)), SimConfig(seed=0, max_attempts=100,
                                                          halting_check_every=7))
    assert tr.halted_at == 7


def test_link_targets():
    r = rule("a", "a", link())
    labelled = rule("b", "b", link("right"))
    sys_ = MembraneSystem.build([
        Region("s", Multiset({"a": 2000, "b": 50}), Multiset({r: 1, labelled: 1}),
               links=(("left", "p"), ("right", "q"))),
        Region("p"), Region("q"),
    ])
    tr = run(sys_, SimConfig(seed=2, max_attempts=200_000), record=False)
    p, q = tr.final["p"].contents, tr.final["q"].contents
    assert p.get("b", 0) == 0 and q["b"] == 50
    assert abs(p["a"] - q["a"]) < 200  # 2000 objects, fair coin


def test_unresolvable_target_raises():
    sys_ = single("a", rule("a", "a", inside("9")))
    with pytest.raises(TargetUnresolvable):
        Simulation(sys_, 0).attempt("1")


def test_rule_objects_are_active():
    grow = rule("a", "b")
    sys_ = MembraneSystem.build([Region("1", Multiset([grow, "a"]))])
    tr = run(sys_, SimConfig(seed=0, max_attempts=1000))
    assert tr.final["1"].contents.get("b") == 1
    assert tr.halted_at is not None


def test_transfer_conservation():
    r = Rule(Multiset("a b".split()), ((Multiset("c c c".split()), LEAVE),))
    sys_ = MembraneSystem.build([Region("1"), Region("2", Multiset("a b".split()), Multiset([r]),
                                                      parent="1")])
    sim = Simulation(sys_, 0)
    before = sim.snapshot().total_objects()
    while sim.attempt("2")[0] is not Outcome.APPLIED:
        pass
    assert sim.snapshot().total_objects() - before == 3 - 2


def random_system(draw):
    syms = ["a", "b", "c"]
    regions = []
    n = draw(st.integers(1, 3))
    for i in range(n):
        rules = []
        for _ in range(draw(st.integers(0, 3))):
            lhs = draw(st.dictionaries(st.sampled_from(syms), st.integers(1, 2), min_size=1, max_size=2))
            rhs = draw(st.dictionaries(st.sampled_from(syms), st.integers(1, 2), max_size=2))
            target = draw(st.sampled_from([HERE, OUT, LEAVE]))
            rules.append(Rule(Multiset(lhs), ((Multiset(rhs), target),)))
        contents = draw(st.dictionaries(st.sampled_from(syms), st.integers(1, 3), max_size=3))
        regions.append(Region(str(i), Multiset(contents), Multiset(rules),
                              parent=str(i - 1) if i else None))
    return MembraneSystem.build(regions, alphabet=set(syms))


@settings(max_examples=80, deadline=None)
@given(st.data(), st.integers(0, 2 ** 32))
def test_rejected_attempts_do_not_mutate(data, seed):
    sys_ = random_system(data.draw)
    sim = Simulation(sys_, seed)
    for _ in range(30):
        before = (sim.snapshot(), list(sim.emitted))
        outcome, _ = sim.step()
        if outcome is not Outcome.APPLIED:
            assert (sim.snapshot(), sim.emitted) == before


@settings(max_examples=60, deadline=None)
@given(st.data(), st.integers(0, 2 ** 32))
def test_halted_means_nothing_fires(data, seed):
    sys_ = random_system(data.draw)
    tr = run(sys_, SimConfig(seed=seed, max_attempts=300), record=False)
    if tr.halted_at is None:
        return
    sim = Simulation(tr.final, seed)
    assert all(sim.step()[0] is not Outcome.APPLIED for _ in range(200))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(max_attempts=0)
    with pytest.raises(ValueError):
        SimConfig(trace_every=0)
    with pytest.raises(ValueError):
        SimConfig(seed=2 ** 64)
    with pytest.raises(ValueError):
        SimConfig(fast_forward=True, scheduler="round_robin")


def test_fast_forward_matches_exact_race():
    params = RedundancyParams(3, 5)
    sys_ = redundant_gate("AND", params, factor=2, split_inputs=True).with_contents(
        "1", {"x1": 4, "y0": 6})
    logic = [({f"x{a}": 3, f"y{b}": 3}, 2, a & b) for a in (0, 1) for b in (0, 1)]
    exact = first_firing({"x1": 4, "y0": 6}, logic, [(s, 1) for s in ("x0", "x1", "y0", "y1")])
    n = 3000
    fired = [0, 0]
    for ff in (False, True):
        for seed in range(n):
            tr = run(sys_, SimConfig(seed=seed, max_attempts=10 ** 6, fast_forward=ff), record=False)
            assert tr.halted_at is not None
            fired[ff] += bool(tr.emitted)
    p = float(exact[0])
    sd = (p * (1 - p) / n) ** 0.5
    for k in fired:
        assert abs(k / n - p) < 4 * sd + 1e-9


def test_fast_forward_halts_exactly_and_respects_disturbances():
    sys_ = single({"a": 1}, rule("a b", "c"))
    tr = run(sys_, SimConfig(max_attempts=10 ** 9, fast_forward=True),
             [Disturbance(500, "1", {"b": 1})])
    assert tr.final["1"].contents == Multiset("c")
    assert tr.halted_at >= 500
    with pytest.raises(ValueError):
        run(sys_, SimConfig(fast_forward=True), loss_rate=0.1)
