import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superior import (Ball, Box, ConstraintFamily, ContractViolation, FixedPlanSequence, Halfspace, Hyperplane,
                      RandomPlanSequence, StringPlan, apply_string, basic_algorithm, dsap_apply, make_cimmino_plan,
                      make_kaczmarz_plan)
from superior.harness import generate_instance
from superior.string_projection import DSAPOperator


@pytest.fixture
def mixed_family():
    return ConstraintFamily([
        Hyperplane([1.0, 1.0, 0.0], 1.0),
        Halfspace([0.0, 1.0, -1.0], 0.5),
        Box([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]),
        Ball([0.2, 0.2, 0.0], 1.0),
    ])


def test_string_order_first_index_first(mixed_family):
    x = np.array([3.0, 2.0, 5.0])
    # hyperplane first: (1, 0, 5), then the box clamps to (1, 0, 1)
    np.testing.assert_array_equal(apply_string(mixed_family, (0, 2), x), [1.0, 0.0, 1.0])
    # box first: (1, 1, 1), then the hyperplane gives (0.5, 0.5, 1)
    np.testing.assert_array_equal(apply_string(mixed_family, (2, 0), x), [0.5, 0.5, 1.0])


def test_singleton_string(mixed_family):
    x = np.array([3.0, -2.0, 5.0])
    np.testing.assert_array_equal(apply_string(mixed_family, (2,), x), mixed_family[2].project(x))


def test_feasible_point_is_fixed(mixed_family):
    z = np.array([0.5, 0.5, 0.2])
    assert mixed_family.contains(z)
    np.testing.assert_array_equal(apply_string(mixed_family, (0, 1, 2, 3), z), z)
    for plan in (make_kaczmarz_plan(4), make_cimmino_plan(4)):
        np.testing.assert_allclose(dsap_apply(mixed_family, plan, z), z, atol=1e-15)


def test_index_out_of_range(mixed_family):
    with pytest.raises(ContractViolation):
        apply_string(mixed_family, (0, 4), np.zeros(3))


def test_kaczmarz_and_cimmino_plans():
    k3 = make_kaczmarz_plan(3)
    assert k3.strings == ((0, 1, 2),) and k3.weights == (1.0,)
    c3 = make_cimmino_plan(3)
    assert c3.strings == ((0,), (1,), (2,)) and c3.weights == (1 / 3,) * 3
    assert make_kaczmarz_plan(1).strings == make_cimmino_plan(1).strings == ((0,),)
    assert make_kaczmarz_plan(1).weights == make_cimmino_plan(1).weights == (1.0,)
    with pytest.raises(ContractViolation):
        make_kaczmarz_plan(0)
    with pytest.raises(ContractViolation):
        make_cimmino_plan(0)


def test_kaczmarz_plan_matches_sweep(mixed_family):
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = 3 * rng.standard_normal(3)
        np.testing.assert_array_equal(dsap_apply(mixed_family, make_kaczmarz_plan(4), x),
                                      apply_string(mixed_family, (0, 1, 2, 3), x))


def test_cimmino_plan_matches_average(mixed_family):
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.standard_normal(3)
        avg = np.mean([s.project(x) for s in mixed_family], axis=0)
        np.testing.assert_allclose(dsap_apply(mixed_family, make_cimmino_plan(4), x), avg, atol=1e-15, rtol=0)


@pytest.mark.parametrize("strings, weights, msg", [
    (((0, 1),), (1.0,), "not fit"),
    (((0, 1, 2), (0,)), (0.5, 0.4), "sum"),
    (((0, 1, 2), (0,)), (0.95, 0.05), "below delta"),
    (((0, 1, 2, 0),), (1.0,), "longer"),
    (((0, 3, 1),), (1.0,), "out of range"),
    (((), (0, 1, 2)), (0.5, 0.5), "empty"),
])
def test_invalid_plans_rejected(strings, weights, msg):
    with pytest.raises(ContractViolation, match=msg):
        StringPlan(strings, weights, 3)


def test_weight_sum_tolerance():
    StringPlan(((0,), (1,)), (0.5, 0.5 + 5e-13), 2)
    with pytest.raises(ContractViolation):
        StringPlan(((0,), (1,)), (0.5, 0.5 + 5e-12), 2)


def test_plan_bounds():
    with pytest.raises(ContractViolation):
        StringPlan(((0, 1),), (1.0,), 2, delta=0.5)
    with pytest.raises(ContractViolation):
        StringPlan(((0, 1),), (1.0,), 2, q_bar=1)
    plan = StringPlan(((0, 1, 0, 1),), (1.0,), 2, q_bar=4)
    assert plan.q_bar == 4 and plan.delta == 0.25


def test_plan_dict_roundtrip():
    plan = StringPlan(((0, 2), (1,), (2, 1, 0)), (0.3, 0.3, 0.4), 3)
    assert StringPlan.from_dict(plan.to_dict()) == plan


def test_random_plans_are_valid_and_deterministic():
    seq = RandomPlanSequence(7, seed=4, q_bar=9)
    again = RandomPlanSequence(7, seed=4, q_bar=9)
    sizes = set()
    for k in range(200):
        p = seq.plan(k)
        assert p == again.plan(k)
        assert p.delta == seq.delta and p.q_bar == 9
        assert min(p.weights) >= seq.delta
        sizes.add(len(p.strings))
    assert len(sizes) > 1


def test_basic_algorithm_stream():
    fam = ConstraintFamily([Hyperplane([1.0, 0.0], 1.0), Hyperplane([0.0, 1.0], 2.0)])
    xs = list(basic_algorithm(fam, make_kaczmarz_plan(2), [0.0, 0.0], 0))
    assert len(xs) == 1 and np.array_equal(xs[0], [0.0, 0.0])
    xs = list(basic_algorithm(fam, make_kaczmarz_plan(2), [0.0, 0.0], 3))
    np.testing.assert_array_equal(xs[1], [1.0, 2.0])
    assert fam.proximity(xs[1]) == 0.0
    with pytest.raises(ContractViolation):
        list(basic_algorithm(fam, make_kaczmarz_plan(2), [0.0, 0.0], -1))


def test_basic_algorithm_converges_on_consistent_system():
    spec = generate_instance("consistent-linear", 10, 20, 3)
    xs = list(basic_algorithm(spec.family, make_kaczmarz_plan(spec.m), spec.x0, 500))
    assert spec.family.proximity(xs[-1]) < 1e-8


def test_basic_algorithm_is_lazy():
    fam = ConstraintFamily([Hyperplane([1.0], 0.0)])
    it = basic_algorithm(fam, make_kaczmarz_plan(1), [1.0], 10**9)
    assert next(it)[0] == 1.0 and next(it)[0] == 0.0


@pytest.mark.parametrize("plans", [
    lambda m: make_kaczmarz_plan(m),
    lambda m: make_cimmino_plan(m),
    lambda m: RandomPlanSequence(m, seed=2),
])
def test_unperturbed_fejer_monotone(plans):
    spec = generate_instance("box-ball", 6, 5, 11)
    z = spec.feasible_point
    prev = np.linalg.norm(spec.x0 - z)
    for x in list(basic_algorithm(spec.family, plans(spec.m), spec.x0, 300))[1:]:
        d = np.linalg.norm(x - z)
        assert d <= prev + 1e-12
        prev = d


def test_dsap_operator_walks_plan_sequence():
    spec = generate_instance("consistent-linear", 5, 4, 0)
    seq = RandomPlanSequence(4, seed=1)
    op = DSAPOperator(spec.family, seq)
    x = spec.x0
    y1 = op(x)
    y2 = op(y1)
    np.testing.assert_array_equal(y1, dsap_apply(spec.family, seq.plan(0), x))
    np.testing.assert_array_equal(y2, dsap_apply(spec.family, seq.plan(1), y1))
    assert op.last_plan_id == 1
    op.reset()
    np.testing.assert_array_equal(op(x), y1)
    with pytest.raises(ContractViolation):
        DSAPOperator(spec.family, make_kaczmarz_plan(3))


def test_fixed_sequence_ids():
    seq = FixedPlanSequence(make_cimmino_plan(2))
    assert seq[5] is seq.plan(0) and seq.plan_id(9) == 0


@settings(max_examples=200, deadline=None)
@given(m=st.integers(1, 30), seed=st.integers(0, 2**32 - 1), k=st.integers(0, 10**6), extra=st.integers(0, 5))
def test_random_plans_stay_admissible_property(m, seed, k, extra):
    seq = RandomPlanSequence(m, seed, q_bar=m + extra)
    plan = seq.plan(k)
    assert abs(sum(plan.weights) - 1.0) <= 1e-12
    assert min(plan.weights) >= seq.delta
    assert set().union(*plan.strings) == set(range(m))
    assert plan == seq.plan(k)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), plan_seed=st.integers(0, 100))
def test_dsap_step_is_fejer_property(seed, plan_seed):
    spec = generate_instance("box-ball", 5, 4, seed % 1000)
    x = np.random.default_rng(seed).standard_normal(5) * 4.0
    y = dsap_apply(spec.family, RandomPlanSequence(4, plan_seed).plan(0), x)
    z = spec.feasible_point
    assert np.linalg.norm(y - z) <= np.linalg.norm(x - z) + 1e-12
