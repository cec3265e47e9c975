import pytest

from cascade_sync import (
    decompose_groups,
    level_function,
    normalize_rates,
    rescale,
    validate_params,
    with_barriers,
)
from cascade_sync.errors import (
    DegenerateLevels,
    IndexOutOfRange,
    LengthMismatch,
    NegativeBeta,
    NonPositiveLambda,
)


def test_validate_two_processors():
    p = validate_params(2, (1, 2), (1,))
    assert p.z == 4.0
    assert p.b == (0.5, 0.0)


def test_validate_three_processors():
    p = validate_params(3, (1, 1, 1), (1, 1))
    assert p.z == 5.0
    assert p.b == (0.5, 0.5, 0.0)


def test_validate_rejects_zero_lambda():
    with pytest.raises(NonPositiveLambda):
        validate_params(2, (0, 1), (1,))


def test_validate_rejects_negative_beta():
    with pytest.raises(NegativeBeta):
        validate_params(2, (1, 1), (-0.5,))


def test_validate_rejects_length_mismatch():
    with pytest.raises(LengthMismatch):
        validate_params(3, (1, 2), (1, 1))
    with pytest.raises(LengthMismatch):
        validate_params(2, (1, 2), ())


def test_b_formula_on_asymmetric_rates():
    p = validate_params(3, (1, 3, 2), (2, 1))
    assert p.b[0] == pytest.approx(1 / 3)
    assert p.b[1] == pytest.approx(3 / 4)
    assert p.b[2] == 0.0
    for q in range(p.n - 1):
        assert 0.0 < p.b[q] <= 1.0


def test_zero_beta_gives_unit_b():
    p = validate_params(2, (1, 2), (0,))
    assert p.b[0] == 1.0


@pytest.mark.parametrize("lambdas,expected", [
    ((5, 3, 4, 1, 2, 6), (5, 3, 3, 1, 1, 1)),
    ((1, 2, 3), (1, 1, 1)),
    ((3, 2, 1), (3, 2, 1)),
])
def test_level_function(lambdas, expected):
    p = validate_params(len(lambdas), lambdas, (1,) * (len(lambdas) - 1))
    assert level_function(p) == tuple(float(v) for v in expected)


def test_level_function_prefix_consistency():
    lambdas = (2.5, 0.7, 1.9, 0.4, 3.3)
    full = validate_params(5, lambdas, (1,) * 4)
    for n1 in range(1, 6):
        prefix = validate_params(n1, lambdas[:n1], (1,) * (n1 - 1))
        assert level_function(prefix) == level_function(full)[:n1]


def test_decompose_groups_example():
    p = validate_params(6, (5, 3, 4, 1, 2, 6), (1,) * 5)
    g = decompose_groups(p)
    assert g.groups == ((1,), (2, 3), (4, 5, 6))
    assert g.boundaries == (1, 2, 4, 7)
    assert g.predicted_speeds == (5, 3, 3, 1, 1, 1)


def test_decompose_groups_increasing_is_one_group():
    g = decompose_groups(validate_params(3, (1, 2, 3), (1, 1)))
    assert g.groups == ((1, 2, 3),)
    assert g.predicted_speeds == (1, 1, 1)


def test_decompose_groups_decreasing_is_singletons():
    g = decompose_groups(validate_params(3, (3, 2, 1), (1, 1)))
    assert g.groups == ((1,), (2,), (3,))
    assert g.predicted_speeds == (3, 2, 1)


def test_decompose_groups_rejects_ties():
    with pytest.raises(DegenerateLevels):
        decompose_groups(validate_params(3, (1, 1, 2), (1, 1)))


def test_group_speeds_strictly_decrease_across_boundaries():
    p = validate_params(6, (5, 3, 4, 1, 2, 6), (1,) * 5)
    g = decompose_groups(p)
    per_group = [g.predicted_speeds[grp[0] - 1] for grp in g.groups]
    assert all(a > b for a, b in zip(per_group, per_group[1:]))


def test_rescale_preserves_partition_and_scales_speeds():
    p = validate_params(4, (2.0, 0.5, 1.5, 0.25), (1, 0.5, 2))
    scaled = rescale(p, 3.0)
    g0 = decompose_groups(p)
    g1 = decompose_groups(scaled)
    assert g0.boundaries == g1.boundaries
    assert g1.predicted_speeds == tuple(3 * v for v in g0.predicted_speeds)
    # embedded-chain step probabilities are scale-free
    assert scaled.b == p.b
    assert scaled.z == pytest.approx(3 * p.z)


def test_normalize_rates():
    p = normalize_rates(validate_params(3, (1, 2, 3), (1, 1)))
    assert p.z == pytest.approx(1.0)
    assert p.b == validate_params(3, (1, 2, 3), (1, 1)).b


def test_free_and_message_masses_sum_to_one():
    p = validate_params(4, (0.3, 1.2, 2.0, 0.7), (0.4, 0.0, 1.1))
    total = sum(v / p.z for v in p.lambdas) + sum(v / p.z for v in p.betas)
    assert total == pytest.approx(1.0, abs=1e-15)


def test_with_barriers():
    p = validate_params(3, (1, 2, 3), (1, 1))
    assert with_barriers(p, {2}).betas == (1.0, 0.0)
    assert with_barriers(p, set()).betas == p.betas
    assert with_barriers(p, {1, 2}).betas == (0.0, 0.0)
    with pytest.raises(IndexOutOfRange):
        with_barriers(p, {3})


def test_single_processor_accepted():
    p = validate_params(1, (3,), ())
    assert p.z == 3.0
    assert p.b == (0.0,)
