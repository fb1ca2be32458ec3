import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from ncsa.gf2 import BitMatrix, rank
from ncsa.pnc import (
    PncModel,
    WeightedMatrixFamily,
    example_expected_rank,
    example_family,
    family_size,
    gamma_closed_form,
    gamma_k_enum,
    gamma_set,
)

GRID = [i / 20 for i in range(21)]


# --- independent oracle ----------------------------------------------------
# Solvability of the last packet from a batch, done with plain integer rows
# and exhaustive column-combination search; shares no code with ncsa.gf2.


def oracle_solvable(rows: list[list[int]], known: set[int]) -> bool:
    d = len(rows)
    unknown = [i for i in range(d) if i not in known]
    if (d - 1) not in unknown:
        return True
    cols = list(zip(*[rows[i] for i in unknown])) if rows[0] else []
    target = tuple(1 if i == len(unknown) - 1 else 0 for i in range(len(unknown)))
    for picks in itertools.product((0, 1), repeat=len(cols)):
        acc = [0] * len(unknown)
        for take, col in zip(picks, cols):
            if take:
                acc = [a ^ b for a, b in zip(acc, col)]
        if tuple(acc) == target:
            return True
    return False


def oracle_gamma_set(rows: list[list[int]]) -> set[frozenset[int]]:
    d = len(rows)
    out = set()
    for size in range(d):
        for subset in itertools.combinations(range(d - 1), size):
            if oracle_solvable(rows, set(subset)):
                out.add(frozenset(i + 1 for i in subset))  # 1-based
    return out


def oracle_gamma_value(model: PncModel, k: int, x: float) -> float:
    total = 0.0
    for matrix, prob in model.family(k + 1):
        if matrix.cols == 0:
            continue
        for subset in oracle_gamma_set(matrix.to_rows()):
            s = len(subset)
            total += prob * x**s * (1 - x) ** (k - s)
    return total


# --- families ----------------------------------------------------------------


def test_family_counts():
    assert family_size(2) == 3
    assert family_size(3) == 10
    with pytest.raises(ValueError):
        family_size(1)


def test_family_counts_exact():
    # exact recount: all-ones + arrangements of [0,1]^a [1,0]^(d-a) +
    # arrangements of [0,1]^a1 [1,0]^a2 [1,1]^(d-a1-a2)
    for d in range(2, 8):
        count = 1
        for a in range(1, d // 2 + 1):
            count += math.comb(d, a)
        for a1 in range(1, d - 1):
            for a2 in range(a1, d - a1):
                a3 = d - a1 - a2
                count += math.factorial(d) // (
                    math.factorial(a1) * math.factorial(a2) * math.factorial(a3)
                )
        assert family_size(d) == count


def test_example_family_membership():
    fam = example_family(2, 10)
    members = {m for m, _ in fam}
    assert members == {
        BitMatrix.from_rows([[1], [1]]),
        BitMatrix.from_rows([[0, 1], [1, 0]]),
        BitMatrix.from_rows([[1, 0], [0, 1]]),
    }
    assert all(abs(p - 1 / 3) < 1e-15 for _, p in fam)


def test_example_family_properties():
    for d in range(2, 6):
        fam = example_family(d, 10)
        assert fam.size == family_size(d)
        seen = set()
        total = 0.0
        for matrix, prob in fam:
            assert matrix.rows == d
            assert rank(matrix) == matrix.cols  # full column rank
            assert matrix not in seen
            seen.add(matrix)
            assert abs(prob - 1 / fam.size) < 1e-15
            total += prob
        assert abs(total - 1.0) < 1e-12


def test_example_family_permutation_closure():
    rng = random.Random(5)
    for d in (3, 4, 5):
        fam = example_family(d, 10)
        weight = {m: p for m, p in fam}
        for matrix, prob in fam:
            rows = matrix.to_rows()
            for _ in range(3):
                perm = list(range(d))
                rng.shuffle(perm)
                permuted = BitMatrix.from_rows([rows[i] for i in perm], cols=matrix.cols)
                assert weight.get(permuted) == prob


def test_family_degree_one_and_above_cap():
    assert example_family(1, 10).entries[0][0] == BitMatrix.from_rows([[1]])
    fam = example_family(11, 10)
    assert fam.size == 1
    matrix, prob = fam.entries[0]
    assert matrix.cols == 0 and prob == 1.0


def test_example_family_rejects_degree_zero():
    with pytest.raises(ValueError):
        example_family(0, 10)


def test_weighted_family_validation():
    good = BitMatrix.from_rows([[1], [1]])
    with pytest.raises(ValueError):
        WeightedMatrixFamily(2, [(good, 0.5)])  # probs must sum to 1
    rank_deficient = BitMatrix.from_rows([[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        WeightedMatrixFamily(2, [(rank_deficient, 1.0)])
    wrong_rows = BitMatrix.from_rows([[1], [1], [1]])
    with pytest.raises(ValueError):
        WeightedMatrixFamily(2, [(wrong_rows, 1.0)])


# --- gamma sets ----------------------------------------------------------------


def test_gamma_set_anchor_four_user_batch():
    h = BitMatrix.from_rows([[1, 0], [0, 1], [1, 1], [1, 1]])
    assert gamma_set(h) == {frozenset({1, 3}), frozenset({2, 3}), frozenset({1, 2, 3})}


def test_gamma_set_anchor_trivial_cases():
    assert gamma_set(BitMatrix.from_rows([[1]])) == {frozenset()}
    assert gamma_set(BitMatrix.identity(2)) == {frozenset(), frozenset({1})}
    assert gamma_set(BitMatrix(3, 0)) == set()


def test_gamma_set_matches_oracle():
    for d in range(2, 5):
        for matrix, _ in example_family(d, 10):
            assert gamma_set(matrix) == oracle_gamma_set(matrix.to_rows())


def test_gamma_set_upward_closed():
    for d in range(2, 6):
        for matrix, _ in example_family(d, 10):
            got = gamma_set(matrix)
            rest = set(range(1, d))
            for subset in got:
                for extra in rest - subset:
                    assert subset | {extra} in got


# --- gamma polynomials ------------------------------------------------------


def test_gamma_poly_degree_one_anchor():
    # enumeration gives (x + 2) / 3 for the three-member two-user family
    model = PncModel.example(10)
    poly = model.gamma_poly(1)
    assert np.allclose(poly.coeffs, (2 / 3, 1 / 3), atol=1e-15)


def test_gamma_poly_degree_two_anchor():
    # frozen from the enumeration oracle: (1 + 14x - 5x^2) / 10.  The
    # compact closed-form route gives (1 + 10x - x^2) / 10 instead; it
    # misses that a one-type target row in a mixed-split member is also
    # solvable through the sum of both columns, so enumeration wins.
    model = PncModel.example(10)
    poly = model.gamma_poly(2)
    assert np.allclose(poly.coeffs, (0.1, 1.4, -0.5), atol=1e-14)
    for x in GRID:
        assert abs(oracle_gamma_value(model, 2, x) - poly(x)) < 1e-12


def test_gamma_poly_matches_oracle_enumeration():
    model = PncModel.example(6)
    for k in range(0, 5):
        poly = model.gamma_poly(k)
        for x in (0.0, 0.3, 0.7, 1.0):
            assert abs(poly(x) - oracle_gamma_value(model, k, x)) < 1e-12


def test_gamma_k_enum_agrees_with_table():
    model = PncModel.example(10)
    for k in range(0, 6):
        poly = model.gamma_poly(k)
        for x in (0.0, 0.25, 0.5, 0.75, 1.0):
            assert abs(gamma_k_enum(model, k, x) - poly(x)) < 1e-12


def test_gamma_poly_zero_and_cap():
    model = PncModel.example(4)
    assert model.gamma_poly(0).coeffs == (1.0,)
    assert model.gamma_poly(0)(0.0) == 1.0
    assert model.gamma_poly(4)(0.5) == 0.0  # collision size 5 > cap
    assert model.gamma_poly(9).coeffs == (0.0,)


def test_gamma_poly_monotone_and_bounded():
    model = PncModel.example(10)
    xs = np.arange(0.0, 1.0001, 0.01)
    for k in range(0, 10):
        vals = model.gamma_poly(k)(xs)
        assert np.all(vals >= -1e-12) and np.all(vals <= 1 + 1e-12)
        assert np.all(np.diff(vals) >= -1e-12)
        assert abs(vals[-1] - 1.0) < 1e-12  # every member solvable once all known


def test_gamma_poly_ndarray_evaluation():
    model = PncModel.example(5)
    xs = np.array([0.0, 0.5, 1.0])
    vals = model.gamma_poly(2)(xs)
    assert vals.shape == (3,)
    assert abs(vals[0] - 0.1) < 1e-15


# --- closed form ----------------------------------------------------------------


def test_closed_form_degree_two_matches_enumeration():
    per = 1.0 / 3
    for x in GRID:
        closed = gamma_closed_form(2, per, {1: per}, {}, x)
        assert abs(closed - (2 + x) / 3) < 1e-12
        assert abs(closed - gamma_k_enum(PncModel.example(3), 1, x)) < 1e-12


def test_closed_form_degree_three_values():
    # the compact form reproduces (1 + 10x - x^2)/10 at uniform weights
    per = 0.1
    for x in GRID:
        val = gamma_closed_form(3, per, {1: per}, {(1, 1): per}, x)
        assert abs(val - (1 + 10 * x - x * x) / 10) < 1e-12


def test_closed_form_undercounts_mixed_split_targets():
    # documented deviation: at d=3 the closed form is below enumeration on
    # the open interval because the [0,1]/[1,0]-typed targets also resolve
    # through the sum of the two columns.  Ends x=0 and x=1 agree.
    model = PncModel.example(3)
    per = 0.1
    for x in (0.0, 1.0):
        closed = gamma_closed_form(3, per, {1: per}, {(1, 1): per}, x)
        assert abs(closed - gamma_k_enum(model, 2, x)) < 1e-12
    for x in (0.25, 0.5, 0.75):
        closed = gamma_closed_form(3, per, {1: per}, {(1, 1): per}, x)
        enum = gamma_k_enum(model, 2, x)
        expected_gap = (4 * x - 4 * x * x) / 10
        assert enum > closed
        assert abs((enum - closed) - expected_gap) < 1e-12


def test_closed_form_reaches_one_at_full_knowledge():
    for d in range(2, 7):
        per = 1.0 / family_size(d)
        g2 = {a: per for a in range(1, d // 2 + 1)}
        g3 = {
            (a1, a2): per for a1 in range(1, d - 1) for a2 in range(a1, d - a1)
        }
        assert abs(gamma_closed_form(d, per, g2, g3, 1.0) - 1.0) < 1e-12


def test_closed_form_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        gamma_closed_form(2, 0.5, {1: 0.5}, {}, 0.5)  # 0.5 + 2*0.5 != 1
    with pytest.raises(ValueError):
        gamma_closed_form(1, 1.0, {}, {}, 0.5)


# --- model ----------------------------------------------------------------


def test_model_validation():
    with pytest.raises(ValueError):
        PncModel.example(1)
    with pytest.raises(ValueError):
        PncModel.example(0)


def test_model_family_caching_and_cap():
    model = PncModel.example(3)
    assert model.family(2) is model.family(2)
    assert model.family(4).entries[0][0].cols == 0
    assert model.max_decodable == 3
    assert model.is_example


def test_model_from_dict_round_trip():
    data = {
        "max_decodable": 2,
        "families": {
            "1": [{"matrix": [[1]], "prob": 1.0}],
            "2": [
                {"matrix": [[1], [1]], "prob": 0.25},
                {"matrix": [[1, 0], [0, 1]], "prob": 0.75},
            ],
        },
    }
    model = PncModel.from_dict(data)
    assert not model.is_example
    assert model.max_decodable == 2
    fam = model.family(2)
    assert fam.size == 2
    # gamma table: 0.25 * x + 0.75 * 1
    poly = model.gamma_poly(1)
    assert abs(poly(0.0) - 0.75) < 1e-12
    assert abs(poly(1.0) - 1.0) < 1e-12
    assert model.family(3).entries[0][0].cols == 0
    assert model.gamma_poly(2)(0.7) == 0.0


def test_model_from_dict_validation():
    base = {
        "max_decodable": 2,
        "families": {"1": [{"matrix": [[1]], "prob": 1.0}]},
    }
    with pytest.raises(ValueError):
        PncModel.from_dict(base)  # family for 2 missing
    bad_first = {
        "max_decodable": 2,
        "families": {
            "1": [{"matrix": [[1], [1]], "prob": 1.0}],
            "2": [{"matrix": [[1], [1]], "prob": 1.0}],
        },
    }
    with pytest.raises(ValueError):
        PncModel.from_dict(bad_first)


def test_expected_rank_routes_agree():
    model = PncModel.example(8)
    assert model.expected_rank(1) == 1.0
    for d in range(2, 8):
        assert abs(model.expected_rank(d) - example_expected_rank(d)) < 1e-12
    # explicit small case: (1*1 + 2*2) / 3 at collision size 2
    assert abs(model.expected_rank(2) - Fraction(5, 3)) < 1e-12
    assert model.expected_rank(9) == 0.0


def test_expected_rank_closed_route_values():
    assert example_expected_rank(1) == 1.0
    assert abs(example_expected_rank(2) - 5 / 3) < 1e-15
    assert abs(example_expected_rank(3) - 19 / 10) < 1e-15
