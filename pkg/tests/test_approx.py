import math
from fractions import Fraction

import numpy as np
import pytest

from carpetdim.engines.approx import (
    build_uniform_approx,
    enumerate_strings,
    enumerated_cardinalities,
    extract_ssc_subsystem,
    lift_row_ssc,
    log_multinomial,
    s_k_box,
    s_k_hausdorff,
    s_k_trace,
    smallest_ssc_length,
)
from carpetdim.engines.moran import bm_closed_form, box_dimension_analytic
from carpetdim.engines.overlaps import AxisSystem1D
from carpetdim.engines.system import validate
from carpetdim.engines.variational import ProbabilityWeights, bm_optimal_weights
from carpetdim.errors import BudgetExceeded, NonHomogeneous
from carpetdim.models import ApproxFlavor

from .conftest import BM3, FULL_GRID

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)


def test_log_multinomial():
    assert log_multinomial(4, [1, 1, 1, 1]) == pytest.approx(math.log(24))
    assert log_multinomial(5, [5]) == pytest.approx(0.0, abs=1e-12)


def test_full_grid_k1_cardinalities(full_grid):
    approx = build_uniform_approx(full_grid, ProbabilityWeights.uniform(full_grid), 1)
    assert approx.theta == 4
    assert list(approx.counts) == [1, 1, 1, 1]
    assert math.exp(approx.log_card_gamma) == pytest.approx(24)
    assert math.exp(approx.log_card_gamma_y) == pytest.approx(6)
    assert enumerated_cardinalities(approx.cells, approx.counts) == (24, 6, 6)


def test_counts_absorb_rounding(bm3):
    p = ProbabilityWeights(cells=bm3.pattern, values=np.full(3, 1 / 3))
    approx = build_uniform_approx(bm3, p, 3)
    assert list(approx.counts) == [1, 1, 1]


def test_enumerate_strings_distinct():
    strings = list(enumerate_strings([(1, 1), (2, 1)], [2, 1]))
    assert len(strings) == len(set(strings)) == 3


def test_s_k_hausdorff_converges(bm3):
    rows = s_k_trace(bm3, [100_000], ApproxFlavor.HAUSDORFF)
    assert rows[0]["s_k"] == pytest.approx(bm_closed_form(bm3)[0], abs=1e-2)
    approx = build_uniform_approx(bm3, bm_optimal_weights(bm3), 100_000)
    assert s_k_hausdorff(approx) == rows[0]["s_k"]


def test_s_k_box_converges(bm3):
    assert s_k_box(bm3, 100_000) == pytest.approx(box_dimension_analytic(bm3).box_dimension, abs=1e-2)


def test_trace_rows(bm3):
    rows = s_k_trace(bm3, [10, 100], ApproxFlavor.BOX)
    assert [r["k"] for r in rows] == [10, 100]
    assert set(rows[0]) == {"flavor", "k", "theta", "s_k"}
    assert rows[0]["flavor"] == "box"
    assert rows[1]["theta"] >= 100


def test_greedy_keeps_every_other_dyadic_interval():
    ifs = AxisSystem1D(ratios=(HALF, HALF), offsets=(Fraction(0), HALF))
    selection = extract_ssc_subsystem(ifs, 3)
    assert selection.count == 4
    assert selection.total == 8
    assert selection.intervals[1] == (Fraction(1, 4), Fraction(3, 8))


def test_greedy_cantor_keeps_everything():
    ifs = AxisSystem1D(ratios=(THIRD, THIRD), offsets=(Fraction(0), Fraction(2, 3)))
    selection = extract_ssc_subsystem(ifs, 2)
    assert selection.count == 4
    assert selection.bound_met


def test_greedy_overlapping_system_meets_bound():
    ifs = AxisSystem1D(ratios=(HALF, HALF), offsets=(Fraction(0), Fraction(1, 4)))
    selection = extract_ssc_subsystem(ifs, 4, epsilon=0.0, alpha=1.0)
    assert selection.count == 6
    assert selection.bound == pytest.approx(16 / 3)
    assert selection.bound_met
    lefts = [left for left, _ in selection.intervals]
    assert lefts == sorted(lefts)
    assert all(b[0] > a[1] for a, b in zip(selection.intervals, selection.intervals[1:]))


def test_greedy_needs_common_ratio():
    ifs = AxisSystem1D(ratios=(HALF, THIRD), offsets=(Fraction(0), HALF))
    with pytest.raises(NonHomogeneous):
        extract_ssc_subsystem(ifs, 2)


def test_greedy_budget():
    ifs = AxisSystem1D(ratios=(HALF, HALF), offsets=(Fraction(0), HALF))
    with pytest.raises(BudgetExceeded):
        extract_ssc_subsystem(ifs, 10, budget=100)


def test_smallest_ssc_length():
    cantor = AxisSystem1D(ratios=(THIRD, THIRD), offsets=(Fraction(0), Fraction(2, 3)))
    assert smallest_ssc_length(cantor) == 1


def test_lift_bm3(bm3):
    approx = build_uniform_approx(bm3, bm_optimal_weights(bm3), 2)
    assert list(approx.counts) == [1, 1, 1]
    lift = lift_row_ssc(bm3, approx, 3)
    assert len(lift.strings) == 6
    assert lift.fibre == 2
    assert lift.selection.count == 27
    assert lift.count == 216
    assert lift.bound_met


def test_log_multinomial_matches_exact_factorials():
    rng = np.random.default_rng(17)
    for total in range(1, 21):
        for _ in range(5):
            cuts = np.sort(rng.integers(0, total + 1, size=3))
            parts = np.diff(np.concatenate([[0], cuts, [total]])).tolist()
            exact = math.factorial(total)
            for part in parts:
                exact //= math.factorial(part)
            assert math.exp(log_multinomial(total, parts)) == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize(
    "raw, values",
    [
        (BM3, [0.5, 0.25, 0.25]),
        (FULL_GRID, [0.4, 0.2, 0.2, 0.2]),
        (
            {
                "column_widths": ["1/2", "1/2"],
                "row_heights": ["1/3", "1/3", "1/3"],
                "pattern": [[1, 1], [1, 3], [2, 2], [2, 3]],
            },
            [0.1, 0.3, 0.3, 0.3],
        ),
    ],
)
def test_multinomial_cardinalities_match_enumeration(raw, values):
    system = validate(raw)
    p = ProbabilityWeights(cells=system.pattern, values=np.array(values))
    for k in range(1, 5):
        approx = build_uniform_approx(system, p, k)
        card, card_x, card_y = enumerated_cardinalities(approx.cells, approx.counts)
        assert math.exp(approx.log_card_gamma) == pytest.approx(card, rel=1e-9)
        assert math.exp(approx.log_card_gamma_x) == pytest.approx(card_x, rel=1e-9)
        assert math.exp(approx.log_card_gamma_y) == pytest.approx(card_y, rel=1e-9)


@pytest.mark.parametrize("flavor", [ApproxFlavor.HAUSDORFF, ApproxFlavor.BOX])
def test_s_k_error_shrinks_with_k(bm3, flavor):
    if flavor == ApproxFlavor.HAUSDORFF:
        limit = bm_closed_form(bm3)[0]
    else:
        limit = box_dimension_analytic(bm3).box_dimension
    coarse, fine = s_k_trace(bm3, [100, 100_000], flavor)
    assert abs(fine["s_k"] - limit) < abs(coarse["s_k"] - limit)
    assert abs(fine["s_k"] - limit) <= 0.02
