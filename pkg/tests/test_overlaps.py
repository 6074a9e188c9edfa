import itertools
import math
from fractions import Fraction

import pytest

from carpetdim.engines.overlaps import (
    AxisSystem1D,
    axis_systems,
    compose_word,
    exceptional_report,
    gamma_sequence,
    hyperplane_hits,
    secc_diagnostic,
)
from carpetdim.engines.system import validate
from carpetdim.errors import NonRationalInput
from carpetdim.models import AxisStatus, SeccVerdict, Verdict

from .conftest import BM3

HALF = Fraction(1, 2)
DYADIC = AxisSystem1D(ratios=(HALF, HALF), offsets=(Fraction(0), HALF))
OVERLAPPING = AxisSystem1D(ratios=(HALF,) * 3, offsets=(Fraction(0), Fraction(1, 4), HALF))
MIXED = AxisSystem1D(ratios=(HALF, Fraction(1, 4)), offsets=(Fraction(0), HALF))


def test_compose_word_exact():
    word = compose_word(DYADIC.ratios, DYADIC.offsets, (2, 1))
    assert word.ratio == Fraction(1, 4)
    assert word.offset == HALF
    assert word(Fraction(1)) == Fraction(3, 4)


def test_compose_word_rejects_floats():
    with pytest.raises(NonRationalInput):
        compose_word((0.5, 0.5), (0, HALF), (1,))


def test_compose_word_rejects_bad_letter():
    with pytest.raises(IndexError):
        compose_word(DYADIC.ratios, DYADIC.offsets, (3,))


def test_dyadic_gammas():
    seq = gamma_sequence(DYADIC, k_max=10)
    assert seq.gammas == [Fraction(1, 2 ** k) for k in range(1, 11)]
    assert seq.rates == pytest.approx([math.log(2)] * 10)
    assert seq.first_overlap is None


def test_exact_overlap_at_level_two():
    seq = gamma_sequence(OVERLAPPING, k_max=6)
    assert seq.gammas[0] == Fraction(1, 4)
    assert seq.first_overlap == 2
    # uma coincidência no nível 2 se propaga a todos os níveis seguintes
    assert seq.gammas[1:] == [0] * 5
    assert seq.rates[1:] == [math.inf] * 5


def test_strict_mode_pairs_only_equal_ratios():
    loose = gamma_sequence(MIXED, k_max=2)
    strict = gamma_sequence(MIXED, k_max=2, strict=True)
    assert loose.gammas == [HALF, Fraction(1, 8)]
    assert strict.gammas == [None, Fraction(1, 4)]
    assert strict.rates[0] is None


def test_budget_stops_early():
    seq = gamma_sequence(DYADIC, k_max=10, budget=10)
    assert seq.budget_exceeded
    assert seq.depth == 2


def test_large_denominators_switch_to_python_ints():
    ifs = AxisSystem1D(ratios=(Fraction(1, 97), Fraction(96, 97)), offsets=(Fraction(0), Fraction(1, 97)))
    seq = gamma_sequence(ifs, k_max=12, budget=10_000)
    assert all(g is not None and g > 0 for g in seq.gammas)


def test_secc_verdicts():
    assert secc_diagnostic(DYADIC, k_max=8).verdict == SeccVerdict.BOUNDED_RATE
    overlap = secc_diagnostic(OVERLAPPING, k_max=4)
    assert overlap.verdict == SeccVerdict.EXACT_OVERLAP
    assert overlap.overlap_level == 2
    assert not overlap.heuristic


def test_single_letter_is_vacuously_bounded():
    ifs = AxisSystem1D(ratios=(HALF,), offsets=(Fraction(0),))
    assert secc_diagnostic(ifs, k_max=3).verdict == SeccVerdict.BOUNDED_RATE


def test_axis_systems_follow_occupied_indices(bm3):
    x_ifs, y_ifs = axis_systems(bm3)
    assert x_ifs.offsets == (0, HALF)
    assert y_ifs.labels == (1, 2)
    assert y_ifs.ratios == (Fraction(1, 3), Fraction(1, 3))


def test_report_outside_exceptional_set(bm3):
    report = exceptional_report(bm3, k_max=6)
    assert report.x_axis.status == AxisStatus.NO_OVERLAP
    assert report.y_axis.status == AxisStatus.NO_OVERLAP
    assert report.x_axis.gammas[0] == "1/2"
    assert report.dim_E_constant == 3
    assert report.verdict == Verdict.LIKELY_OUTSIDE_E


def test_report_coincident_columns(merged):
    hits = hyperplane_hits(merged)
    assert len(hits) == 1
    assert (hits[0].axis, hits[0].first, hits[0].second) == ("x", 1, 2)
    assert hits[0].equal_ratio

    report = exceptional_report(merged, k_max=4)
    assert report.x_axis.status == AxisStatus.EXACT_OVERLAP
    assert report.x_axis.overlap_level == 1
    assert report.verdict == Verdict.INSIDE_E_CANDIDATE


def test_report_skips_float_axes():
    system = validate({**BM3, "column_widths": [0.5, 0.5]})
    report = exceptional_report(system, k_max=4)
    assert report.x_axis.status == AxisStatus.NOT_CHECKED
    assert report.y_axis.status == AxisStatus.NO_OVERLAP
    assert report.verdict == Verdict.INCONCLUSIVE


@pytest.mark.parametrize(
    "ifs",
    [
        OVERLAPPING,
        MIXED,
        AxisSystem1D(
            ratios=(Fraction(1, 3), Fraction(1, 4), HALF),
            offsets=(Fraction(0), Fraction(1, 3), Fraction(2, 5)),
        ),
    ],
)
def test_letter_order_does_not_change_gammas(ifs):
    expected = gamma_sequence(ifs, k_max=5).gammas
    for order in itertools.permutations(range(len(ifs.ratios))):
        shuffled = AxisSystem1D(
            ratios=tuple(ifs.ratios[k] for k in order),
            offsets=tuple(ifs.offsets[k] for k in order),
        )
        assert gamma_sequence(shuffled, k_max=5).gammas == expected


def test_verdict_never_leaves_candidate_as_kmax_grows():
    # x: S_2 S_2(0) = 1/3 + 1/9 = 4/9 = S_3 S_1(0), coincidência só no nível 2
    system = validate(
        {
            "column_widths": ["1/3", "1/3", "1/3"],
            "row_heights": ["1/2", "1/2"],
            "pattern": [[1, 1], [2, 2], [3, 1]],
            "column_translations": {"1": "0", "2": "1/3", "3": "4/9"},
        }
    )
    verdicts = [exceptional_report(system, k_max=k).verdict for k in range(1, 7)]
    assert verdicts[0] == Verdict.LIKELY_OUTSIDE_E
    assert verdicts[1:] == [Verdict.INSIDE_E_CANDIDATE] * 5
